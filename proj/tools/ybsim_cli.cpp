#include "ybsim/experiments.hpp"

int main(int argc, char** argv) { return ybsim::cli_main(argc, argv); }
