#pragma once

#include <utility>
#include <vector>

#include "ybsim/fit.hpp"

namespace ybsim {

struct Peak {
    double center_hz = 0;
    double height = 0;
    double width_hz = 0;  // half-height width estimate
    double prominence = 0;
};

struct PeakSet {
    std::vector<Peak> peaks;  // sorted ascending by center
};

// Local maxima of a uniformly gridded scan after a 5-sample moving average,
// kept when their prominence exceeds min_prominence; centers refined by
// 3-point quadratic interpolation.
PeakSet find_peaks(const DataSeries& scan, double min_prominence);

// Two-ion parity: mean of +1 (equal outcomes) / -1 (unequal).
double parity(const std::vector<std::pair<int, int>>& outcome_pairs);

}  // namespace ybsim
