#include <doctest.h>

#include <cmath>

#include "ybsim/peaks.hpp"
#include "ybsim/rng.hpp"

using namespace ybsim;

namespace {

double lorentzian(double x, double center, double hwhm) {
    const double u = (x - center) / hwhm;
    return 1.0 / (1.0 + u * u);
}

DataSeries grid_scan(double start, double stop, double step) {
    DataSeries s;
    for (double x = start; x <= stop + 0.5 * step; x += step) {
        s.x.push_back(x);
        s.y.push_back(0.0);
    }
    return s;
}

}  // namespace

TEST_CASE("two lorentzians split by 2.2095 GHz") {
    DataSeries s = grid_scan(2.0e9, 6.0e9, 1e6);
    const double c1 = 3.0e9, c2 = c1 + 2.2095e9;
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.y[i] = 1000.0 * lorentzian(s.x[i], c1, 25e6) +
                 900.0 * lorentzian(s.x[i], c2, 25e6);
    }
    const PeakSet peaks = find_peaks(s, 200.0);
    REQUIRE(peaks.peaks.size() == 2);
    const double sep = peaks.peaks[1].center_hz - peaks.peaks[0].center_hz;
    CHECK(std::fabs(sep - 2.2095e9) <= 2e6);  // two grid steps
}

TEST_CASE("flat noise yields no peaks at sufficient prominence") {
    DataSeries s = grid_scan(0, 1e9, 1e6);
    RngStream rng(12, RngPurpose::bootstrap, 0);
    for (auto& y : s.y) y = 100.0 + rng.normal(0.0, 3.0);
    CHECK(find_peaks(s, 50.0).peaks.empty());
}

TEST_CASE("single peak recovered within one grid step") {
    DataSeries s = grid_scan(0, 2e9, 1e6);
    const double center = 0.7654e9;
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.y[i] = 500.0 * lorentzian(s.x[i], center, 20e6);
    }
    const PeakSet peaks = find_peaks(s, 100.0);
    REQUIRE(peaks.peaks.size() == 1);
    CHECK(std::fabs(peaks.peaks[0].center_hz - center) <= 1e6);
}

TEST_CASE("center estimates are unbiased for symmetric peaks") {
    const double center = 1.2e9;
    double total_err = 0;
    for (int rep = 0; rep < 100; ++rep) {
        DataSeries s = grid_scan(1.0e9, 1.4e9, 1e6);
        RngStream rng(500 + rep, RngPurpose::bootstrap, 7);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.y[i] = 1000.0 * lorentzian(s.x[i], center, 15e6) +
                     rng.normal(0.0, 10.0);
        }
        const PeakSet peaks = find_peaks(s, 300.0);
        REQUIRE(peaks.peaks.size() >= 1);
        total_err += peaks.peaks[0].center_hz - center;
    }
    CHECK(std::fabs(total_err / 100.0) <= 0.5e6);
}

TEST_CASE("non-uniform grid is rejected") {
    DataSeries s;
    s.x = {0, 1, 2, 4, 5, 6};
    s.y = {0, 1, 2, 1, 0, 0};
    CHECK_THROWS(find_peaks(s, 0.5));
}

TEST_CASE("parity of outcome pairs") {
    CHECK(parity({{1, 1}, {0, 0}, {1, 1}}) == 1.0);
    CHECK(parity({{1, 0}, {0, 1}}) == -1.0);
    CHECK(parity({{1, 1}, {1, 0}}) == 0.0);

    // Independent uniform outcomes average to zero.
    RngStream rng(3, RngPurpose::bootstrap, 11);
    std::vector<std::pair<int, int>> pairs;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        pairs.emplace_back(rng.bernoulli(0.5) ? 1 : 0,
                           rng.bernoulli(0.5) ? 1 : 0);
    }
    CHECK(std::fabs(parity(pairs)) < 3.0 / std::sqrt(n));

    // Invariant under simultaneous relabeling of both ions.
    std::vector<std::pair<int, int>> flipped;
    for (auto& [a, b] : pairs) flipped.emplace_back(1 - a, 1 - b);
    CHECK(parity(flipped) == parity(pairs));
}
