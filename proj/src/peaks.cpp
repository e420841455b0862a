#include "ybsim/peaks.hpp"

#include <algorithm>
#include <cmath>

#include "ybsim/errors.hpp"

namespace ybsim {

PeakSet find_peaks(const DataSeries& scan, double min_prominence) {
    scan.validate(true);
    const int n = static_cast<int>(scan.size());
    PeakSet out;
    if (n < 5) return out;
    const double dx = (scan.x.back() - scan.x.front()) / (n - 1);
    for (int i = 1; i < n; ++i) {
        if (std::fabs((scan.x[i] - scan.x[i - 1]) - dx) > 1e-6 * dx) {
            throw ConstraintViolation("scan grid must be uniform");
        }
    }

    // 5-sample moving average, shrinking at the edges.
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - 2);
        const int hi = std::min(n - 1, i + 2);
        double acc = 0;
        for (int k = lo; k <= hi; ++k) acc += scan.y[k];
        s[i] = acc / (hi - lo + 1);
    }

    for (int i = 1; i < n - 1; ++i) {
        if (!(s[i] > s[i - 1] && s[i] >= s[i + 1])) continue;
        // Walk outward to the bounding minima (stopping at a higher point
        // or the series edge); prominence is height above the larger one.
        double left_min = s[i];
        for (int k = i - 1; k >= 0; --k) {
            left_min = std::min(left_min, s[k]);
            if (s[k] > s[i]) break;
        }
        double right_min = s[i];
        for (int k = i + 1; k < n; ++k) {
            right_min = std::min(right_min, s[k]);
            if (s[k] > s[i]) break;
        }
        const double prominence = s[i] - std::max(left_min, right_min);
        if (prominence < min_prominence) continue;

        Peak peak;
        peak.height = s[i];
        peak.prominence = prominence;
        // Quadratic refinement around the grid maximum.
        const double denom = s[i - 1] - 2.0 * s[i] + s[i + 1];
        double shift = 0;
        if (denom < 0) shift = 0.5 * (s[i - 1] - s[i + 1]) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        peak.center_hz = scan.x[i] + shift * dx;
        // Half-height width from the smoothed profile.
        const double half = std::max(left_min, right_min) + 0.5 * prominence;
        int l = i, r = i;
        while (l > 0 && s[l] > half) --l;
        while (r < n - 1 && s[r] > half) ++r;
        peak.width_hz = (r - l) * dx;
        out.peaks.push_back(peak);
    }
    std::sort(out.peaks.begin(), out.peaks.end(),
              [](const Peak& a, const Peak& b) {
                  return a.center_hz < b.center_hz;
              });
    return out;
}

double parity(const std::vector<std::pair<int, int>>& outcome_pairs) {
    if (outcome_pairs.empty()) {
        throw InsufficientData("parity needs at least one outcome pair");
    }
    long acc = 0;
    for (const auto& [a, b] : outcome_pairs) acc += (a == b) ? 1 : -1;
    return static_cast<double>(acc) / outcome_pairs.size();
}

}  // namespace ybsim
