#include "ybsim/fields.hpp"

#include <cmath>
#include <set>

#include "ybsim/errors.hpp"

namespace ybsim {

void LaserBeam::validate() const {
    if (!(power_w >= 0)) throw ConstraintViolation("power_w must be >= 0");
    if (!(waist_m > 0)) throw ConstraintViolation("waist_m must be > 0");
    if (!(p_sat_w > 0)) throw ConstraintViolation("p_sat_w must be > 0");
}

void Modulator::validate() const {
    double sum = 0;
    for (const auto& [order, fraction] : order_fractions) {
        if (!(fraction >= 0 && fraction <= 1)) {
            throw ConstraintViolation("order_fractions values must lie in [0, 1]");
        }
        if (order != 0) sum += fraction;
    }
    if (sum > 1.0 + 1e-12) {
        throw ConstraintViolation("order_fractions must sum to <= 1");
    }
}

double Modulator::carrier_fraction() const {
    auto it = order_fractions.find(0);
    if (it != order_fractions.end()) return it->second;
    double sum = 0;
    for (const auto& [order, fraction] : order_fractions) {
        if (order != 0) sum += fraction;
    }
    return std::max(0.0, 1.0 - sum);
}

std::vector<SpectralComponent> effective_spectrum(
    const LaserBeam& beam, const std::vector<Modulator>& mods) {
    beam.validate();
    std::vector<SpectralComponent> components{
        {beam.carrier_detuning_hz, beam.power_w}};
    for (const auto& mod : mods) {
        mod.validate();
        std::vector<SpectralComponent> next;
        next.reserve(components.size() * (mod.order_fractions.size() + 1));
        for (const auto& c : components) {
            const double fc = mod.carrier_fraction();
            if (fc > 0) next.push_back({c.frequency_offset_hz, c.power_w * fc});
            for (const auto& [order, fraction] : mod.order_fractions) {
                if (order == 0 || fraction <= 0) continue;
                next.push_back({c.frequency_offset_hz +
                                    order * mod.drive_frequency_hz,
                                c.power_w * fraction});
            }
        }
        components = std::move(next);
    }
    return components;
}

double saturation_parameter(const LaserBeam& beam) {
    beam.validate();
    return beam.power_w / beam.p_sat_w;
}

double saturation_parameter(const SpectralComponent& component,
                            const LaserBeam& beam) {
    beam.validate();
    return component.power_w / beam.p_sat_w;
}

double Timeline::total_duration_s() const {
    double t = 0;
    for (const auto& iv : intervals) t += iv.duration_s;
    return t;
}

std::vector<std::string> validate_timeline(const Timeline& timeline) {
    std::vector<std::string> violations;
    std::set<std::string> labels;
    for (std::size_t i = 0; i < timeline.intervals.size(); ++i) {
        const auto& iv = timeline.intervals[i];
        const std::string where = "interval " + std::to_string(i) +
                                  (iv.label.empty() ? "" : " ('" + iv.label + "')");
        if (!(iv.duration_s > 0)) {
            violations.push_back(where + ": non-positive duration");
        }
        if (!iv.label.empty() && !labels.insert(iv.label).second) {
            violations.push_back(where + ": duplicate label");
        }
        if (iv.pulses.size() > 1) {
            violations.push_back(where + ": multiple pulses");
        }
        for (const auto& pulse : iv.pulses) {
            if (pulse.duration_s > iv.duration_s + 1e-15) {
                violations.push_back(where + ": pulse longer than interval");
            }
            if (!(pulse.duration_s >= 0)) {
                violations.push_back(where + ": negative pulse duration");
            }
        }
        for (const auto& bm : iv.beams) {
            try {
                bm.beam.validate();
                for (const auto& mod : bm.modulators) mod.validate();
            } catch (const ConstraintViolation& e) {
                violations.push_back(where + ": " + e.what());
            }
        }
    }
    return violations;
}

}  // namespace ybsim
