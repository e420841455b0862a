#include "ybsim/trajectory.hpp"

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "ybsim/errors.hpp"

namespace ybsim {

CompiledTimeline CompiledTimeline::compile(const LevelScheme& scheme,
                                           const Timeline& timeline,
                                           const RateOptions& options) {
    const auto violations = validate_timeline(timeline);
    if (!violations.empty()) {
        throw ConstraintViolation("invalid timeline: " + violations.front());
    }
    CompiledTimeline compiled;
    double t = 0;
    for (const auto& iv : timeline.intervals) {
        IntervalDynamics dyn;
        dyn.t_start = t;
        t += iv.duration_s;
        dyn.t_end = t;
        dyn.matrix = build_rate_matrix(scheme, iv.beams, options);
        const int n = dyn.matrix.dim();
        dyn.per_manifold.resize(n);
        for (std::size_t ci = 0; ci < dyn.matrix.channels.size(); ++ci) {
            const auto& ch = dyn.matrix.channels[ci];
            auto& pm = dyn.per_manifold[ch.from];
            pm.total_rate += ch.rate_per_s;
            pm.cumulative.push_back(pm.total_rate);
            pm.channel.push_back(static_cast<int>(ci));
        }
        compiled.intervals_.push_back(std::move(dyn));
    }
    return compiled;
}

double CompiledTimeline::total_duration_s() const {
    return intervals_.empty() ? 0.0 : intervals_.back().t_end;
}

int sample_initial_manifold(const PopulationVector& p0, RngStream& rng) {
    p0.validate();
    const double u = rng.uniform();
    double cdf = 0;
    for (int i = 0; i < p0.p.size(); ++i) {
        cdf += p0.p[i];
        if (u < cdf) return i;
    }
    return static_cast<int>(p0.p.size()) - 1;
}

TrajectoryResult simulate_trajectory(const LevelScheme& scheme,
                                     const CompiledTimeline& compiled,
                                     std::uint64_t seed,
                                     std::uint64_t trajectory_index,
                                     int initial_manifold) {
    (void)scheme;
    RngStream rng(seed, RngPurpose::trajectory, trajectory_index);
    TrajectoryResult result;
    int occupied = initial_manifold;
    double segment_start = 0;
    result.final_manifold = run_jump_process(
        compiled, rng, initial_manifold,
        [&](double t, const RateChannel& ch, int now) {
            if (ch.kind == RateChannel::Kind::spontaneous) {
                result.events.push_back({t, ch.decay_channel});
            }
            if (ch.far_detuned_leak &&
                ch.kind == RateChannel::Kind::pump_absorption) {
                result.leak_times_s.push_back(t);
            }
            result.occupations.push_back({segment_start, t, occupied});
            segment_start = t;
            occupied = now;
        });
    result.occupations.push_back(
        {segment_start, compiled.total_duration_s(), occupied});
    return result;
}

std::vector<PhotonEvent> filter_events(const std::vector<PhotonEvent>& events,
                                       const LevelScheme& scheme,
                                       EmissionClass cls) {
    std::vector<PhotonEvent> out;
    for (const auto& ev : events) {
        if (ev.channel >= 0 &&
            scheme.channels[ev.channel].emission_class == cls) {
            out.push_back(ev);
        }
    }
    return out;
}

std::vector<long> bin_events(const std::vector<PhotonEvent>& events,
                             double t0_s, int bins, double bin_width_s) {
    std::vector<long> counts(bins, 0);
    for (const auto& ev : events) {
        const double rel = ev.time_s - t0_s;
        if (rel < 0) continue;
        const auto k = static_cast<long>(rel / bin_width_s);
        if (k >= 0 && k < bins) ++counts[k];
    }
    return counts;
}

void events_to_csv(std::ostream& out, const std::vector<PhotonEvent>& events) {
    out << "time_s,channel\n";
    char buf[64];
    for (const auto& ev : events) {
        std::snprintf(buf, sizeof buf, "%.17g,%d\n", ev.time_s, ev.channel);
        out << buf;
    }
}

void events_to_binary(std::ostream& out,
                      const std::vector<PhotonEvent>& events) {
    const char magic[4] = {'Y', 'B', 'E', 'V'};
    out.write(magic, 4);
    const std::uint64_t n = events.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const auto& ev : events) {
        out.write(reinterpret_cast<const char*>(&ev.time_s), sizeof ev.time_s);
        const std::int32_t ch = ev.channel;
        out.write(reinterpret_cast<const char*>(&ch), sizeof ch);
    }
}

std::vector<PhotonEvent> events_from_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "YBEV", 4) != 0) {
        throw ConstraintViolation("bad event stream header");
    }
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    std::vector<PhotonEvent> events(n);
    for (auto& ev : events) {
        std::int32_t ch = 0;
        in.read(reinterpret_cast<char*>(&ev.time_s), sizeof ev.time_s);
        in.read(reinterpret_cast<char*>(&ch), sizeof ch);
        ev.channel = ch;
    }
    return events;
}

}  // namespace ybsim
