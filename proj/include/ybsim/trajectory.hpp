#pragma once

#include <iosfwd>
#include <vector>

#include "ybsim/atom.hpp"
#include "ybsim/fields.hpp"
#include "ybsim/rates.hpp"
#include "ybsim/rng.hpp"

namespace ybsim {

struct PhotonEvent {
    double time_s = 0;
    int channel = -1;  // index into LevelScheme::channels
};

struct OccupationSegment {
    double t0_s = 0;
    double t1_s = 0;
    int manifold = 0;
};

struct TrajectoryResult {
    std::vector<PhotonEvent> events;
    std::vector<OccupationSegment> occupations;  // tile the timeline exactly
    int final_manifold = 0;
    std::vector<double> leak_times_s;  // far-detuned pump excitations
};

// Timeline compiled into per-interval jump tables.  Building rate matrices
// once and sharing them across trajectories keeps the per-shot cost at the
// jump loop only.
class CompiledTimeline {
  public:
    struct PerManifold {
        double total_rate = 0;
        std::vector<double> cumulative;  // cumulative channel rates
        std::vector<int> channel;        // index into IntervalDynamics::channels
    };
    struct IntervalDynamics {
        double t_start = 0;
        double t_end = 0;
        RateMatrix matrix;
        std::vector<PerManifold> per_manifold;
    };

    static CompiledTimeline compile(const LevelScheme& scheme,
                                    const Timeline& timeline,
                                    const RateOptions& options = {});

    const std::vector<IntervalDynamics>& intervals() const { return intervals_; }
    double total_duration_s() const;

  private:
    std::vector<IntervalDynamics> intervals_;
};

// Core competing-exponentials jump loop.  Calls on_jump(time, channel,
// new_manifold) for every jump; returns the final manifold.  Only
// spontaneous channels emit countable photons.
template <typename OnJump>
int run_jump_process(const CompiledTimeline& compiled, RngStream& rng,
                     int start_manifold, OnJump&& on_jump) {
    int current = start_manifold;
    for (const auto& interval : compiled.intervals()) {
        double t = interval.t_start;
        for (;;) {
            const auto& pm = interval.per_manifold[current];
            if (pm.total_rate <= 0) break;
            t += rng.exponential(pm.total_rate);
            if (t >= interval.t_end) break;
            const double u = rng.uniform() * pm.total_rate;
            std::size_t k = 0;
            while (k + 1 < pm.cumulative.size() && u >= pm.cumulative[k]) ++k;
            const RateChannel& ch =
                interval.matrix.channels[pm.channel[k]];
            current = ch.to;
            on_jump(t, ch, current);
        }
    }
    return current;
}

// Full trajectory record for one Monte-Carlo shot; deterministic given
// (seed, trajectory_index).
TrajectoryResult simulate_trajectory(const LevelScheme& scheme,
                                     const CompiledTimeline& compiled,
                                     std::uint64_t seed,
                                     std::uint64_t trajectory_index,
                                     int initial_manifold);

// Draw the initial manifold from a population vector using the trajectory's
// own stream (keeps sampling deterministic per trajectory index).
int sample_initial_manifold(const PopulationVector& p0, RngStream& rng);

// Photon events restricted to one emission class.
std::vector<PhotonEvent> filter_events(const std::vector<PhotonEvent>& events,
                                       const LevelScheme& scheme,
                                       EmissionClass cls);

// Histogram of event times on a uniform grid; default bin width 16 ns.
std::vector<long> bin_events(const std::vector<PhotonEvent>& events,
                             double t0_s, int bins,
                             double bin_width_s = 16e-9);

// Event records as CSV (time in seconds, channel id) or a compact binary
// stream; both forms round-trip.
void events_to_csv(std::ostream& out, const std::vector<PhotonEvent>& events);
void events_to_binary(std::ostream& out,
                      const std::vector<PhotonEvent>& events);
std::vector<PhotonEvent> events_from_binary(std::istream& in);

}  // namespace ybsim
