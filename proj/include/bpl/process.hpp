// process.hpp — Sampling of the time-inhomogeneous pure jump process: exact
// holding-time inversion, destination selection, explosion and node guards.

#pragma once

#include "bpl/quantum.hpp"
#include "bpl/rng.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bpl {

// Configuration index of the absorbing cemetery state entered when the jump
// cap is hit, and of the node-guard bookkeeping state.
inline constexpr int kCemeteryConfig = -1;
inline constexpr int kGuardConfig = -2;

struct JumpRecord {
    double time{0.0};
    int from{0};
    int to{0};
};

enum class TrajStatus { Alive, Horizon, Cemetery, NodeGuard };

const char* to_string(TrajStatus s);

struct Trajectory {
    int x0{0};
    double t0{0.0};
    double horizon{0.0};
    std::vector<JumpRecord> jumps;
    TrajStatus status{TrajStatus::Alive};
    double end_time{0.0};
    std::string note;

    // Right-continuous path: Q_t = X_k for T_k <= t < T_{k+1}. Returns
    // kCemeteryConfig / kGuardConfig for t at or past a premature end.
    int config_at(double t) const;

    // Number of jumps with time in [t1, t2].
    int count_jumps(double t1, double t2) const;
};

struct SamplerConfig {
    std::int64_t max_jumps{1'000'000};
    double quad_tol{1e-9};
    double root_tol{1e-10};
    std::uint64_t seed{20812};
    double node_eps{kDefaultNodeEps};
    // Survival beyond exp(-hazard_cap) is treated as impossible; a larger
    // exponential draw forces the jump before the node.
    double hazard_cap{50.0};

    void validate() const;
};

// Lambda = integral of the total rate sigma_s(Q, x) over [t_a, t_b].
// Returns +inf when the node divergence is detected inside the interval.
// Throws node_guard_error if x is already singular at t_a.
double cumulative_hazard(int x, double t_a, double t_b, const JumpSystem& system,
                         const SamplerConfig& cfg);

// Inverts the cumulative hazard against an Exp(1) draw. Returns the jump time,
// or nullopt when the process survives to the horizon.
std::optional<double> sample_holding_time(int x, double t_k, double horizon, RngStream& rng,
                                          const JumpSystem& system, const SamplerConfig& cfg);

// Destination drawn with probability sigma_t(q, x) / total(x).
int sample_destination(int x, double t, RngStream& rng, const JumpSystem& system,
                       const SamplerConfig& cfg);

// Full trajectory over [t0, horizon]. x0 fixed, or drawn from mu_{t0} when
// absent. Node guards surface as status, never as an escaped exception.
Trajectory sample_trajectory(std::optional<int> x0, double t0, double horizon,
                             const SamplerConfig& cfg, const JumpSystem& system, RngStream& rng);

// M trajectories on per-index RNG streams; the result is independent of the
// worker count. jobs <= 0 uses the hardware concurrency.
std::vector<Trajectory> run_ensemble(const JumpSystem& system, std::optional<int> x0, double t0,
                                     double horizon, int M, const SamplerConfig& cfg,
                                     int jobs = 0);

// CSV dump: trajectory_id, jump_index, time, from_label, to_label, status.
// One row per jump plus a terminal row carrying the trajectory status.
void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajectories,
                            const ConfigSpace& space);

}  // namespace bpl
