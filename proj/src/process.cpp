#include "bpl/process.hpp"

#include "bpl/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace bpl {

const char* to_string(TrajStatus s) {
    switch (s) {
        case TrajStatus::Alive: return "ALIVE";
        case TrajStatus::Horizon: return "HORIZON";
        case TrajStatus::Cemetery: return "CEMETERY";
        case TrajStatus::NodeGuard: return "NODE_GUARD";
    }
    return "UNKNOWN";
}

int Trajectory::config_at(double t) const {
    if ((status == TrajStatus::Cemetery || status == TrajStatus::NodeGuard) && t >= end_time) {
        return status == TrajStatus::Cemetery ? kCemeteryConfig : kGuardConfig;
    }
    int cur = x0;
    for (const auto& j : jumps) {
        if (j.time <= t) {
            cur = j.to;
        } else {
            break;
        }
    }
    return cur;
}

int Trajectory::count_jumps(double t1, double t2) const {
    if (!(t0 <= t1 && t1 <= t2 && t2 <= horizon)) {
        throw std::invalid_argument("count_jumps: requires t0 <= t1 <= t2 <= horizon");
    }
    int n = 0;
    for (const auto& j : jumps) {
        if (j.time >= t1 && j.time <= t2) ++n;
    }
    return n;
}

void SamplerConfig::validate() const {
    if (max_jumps < 1) throw std::invalid_argument("SamplerConfig: max_jumps >= 1 required");
    if (quad_tol <= 0.0 || root_tol <= 0.0 || node_eps <= 0.0 || hazard_cap <= 0.0) {
        throw std::invalid_argument("SamplerConfig: tolerances must be positive");
    }
}

namespace {

// Hazard integral over [a, b] with no occupancy check; +inf on divergence.
double hazard_between(int x, double a, double b, const JumpSystem& system,
                      const SamplerConfig& cfg) {
    QuadratureOptions opt;
    opt.abs_tol = cfg.quad_tol;
    opt.divergence_cap = 4.0 * cfg.hazard_cap;
    return adaptive_simpson([&](double s) { return system.total_rate(x, s); }, a, b, opt);
}

}  // namespace

double cumulative_hazard(int x, double t_a, double t_b, const JumpSystem& system,
                         const SamplerConfig& cfg) {
    cfg.validate();
    if (!(t_a <= t_b)) {
        throw std::invalid_argument("cumulative_hazard: requires t_a <= t_b");
    }
    if (system.mu_of(x, t_a) <= system.node_eps()) {
        throw node_guard_error("cumulative_hazard: configuration '" +
                               system.space().label(x) + "' is singular at t = " +
                               std::to_string(t_a) + " while occupied");
    }
    return hazard_between(x, t_a, t_b, system, cfg);
}

std::optional<double> sample_holding_time(int x, double t_k, double horizon, RngStream& rng,
                                          const JumpSystem& system, const SamplerConfig& cfg) {
    if (!(t_k <= horizon)) {
        throw std::invalid_argument("sample_holding_time: t_k beyond horizon");
    }
    if (system.mu_of(x, t_k) <= system.node_eps()) {
        throw node_guard_error("sample_holding_time: configuration '" +
                               system.space().label(x) + "' is singular at t = " +
                               std::to_string(t_k) + " while occupied");
    }
    if (t_k == horizon) return std::nullopt;

    const double target = std::min(rng.exponential(), cfg.hazard_cap);

    // Bracket the crossing Lambda(t_k, t) = target by interval doubling.
    double lo = t_k;
    double base = 0.0;   // = Lambda(t_k, lo), finite by construction
    double h = (horizon - t_k) / 16.0;
    double hi = horizon;
    bool bracketed = false;
    while (!bracketed) {
        const double cand = std::min(lo + h, horizon);
        const double inc = hazard_between(x, lo, cand, system, cfg);
        if (base + inc >= target) {
            hi = cand;
            bracketed = true;
        } else {
            base += inc;
            lo = cand;
            if (lo >= horizon) return std::nullopt;
            h *= 2.0;
        }
    }

    // Bisection on the accumulated hazard; lo always keeps a finite hazard
    // below target, so rates at the returned time stay computable.
    while (hi - lo > cfg.root_tol) {
        const double mid = 0.5 * (lo + hi);
        const double inc = hazard_between(x, lo, mid, system, cfg);
        if (base + inc >= target) {
            hi = mid;
        } else {
            base += inc;
            lo = mid;
        }
    }
    return lo > t_k ? lo : hi;
}

int sample_destination(int x, double t, RngStream& rng, const JumpSystem& system,
                       const SamplerConfig& cfg) {
    (void)cfg;
    const ColumnRates col = system.rates_from(x, t);
    if (col.singular) {
        throw node_guard_error("sample_destination: configuration '" + system.space().label(x) +
                               "' singular at the jump time");
    }
    if (!(col.total > 0.0)) {
        throw std::logic_error(
            "sample_destination: hazard reported a jump but the rate column is zero");
    }
    const int dest = rng.categorical(
        std::span<const double>(col.sigma.data(), static_cast<std::size_t>(col.sigma.size())),
        col.total);
    if (dest == x) {
        throw std::logic_error("sample_destination: drew the diagonal");
    }
    return dest;
}

Trajectory sample_trajectory(std::optional<int> x0, double t0, double horizon,
                             const SamplerConfig& cfg, const JumpSystem& system, RngStream& rng) {
    cfg.validate();
    if (!(horizon >= t0)) {
        throw std::invalid_argument("sample_trajectory: horizon must be >= t0");
    }

    Trajectory traj;
    traj.t0 = t0;
    traj.horizon = horizon;

    int x;
    if (x0.has_value()) {
        x = *x0;
        if (x < 0 || x >= system.num_configs()) {
            throw std::invalid_argument("sample_trajectory: x0 out of range");
        }
    } else {
        const Eigen::VectorXd mu = system.mu_at(t0);
        x = rng.categorical(std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())),
                            mu.sum());
    }
    traj.x0 = x;
    traj.status = TrajStatus::Horizon;
    traj.end_time = horizon;

    double t = t0;
    try {
        while (true) {
            const auto next = sample_holding_time(x, t, horizon, rng, system, cfg);
            if (!next.has_value()) {
                break;   // survived to the horizon
            }
            t = *next;
            const int dest = sample_destination(x, t, rng, system, cfg);
            traj.jumps.push_back({t, x, dest});
            x = dest;
            if (static_cast<std::int64_t>(traj.jumps.size()) >= cfg.max_jumps) {
                traj.status = TrajStatus::Cemetery;
                traj.end_time = t;
                break;
            }
        }
    } catch (const node_guard_error& e) {
        traj.status = TrajStatus::NodeGuard;
        traj.end_time = t;
        traj.note = e.what();
    }
    return traj;
}

std::vector<Trajectory> run_ensemble(const JumpSystem& system, std::optional<int> x0, double t0,
                                     double horizon, int M, const SamplerConfig& cfg, int jobs) {
    cfg.validate();
    if (M < 1) throw std::invalid_argument("run_ensemble: M >= 1 required");
    if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) jobs = 1;
    }
    jobs = std::min(jobs, M);

    std::vector<Trajectory> out(static_cast<std::size_t>(M));
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= M) return;
            try {
                RngStream rng = RngStream::for_trajectory(cfg.seed, static_cast<std::uint64_t>(i));
                out[static_cast<std::size_t>(i)] =
                    sample_trajectory(x0, t0, horizon, cfg, system, rng);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trajectories,
                            const ConfigSpace& space) {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "trajectory_id,jump_index,time,from_label,to_label,status\n";
    for (std::size_t id = 0; id < trajectories.size(); ++id) {
        const Trajectory& tr = trajectories[id];
        for (std::size_t k = 0; k < tr.jumps.size(); ++k) {
            const JumpRecord& j = tr.jumps[k];
            os << id << ',' << k << ',' << fmt(j.time) << ',' << space.label(j.from) << ','
               << space.label(j.to) << ",\n";
        }
        const int final_config = tr.jumps.empty() ? tr.x0 : tr.jumps.back().to;
        os << id << ',' << tr.jumps.size() << ',' << fmt(tr.end_time) << ','
           << space.label(final_config) << ",," << to_string(tr.status) << '\n';
    }
}

}  // namespace bpl
