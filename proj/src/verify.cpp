#include "bpl/verify.hpp"

#include "bpl/quadrature.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bpl {

double EnsembleStats::mean_jumps() const {
    if (jump_counts.empty()) return 0.0;
    double acc = 0.0;
    for (auto s : jump_counts) acc += static_cast<double>(s);
    return acc / static_cast<double>(jump_counts.size());
}

double EnsembleStats::stderr_jumps() const {
    const std::size_t n = jump_counts.size();
    if (n < 2) return 0.0;
    const double mean = mean_jumps();
    double ss = 0.0;
    for (auto s : jump_counts) {
        const double d = static_cast<double>(s) - mean;
        ss += d * d;
    }
    return std::sqrt(ss / (static_cast<double>(n) - 1.0)) / std::sqrt(static_cast<double>(n));
}

EnsembleStats collect_stats(const std::vector<Trajectory>& trajectories, int num_configs,
                            const std::vector<double>& times) {
    EnsembleStats st;
    st.M = static_cast<int>(trajectories.size());
    st.times = times;
    st.rho_hat.assign(times.size(), Eigen::VectorXd::Zero(num_configs));
    st.missing_mass.assign(times.size(), 0.0);
    st.jump_counts.reserve(trajectories.size());

    for (const Trajectory& tr : trajectories) {
        st.jump_counts.push_back(static_cast<std::int64_t>(tr.jumps.size()));
        st.status_tally[static_cast<std::size_t>(tr.status)] += 1;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const int q = tr.config_at(times[k]);
            if (q >= 0) {
                st.rho_hat[k](q) += 1.0;
            } else {
                st.missing_mass[k] += 1.0;
            }
        }
    }
    const double inv = 1.0 / std::max(1, st.M);
    for (std::size_t k = 0; k < times.size(); ++k) {
        st.rho_hat[k] *= inv;
        st.missing_mass[k] *= inv;
    }
    return st;
}

namespace {

std::vector<Trajectory> run_from_measure(const JumpSystem& system, int M, double t0,
                                         double horizon, const VerifyOptions& opt) {
    return run_ensemble(system, std::nullopt, t0, horizon, M, opt.sampler, opt.jobs);
}

double integrate_time(const std::function<double(double)>& f, double t1, double t2,
                      double tol) {
    QuadratureOptions qopt;
    qopt.abs_tol = tol;
    return adaptive_simpson(f, t1, t2, qopt);
}

}  // namespace

std::vector<double> equivariance_test(const JumpSystem& system, int M, double t0,
                                      const std::vector<double>& times,
                                      const VerifyOptions& opt) {
    if (M < 100) throw std::invalid_argument("equivariance_test: M >= 100 required");
    if (times.empty()) throw std::invalid_argument("equivariance_test: no checkpoints");
    const double horizon = *std::max_element(times.begin(), times.end());
    const auto trajectories = run_from_measure(system, M, t0, horizon, opt);
    const EnsembleStats st = collect_stats(trajectories, system.num_configs(), times);

    std::vector<double> tv(times.size(), 0.0);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const Eigen::VectorXd mu = system.mu_at(times[k]);
        // missing (cemetery) mass counts fully against the quantum measure
        tv[k] = 0.5 * ((st.rho_hat[k] - mu).cwiseAbs().sum() + st.missing_mass[k]);
    }
    return tv;
}

ExpectedJumpsReport expected_jumps_check(const JumpSystem& system, int M, double t1, double t2,
                                         const VerifyOptions& opt) {
    if (!(t1 < t2)) throw std::invalid_argument("expected_jumps_check: t1 < t2 required");
    const auto trajectories = run_from_measure(system, M, t1, t2, opt);
    EnsembleStats st = collect_stats(trajectories, system.num_configs(), {t2});

    const double tol = opt.sampler.quad_tol;
    // sum_{q,q'} sigma(q,q') mu(q') = sum of positive current entries, which
    // stays finite through nodes (no division involved)
    const double identity_value = integrate_time(
        [&](double s) {
            const CurrentMatrix cur = system.current_at(s);
            return cur.J.cwiseMax(0.0).sum();
        },
        t1, t2, tol);

    const double hbar = system.hbar();
    const double bound_value = integrate_time(
        [&](double s) {
            const StateVector psi = system.psi_at(s);
            return 2.0 / hbar * kernel_abs_sum(psi, system.hamiltonian(), system.povm());
        },
        t1, t2, tol);
    if (!std::isfinite(identity_value) || !std::isfinite(bound_value)) {
        throw std::runtime_error("expected_jumps_check: quadrature did not converge");
    }

    ExpectedJumpsReport rep;
    rep.identity.empirical = st.mean_jumps();
    rep.identity.theoretical = identity_value;
    rep.identity.mc_stderr = st.stderr_jumps();
    rep.identity.slack = rep.identity.theoretical - rep.identity.empirical;
    rep.identity.passed = std::abs(rep.identity.empirical - rep.identity.theoretical) <=
                          3.0 * rep.identity.mc_stderr + 1e-6 * (1.0 + identity_value);

    rep.bound.empirical = st.mean_jumps();
    rep.bound.theoretical = bound_value;
    rep.bound.mc_stderr = st.stderr_jumps();
    rep.bound.slack = bound_value - rep.bound.empirical;
    rep.bound.passed = rep.bound.empirical <= bound_value + 3.0 * rep.bound.mc_stderr;
    return rep;
}

RhoMuReport rho_leq_mu_check(const JumpSystem& system, int M, double t0,
                             const std::vector<double>& times, const VerifyOptions& opt) {
    if (times.empty()) throw std::invalid_argument("rho_leq_mu_check: no checkpoints");
    const double horizon = *std::max_element(times.begin(), times.end());
    const auto trajectories = run_from_measure(system, M, t0, horizon, opt);
    const EnsembleStats st = collect_stats(trajectories, system.num_configs(), times);

    RhoMuReport rep;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < times.size(); ++k) {
        const Eigen::VectorXd mu = system.mu_at(times[k]);
        for (int q = 0; q < system.num_configs(); ++q) {
            // binomial standard error with a one-count floor for mu near zero
            const double se =
                std::sqrt(std::max(mu(q) * (1.0 - mu(q)), 0.0) / M) + 1.0 / static_cast<double>(M);
            rep.worst_excess = std::max(rep.worst_excess, st.rho_hat[k](q) - mu(q) - 3.0 * se);
        }
    }
    rep.passed = rep.worst_excess <= 0.0;
    rep.final_missing_mass = st.missing_mass.back();
    rep.cemetery_count = st.status_tally[static_cast<std::size_t>(TrajStatus::Cemetery)];
    return rep;
}

NodeAvoidanceReport node_avoidance_check(const JumpSystem& system, int M, double node_time,
                                         int node_config, double delta, double t0,
                                         const VerifyOptions& opt) {
    if (!(delta > 0.0)) throw std::invalid_argument("node_avoidance_check: delta > 0 required");
    const double probe = node_time - delta;
    if (!(probe > t0)) throw std::invalid_argument("node_avoidance_check: probe before t0");
    const auto trajectories = run_from_measure(system, M, t0, probe, opt);
    const EnsembleStats st = collect_stats(trajectories, system.num_configs(), {probe});

    NodeAvoidanceReport rep;
    rep.occupancy = st.rho_hat[0](node_config);
    rep.mu_theory = system.mu_of(node_config, probe);
    rep.node_guard_count = st.status_tally[static_cast<std::size_t>(TrajStatus::NodeGuard)];
    const double se = std::sqrt(std::max(rep.mu_theory * (1.0 - rep.mu_theory), 0.0) / M) +
                      1.0 / static_cast<double>(M);
    rep.passed = rep.node_guard_count == 0 && rep.occupancy <= rep.mu_theory + 3.0 * se;
    return rep;
}

double additivity_check(const Eigen::MatrixXcd& H0, const Eigen::MatrixXcd& HI,
                        const JumpSystem& full_system, const std::vector<double>& times) {
    const int D = static_cast<int>(H0.rows());
    for (int i = 0; i < D; ++i) {
        for (int j = 0; j < D; ++j) {
            if (i == j) continue;
            if (H0(i, j) != cxd(0.0, 0.0) && HI(i, j) != cxd(0.0, 0.0)) {
                throw std::invalid_argument(
                    "additivity_check: off-diagonal supports of H0 and HI overlap");
            }
        }
    }
    const HermitianOperator op0(H0);
    const HermitianOperator opI(HI);
    const double eps = full_system.node_eps();

    double worst = 0.0;
    for (double t : times) {
        const StateVector psi = full_system.psi_at(t);   // evolved under the FULL H
        const RateKernel k_full = minimal_rates(psi, full_system.hamiltonian(),
                                                full_system.povm(), t, eps);
        const RateKernel k0 = minimal_rates(psi, op0, full_system.povm(), t, eps);
        const RateKernel kI = minimal_rates(psi, opI, full_system.povm(), t, eps);
        for (int qp = 0; qp < D; ++qp) {
            if (k_full.is_singular(qp) || k0.is_singular(qp) || kI.is_singular(qp)) continue;
            for (int q = 0; q < D; ++q) {
                const double dev =
                    std::abs(k_full.sigma(q, qp) - k0.sigma(q, qp) - kI.sigma(q, qp));
                worst = std::max(worst, dev);
            }
        }
    }
    return worst;
}

double StructuralReport::worst() const {
    return std::max({antisymmetry, detailed_current, minimality_product, master_equation,
                     norm_drift});
}

StructuralReport structural_check(const JumpSystem& system, const std::vector<double>& times) {
    StructuralReport rep;
    const int D = system.num_configs();
    for (double t : times) {
        const StateVector psi = system.psi_at(t);
        rep.norm_drift = std::max(rep.norm_drift, std::abs(psi.norm() - 1.0));

        const CurrentMatrix cur = system.current_at(t);
        rep.antisymmetry =
            std::max(rep.antisymmetry, (cur.J + cur.J.transpose()).cwiseAbs().maxCoeff());

        const Eigen::VectorXd mu = system.mu_at(t);
        const Eigen::VectorXd mu_dot = system.mu_dot_at(t);
        const RateKernel k = system.kernel_at(t);

        for (int q = 0; q < D; ++q) {
            if (k.is_singular(q)) continue;
            // master equation with rho = mu: sum_q' sigma(q,q') mu(q') - total(q) mu(q)
            double gain = 0.0;
            for (int qp = 0; qp < D; ++qp) {
                if (qp == q) continue;
                if (k.is_singular(qp)) {
                    // sigma(q,qp) mu(qp) extends continuously to [J]+ at a node
                    gain += std::max(cur.J(q, qp), 0.0);
                    continue;
                }
                gain += k.sigma(q, qp) * mu(qp);
                const double detail =
                    k.sigma(q, qp) * mu(qp) - k.sigma(qp, q) * mu(q) - cur.J(q, qp);
                rep.detailed_current = std::max(rep.detailed_current, std::abs(detail));
                rep.minimality_product =
                    std::max(rep.minimality_product, std::abs(k.sigma(q, qp) * k.sigma(qp, q)));
            }
            rep.master_equation =
                std::max(rep.master_equation, std::abs(gain - k.total(q) * mu(q) - mu_dot(q)));
        }
    }
    return rep;
}

double distance_functional(const Trajectory& traj, const JumpSystem& system, double t1,
                           double t2) {
    double acc = 0.0;
    for (const JumpRecord& j : traj.jumps) {
        if (j.time >= t1 && j.time <= t2) acc += system.jump_distance(j.from, j.to);
    }
    return acc;
}

double log_variation(const Trajectory& traj, const JumpSystem& system, double t1, double t2,
                     double quad_tol) {
    // piecewise-constant path: integrate |mu_dot(x)/mu(x)| over each piece
    struct Piece {
        double a, b;
        int x;
    };
    std::vector<Piece> pieces;
    double cur_t = traj.t0;
    int cur_x = traj.x0;
    for (const JumpRecord& j : traj.jumps) {
        pieces.push_back({cur_t, j.time, cur_x});
        cur_t = j.time;
        cur_x = j.to;
    }
    pieces.push_back({cur_t, traj.end_time, cur_x});

    QuadratureOptions qopt;
    qopt.abs_tol = quad_tol;
    qopt.divergence_cap = 1e6;

    double total = 0.0;
    for (const Piece& p : pieces) {
        const double a = std::max(p.a, t1);
        const double b = std::min(p.b, t2);
        if (!(a < b)) continue;
        const double piece = adaptive_simpson(
            [&](double s) {
                const double mu = system.mu_of(p.x, s);
                if (mu <= system.node_eps()) {
                    return std::numeric_limits<double>::infinity();
                }
                return std::abs(system.mu_dot_at(s)(p.x)) / mu;
            },
            a, b, qopt);
        if (!std::isfinite(piece)) return std::numeric_limits<double>::infinity();
        total += piece;
    }
    return total;
}

// ----------------------------- Dirac diagnostics -----------------------------

double dirac_speed_scan(const DiracSystem& system, int nx, int nt, double t1, double t2) {
    const double period = system.domain_length();
    double worst = 0.0;
    for (int j = 0; j < nt; ++j) {
        const double t = nt == 1 ? t1 : t1 + (t2 - t1) * j / (nt - 1);
        for (int i = 0; i < nx; ++i) {
            const double x = period * i / nx;
            const Eigen::Vector2cd p = system.psi(x, t);
            const double dens = p.squaredNorm();
            if (dens <= 0.0) continue;
            const double v =
                system.spec().c * 2.0 * std::real(std::conj(p(0)) * p(1)) / dens;
            worst = std::max(worst, std::abs(v) / system.spec().c);
        }
    }
    return worst;
}

double dirac_log_variation_bound(const DiracSystem& system, double t1, double t2, int nx,
                                 int nt) {
    const DiracSpec& sp = system.spec();
    const double period = system.domain_length();
    const double dx = period / nx;

    auto space_integral = [&](double t) {
        double acc = 0.0;
        for (int i = 0; i < nx; ++i) {
            const double x = i * dx;
            const Eigen::Vector2cd p = system.psi(x, t);
            const Eigen::Vector2cd g = system.dpsi_dx(x, t);
            acc += std::abs(p.dot(g)) * dx;   // |psi† dpsi/dx|
        }
        return acc;
    };

    // composite Simpson in time (nt odd)
    if (nt % 2 == 0) ++nt;
    const double ht = (t2 - t1) / (nt - 1);
    double simpson = 0.0;
    for (int j = 0; j < nt; ++j) {
        const double w = (j == 0 || j == nt - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        simpson += w * space_integral(t1 + j * ht);
    }
    simpson *= ht / 3.0;

    return 2.0 / sp.hbar * sp.mass * sp.c * sp.c * (t2 - t1) + 4.0 * sp.c * simpson;
}

DiracEnsembleReport dirac_log_variation_check(const DiracSystem& system, int M, double t1,
                                              double t2, std::uint64_t seed, double node_eps) {
    if (M < 1) throw std::invalid_argument("dirac_log_variation_check: M >= 1 required");
    const double period = system.domain_length();

    // inverse-CDF table for the initial density
    const int ncdf = 4096;
    std::vector<double> cdf(static_cast<std::size_t>(ncdf) + 1, 0.0);
    const double dx = period / ncdf;
    for (int i = 0; i < ncdf; ++i) {
        cdf[static_cast<std::size_t>(i) + 1] =
            cdf[static_cast<std::size_t>(i)] + system.density((i + 0.5) * dx, t1) * dx;
    }
    const double norm = cdf.back();

    using state_type = std::array<double, 2>;   // position, accumulated L
    namespace ode = boost::numeric::odeint;

    DiracEnsembleReport rep;
    rep.bound = dirac_log_variation_bound(system, t1, t2);

    double sum_L = 0.0;
    double max_speed = 0.0;
    for (int traj = 0; traj < M; ++traj) {
        RngStream rng = RngStream::for_trajectory(seed, static_cast<std::uint64_t>(traj));
        const double target = rng.uniform01() * norm;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        const std::size_t cell = std::min(
            static_cast<std::size_t>(std::distance(cdf.begin(), it)) - 1,
            static_cast<std::size_t>(ncdf - 1));
        const double frac =
            (target - cdf[cell]) / std::max(cdf[cell + 1] - cdf[cell], 1e-300);
        const double x_start = (static_cast<double>(cell) + frac) * dx;

        auto rhs = [&](const state_type& s, state_type& dsdt, double t) {
            const Eigen::Vector2cd p = system.psi(s[0], t);
            const double dens = p.squaredNorm();
            if (dens <= node_eps) {
                throw node_guard_error("dirac path hit a node");
            }
            const double v = system.spec().c * 2.0 * std::real(std::conj(p(0)) * p(1)) / dens;
            max_speed = std::max(max_speed, std::abs(v));
            const Eigen::Vector2cd pt = system.dpsi_dt(s[0], t);
            const Eigen::Vector2cd px = system.dpsi_dx(s[0], t);
            const double ddt = 2.0 * std::real(p.dot(pt));   // d/dt psi†psi
            const double ddx = 2.0 * std::real(p.dot(px));
            dsdt[0] = v;
            dsdt[1] = std::abs(ddt + v * ddx) / dens;
        };

        state_type s{x_start, 0.0};
        try {
            auto stepper =
                ode::make_controlled(1e-8, 1e-8, ode::runge_kutta_cash_karp54<state_type>());
            ode::integrate_adaptive(stepper, rhs, s, t1, t2, (t2 - t1) / 256.0);
            sum_L += s[1];
        } catch (const node_guard_error&) {
            rep.finite = false;
            rep.mean_L = std::numeric_limits<double>::infinity();
            rep.max_speed = max_speed;
            rep.passed = false;
            return rep;
        }
    }
    rep.mean_L = sum_L / M;
    rep.max_speed = max_speed;
    rep.finite = std::isfinite(rep.mean_L);
    rep.passed = rep.finite && rep.mean_L <= rep.bound &&
                 rep.max_speed <= system.spec().c * (1.0 + 1e-12);
    return rep;
}

// ----------------------------- Bohm diagnostics ------------------------------

double gaussian_pushforward_tv(const GaussianPacket& packet, int M, double t, std::uint64_t seed,
                               int bins, double step_tol) {
    if (M < 100) throw std::invalid_argument("gaussian_pushforward_tv: M >= 100 required");
    if (bins < 2) throw std::invalid_argument("gaussian_pushforward_tv: bins >= 2 required");

    const double st = packet.spread(t);
    const double ct = packet.center(t);
    const double lo = ct - 5.0 * st;
    const double hi = ct + 5.0 * st;
    const double width = (hi - lo) / bins;

    std::vector<double> counts(static_cast<std::size_t>(bins) + 2, 0.0);
    for (int i = 0; i < M; ++i) {
        RngStream rng = RngStream::for_trajectory(seed, static_cast<std::uint64_t>(i));
        const double x_start = packet.x0 + packet.s0 * rng.normal();
        const BohmPath path = integrate_bohm(packet, x_start, 0.0, t, step_tol);
        const double xe = path.end_position();
        if (xe < lo) {
            counts[0] += 1.0;
        } else if (xe >= hi) {
            counts[static_cast<std::size_t>(bins) + 1] += 1.0;
        } else {
            counts[1 + static_cast<std::size_t>((xe - lo) / width)] += 1.0;
        }
    }

    // exact bin probabilities from the Gaussian CDF
    auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - ct) / (st * std::sqrt(2.0))); };
    double tv = 0.0;
    tv += 0.5 * std::abs(counts[0] / M - cdf(lo));
    tv += 0.5 * std::abs(counts[static_cast<std::size_t>(bins) + 1] / M - (1.0 - cdf(hi)));
    for (int b = 0; b < bins; ++b) {
        const double p = cdf(lo + (b + 1) * width) - cdf(lo + b * width);
        tv += 0.5 * std::abs(counts[static_cast<std::size_t>(b) + 1] / M - p);
    }
    return tv;
}

}  // namespace bpl
