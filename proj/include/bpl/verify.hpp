// verify.hpp — Verification harness: equivariance testing, the global
// existence diagnostics (expected jumps, rho <= mu, node avoidance), process
// additivity, and the traveled-distance / log-variation functionals.

#pragma once

#include "bpl/bohmian.hpp"
#include "bpl/models.hpp"
#include "bpl/process.hpp"
#include "bpl/quantum.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace bpl {

struct EnsembleStats {
    int M{0};
    std::vector<double> times;
    std::vector<Eigen::VectorXd> rho_hat;   // per checkpoint, over real configs
    std::vector<double> missing_mass;       // cemetery + node-guard mass per checkpoint
    std::vector<std::int64_t> jump_counts;  // per trajectory over its full span
    std::array<int, 4> status_tally{};      // indexed by TrajStatus

    double mean_jumps() const;
    double stderr_jumps() const;
};

EnsembleStats collect_stats(const std::vector<Trajectory>& trajectories, int num_configs,
                            const std::vector<double>& times);

struct VerifyOptions {
    SamplerConfig sampler;
    int jobs{0};
};

// Empirical-vs-theoretical comparison with a Monte Carlo 3-sigma gate.
struct BoundReport {
    double empirical{0.0};
    double theoretical{0.0};
    double slack{0.0};        // theoretical - empirical
    double mc_stderr{0.0};
    bool passed{false};
};

// TV(rho_hat_t, mu_t) at each checkpoint; trajectories start from mu_{t0}.
std::vector<double> equivariance_test(const JumpSystem& system, int M, double t0,
                                      const std::vector<double>& times,
                                      const VerifyOptions& opt);

// (i) identity: empirical mean S(t1,t2) against the quadrature of
//     sum_{q,q'} sigma_t(q,q') mu_t(q') = sum of positive current parts;
// (ii) bound: empirical mean against (2/hbar) integral of
//     sum_{q,q'} |<Psi, P(q) H P(q') Psi>|.
struct ExpectedJumpsReport {
    BoundReport identity;
    BoundReport bound;
};
ExpectedJumpsReport expected_jumps_check(const JumpSystem& system, int M, double t1, double t2,
                                         const VerifyOptions& opt);

// Worst excess of empirical occupancy over mu across configs and checkpoints,
// after subtracting three binomial standard errors. Negative passes.
struct RhoMuReport {
    double worst_excess{0.0};
    bool passed{false};
    double final_missing_mass{0.0};   // mass absorbed by the cemetery
    int cemetery_count{0};
};
RhoMuReport rho_leq_mu_check(const JumpSystem& system, int M, double t0,
                             const std::vector<double>& times, const VerifyOptions& opt);

// Fraction of trajectories occupying node_config at node_time - delta,
// compared against the (vanishing) quantum measure there.
struct NodeAvoidanceReport {
    double occupancy{0.0};
    double mu_theory{0.0};
    int node_guard_count{0};
    bool passed{false};
};
NodeAvoidanceReport node_avoidance_check(const JumpSystem& system, int M, double node_time,
                                         int node_config, double delta, double t0,
                                         const VerifyOptions& opt);

// max_t max_{q,q' non-singular} |sigma(H0+HI) - sigma(H0) - sigma(HI)| with
// the state evolved under the full Hamiltonian. Verifies the operators'
// off-diagonal supports are disjoint first.
double additivity_check(const Eigen::MatrixXcd& H0, const Eigen::MatrixXcd& HI,
                        const JumpSystem& full_system, const std::vector<double>& times);

// Structural identities of the rate construction on one system at fixed
// times: current antisymmetry, the detailed-current identity, one-direction
// minimality, master-equation consistency, and norm preservation.
struct StructuralReport {
    double antisymmetry{0.0};
    double detailed_current{0.0};
    double minimality_product{0.0};
    double master_equation{0.0};
    double norm_drift{0.0};
    double worst() const;
};
StructuralReport structural_check(const JumpSystem& system, const std::vector<double>& times);

// Distance traveled by a jump trajectory in [t1, t2] under the system metric.
double distance_functional(const Trajectory& traj, const JumpSystem& system, double t1,
                           double t2);

// Total variation of t -> log mu_t(Q_t) along the constant pieces of a jump
// trajectory; +inf when a node divergence is met.
double log_variation(const Trajectory& traj, const JumpSystem& system, double t1, double t2,
                     double quad_tol = 1e-9);

// ----------------------------- Dirac diagnostics -----------------------------

// Largest |v|/c over a grid x time scan.
double dirac_speed_scan(const DiracSystem& system, int nx, int nt, double t1, double t2);

// Quadrature of the log-variation bound chain:
// (2/hbar) m c^2 (t2-t1) + 4 c Int dt Int dx |psi† dpsi/dx|.
double dirac_log_variation_bound(const DiracSystem& system, double t1, double t2,
                                 int nx = 512, int nt = 129);

struct DiracEnsembleReport {
    double mean_L{0.0};
    double bound{0.0};
    double max_speed{0.0};   // max |v| along sampled paths
    bool finite{false};
    bool passed{false};
};
DiracEnsembleReport dirac_log_variation_check(const DiracSystem& system, int M, double t1,
                                              double t2, std::uint64_t seed,
                                              double node_eps = kDefaultNodeEps);

// ----------------------------- Bohm diagnostics ------------------------------

// TV distance between the pushforward of M |Psi_0|^2-distributed starts under
// integrate_bohm and the exact |Psi_t|^2 histogram.
double gaussian_pushforward_tv(const GaussianPacket& packet, int M, double t, std::uint64_t seed,
                               int bins = 24, double step_tol = 1e-10);

}  // namespace bpl
