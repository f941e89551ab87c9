// bohmian.hpp — Continuum velocity fields (Bohm and Bohm-Dirac), trajectory
// integration for closed-form wavefunctions, and the lattice-drift comparison
// against the continuum limit.

#pragma once

#include "bpl/models.hpp"
#include "bpl/quantum.hpp"

#include <functional>
#include <vector>

namespace bpl {

// Free Gaussian packet: closed-form solution of the free Schrödinger equation
// with initial position density N(x0, s0^2) boosted to mean velocity u.
struct GaussianPacket {
    double x0{0.0};
    double s0{1.0};
    double u{0.0};
    double m{1.0};
    double hbar{1.0};

    void validate() const;

    // tau parametrizes the spreading: tau(t) = hbar t / (2 m s0^2)
    double tau(double t) const { return hbar * t / (2.0 * m * s0 * s0); }
    double spread(double t) const;          // s0 sqrt(1 + tau^2)
    double center(double t) const { return x0 + u * t; }

    cxd psi(double x, double t) const;
    cxd dpsi_dx(double x, double t) const;
    double density(double x, double t) const;
};

struct PlaneWave {
    double k{1.0};
    double m{1.0};
    double hbar{1.0};
};

// v = (hbar/m) Im[psi* dpsi / |psi|^2]; throws node_guard_error at nodes.
double bohm_velocity(const GaussianPacket& packet, double x, double t,
                     double node_eps = kDefaultNodeEps);
double bohm_velocity(const PlaneWave& wave, double x, double t);

// A velocity field as a first-class value: finite away from nodes, and with
// |v| <= c everywhere for the BOHM_DIRAC kind.
struct VelocityField {
    enum class Kind { Bohm, BohmDirac };

    Kind kind{Kind::Bohm};
    std::function<double(double, double)> eval;   // (x, t) -> velocity

    static VelocityField from_packet(const GaussianPacket& packet,
                                     double node_eps = kDefaultNodeEps);
    static VelocityField from_plane_wave(const PlaneWave& wave);
    static VelocityField from_dirac(const DiracSystem& system,
                                    double node_eps = kDefaultNodeEps);
};

struct BohmPath {
    std::vector<double> t;
    std::vector<double> x;

    double end_position() const { return x.back(); }
    // Euclidean distance traveled (arc length of the 1D path).
    double length() const;
};

// Adaptive integration of dx/dt = v(x, t) from t0 to t1 (either direction).
BohmPath integrate_bohm(const GaussianPacket& packet, double x_start, double t0, double t1,
                        double step_tol = 1e-10, double node_eps = kDefaultNodeEps);

// v = c (psi† sigma_x psi)/(psi† psi); |v| <= c by construction.
double bohm_dirac_velocity(const DiracSystem& system, double x, double t,
                           double node_eps = kDefaultNodeEps);

// Mean instantaneous displacement rate of the jump process out of a site:
// sum_q (pos(q) - pos(x)) sigma_t(q, x).
double lattice_drift(const JumpSystem& system, int site, double t);

struct ConvergenceRow {
    double eps{0.0};
    double drift{0.0};
    double velocity{0.0};
    double abs_error{0.0};
};

// For each lattice spacing: discretize the packet, evolve exactly to time t,
// and compare the jump-process drift at the probe site against the Bohmian
// velocity there. domain_halfwidth <= 0 chooses a width that contains the
// packet to ~8 standard deviations.
std::vector<ConvergenceRow> continuum_limit_report(const GaussianPacket& packet,
                                                   const std::vector<double>& eps_list, double t,
                                                   double x_probe,
                                                   double domain_halfwidth = 0.0,
                                                   double node_eps = kDefaultNodeEps);

}  // namespace bpl
