#include "bpl/bohmian.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace bpl {

void GaussianPacket::validate() const {
    if (s0 <= 0.0) throw std::invalid_argument("GaussianPacket: s0 > 0 required");
    if (m <= 0.0) throw std::invalid_argument("GaussianPacket: m > 0 required");
    if (hbar <= 0.0) throw std::invalid_argument("GaussianPacket: hbar > 0 required");
}

double GaussianPacket::spread(double t) const {
    const double tt = tau(t);
    return s0 * std::sqrt(1.0 + tt * tt);
}

cxd GaussianPacket::psi(double x, double t) const {
    // boosted free packet: e^{i(mux - m u^2 t/2)/hbar} psi_rest(x - ut, t)
    const double tt = tau(t);
    const cxd sigma_c = s0 * cxd(1.0, tt);
    const double xr = x - x0 - u * t;
    const cxd envelope =
        std::pow(2.0 * M_PI, -0.25) / std::sqrt(sigma_c) *
        std::exp(-xr * xr / (4.0 * s0 * sigma_c));
    const double boost_phase = (m * u * x - 0.5 * m * u * u * t) / hbar;
    return std::polar(1.0, boost_phase) * envelope;
}

cxd GaussianPacket::dpsi_dx(double x, double t) const {
    const double tt = tau(t);
    const cxd sigma_c = s0 * cxd(1.0, tt);
    const double xr = x - x0 - u * t;
    return psi(x, t) * (cxd(0.0, m * u / hbar) - xr / (2.0 * s0 * sigma_c));
}

double GaussianPacket::density(double x, double t) const {
    const double st = spread(t);
    const double xr = x - center(t);
    return std::exp(-xr * xr / (2.0 * st * st)) / (std::sqrt(2.0 * M_PI) * st);
}

double bohm_velocity(const GaussianPacket& packet, double x, double t, double node_eps) {
    packet.validate();
    const cxd p = packet.psi(x, t);
    const double dens = std::norm(p);
    if (dens <= node_eps) {
        throw node_guard_error("bohm_velocity: node at x = " + std::to_string(x) +
                               ", t = " + std::to_string(t));
    }
    const cxd grad = packet.dpsi_dx(x, t);
    return packet.hbar / packet.m * std::imag(std::conj(p) * grad) / dens;
}

double bohm_velocity(const PlaneWave& wave, double /*x*/, double /*t*/) {
    if (wave.m <= 0.0 || wave.hbar <= 0.0) {
        throw std::invalid_argument("bohm_velocity: plane wave needs m, hbar > 0");
    }
    return wave.hbar * wave.k / wave.m;
}

VelocityField VelocityField::from_packet(const GaussianPacket& packet, double node_eps) {
    packet.validate();
    VelocityField f;
    f.kind = Kind::Bohm;
    f.eval = [packet, node_eps](double x, double t) {
        return bohm_velocity(packet, x, t, node_eps);
    };
    return f;
}

VelocityField VelocityField::from_plane_wave(const PlaneWave& wave) {
    VelocityField f;
    f.kind = Kind::Bohm;
    f.eval = [wave](double x, double t) { return bohm_velocity(wave, x, t); };
    return f;
}

VelocityField VelocityField::from_dirac(const DiracSystem& system, double node_eps) {
    VelocityField f;
    f.kind = Kind::BohmDirac;
    // captures the system by value: fields stay valid past the builder scope
    auto shared = std::make_shared<DiracSystem>(system);
    f.eval = [shared, node_eps](double x, double t) {
        return bohm_dirac_velocity(*shared, x, t, node_eps);
    };
    return f;
}

double BohmPath::length() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) acc += std::abs(x[i] - x[i - 1]);
    return acc;
}

BohmPath integrate_bohm(const GaussianPacket& packet, double x_start, double t0, double t1,
                        double step_tol, double node_eps) {
    packet.validate();
    if (std::norm(packet.psi(x_start, t0)) <= node_eps) {
        throw node_guard_error("integrate_bohm: starting on a node");
    }

    using state_type = std::array<double, 1>;
    namespace ode = boost::numeric::odeint;

    auto rhs = [&](const state_type& s, state_type& dsdt, double t) {
        dsdt[0] = bohm_velocity(packet, s[0], t, node_eps);
    };

    BohmPath path;
    auto observer = [&](const state_type& s, double t) {
        path.t.push_back(t);
        path.x.push_back(s[0]);
    };

    state_type state{x_start};
    const double span = t1 - t0;
    if (span == 0.0) {
        observer(state, t0);
        return path;
    }
    const double dt0 = span / 256.0;
    auto stepper = ode::make_controlled(step_tol, step_tol,
                                        ode::runge_kutta_cash_karp54<state_type>());
    ode::integrate_adaptive(stepper, rhs, state, t0, t1, dt0, observer);
    return path;
}

double bohm_dirac_velocity(const DiracSystem& system, double x, double t, double node_eps) {
    const Eigen::Vector2cd p = system.psi(x, t);
    const double dens = p.squaredNorm();
    if (dens <= node_eps) {
        throw node_guard_error("bohm_dirac_velocity: node at x = " + std::to_string(x) +
                               ", t = " + std::to_string(t));
    }
    const double flux = 2.0 * std::real(std::conj(p(0)) * p(1));   // psi† sigma_x psi
    return system.spec().c * flux / dens;
}

double lattice_drift(const JumpSystem& system, int site, double t) {
    if (system.positions.empty()) {
        throw std::invalid_argument("lattice_drift: system carries no site coordinates");
    }
    const ColumnRates col = system.rates_from(site, t);
    if (col.singular) {
        throw node_guard_error("lattice_drift: site '" + system.space().label(site) +
                               "' singular at t = " + std::to_string(t));
    }
    const double x_here = system.positions[static_cast<std::size_t>(site)];
    double drift = 0.0;
    for (int q = 0; q < system.num_configs(); ++q) {
        if (q == site) continue;
        drift += (system.positions[static_cast<std::size_t>(q)] - x_here) * col.sigma(q);
    }
    return drift;
}

std::vector<ConvergenceRow> continuum_limit_report(const GaussianPacket& packet,
                                                   const std::vector<double>& eps_list, double t,
                                                   double x_probe, double domain_halfwidth,
                                                   double node_eps) {
    packet.validate();
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1])) {
            throw std::invalid_argument("continuum_limit_report: eps_list must decrease");
        }
    }
    double half = domain_halfwidth;
    if (half <= 0.0) {
        half = std::abs(packet.x0) + std::abs(packet.u) * std::abs(t) + 8.0 * packet.spread(t) +
               1.0;
    }

    std::vector<ConvergenceRow> rows;
    rows.reserve(eps_list.size());
    for (double eps : eps_list) {
        LatticeSpec spec;
        spec.L = 2 * static_cast<int>(std::ceil(half / eps)) + 1;
        spec.eps = eps;
        spec.mass = packet.m;
        spec.hbar = packet.hbar;

        const std::vector<double> coords = lattice_coordinates(spec);
        std::vector<cxd> profile(static_cast<std::size_t>(spec.L));
        for (int i = 0; i < spec.L; ++i) {
            profile[static_cast<std::size_t>(i)] =
                packet.psi(coords[static_cast<std::size_t>(i)], 0.0);
        }

        const JumpSystem sys = build_lattice_particle(spec, profile, node_eps);
        const auto nearest = std::min_element(
            coords.begin(), coords.end(),
            [&](double a, double b) { return std::abs(a - x_probe) < std::abs(b - x_probe); });
        const int site = static_cast<int>(nearest - coords.begin());

        ConvergenceRow row;
        row.eps = eps;
        row.drift = lattice_drift(sys, site, t);
        row.velocity = bohm_velocity(packet, coords[static_cast<std::size_t>(site)], t, node_eps);
        row.abs_error = std::abs(row.drift - row.velocity);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace bpl
