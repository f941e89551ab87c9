// Bohmian-side tests: velocity fields against the analytic phase-gradient
// oracle, trajectory integration against the scaling law, and the lattice
// drift against the continuum velocity.

#include "doctest.h"

#include "bpl/bohmian.hpp"

#include <cmath>

using namespace bpl;

namespace {

GaussianPacket rest_packet(double s0 = 1.0) {
    GaussianPacket p;
    p.x0 = 0.0;
    p.s0 = s0;
    p.u = 0.0;
    p.m = 1.0;
    p.hbar = 1.0;
    return p;
}

}  // namespace

TEST_CASE("free-packet velocity is the linear spreading field") {
    const GaussianPacket p = rest_packet(0.8);
    const double rate = p.hbar / (2.0 * p.m * p.s0 * p.s0);
    for (double t : {0.3, 1.0, 2.5}) {
        for (double x : {-1.5, 0.4, 2.0}) {
            const double expect = x * t * rate * rate / (1.0 + rate * t * rate * t);
            CHECK(bohm_velocity(p, x, t) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("boosted packet at t = 0 moves with the boost only") {
    GaussianPacket p = rest_packet();
    p.u = 1.7;
    for (double x : {-2.0, 0.0, 1.3}) {
        CHECK(bohm_velocity(p, x, 0.0) == doctest::Approx(1.7).epsilon(1e-12));
    }
}

TEST_CASE("plane wave moves at hbar k / m") {
    PlaneWave w;
    w.k = 2.5;
    w.m = 0.5;
    w.hbar = 1.0;
    CHECK(bohm_velocity(w, 3.0, 1.0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("velocity at a node raises the guard") {
    const GaussianPacket p = rest_packet(0.5);
    CHECK_THROWS_AS(bohm_velocity(p, 60.0, 0.0), node_guard_error);
}

TEST_CASE("integrated trajectories follow the scaling law") {
    SUBCASE("x_start = 0 stays put") {
        const BohmPath path = integrate_bohm(rest_packet(), 0.0, 0.0, 2.0);
        CHECK(std::abs(path.end_position()) < 1e-12);
    }
    SUBCASE("s0 = 1/2 from x_start = 1 reaches sqrt(5) at t = 1") {
        const BohmPath path = integrate_bohm(rest_packet(0.5), 1.0, 0.0, 1.0, 1e-12);
        CHECK(path.end_position() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-8));
        CHECK(path.length() == doctest::Approx(std::sqrt(5.0) - 1.0).epsilon(1e-8));
    }
    SUBCASE("reversal returns to the start") {
        const GaussianPacket p = rest_packet(0.7);
        const BohmPath fwd = integrate_bohm(p, 1.2, 0.0, 1.5, 1e-12);
        const BohmPath back = integrate_bohm(p, fwd.end_position(), 1.5, 0.0, 1e-12);
        CHECK(std::abs(back.end_position() - 1.2) < 1e-8);
    }
    SUBCASE("general scaling law at several times") {
        const GaussianPacket p = rest_packet(0.9);
        for (double t : {0.5, 1.0, 2.0}) {
            const BohmPath path = integrate_bohm(p, 1.5, 0.0, t, 1e-12);
            const double tau = p.tau(t);
            CHECK(path.end_position() ==
                  doctest::Approx(1.5 * std::sqrt(1.0 + tau * tau)).epsilon(1e-7));
        }
    }
}

TEST_CASE("Bohm-Dirac velocities") {
    DiracSpec spec;
    spec.L = 32;
    spec.eps = 0.25;
    spec.c = 1.0;

    SUBCASE("massless chiral modes move at +-c") {
        DiracSpec m0 = spec;
        m0.mass = 0.0;
        const DiracSystem right(m0, plane_wave_spinor_profile(m0, 2, +1));
        const DiracSystem left(m0, plane_wave_spinor_profile(m0, 2, -1));
        CHECK(bohm_dirac_velocity(right, 1.0, 0.3) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(bohm_dirac_velocity(left, 1.0, 0.3) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("pure upper spinor is at rest") {
        const DiracSystem sys(spec, gaussian_spinor_profile(spec, 4.0, 1.0, 0.0));
        CHECK(std::abs(bohm_dirac_velocity(sys, 4.0, 0.0)) < 1e-12);
    }
    SUBCASE("speed never exceeds c") {
        const DiracSystem sys(spec, gaussian_spinor_profile(spec, 4.0, 0.6, 3.0));
        for (double t : {0.0, 0.9, 2.2}) {
            for (int i = 0; i < 64; ++i) {
                const double x = 8.0 * i / 64.0;
                const Eigen::Vector2cd p = sys.psi(x, t);
                if (p.squaredNorm() <= 1e-12) continue;
                CHECK(std::abs(bohm_dirac_velocity(sys, x, t)) <= spec.c * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("velocity fields as first-class values") {
    GaussianPacket p = rest_packet(0.8);
    p.u = 0.5;
    const VelocityField bohm = VelocityField::from_packet(p);
    CHECK(bohm.kind == VelocityField::Kind::Bohm);
    CHECK(bohm.eval(0.7, 1.1) == doctest::Approx(bohm_velocity(p, 0.7, 1.1)).epsilon(1e-14));

    PlaneWave w;
    w.k = 3.0;
    const VelocityField wave = VelocityField::from_plane_wave(w);
    CHECK(wave.eval(0.0, 0.0) == doctest::Approx(3.0).epsilon(1e-14));

    DiracSpec spec;
    spec.L = 16;
    spec.eps = 0.5;
    const VelocityField dirac = VelocityField::from_dirac(
        DiracSystem(spec, gaussian_spinor_profile(spec, 4.0, 1.0, 1.0)));
    CHECK(dirac.kind == VelocityField::Kind::BohmDirac);
    for (double x : {1.0, 3.5, 6.0}) {
        CHECK(std::abs(dirac.eval(x, 0.4)) <= spec.c * (1.0 + 1e-12));
    }
}

TEST_CASE("lattice drift") {
    SUBCASE("symmetric two-site state has zero drift") {
        LatticeSpec spec;
        spec.L = 2;
        const JumpSystem sys =
            build_lattice_particle(spec, {cxd(1.0, 0.0), cxd(1.0, 0.0)});
        for (double t : {0.0, 0.7}) {
            CHECK(std::abs(lattice_drift(sys, 0, t)) < 1e-12);
            CHECK(std::abs(lattice_drift(sys, 1, t)) < 1e-12);
        }
    }
    SUBCASE("plane-wave profile drifts uniformly across the interior") {
        LatticeSpec spec;
        spec.L = 24;
        spec.eps = 0.2;
        const auto coords = lattice_coordinates(spec);
        std::vector<cxd> prof;
        for (double x : coords) prof.push_back(std::polar(1.0, 1.3 * x));
        const JumpSystem sys = build_lattice_particle(spec, prof);
        const double reference = lattice_drift(sys, 12, 0.0);
        for (int i = 1; i < spec.L - 1; ++i) {
            CHECK(lattice_drift(sys, i, 0.0) == doctest::Approx(reference).epsilon(1e-8));
        }
    }
    SUBCASE("discretized packet drift approximates the Bohmian velocity") {
        GaussianPacket p = rest_packet();
        p.u = 1.0;
        const double t = 0.5;
        const auto rows = continuum_limit_report(p, {0.1}, t, p.center(t) + 0.5);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].abs_error <= 0.05 * std::abs(rows[0].velocity));
    }
}

TEST_CASE("continuum limit report") {
    SUBCASE("errors decrease monotonically toward the continuum") {
        GaussianPacket p = rest_packet();
        p.u = 1.0;
        const auto rows = continuum_limit_report(p, {0.2, 0.1, 0.05}, 0.5, 1.0);
        REQUIRE(rows.size() == 3);
        CHECK(rows[1].abs_error < rows[0].abs_error);
        CHECK(rows[2].abs_error < rows[1].abs_error);
        CHECK(rows[2].abs_error <= 0.05 * std::abs(rows[2].velocity));
        // observed convergence order of the drift
        const double slope = std::log(rows[0].abs_error / rows[2].abs_error) /
                             std::log(rows[0].eps / rows[2].eps);
        CHECK(slope >= 0.9);
    }
    SUBCASE("constant-phase packet is static at its center") {
        const GaussianPacket p = rest_packet();
        for (double eps : {0.2, 0.1}) {
            const auto rows = continuum_limit_report(p, {eps}, 0.4, 0.0);
            CHECK(std::abs(rows[0].drift) < 1e-9);
            CHECK(std::abs(rows[0].velocity) < 1e-12);
        }
    }
    SUBCASE("non-decreasing eps list is rejected") {
        CHECK_THROWS_AS(continuum_limit_report(rest_packet(), {0.1, 0.2}, 0.5, 0.0),
                        std::invalid_argument);
    }
}
