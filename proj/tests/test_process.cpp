// Process sampling tests. The Rabi fixture supplies closed-form hazards
// (Lambda(0,t) = -2 ln cos t), holding-time laws, and jump counts.

#include "doctest.h"

#include "bpl/models.hpp"
#include "bpl/process.hpp"
#include "bpl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace bpl;

namespace {

SamplerConfig test_sampler(std::uint64_t seed = 99) {
    SamplerConfig cfg;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("cumulative hazard on the Rabi fixture") {
    const JumpSystem sys = build_two_level(1.0);
    const SamplerConfig cfg = test_sampler();

    SUBCASE("matches -2 ln cos t") {
        for (double t : {0.4, 0.9, 1.3}) {
            const double expect = -2.0 * std::log(std::cos(t));
            CHECK(cumulative_hazard(0, 0.0, t, sys, cfg) ==
                  doctest::Approx(expect).epsilon(1e-7));
        }
    }
    SUBCASE("zero-rate column integrates to zero") {
        // from config "2", nothing flows back on (0, pi/2)
        CHECK(cumulative_hazard(1, 0.5, 1.2, sys, cfg) == 0.0);
    }
    SUBCASE("node ahead forces divergence") {
        CHECK(std::isinf(cumulative_hazard(0, 0.0, M_PI / 2.0, sys, cfg)));
    }
    SUBCASE("singular start while occupied raises the node guard") {
        CHECK_THROWS_AS(cumulative_hazard(0, M_PI / 2.0, M_PI / 2.0 + 0.1, sys, cfg),
                        node_guard_error);
    }
    SUBCASE("empty interval is zero") {
        CHECK(cumulative_hazard(0, 0.3, 0.3, sys, cfg) == 0.0);
    }
}

TEST_CASE("holding-time sampler inverts the survival law") {
    const JumpSystem sys = build_two_level(1.0);
    const SamplerConfig cfg = test_sampler(7);
    const double horizon = M_PI / 2.0;

    SUBCASE("median sits at arccos(2^-1/2) = pi/4") {
        const int M = 20001;
        std::vector<double> ts;
        ts.reserve(M);
        for (int i = 0; i < M; ++i) {
            RngStream rng = RngStream::for_trajectory(cfg.seed, static_cast<std::uint64_t>(i));
            const auto t = sample_holding_time(0, 0.0, horizon, rng, sys, cfg);
            REQUIRE(t.has_value());
            ts.push_back(*t);
        }
        std::nth_element(ts.begin(), ts.begin() + M / 2, ts.end());
        CHECK(ts[M / 2] == doctest::Approx(M_PI / 4.0).epsilon(0.02));
    }
    SUBCASE("empirical survival tracks cos^2 t (KS at moderate M)") {
        const int M = 20000;
        std::vector<double> ts;
        ts.reserve(M);
        for (int i = 0; i < M; ++i) {
            RngStream rng = RngStream::for_trajectory(cfg.seed + 1, static_cast<std::uint64_t>(i));
            ts.push_back(*sample_holding_time(0, 0.0, horizon, rng, sys, cfg));
        }
        std::sort(ts.begin(), ts.end());
        double d = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double f = std::sin(ts[i]) * std::sin(ts[i]);
            d = std::max(d, std::abs(f - double(i + 1) / M));
            d = std::max(d, std::abs(f - double(i) / M));
        }
        CHECK(d <= 1.36 / std::sqrt(double(M)));
    }
    SUBCASE("zero rates always give NO_JUMP") {
        RngStream rng(5);
        for (int i = 0; i < 20; ++i) {
            CHECK_FALSE(sample_holding_time(1, 0.1, 1.4, rng, sys, cfg).has_value());
        }
    }
}

TEST_CASE("destination selection") {
    const JumpSystem sys = build_two_level(1.0);
    const SamplerConfig cfg = test_sampler();

    SUBCASE("Rabi always jumps 1 -> 2") {
        RngStream rng(1);
        for (double t : {0.2, 0.8, 1.4}) {
            CHECK(sample_destination(0, t, rng, sys, cfg) == 1);
        }
    }
    SUBCASE("zero column is an internal inconsistency") {
        RngStream rng(2);
        CHECK_THROWS_AS(sample_destination(1, 0.5, rng, sys, cfg), std::logic_error);
    }
    SUBCASE("two equal rates split 50/50 within 3 sigma") {
        // mirror-symmetric complex profile on 3 sites: site 1 feeds 0 and 2 equally
        LatticeSpec spec;
        spec.L = 3;
        const std::vector<cxd> prof{cxd(0.0, 1.0), cxd(1.0, 0.0), cxd(0.0, 1.0)};
        const JumpSystem lat = build_lattice_particle(spec, prof);
        const ColumnRates col = lat.rates_from(1, 0.0);
        REQUIRE(col.sigma(0) > 0.0);
        REQUIRE(col.sigma(0) == doctest::Approx(col.sigma(2)).epsilon(1e-12));

        const int n = 10000;
        int left = 0;
        RngStream rng(3);
        for (int i = 0; i < n; ++i) {
            if (sample_destination(1, 0.0, rng, lat, cfg) == 0) ++left;
        }
        CHECK(std::abs(left - n / 2) <= 3.0 * 0.5 * std::sqrt(double(n)));
    }
}

TEST_CASE("trajectory sampling on the Rabi fixture") {
    const JumpSystem sys = build_two_level(1.0);
    const SamplerConfig cfg = test_sampler(12);
    const double horizon = M_PI / 2.0 - 1e-6;

    SUBCASE("exactly one jump, ends at the horizon") {
        for (int i = 0; i < 50; ++i) {
            RngStream rng = RngStream::for_trajectory(cfg.seed, static_cast<std::uint64_t>(i));
            const Trajectory tr = sample_trajectory(std::nullopt, 0.0, horizon, cfg, sys, rng);
            CHECK(tr.x0 == 0);   // mu_0 = delta at config "1"
            CHECK(tr.status == TrajStatus::Horizon);
            CHECK(tr.jumps.size() == 1);
            CHECK(tr.jumps[0].from == 0);
            CHECK(tr.jumps[0].to == 1);
        }
    }
    SUBCASE("degenerate horizon gives an empty jump list") {
        RngStream rng(4);
        const Trajectory tr = sample_trajectory(0, 0.5, 0.5, cfg, sys, rng);
        CHECK(tr.jumps.empty());
        CHECK(tr.status == TrajStatus::Horizon);
    }
    SUBCASE("config_at is right-continuous") {
        RngStream rng(6);
        const Trajectory tr = sample_trajectory(0, 0.0, horizon, cfg, sys, rng);
        REQUIRE(tr.jumps.size() == 1);
        const double tj = tr.jumps[0].time;
        CHECK(tr.config_at(tj) == 1);
        CHECK(tr.config_at(std::nextafter(tj, 0.0)) == 0);
    }
}

TEST_CASE("vacuum Fock state with g = 0 never jumps") {
    FockSpec spec;
    spec.lattice.L = 3;
    spec.n_max = 2;
    spec.sources = {1};
    spec.g = 0.0;
    const FockModel model = build_fock(spec);
    const SamplerConfig cfg = test_sampler(8);
    RngStream rng(9);
    const Trajectory tr = sample_trajectory(std::nullopt, 0.0, 3.0, cfg, model.system, rng);
    CHECK(tr.jumps.empty());
    CHECK(tr.status == TrajStatus::Horizon);
}

TEST_CASE("count_jumps windows and concatenation") {
    Trajectory tr;
    tr.t0 = 0.0;
    tr.horizon = 2.0;
    tr.end_time = 2.0;
    tr.status = TrajStatus::Horizon;
    tr.x0 = 0;
    tr.jumps = {{0.5, 0, 1}, {1.2, 1, 2}, {1.7, 2, 0}};

    CHECK(tr.count_jumps(0.0, 2.0) == 3);
    CHECK(tr.count_jumps(0.6, 0.6) == 0);
    CHECK(tr.count_jumps(0.0, 1.0) + tr.count_jumps(1.0, 2.0) == tr.count_jumps(0.0, 2.0));
    CHECK_THROWS_AS(tr.count_jumps(-1.0, 0.5), std::invalid_argument);
}

TEST_CASE("jump times strictly increase and never self-loop") {
    FockSpec spec;
    spec.lattice.L = 3;
    spec.n_max = 2;
    spec.sources = {1};
    spec.g = 0.4;
    const FockModel model = build_fock(spec);
    SamplerConfig cfg = test_sampler(21);
    const auto ensemble = run_ensemble(model.system, std::nullopt, 0.0, 2.5, 200, cfg, 2);
    int total_jumps = 0;
    for (const Trajectory& tr : ensemble) {
        double last = tr.t0;
        for (const JumpRecord& j : tr.jumps) {
            CHECK(j.time > last);
            CHECK(j.from != j.to);
            last = j.time;
            ++total_jumps;
        }
        CHECK(tr.status != TrajStatus::NodeGuard);
    }
    CHECK(total_jumps > 0);
}

TEST_CASE("jump cap sends trajectories to the cemetery") {
    FockSpec spec;
    spec.lattice.L = 3;
    spec.n_max = 2;
    spec.sources = {1};
    spec.g = 0.5;
    const FockModel model = build_fock(spec);
    SamplerConfig cfg = test_sampler(33);
    cfg.max_jumps = 1;
    const auto ensemble = run_ensemble(model.system, std::nullopt, 0.0, 4.0, 400, cfg, 2);
    int cemeteries = 0;
    for (const Trajectory& tr : ensemble) {
        CHECK(tr.jumps.size() <= 1);
        if (tr.status == TrajStatus::Cemetery) {
            ++cemeteries;
            CHECK(tr.jumps.size() == 1);
            CHECK(tr.end_time == tr.jumps[0].time);
            CHECK(tr.config_at(tr.end_time) == kCemeteryConfig);
        }
    }
    CHECK(cemeteries > 0);
}

TEST_CASE("ensembles are reproducible and scheduler-independent") {
    const JumpSystem sys = build_two_level(1.0);
    const SamplerConfig cfg = test_sampler(77);
    const double horizon = M_PI / 2.0 - 1e-6;

    const auto a = run_ensemble(sys, std::nullopt, 0.0, horizon, 300, cfg, 1);
    const auto b = run_ensemble(sys, std::nullopt, 0.0, horizon, 300, cfg, 2);

    std::ostringstream ca, cb;
    write_trajectories_csv(ca, a, sys.space());
    write_trajectories_csv(cb, b, sys.space());
    CHECK(ca.str() == cb.str());

    SamplerConfig other = cfg;
    other.seed = 78;
    const auto c = run_ensemble(sys, std::nullopt, 0.0, horizon, 300, other, 2);
    std::ostringstream cc;
    write_trajectories_csv(cc, c, sys.space());
    CHECK(ca.str() != cc.str());
}

TEST_CASE("trajectory CSV format") {
    const JumpSystem sys = build_two_level(1.0);
    std::vector<Trajectory> trs(1);
    trs[0].x0 = 0;
    trs[0].t0 = 0.0;
    trs[0].horizon = 1.0;
    trs[0].end_time = 1.0;
    trs[0].status = TrajStatus::Horizon;
    trs[0].jumps = {{0.25, 0, 1}};

    std::ostringstream os;
    write_trajectories_csv(os, trs, sys.space());
    const std::string text = os.str();
    CHECK(text.find("trajectory_id,jump_index,time,from_label,to_label,status") == 0);
    CHECK(text.find("0,0,0.25,1,2,") != std::string::npos);
    CHECK(text.find("0,1,1,2,,HORIZON") != std::string::npos);
}

TEST_CASE("sampling works through a GENERAL povm") {
    // two-level system expressed with explicit projection elements
    Eigen::MatrixXcd H(2, 2);
    H << 0.0, 1.0, 1.0, 0.0;
    Eigen::MatrixXcd P0 = Eigen::MatrixXcd::Zero(2, 2);
    Eigen::MatrixXcd P1 = Eigen::MatrixXcd::Zero(2, 2);
    P0(0, 0) = 1.0;
    P1(1, 1) = 1.0;
    Eigen::VectorXcd v(2);
    v << 1.0, 0.0;
    const JumpSystem gen(ConfigSpace({"1", "2"}), HermitianOperator(H),
                         Povm::general({P0, P1}), StateVector(v));
    const JumpSystem part = build_two_level(1.0);

    for (double t : {0.4, 1.0}) {
        CHECK(gen.total_rate(0, t) == doctest::Approx(part.total_rate(0, t)).epsilon(1e-10));
    }
    SamplerConfig cfg = test_sampler(55);
    RngStream rng(14);
    const Trajectory tr =
        sample_trajectory(std::nullopt, 0.0, M_PI / 2.0 - 1e-6, cfg, gen, rng);
    CHECK(tr.jumps.size() == 1);
    CHECK(tr.status == TrajStatus::Horizon);
}

TEST_CASE("sampler config validation") {
    SamplerConfig bad;
    bad.max_jumps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = SamplerConfig{};
    bad.quad_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
