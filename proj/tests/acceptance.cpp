// Acceptance suite: every headline property at its stated tolerance, one
// pass/fail line per criterion. argv[1] = bpl binary, argv[2] = configs dir
// (used by the determinism criterion).

#include "bpl/bohmian.hpp"
#include "bpl/models.hpp"
#include "bpl/process.hpp"
#include "bpl/quadrature.hpp"
#include "bpl/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace bpl;

namespace {

int failures = 0;

void criterion(int id, const std::string& text, bool ok) {
    std::printf("%s  criterion %02d: %s\n", ok ? "PASS" : "FAIL", id, text.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

VerifyOptions opts(std::uint64_t seed) {
    VerifyOptions o;
    o.sampler.seed = seed;
    o.jobs = 0;
    return o;
}

FockModel shipped_fock(double g = 0.1) {
    FockSpec spec;
    spec.lattice.L = 3;
    spec.lattice.eps = 1.0;
    spec.n_max = 2;
    spec.sources = {1};
    spec.g = g;
    spec.delta = 1;
    spec.mass_ph = 1.0;
    return build_fock(spec);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cmd(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

}  // namespace

int main(int argc, char** argv) {
    const auto t_start = std::chrono::steady_clock::now();
    const JumpSystem rabi = build_two_level(1.0);
    const double node_time = M_PI / 2.0;
    const double rabi_horizon = node_time - 1e-6;

    // 1. Rabi survival law: KS test against cos^2(t) at 95% with M = 1e5.
    {
        const int M = 100000;
        SamplerConfig cfg;
        cfg.seed = 101;
        std::vector<double> samples;
        samples.reserve(M);
        for (int i = 0; i < M; ++i) {
            RngStream rng = RngStream::for_trajectory(cfg.seed, static_cast<std::uint64_t>(i));
            const auto t = sample_holding_time(0, 0.0, node_time, rng, rabi, cfg);
            samples.push_back(t.value_or(node_time));
        }
        std::sort(samples.begin(), samples.end());
        double d = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double f = std::pow(std::sin(samples[i]), 2);
            d = std::max(d, std::abs(f - double(i + 1) / M));
            d = std::max(d, std::abs(f - double(i) / M));
        }
        const double band = 1.36 / std::sqrt(double(M));
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "Rabi survival KS: D = %.5f <= %.5f (M = 1e5, 95%% band)", d, band);
        criterion(1, buf, d <= band);
    }

    // 2. Rabi jump count: exactly one jump with frequency >= 0.999, mean S in
    //    1 +- 0.002, and the identity quadrature equal to 1.
    {
        SamplerConfig cfg;
        cfg.seed = 102;
        const auto ens = run_ensemble(rabi, std::nullopt, 0.0, rabi_horizon, 100000, cfg, 0);
        int exactly_one = 0;
        double mean = 0.0;
        for (const auto& tr : ens) {
            if (tr.jumps.size() == 1) ++exactly_one;
            mean += static_cast<double>(tr.jumps.size());
        }
        mean /= static_cast<double>(ens.size());
        const double frac = double(exactly_one) / double(ens.size());

        QuadratureOptions qopt;
        const double quad = adaptive_simpson(
            [&](double s) { return rabi.current_at(s).J.cwiseMax(0.0).sum(); }, 0.0,
            rabi_horizon, qopt);

        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "Rabi jump count: P(S=1) = %.4f >= 0.999, mean S = %.5f in 1 +- 0.002, "
                      "quadrature = %.9f",
                      frac, mean, quad);
        criterion(2, buf,
                  frac >= 0.999 && std::abs(mean - 1.0) <= 0.002 && std::abs(quad - 1.0) <= 1e-6);
    }

    // 3. Equivariance: TV <= 0.01 on Rabi (M = 1e5) and <= 0.02 on Fock (M = 5e4).
    {
        const auto tv_rabi = equivariance_test(rabi, 100000, 0.0, {0.3, 0.7, 1.1}, opts(103));
        const FockModel fock = shipped_fock();
        const auto tv_fock =
            equivariance_test(fock.system, 50000, 0.0, {0.5, 1.2, 2.0}, opts(104));
        const double worst_rabi = *std::max_element(tv_rabi.begin(), tv_rabi.end());
        const double worst_fock = *std::max_element(tv_fock.begin(), tv_fock.end());
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "equivariance: Rabi max TV = %.5f <= 0.01, Fock max TV = %.5f <= 0.02",
                      worst_rabi, worst_fock);
        criterion(3, buf, worst_rabi <= 0.01 && worst_fock <= 0.02);
    }

    // 4. Node avoidance: occupancy of config "1" at pi/2 - 1e-3 below 1e-4,
    //    and zero NODE_GUARD statuses.
    {
        const auto rep = node_avoidance_check(rabi, 100000, node_time, 0, 1e-3, 0.0, opts(105));
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "node avoidance: occupancy = %.2e <= 1e-4 (mu = %.2e), node guards = %d",
                      rep.occupancy, rep.mu_theory, rep.node_guard_count);
        criterion(4, buf, rep.occupancy <= 1e-4 && rep.node_guard_count == 0);
    }

    // 5. Structural identities at 1e-10: antisymmetry, detailed current,
    //    minimality, master equation, norm preservation, Fock additivity.
    {
        const StructuralReport a = structural_check(rabi, {0.2, 0.5, 0.8, 1.1, 1.4});
        const FockModel fock = shipped_fock();
        const StructuralReport b = structural_check(fock.system, {0.3, 0.7, 1.1, 1.6, 2.0});
        const double additivity =
            additivity_check(fock.H0, fock.HI, fock.system, {0.5, 1.0, 1.5, 2.0});
        const double worst = std::max({a.worst(), b.worst(), additivity});
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "structural identities: worst deviation = %.2e <= 1e-10 "
                      "(additivity %.2e)",
                      worst, additivity);
        criterion(5, buf, worst <= 1e-10);
    }

    // 6. Non-explosion bound on the Fock model: empirical E S(0,2) below the
    //    finite assumption-(c) quadrature within 3 sigma.
    {
        const FockModel fock = shipped_fock();
        const auto rep = expected_jumps_check(fock.system, 20000, 0.0, 2.0, opts(106));
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "non-explosion: E S = %.4f vs identity %.4f (3se = %.4f), bound %.4f "
                      "finite with slack %.4f",
                      rep.identity.empirical, rep.identity.theoretical,
                      3.0 * rep.identity.mc_stderr, rep.bound.theoretical, rep.bound.slack);
        criterion(6, buf,
                  rep.identity.passed && rep.bound.passed &&
                      std::isfinite(rep.bound.theoretical) && rep.bound.slack > 0.0);
    }

    // 7. rho <= mu within 3 binomial standard errors everywhere; the forced
    //    truncation run exhibits strict inequality with cemetery mass.
    {
        const auto rabi_rep = rho_leq_mu_check(rabi, 50000, 0.0, {0.4, 0.9, 1.4}, opts(107));
        const FockModel fock = shipped_fock();
        const auto fock_rep =
            rho_leq_mu_check(fock.system, 20000, 0.0, {0.5, 1.2, 2.0}, opts(108));
        VerifyOptions trunc = opts(109);
        trunc.sampler.max_jumps = 1;
        const auto forced =
            rho_leq_mu_check(fock.system, 20000, 0.0, {0.5, 1.2, 2.0}, trunc);
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "rho <= mu: worst excess Rabi %.2e, Fock %.2e, truncated %.2e with "
                      "%d cemeteries (mass %.3f)",
                      rabi_rep.worst_excess, fock_rep.worst_excess, forced.worst_excess,
                      forced.cemetery_count, forced.final_missing_mass);
        criterion(7, buf,
                  rabi_rep.passed && fock_rep.passed && forced.passed &&
                      rabi_rep.cemetery_count == 0 && fock_rep.cemetery_count == 0 &&
                      forced.cemetery_count > 0 && forced.final_missing_mass > 0.0);
    }

    // 8. Continuum limit: drift error strictly decreasing over eps in
    //    {0.2, 0.1, 0.05}, final relative error <= 5%.
    {
        GaussianPacket packet;
        packet.x0 = 0.0;
        packet.s0 = 1.0;
        packet.u = 1.0;
        const double t = 0.5;
        const auto rows = continuum_limit_report(packet, {0.2, 0.1, 0.05}, t,
                                                 packet.center(t) + 0.5);
        const bool decreasing =
            rows[1].abs_error < rows[0].abs_error && rows[2].abs_error < rows[1].abs_error;
        const double rel = rows[2].abs_error / std::abs(rows[2].velocity);
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "continuum limit: errors %.4f > %.4f > %.4f, final relative %.3f <= 0.05",
                      rows[0].abs_error, rows[1].abs_error, rows[2].abs_error, rel);
        criterion(8, buf, decreasing && rel <= 0.05);
    }

    // 9. Bohm trajectories: scaling-law match to 1e-6 and pushforward TV <= 0.03.
    {
        GaussianPacket packet;
        packet.s0 = 0.5;
        double worst = 0.0;
        double x_cur = 1.0;
        const int legs = 8;
        for (int k = 1; k <= legs; ++k) {
            const double ta = 2.0 * (k - 1) / legs;
            const double tb = 2.0 * k / legs;
            x_cur = integrate_bohm(packet, x_cur, ta, tb, 1e-12).end_position();
            const double tau = packet.tau(tb);
            worst = std::max(worst, std::abs(x_cur - std::sqrt(1.0 + tau * tau)));
        }
        GaussianPacket unit;
        unit.s0 = 1.0;
        const double tv = gaussian_pushforward_tv(unit, 10000, 1.0, 110);
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "Bohm paths: scaling-law error %.2e <= 1e-6, pushforward TV %.4f <= 0.03",
                      worst, tv);
        criterion(9, buf, worst <= 1e-6 && tv <= 0.03);
    }

    // 10. Bohm-Dirac: |v| <= c(1 + 1e-12) everywhere sampled; ensemble mean L
    //     finite and below the bound-chain quadrature.
    {
        DiracSpec spec;
        spec.L = 64;
        spec.eps = 0.25;
        spec.mass = 1.0;
        spec.c = 1.0;
        const DiracSystem dirac(spec, gaussian_spinor_profile(spec, 8.0, 1.0, 1.0));
        const double scan = dirac_speed_scan(dirac, 256, 65, 0.0, 2.0);
        const auto rep = dirac_log_variation_check(dirac, 1200, 0.0, 2.0, 111);
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "Bohm-Dirac: max |v|/c = %.12f <= 1 + 1e-12, mean L = %.4f <= bound %.4f",
                      std::max(scan, rep.max_speed / spec.c), rep.mean_L, rep.bound);
        criterion(10, buf,
                  scan <= 1.0 + 1e-12 && rep.passed && rep.finite &&
                      rep.max_speed <= spec.c * (1.0 + 1e-12));
    }

    // 11. Determinism: identical config + seed gives byte-identical
    //     trajectories.csv across runs and parallelism degrees.
    {
        bool ok = false;
        std::string detail = "bpl binary or configs dir not supplied";
        if (argc >= 3) {
            const std::string bpl_bin = argv[1];
            const std::filesystem::path configs = argv[2];
            const std::filesystem::path work =
                std::filesystem::temp_directory_path() / "bpl_acceptance";
            std::filesystem::remove_all(work);
            std::filesystem::create_directories(work);
            const std::string config = (configs / "rabi-small.json").string();
            const int r1 = run_cmd(bpl_bin + " run " + config + " --out " +
                                   (work / "j2").string() + " --jobs 2");
            const int r2 = run_cmd(bpl_bin + " run " + config + " --out " +
                                   (work / "j1").string() + " --jobs 1");
            const std::string a = slurp(work / "j2" / "trajectories.csv");
            const std::string b = slurp(work / "j1" / "trajectories.csv");
            ok = r1 == 0 && r2 == 0 && !a.empty() && a == b;
            detail = "exit codes " + std::to_string(r1) + "/" + std::to_string(r2) +
                     ", csv bytes " + std::to_string(a.size()) +
                     (a == b ? " identical" : " DIFFER");
        }
        criterion(11, "determinism across runs and job counts: " + detail, ok);
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    std::printf("%s (%d criteria failed, %.1f s)\n",
                failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", failures, elapsed);
    return failures == 0 ? 0 : 1;
}
