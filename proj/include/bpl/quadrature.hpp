// quadrature.hpp — Adaptive Simpson integration with divergence detection.

#pragma once

#include <cmath>
#include <functional>
#include <limits>

namespace bpl {

struct QuadratureOptions {
    double abs_tol{1e-9};
    int max_depth{60};
    // An accumulated integral beyond this cap is reported as +inf; hazard
    // integrands diverge at nodes and must not recurse forever.
    double divergence_cap{std::numeric_limits<double>::infinity()};
};

namespace detail {

inline double simpson_slice(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth, const QuadratureOptions& opt) {
    const double inf = std::numeric_limits<double>::infinity();
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm) || !std::isfinite(whole)) {
        return inf;
    }
    const double left = simpson_slice(fa, flm, fm, m - a);
    const double right = simpson_slice(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    if (left + right > opt.divergence_cap) {
        return inf;
    }
    const double lv =
        adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, opt);
    if (!std::isfinite(lv) || lv > opt.divergence_cap) return inf;
    const double rv =
        adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, opt);
    if (!std::isfinite(rv)) return inf;
    return lv + rv;
}

}  // namespace detail

// Integral of f over [a, b]. Returns +inf when the integrand is non-finite at
// an evaluation point or the running value exceeds opt.divergence_cap.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               const QuadratureOptions& opt = {}) {
    if (!(a <= b)) {
        throw std::invalid_argument("adaptive_simpson: requires a <= b");
    }
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb)) {
        return std::numeric_limits<double>::infinity();
    }
    const double whole = detail::simpson_slice(fa, fm, fb, b - a);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, opt.abs_tol, opt.max_depth,
                                        opt);
}

}  // namespace bpl
