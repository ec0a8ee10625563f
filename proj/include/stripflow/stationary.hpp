#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "stripflow/errors.hpp"
#include "stripflow/params.hpp"

namespace stripflow {

/// Shorthand constants of the vertical nutrient profile at a flat height rho:
///   c1 = (sigma_bar_2 - sigma_bar_1*cosh(rho)) / sinh(rho)
///   c2 = sigma_bar_1
///   c3 = c1*cosh(rho) + c2*sinh(rho) = (sigma_bar_2*cosh(rho) - sigma_bar_1) / sinh(rho)
/// c3 is stored in its second (cancellation-free) form.
struct LayerConstants {
    double rho;
    double c1, c2, c3;
};

inline LayerConstants layer_constants(const ModelParameters& p, double rho) {
    if (!(rho > 0.0)) throw DomainError("layer_constants: rho must be positive");
    const double sh = std::sinh(rho), ch = std::cosh(rho);
    LayerConstants lc;
    lc.rho = rho;
    lc.c1 = (p.sigma_bar_2 - p.sigma_bar_1 * ch) / sh;
    lc.c2 = p.sigma_bar_1;
    lc.c3 = (p.sigma_bar_2 * ch - p.sigma_bar_1) / sh;
    return lc;
}

/// f_alpha(x) = alpha*(1 - cosh x) + x*sinh x, evaluated in the paired form
///   2*sinh(x/2) * (x*cosh(x/2) - alpha*sinh(x/2))
/// which avoids forming the two large cancelling terms alpha*cosh x and
/// x*sinh x separately. Finite for x up to ~1400 (half-angle products).
inline double f_alpha(double alpha, double x) {
    const double sh = std::sinh(0.5 * x), ch = std::cosh(0.5 * x);
    return 2.0 * sh * (x * ch - alpha * sh);
}

/// f_alpha'(x) = cosh(x) * (x + (1 - alpha)*tanh(x)).
inline double f_alpha_prime(double alpha, double x) {
    return std::cosh(x) * (x + (1.0 - alpha) * std::tanh(x));
}

namespace detail {

/// Same roots and signs as f_alpha on x > 0 (f = sinh(x) * this), but
/// conditioned O(1) near the root: g(x) = x - alpha*tanh(x/2).
inline double root_form(double alpha, double x) { return x - alpha * std::tanh(0.5 * x); }

}  // namespace detail

/// The unique positive root of f_alpha (the flat stationary height).
/// Bracketed bisection to machine-level width followed by 3 guarded Newton
/// steps. The bracket search is clamped at x = 100; not finding a sign change
/// below that indicates parameter pathology.
inline double solve_rho_star(const ModelParameters& params) {
    const ModelParameters p = validate(params);
    const double alpha = p.alpha();

    double lo = 1e-300;  // root_form < 0 for any x below the root (alpha > 2)
    double hi = 1.0;
    while (detail::root_form(alpha, hi) <= 0.0) {
        if (hi >= 100.0)
            throw BracketNotFound("solve_rho_star: no sign change of f_alpha below x = 100");
        hi = std::min(100.0, 2.0 * hi);
    }
    if (!(detail::root_form(alpha, lo) < 0.0))
        throw BracketNotFound("solve_rho_star: lower bracket end is not negative");

    const double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 200; ++it) {
        const double width_tol = std::max(1e-14, 2.0 * eps * (std::abs(lo) + std::abs(hi)));
        if (hi - lo <= width_tol) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // FP resolution reached
        if (detail::root_form(alpha, mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double fp = f_alpha_prime(alpha, x);
        if (fp == 0.0) break;
        const double xn = x - f_alpha(alpha, x) / fp;
        if (xn > lo && xn < hi) x = xn;  // keep Newton inside the verified bracket
    }
    return x;
}

/// The flat stationary solution bundle: height rho*, layer constants, and
/// evaluators of sigma*(y), p*(y) below.
struct FlatStationaryState {
    ModelParameters params;
    double rho_star;
    double c1, c2, c3;

    LayerConstants constants() const { return LayerConstants{rho_star, c1, c2, c3}; }
};

namespace detail {

inline double sigma_star_unchecked(const FlatStationaryState& s, double y) {
    return s.c1 * std::sinh(y) + s.c2 * std::cosh(y);
}

inline double p_star_unchecked(const FlatStationaryState& s, double y) {
    const ModelParameters& p = s.params;
    return p.mu * s.c1 * (y - s.rho_star) +
           p.mu * (p.sigma_bar_2 - sigma_star_unchecked(s, y) -
                   0.5 * p.sigma_tilde * (s.rho_star * s.rho_star - y * y));
}

inline double p_star_prime_closed(const FlatStationaryState& s, double y) {
    // sigma*'(rho*) = c3; using the stored (cancellation-free) c3 at the
    // endpoint keeps the residual meaningful for large rho*
    const double sigma_prime =
        (y == s.rho_star) ? s.c3 : s.c1 * std::cosh(y) + s.c2 * std::sinh(y);
    return s.params.mu * (s.c1 - sigma_prime + s.params.sigma_tilde * y);
}

}  // namespace detail

/// Stationary nutrient concentration sigma*(y) for y in [0, rho*]:
/// sigma*(y) = c1*sinh(y) + c2*cosh(y); sigma*(0) = sigma_bar_1,
/// sigma*(rho*) = sigma_bar_2.
inline double sigma_star(const FlatStationaryState& s, double y) {
    if (!(y >= 0.0 && y <= s.rho_star))
        throw DomainError("sigma_star: y outside [0, rho*]");
    return detail::sigma_star_unchecked(s, y);
}

/// Stationary pressure p*(y) for y in [0, rho*], satisfying
/// p*'' = -mu*(sigma* - sigma_tilde), p*(rho*) = 0, p*'(0) = 0.
inline double p_star(const FlatStationaryState& s, double y) {
    if (!(y >= 0.0 && y <= s.rho_star))
        throw DomainError("p_star: y outside [0, rho*]");
    return detail::p_star_unchecked(s, y);
}

/// Solves for rho* and bundles the constants, asserting the derived
/// consistency checks: the two closed forms of c3 agree, and the free
/// boundary is stationary (p*'(rho*) = 0, closed form and centered
/// difference). Residual gates scale with the conditioning of the large-alpha
/// hyperbolic terms; at desk scale they are the literal 1e-12 / 1e-10.
inline FlatStationaryState make_state(const ModelParameters& params) {
    const ModelParameters p = validate(params);
    const double rho = solve_rho_star(p);
    const LayerConstants lc = layer_constants(p, rho);

    FlatStationaryState s{p, rho, lc.c1, lc.c2, lc.c3};

    const double eps = std::numeric_limits<double>::epsilon();
    const double alpha = p.alpha();

    const double fres = std::abs(f_alpha(alpha, rho));
    const double f_tol = std::max(1e-12, 8.0 * eps * alpha * std::sinh(rho));
    if (fres > f_tol)
        throw ToleranceNotReached("make_state: |f_alpha(rho*)| = " + std::to_string(fres) +
                                  " exceeds " + std::to_string(f_tol));

    const double c3_alt = lc.c1 * std::cosh(rho) + lc.c2 * std::sinh(rho);
    const double c3_tol =
        std::max(1e-12, 8.0 * eps * p.sigma_bar_1 * std::cosh(rho) / std::abs(lc.c3));
    if (std::abs(c3_alt - lc.c3) > c3_tol * std::abs(lc.c3))
        throw ToleranceNotReached("make_state: the two closed forms of c3 disagree");

    // Equilibrium of the free boundary. The exact derivative carries the
    // 1e-10 gate; the differencing cross-check is limited by its own noise
    // floor eps*|p terms|/h and gets a tolerance sized accordingly.
    if (std::abs(detail::p_star_prime_closed(s, rho)) > 1e-10)
        throw ToleranceNotReached("make_state: p*'(rho*) != 0 (closed form)");
    const double h = 1e-5;
    const double dp_centered =
        (detail::p_star_unchecked(s, rho + h) - detail::p_star_unchecked(s, rho - h)) / (2.0 * h);
    // sigma* near rho* is a ~sigma_bar_1*cosh(rho*) cancellation, which sets
    // the round-off floor of the difference quotient
    const double term_scale = p.mu * (p.sigma_bar_2 + 0.5 * p.sigma_tilde * rho * rho +
                                      p.sigma_bar_1 * std::cosh(rho));
    const double fd_tol = h * h * term_scale + 8.0 * eps * term_scale / h;
    if (std::abs(dp_centered) > std::max(1e-10, fd_tol))
        throw ToleranceNotReached("make_state: p*'(rho*) != 0 (differencing)");

    return s;
}

}  // namespace stripflow
