#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stripflow/parallel.hpp"
#include "stripflow/params.hpp"
#include "stripflow/stationary.hpp"

namespace stripflow {

namespace detail {

/// coth(z) for z > 0. std::tanh saturates to 1 for z > ~19, so this is
/// overflow-safe for all arguments.
inline double coth(double z) { return 1.0 / std::tanh(z); }

/// 1 / (sinh(A) * cosh(B)) for A > 0, B >= 0 without forming the overflowing
/// product: 4*exp(-A-B) / ((1 - exp(-2A)) * (1 + exp(-2B))). Exact identity;
/// underflows cleanly to 0 for A + B > ~745.
inline double inv_sinh_cosh(double a, double b) {
    return 4.0 * std::exp(-a - b) / ((1.0 - std::exp(-2.0 * a)) * (1.0 + std::exp(-2.0 * b)));
}

}  // namespace detail

/// Eigenvalue of the linearization at a flat height, mode k >= 0, evaluated
/// in the numerically stable rearrangement
///   mu*c3*s*(coth(rho*s) - 1/(sinh(rho*s)*cosh(rho*k)))
///   + (gamma*k^2 - mu*sigma_tilde*rho - mu*c1) * k * tanh(rho*k)
///   + mu*(sigma_tilde - sigma_bar_2),          s = sqrt(1 + k^2).
/// Finite for all k up to 1e6 (no overflowing cosh/sinh is ever formed).
inline double lambda_k(const ModelParameters& p, const LayerConstants& lc, double gamma, int k) {
    if (k < 0) throw DomainError("lambda_k: k must be >= 0");
    const double kd = static_cast<double>(k);
    const double s = std::sqrt(1.0 + kd * kd);
    const double rs = lc.rho * s;
    const double rk = lc.rho * kd;
    const double t1 = p.mu * lc.c3 * s * (detail::coth(rs) - detail::inv_sinh_cosh(rs, rk));
    const double t2 =
        (gamma * kd * kd - p.mu * p.sigma_tilde * lc.rho - p.mu * lc.c1) * kd * std::tanh(rk);
    const double t3 = p.mu * (p.sigma_tilde - p.sigma_bar_2);
    return t1 + t2 + t3;
}

inline double lambda_k(const FlatStationaryState& s, double gamma, int k) {
    return lambda_k(s.params, s.constants(), gamma, k);
}

/// Reduced closed form of lambda_0 at the stationary height,
/// mu*sigma_tilde*(1 - rho*/sinh(rho*)); positive for every rho* > 0.
inline double lambda0_reduced(const ModelParameters& p, double rho_star) {
    return p.mu * p.sigma_tilde * (1.0 - rho_star / std::sinh(rho_star));
}

/// lambda_k / (k^3 * tanh(rho* k)) for k >= 1; tends to gamma as k grows.
inline double tail_ratio(const FlatStationaryState& s, double gamma, int k) {
    if (k < 1) throw DomainError("tail_ratio: k must be >= 1");
    const double kd = static_cast<double>(k);
    return lambda_k(s, gamma, k) / (kd * kd * kd * std::tanh(s.rho_star * kd));
}

/// Closed-form eigenvalues lambda_0..lambda_k_max with the positivity
/// summary. oracle_lambdas is left empty here; the CLI fills it from
/// modal_oracle when requested.
struct SpectrumReport {
    ModelParameters params;
    double rho_star = 0.0;
    int k_max = 0;
    std::vector<double> lambdas;
    std::vector<double> oracle_lambdas;
    double min_lambda = 0.0;
    bool all_positive = false;
};

inline SpectrumReport spectrum(const FlatStationaryState& s, double gamma, int k_max) {
    if (k_max < 0) throw DomainError("spectrum: k_max must be >= 0");
    SpectrumReport r;
    r.params = s.params;
    r.rho_star = s.rho_star;
    r.k_max = k_max;
    r.lambdas.assign(static_cast<size_t>(k_max) + 1, 0.0);
    const LayerConstants lc = s.constants();
    parallel_for(k_max + 1,
                 [&](int k) { r.lambdas[static_cast<size_t>(k)] = lambda_k(s.params, lc, gamma, k); });
    r.min_lambda = *std::min_element(r.lambdas.begin(), r.lambdas.end());
    r.all_positive = r.min_lambda > 0.0;
    return r;
}

namespace detail {

/// Crude but runtime-rigorous lower bound on lambda_k:
///   gamma*k^3*tanh(rho*k) - mu*(sigma_tilde*rho + |c1|)*k*tanh(rho*k)
///   - mu*|sigma_tilde - sigma_bar_2| - mu*c3*sqrt(1+k^2)*(coth(rho) + 1).
inline double lambda_lower_bound(const ModelParameters& p, const LayerConstants& lc, double gamma,
                                 double kd) {
    const double t = std::tanh(lc.rho * kd);
    return gamma * kd * kd * kd * t - p.mu * (p.sigma_tilde * lc.rho + std::abs(lc.c1)) * kd * t -
           p.mu * std::abs(p.sigma_tilde - p.sigma_bar_2) -
           p.mu * lc.c3 * std::sqrt(1.0 + kd * kd) * (coth(lc.rho) + 1.0);
}

/// Smallest cutoff K >= k_scan such that the lower bound is positive and
/// provably increasing for all k > K: beyond
/// k_mono = sqrt((mu*(sigma_tilde*rho + |c1|) + mu*c3*(coth(rho)+1)) / (3*gamma*tanh(rho)))
/// the under-envelope gamma*tanh(rho)*k^3 - C1*k - C2 - C3*(1+k) is monotone.
inline int certified_cutoff(const ModelParameters& p, const LayerConstants& lc, double gamma,
                            int k_scan) {
    const double t0 = std::tanh(lc.rho);
    const double c_lin = p.mu * (p.sigma_tilde * lc.rho + std::abs(lc.c1)) +
                         p.mu * lc.c3 * (coth(lc.rho) + 1.0);
    const double k_mono = std::sqrt(c_lin / (3.0 * gamma * t0));
    if (!(k_mono < 1e8))
        throw ToleranceNotReached("certified_cutoff: tail bound requires k > 1e8 at gamma = " +
                                  std::to_string(gamma));
    int k_eff = std::max(k_scan, static_cast<int>(std::ceil(k_mono)));
    k_eff = std::max(k_eff, 1);
    auto envelope = [&](double kd) {
        return gamma * t0 * kd * kd * kd - p.mu * (p.sigma_tilde * lc.rho + std::abs(lc.c1)) * kd -
               p.mu * std::abs(p.sigma_tilde - p.sigma_bar_2) -
               p.mu * lc.c3 * (1.0 + kd) * (coth(lc.rho) + 1.0);
    };
    while (envelope(static_cast<double>(k_eff) + 1.0) <= 0.0) {
        if (k_eff > 100000000)
            throw ToleranceNotReached("certified_cutoff: dominance not reached below k = 1e8");
        k_eff = k_eff < 16 ? k_eff + 1 : k_eff + k_eff / 8;
    }
    return k_eff;
}

inline double min_lambda_scan(const ModelParameters& p, const LayerConstants& lc, double gamma,
                              int k_eff) {
    std::vector<double> vals(static_cast<size_t>(k_eff), 0.0);
    parallel_for(k_eff,
                 [&](int i) { vals[static_cast<size_t>(i)] = lambda_k(p, lc, gamma, i + 1); });
    return *std::min_element(vals.begin(), vals.end());
}

}  // namespace detail

struct GammaThreshold {
    double gamma_min = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int k_eff = 0;
};

/// Infimum over gamma of {gamma : lambda_k(gamma) > 0 for all k >= 1}, by
/// bisection on min_k lambda_k(gamma). The finite scan k = 1..k_eff is
/// extended by the certified tail bound; lambda_0 is positive for every
/// valid parameter set and is checked separately by callers. Exact linear
/// monotonicity of lambda_k in gamma makes the scanned set an up-set, so the
/// bracket [bracket_lo, bracket_hi] (width <= 2*tol) pins the infimum.
/// Returns 0 when even gamma -> 0+ keeps the minimum positive down to tol.
inline GammaThreshold gamma_threshold(const FlatStationaryState& s, int k_scan, double tol) {
    if (k_scan < 1) throw DomainError("gamma_threshold: k_scan must be >= 1");
    if (!(tol > 0.0)) throw DomainError("gamma_threshold: tol must be positive");
    const LayerConstants lc = s.constants();
    const ModelParameters& p = s.params;

    auto min_lambda = [&](double gamma, int& k_eff_out) {
        const int k_eff = detail::certified_cutoff(p, lc, gamma, k_scan);
        k_eff_out = k_eff;
        return detail::min_lambda_scan(p, lc, gamma, k_eff);
    };

    int k_eff = 0;
    double hi = 1.0;
    int budget = 0;
    while (min_lambda(hi, k_eff) <= 0.0) {
        hi *= 2.0;
        if (++budget > 60)
            throw ToleranceNotReached("gamma_threshold: no positive spectrum below gamma = 2^60");
    }
    double lo = hi;
    while (min_lambda(lo, k_eff) > 0.0) {
        lo *= 0.5;
        if (lo < tol) {
            int k_eff_hi = 0;
            min_lambda(2.0 * lo, k_eff_hi);
            return GammaThreshold{0.0, 0.0, 2.0 * lo, k_eff_hi};
        }
    }
    for (int it = 0; it < 400 && hi - lo > 2.0 * tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            throw ToleranceNotReached(
                "gamma_threshold: floating-point resolution reached before tol");
        if (min_lambda(mid, k_eff) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    if (hi - lo > 2.0 * tol)
        throw ToleranceNotReached("gamma_threshold: bisection budget exhausted");
    int k_eff_final = 0;
    min_lambda(hi, k_eff_final);
    return GammaThreshold{0.5 * (lo + hi), lo, hi, k_eff_final};
}

/// One mode of the linearized system resolved on a 1-D grid over [0, 1]:
/// the numerical two-point BVP solutions, the closed-form profiles, and the
/// eigenvalue read off the boundary derivative, lambda = M'(1) / (a_k rho*).
struct ModalSolution {
    int k = 0;
    int ny = 0;
    std::vector<double> a_numeric;  ///< A_k(y'_m), FD solution (a_k normalized)
    std::vector<double> m_numeric;  ///< M_k(y'_m), FD solution
    std::vector<double> a_closed;   ///< closed-form A_k(y'_m)
    std::vector<double> m_closed;   ///< closed-form M_k(y'_m)
    double m_prime_1 = 0.0;         ///< one-sided second-order M'(1)
    double lambda = 0.0;            ///< m_prime_1 / (a_k * rho*)
    double lambda_closed = 0.0;     ///< lambda_k from the multiplier formula
};

namespace detail {

/// Thomas solve of a tridiagonal system; diag/lower/upper are overwritten.
inline void solve_tridiag(std::vector<double>& lower, std::vector<double>& diag,
                          std::vector<double>& upper, std::vector<double>& rhs) {
    const size_t n = diag.size();
    for (size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw SingularSystem("tridiagonal pivot is zero");
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) throw SingularSystem("tridiagonal pivot is zero");
    rhs[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

/// sinh(u)/sinh(U) for 0 <= u <= U, overflow-safe.
inline double ratio_sinh(double u, double c) {
    if (u == 0.0) return 0.0;
    return std::exp(u - c) * (1.0 - std::exp(-2.0 * u)) / (1.0 - std::exp(-2.0 * c));
}

inline double closed_a_mode(const FlatStationaryState& s, int k, double y) {
    const double r = s.rho_star;
    const double sq = std::sqrt(1.0 + static_cast<double>(k) * k);
    const double ratio = ratio_sinh(y * r * sq, r * sq);
    return s.c1 * (y * std::cosh(y * r) - ratio * std::cosh(r)) +
           s.c2 * (y * std::sinh(y * r) - ratio * std::sinh(r));
}

inline double closed_m_mode(const FlatStationaryState& s, double gamma, int k, double y) {
    const ModelParameters& p = s.params;
    const double r = s.rho_star;
    const double mu = p.mu;
    const double poly = mu * s.c1 * y + mu * p.sigma_tilde * r * y * y -
                        mu * (s.c1 * y * std::cosh(y * r) + s.c2 * y * std::sinh(y * r));
    if (k == 0) {
        return -(mu * s.c3 / std::sinh(r)) * (y * r - r - std::sinh(y * r)) -
               mu * p.sigma_tilde * r - mu * s.c1 + poly;
    }
    const double kd = static_cast<double>(k);
    const double sq = std::sqrt(1.0 + kd * kd);
    // sinh(y r k) - tanh(r k) cosh(y r k) = sinh(r k (y - 1)) / cosh(r k)
    const double w = r * kd * (1.0 - y);
    const double sinh_shift = -0.5 * (std::exp(w) - std::exp(-w));  // sinh(rk(y-1))
    const double term1 =
        -(mu * s.c3 * sq / kd) * sinh_shift * inv_sinh_cosh(r * sq, r * kd);
    const double term2 = mu * s.c3 * ratio_sinh(y * r * sq, r * sq);
    // cosh(y r k)/cosh(r k), overflow-safe
    const double u = y * r * kd, c = r * kd;
    const double cosh_ratio = std::exp(u - c) * (1.0 + std::exp(-2.0 * u)) / (1.0 + std::exp(-2.0 * c));
    const double term3 = (gamma * kd * kd - mu * p.sigma_tilde * r - mu * s.c1) * cosh_ratio;
    return term1 + term2 + term3 + poly;
}

}  // namespace detail

/// Solves the mode-k two-point BVPs of the linearization by second-order
/// finite differences (Dirichlet/Dirichlet for A_k; ghost-node Neumann at 0,
/// Dirichlet at 1 for M_k) with the mode normalization amplitude a_k, and
/// reads off the eigenvalue from the boundary derivative. Independent of the
/// closed-form multiplier route; the closed-form profiles are evaluated
/// alongside for pointwise comparison.
///
/// Second-order FD cannot cheaply resolve the O(e^{rho* k}) boundary layers
/// beyond k ~ 16, hence the cutoff; the closed form covers all k.
inline ModalSolution modal_oracle(const FlatStationaryState& s, double gamma, int k, int ny,
                                  double amplitude = 1.0) {
    constexpr int k_oracle_max = 16;
    if (k < 0 || k > k_oracle_max)
        throw DomainError("modal_oracle: k must be in [0, " + std::to_string(k_oracle_max) + "]");
    if (ny < 64) throw DomainError("modal_oracle: ny must be >= 64");
    if (amplitude == 0.0) throw DomainError("modal_oracle: amplitude must be nonzero");

    const ModelParameters& p = s.params;
    const double r = s.rho_star;
    const double mu = p.mu;
    const double kd = static_cast<double>(k);
    const double h = 1.0 / ny;
    const double inv_r2h2 = 1.0 / (r * r * h * h);
    const size_t n = static_cast<size_t>(ny) + 1;

    auto f_mode = [&](double y) {
        return (2.0 / r) * (s.c1 * std::sinh(y * r) + s.c2 * std::cosh(y * r)) -
               kd * kd * y * (s.c1 * std::cosh(y * r) + s.c2 * std::sinh(y * r));
    };
    auto g_mode = [&](double y) {
        return (2.0 / r) * mu *
                   (p.sigma_tilde - s.c1 * std::sinh(y * r) - s.c2 * std::cosh(y * r)) -
               kd * kd * mu *
                   (s.c1 * y + p.sigma_tilde * r * y * y - s.c2 * y * std::sinh(y * r) -
                    s.c1 * y * std::cosh(y * r));
    };

    ModalSolution out;
    out.k = k;
    out.ny = ny;

    // A-system: A''/r^2 - (1+k^2) A = a_k f_k(y),  A(0) = A(1) = 0.
    {
        std::vector<double> lower(n, inv_r2h2), diag(n, 0.0), upper(n, inv_r2h2), rhs(n, 0.0);
        for (size_t m = 0; m < n; ++m) {
            diag[m] = -2.0 * inv_r2h2 - (1.0 + kd * kd);
            rhs[m] = amplitude * f_mode(static_cast<double>(m) * h);
        }
        diag[0] = 1.0; upper[0] = 0.0; rhs[0] = 0.0;
        diag[n - 1] = 1.0; lower[n - 1] = 0.0; rhs[n - 1] = 0.0;
        detail::solve_tridiag(lower, diag, upper, rhs);
        out.a_numeric = std::move(rhs);
    }

    // M-system: M''/r^2 - k^2 M = -mu A + a_k g_k(y),  M'(0) = 0, M(1) = gamma k^2 a_k.
    {
        std::vector<double> lower(n, inv_r2h2), diag(n, 0.0), upper(n, inv_r2h2), rhs(n, 0.0);
        for (size_t m = 0; m < n; ++m) {
            diag[m] = -2.0 * inv_r2h2 - kd * kd;
            rhs[m] = -mu * out.a_numeric[m] + amplitude * g_mode(static_cast<double>(m) * h);
        }
        upper[0] = 2.0 * inv_r2h2;  // ghost node eliminated: M_{-1} = M_1
        diag[n - 1] = 1.0; lower[n - 1] = 0.0;
        rhs[n - 1] = gamma * kd * kd * amplitude;
        detail::solve_tridiag(lower, diag, upper, rhs);
        out.m_numeric = std::move(rhs);
    }

    out.m_prime_1 = (3.0 * out.m_numeric[n - 1] - 4.0 * out.m_numeric[n - 2] +
                     out.m_numeric[n - 3]) /
                    (2.0 * h);
    out.lambda = out.m_prime_1 / (amplitude * r);
    out.lambda_closed = lambda_k(s, gamma, k);

    out.a_closed.resize(n);
    out.m_closed.resize(n);
    for (size_t m = 0; m < n; ++m) {
        const double y = static_cast<double>(m) * h;
        out.a_closed[m] = amplitude * detail::closed_a_mode(s, k, y);
        out.m_closed[m] = amplitude * detail::closed_m_mode(s, gamma, k, y);
    }
    return out;
}

/// The sine-mode systems are the cosine-mode systems with a_k replaced by
/// b_k, so the multiplier must be identical and independent of the
/// normalization. Runs the oracle at two normalizations and confirms the
/// same eigenvalue within oracle tolerance. Vacuously true at k = 0.
inline bool b_mode_symmetry_check(const FlatStationaryState& s, double gamma, int k, int ny) {
    if (k == 0) return true;
    const ModalSolution cos_route = modal_oracle(s, gamma, k, ny, 1.0);
    const ModalSolution sin_route = modal_oracle(s, gamma, k, ny, 2.0);
    const double scale = std::max({1.0, std::abs(cos_route.lambda), std::abs(sin_route.lambda)});
    return std::abs(cos_route.lambda - sin_route.lambda) <= 1e-10 * scale;
}

}  // namespace stripflow
