// Test-only oracles, kept independent of the library implementation paths
// they are used to check.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracles {

/// Plain bisection on the directly-coded alpha*(1 - cosh x) + x*sinh x.
/// The naive form loses (1 - cosh x) below x ~ 1e-8, so the lower end starts
/// at 0.5; fine for the desk-scale alpha range this oracle serves.
inline double bisect_rho_star(double alpha) {
    auto f = [alpha](double x) { return alpha * (1.0 - std::cosh(x)) + x * std::sinh(x); };
    double lo = 0.5, hi = 2.0;
    while (f(hi) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e3) throw std::runtime_error("bisect_rho_star: no bracket");
    }
    if (f(lo) >= 0.0) throw std::runtime_error("bisect_rho_star: bad lower end");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Local Thomas solve (no pivoting); a/b/c are sub-/main-/super-diagonals.
inline std::vector<double> thomas(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> r) {
    const size_t n = b.size();
    for (size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        r[i] -= w * r[i - 1];
    }
    r[n - 1] /= b[n - 1];
    for (size_t i = n - 1; i-- > 0;) r[i] = (r[i] - c[i] * r[i + 1]) / b[i];
    return r;
}

/// Second-order FD solve of sigma'' = sigma, sigma(0) = s1, sigma(L) = s2,
/// on ny+1 nodes. Returns all node values.
inline std::vector<double> fd_bvp_sigma(double s1, double s2, double L, int ny) {
    const double h = L / ny;
    const size_t n = static_cast<size_t>(ny) + 1;
    std::vector<double> a(n, 1.0 / (h * h)), b(n, -2.0 / (h * h) - 1.0), c(n, 1.0 / (h * h)),
        r(n, 0.0);
    b[0] = 1.0; c[0] = 0.0; r[0] = s1;
    b[n - 1] = 1.0; a[n - 1] = 0.0; r[n - 1] = s2;
    return thomas(a, b, c, r);
}

struct LineFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
    const double xbar = sx / static_cast<double>(n), ybar = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
        syy += (y[i] - ybar) * (y[i] - ybar);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    f.r_squared = (syy == 0.0) ? 1.0 : 1.0 - (syy - sxy * sxy / sxx) / syy;
    return f;
}

/// Least-squares order of err ~ C * n^slope on a refinement ladder.
inline double convergence_order(const std::vector<double>& n, const std::vector<double>& err) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < n.size(); ++i) {
        lx.push_back(std::log(n[i]));
        ly.push_back(std::log(err[i]));
    }
    return -fit_line(lx, ly).slope;
}

}  // namespace oracles
