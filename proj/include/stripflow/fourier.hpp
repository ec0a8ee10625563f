#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stripflow/grid.hpp"
#include "stripflow/profile.hpp"

namespace stripflow {

/// Real-trigonometric coefficients of a grid function,
///   v(x) = a0 + sum_k (a_k cos(kx) + b_k sin(kx)) + a_nyquist cos((nx/2) x).
/// The Nyquist cosine coefficient is carried so that sample-space round trips
/// are loss-free, but it is excluded from all modal operations.
struct FourierCoeffs {
    int nx = 0;
    double a0 = 0.0;
    std::vector<double> a;  ///< a[i] multiplies cos((i+1) x), i = 0 .. nx/2-2
    std::vector<double> b;  ///< b[i] multiplies sin((i+1) x)
    double a_nyquist = 0.0;

    int max_mode() const { return static_cast<int>(a.size()); }
    double cos_coeff(int k) const { return a[static_cast<size_t>(k - 1)]; }
    double sin_coeff(int k) const { return b[static_cast<size_t>(k - 1)]; }
};

/// Coefficients of the real trigonometric interpolant of raw samples.
inline FourierCoeffs to_fourier_samples(const std::vector<double>& v, const SpectralTables& t) {
    const int n = t.grid().nx;
    const int krep = t.grid().max_mode();
    FourierCoeffs c;
    c.nx = n;
    c.a.assign(static_cast<size_t>(krep), 0.0);
    c.b.assign(static_cast<size_t>(krep), 0.0);
    double s0 = 0.0, sn = 0.0;
    for (int j = 0; j < n; ++j) {
        s0 += v[static_cast<size_t>(j)];
        sn += v[static_cast<size_t>(j)] * t.cosk(n / 2, j);
    }
    c.a0 = s0 / n;
    c.a_nyquist = sn / n;
    for (int k = 1; k <= krep; ++k) {
        double sa = 0.0, sb = 0.0;
        for (int j = 0; j < n; ++j) {
            sa += v[static_cast<size_t>(j)] * t.cosk(k, j);
            sb += v[static_cast<size_t>(j)] * t.sink(k, j);
        }
        c.a[static_cast<size_t>(k - 1)] = 2.0 * sa / n;
        c.b[static_cast<size_t>(k - 1)] = 2.0 * sb / n;
    }
    return c;
}

inline FourierCoeffs to_fourier(const BoundaryProfile& p, const SpectralTables& t) {
    if (t.grid() != p.grid) throw GridMismatch("to_fourier: tables built for a different grid");
    return to_fourier_samples(p.values, t);
}

inline FourierCoeffs to_fourier(const BoundaryProfile& p) {
    return to_fourier(p, SpectralTables(p.grid));
}

/// Evaluates the trig polynomial back on the grid. No positivity requirement.
inline std::vector<double> from_fourier_samples(const FourierCoeffs& c, const SpectralTables& t) {
    const int n = t.grid().nx;
    if (c.nx != n || c.max_mode() != t.grid().max_mode())
        throw GridMismatch("from_fourier: coefficient count inconsistent with grid");
    std::vector<double> v(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double s = c.a0 + c.a_nyquist * t.cosk(n / 2, j);
        for (int k = 1; k <= c.max_mode(); ++k)
            s += c.cos_coeff(k) * t.cosk(k, j) + c.sin_coeff(k) * t.sink(k, j);
        v[static_cast<size_t>(j)] = s;
    }
    return v;
}

/// Inverse of to_fourier. Positivity of the reconstruction is checked, not
/// assumed; throws NonPositiveProfile when a sample comes out <= 0 (the
/// caller decides whether that is fatal).
inline BoundaryProfile from_fourier(const FourierCoeffs& c, const PeriodicGrid& grid,
                                    const SpectralTables& t) {
    auto v = from_fourier_samples(c, t);
    for (double s : v)
        if (!(s > 0.0))
            throw NonPositiveProfile("from_fourier: reconstructed sample " + std::to_string(s) +
                                     " is not strictly positive");
    return BoundaryProfile(grid, std::move(v));
}

inline BoundaryProfile from_fourier(const FourierCoeffs& c, const PeriodicGrid& grid) {
    return from_fourier(c, grid, SpectralTables(grid));
}

/// Mean square of the represented function, ((1/2pi) integral v^2 dx), from
/// coefficients alone: a0^2 + (1/2) sum (a_k^2 + b_k^2) + a_nyquist^2.
/// (cos^2 of the Nyquist mode averages to 1 on the grid, not 1/2.)
inline double parseval_mean_square(const FourierCoeffs& c) {
    double s = c.a0 * c.a0 + c.a_nyquist * c.a_nyquist;
    for (int k = 1; k <= c.max_mode(); ++k)
        s += 0.5 * (c.cos_coeff(k) * c.cos_coeff(k) + c.sin_coeff(k) * c.sin_coeff(k));
    return s;
}

/// Derivative of the trigonometric interpolant sampled on the grid.
/// order must be 1 or 2.
inline std::vector<double> spectral_derivative(const BoundaryProfile& p, int order,
                                               const SpectralTables& t) {
    if (t.grid() != p.grid) throw GridMismatch("spectral_derivative: grid mismatch");
    if (order != 1 && order != 2) throw DomainError("spectral_derivative: order must be 1 or 2");
    const int n = p.grid.nx;
    Eigen::Map<const Eigen::VectorXd> v(p.values.data(), n);
    Eigen::VectorXd d = (order == 1) ? (t.d1() * v).eval() : (t.d2() * v).eval();
    return std::vector<double>(d.data(), d.data() + n);
}

inline std::vector<double> spectral_derivative(const BoundaryProfile& p, int order) {
    return spectral_derivative(p, order, SpectralTables(p.grid));
}

}  // namespace stripflow
