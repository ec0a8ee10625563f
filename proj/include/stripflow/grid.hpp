#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stripflow/errors.hpp"

namespace stripflow {

/// Equispaced nodes x_j = 2*pi*j/nx on the periodic circle [0, 2*pi).
///
/// nx must be even and >= 8 so that modes up to nx/2 - 1 are representable
/// without ambiguity. The Nyquist cosine mode (k = nx/2) is carried through
/// transforms for loss-free round trips but excluded from all modal
/// operations; the modal cutoff is max_mode() = nx/2 - 1.
struct PeriodicGrid {
    int nx;

    explicit PeriodicGrid(int nx_) : nx(nx_) {
        if (nx < 8 || nx % 2 != 0)
            throw DomainError("PeriodicGrid: nx must be even and >= 8, got " + std::to_string(nx));
    }

    double node(int j) const { return 2.0 * std::numbers::pi * j / nx; }

    std::vector<double> nodes() const {
        std::vector<double> x(static_cast<size_t>(nx));
        for (int j = 0; j < nx; ++j) x[static_cast<size_t>(j)] = node(j);
        return x;
    }

    /// Largest mode used by modal operations (Nyquist excluded).
    int max_mode() const { return nx / 2 - 1; }

    bool operator==(const PeriodicGrid& o) const { return nx == o.nx; }
    bool operator!=(const PeriodicGrid& o) const { return nx != o.nx; }
};

/// Per-grid spectral machinery: dense differentiation matrices of the
/// trigonometric interpolant and trig tables for the direct transforms.
///
/// Conventions: d1() maps the Nyquist cosine mode to zero (its interpolant
/// derivative vanishes at the nodes); d2() maps it to -(nx/2)^2 times itself.
/// Building a table costs O(nx^2); hot paths construct one per grid and share
/// it (immutable, safe across threads).
class SpectralTables {
  public:
    explicit SpectralTables(PeriodicGrid grid)
        : grid_(grid),
          d1_(grid.nx, grid.nx),
          d2_(grid.nx, grid.nx),
          cos_(static_cast<size_t>((grid.nx / 2 + 1) * grid.nx)),
          sin_(static_cast<size_t>((grid.nx / 2 + 1) * grid.nx)) {
        const int n = grid_.nx;
        const double h = 2.0 * std::numbers::pi / n;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) {
                    d1_(i, j) = 0.0;
                    d2_(i, j) = -std::numbers::pi * std::numbers::pi / (3.0 * h * h) - 1.0 / 6.0;
                } else {
                    const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
                    const double t = 0.5 * (i - j) * h;
                    d1_(i, j) = 0.5 * sign / std::tan(t);
                    const double s = std::sin(t);
                    d2_(i, j) = -0.5 * sign / (s * s);
                }
            }
        }
        for (int k = 0; k <= n / 2; ++k) {
            for (int j = 0; j < n; ++j) {
                const double a = k * grid_.node(j);
                cos_[static_cast<size_t>(k * n + j)] = std::cos(a);
                sin_[static_cast<size_t>(k * n + j)] = std::sin(a);
            }
        }
    }

    const PeriodicGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& d1() const { return d1_; }
    const Eigen::MatrixXd& d2() const { return d2_; }

    double cosk(int k, int j) const { return cos_[static_cast<size_t>(k * grid_.nx + j)]; }
    double sink(int k, int j) const { return sin_[static_cast<size_t>(k * grid_.nx + j)]; }

  private:
    PeriodicGrid grid_;
    Eigen::MatrixXd d1_, d2_;
    std::vector<double> cos_, sin_;
};

}  // namespace stripflow
