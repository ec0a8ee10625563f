#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stripflow/grid.hpp"

namespace stripflow {

/// A function v(x'_j, y'_m) on the fixed reference strip S^1 x [0, 1],
/// y'_m = m/ny for m = 0..ny. Periodic in x' by construction (no duplicated
/// seam column). Stored y-major: value(j, m) = v[m*nx + j].
struct StripField {
    PeriodicGrid grid_x;
    int ny;
    std::vector<double> v;

    StripField(PeriodicGrid gx, int ny_)
        : grid_x(gx), ny(ny_), v(static_cast<size_t>(gx.nx) * (static_cast<size_t>(ny_) + 1), 0.0) {
        if (ny < 1) throw DomainError("StripField: ny must be positive");
    }

    StripField(PeriodicGrid gx, int ny_, std::vector<double> values)
        : grid_x(gx), ny(ny_), v(std::move(values)) {
        if (ny < 1) throw DomainError("StripField: ny must be positive");
        if (v.size() != static_cast<size_t>(gx.nx) * (static_cast<size_t>(ny) + 1))
            throw GridMismatch("StripField: value count does not match nx*(ny+1)");
    }

    double& at(int j, int m) { return v[static_cast<size_t>(m) * grid_x.nx + j]; }
    double at(int j, int m) const { return v[static_cast<size_t>(m) * grid_x.nx + j]; }

    double y_node(int m) const { return static_cast<double>(m) / ny; }

    /// Top boundary row (y' = 1).
    std::vector<double> top_row() const {
        return std::vector<double>(v.begin() + static_cast<long>(ny) * grid_x.nx,
                                   v.begin() + (static_cast<long>(ny) + 1) * grid_x.nx);
    }
};

/// Samples f(x', y') on the strip grid.
inline StripField sample_strip(PeriodicGrid gx, int ny,
                               const std::function<double(double, double)>& f) {
    StripField out(gx, ny);
    for (int m = 0; m <= ny; ++m)
        for (int j = 0; j < gx.nx; ++j) out.at(j, m) = f(gx.node(j), out.y_node(m));
    return out;
}

}  // namespace stripflow
