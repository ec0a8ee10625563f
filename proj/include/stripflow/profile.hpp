#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "stripflow/errors.hpp"
#include "stripflow/grid.hpp"

namespace stripflow {

/// Samples of the positive periodic boundary height rho(x_j).
/// Strict positivity is a construction invariant (the strip map is a
/// diffeomorphism only for positive rho).
struct BoundaryProfile {
    PeriodicGrid grid;
    std::vector<double> values;

    BoundaryProfile(PeriodicGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid.nx)
            throw GridMismatch("BoundaryProfile: expected " + std::to_string(grid.nx) +
                               " samples, got " + std::to_string(values.size()));
        for (double s : values)
            if (!(s > 0.0))
                throw NonPositiveProfile("BoundaryProfile: sample " + std::to_string(s) +
                                         " is not strictly positive");
    }

    double min() const { return *std::min_element(values.begin(), values.end()); }
    double max() const { return *std::max_element(values.begin(), values.end()); }
    double mean() const {
        return std::accumulate(values.begin(), values.end(), 0.0) / grid.nx;
    }
};

/// Flat profile rho == c.
inline BoundaryProfile flat_profile(PeriodicGrid grid, double c) {
    return BoundaryProfile(grid, std::vector<double>(static_cast<size_t>(grid.nx), c));
}

}  // namespace stripflow
