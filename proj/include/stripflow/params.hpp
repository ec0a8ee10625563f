#pragma once

#include <cmath>
#include <string>

#include "stripflow/errors.hpp"

namespace stripflow {

/// The five physical constants of the layer-growth model.
///
/// The stationary branch exists only for alpha() > 2, equivalently
/// sigma_bar_1, sigma_bar_2 > sigma_tilde (nutrient above the proliferation
/// threshold on both boundaries).
struct ModelParameters {
    double mu;           ///< proliferation rate
    double sigma_tilde;  ///< proliferation threshold concentration
    double sigma_bar_1;  ///< nutrient level on the fixed bottom boundary
    double sigma_bar_2;  ///< nutrient level on the moving top boundary
    double gamma;        ///< surface tension coefficient

    double alpha() const { return (sigma_bar_1 + sigma_bar_2) / sigma_tilde; }
};

/// Checks positivity of all fields and the stationary-branch condition
/// alpha > 2. Returns the parameters unchanged (idempotent).
inline ModelParameters validate(const ModelParameters& p) {
    auto require_positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw NonPositiveParameter(std::string(name) + " must be strictly positive");
    };
    require_positive(p.mu, "mu");
    require_positive(p.sigma_tilde, "sigma_tilde");
    require_positive(p.sigma_bar_1, "sigma_bar_1");
    require_positive(p.sigma_bar_2, "sigma_bar_2");
    require_positive(p.gamma, "gamma");
    if (!(p.alpha() > 2.0))
        throw AlphaOutOfRange(
            "stationary branch requires sigma_bar_1, sigma_bar_2 > sigma_tilde "
            "(alpha = (sigma_bar_1 + sigma_bar_2)/sigma_tilde > 2); got alpha = " +
            std::to_string(p.alpha()));
    return p;
}

}  // namespace stripflow
