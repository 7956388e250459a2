#pragma once

#include <cmath>

#include "nextpp/intensity.hpp"
#include "nextpp/model.hpp"

namespace nextpp::testing {

inline ModelConfig tiny_config(std::size_t M = 3) {
    ModelConfig c;
    c.mark_count = M;
    c.model_dim = 8;
    c.latent_dim = 4;
    c.heads = 2;
    c.layers = 2;
    return c;
}

// Intensity forced to the constant `rate` for every mark, whatever the
// network computes: α = 0, W = 0, b = 0, γ = 1.
inline void make_constant_intensity(Model& model, double rate) {
    auto& ps = model.params();
    const std::size_t M = model.config().mark_count;
    ps.mutable_get("intensity.alpha") = Tensor(Shape{M}, 0.0);
    ps.mutable_get("intensity.w") = Tensor::zeros_like(ps.get("intensity.w"));
    ps.mutable_get("intensity.b") = Tensor(Shape{M}, 0.0);
    ps.mutable_get("intensity.beta") = Tensor(Shape{M}, softplus_inverse(rate));
    ps.mutable_get("intensity.gamma_raw") = Tensor(Shape{M}, softplus_inverse(1.0 - kGammaFloor));
}

}  // namespace nextpp::testing
