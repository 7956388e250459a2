#pragma once

// The full dual-channel model: embedding, continuous channel, attention
// fusion and intensity head, with the learned parameters they share.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nextpp/autodiff.hpp"
#include "nextpp/events.hpp"
#include "nextpp/interaction.hpp"
#include "nextpp/neural_evolution.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

struct ModelConfig {
    std::size_t mark_count = 1;
    std::size_t model_dim = 16;
    std::size_t latent_dim = 8;
    std::size_t heads = 2;
    std::size_t layers = 2;
    double dropout = 0.1;
    std::size_t ode_steps = 8;
    double block_ratio = 1.0;
    bool disable_neural_evolution = false;
    bool disable_cross_attention = false;

    void validate() const;
    // Hash of the fields that fix parameter shapes.
    std::uint64_t shape_hash() const;
    bool operator==(const ModelConfig&) const = default;
};

enum class ForwardMode {
    training,    // sampled latent noise, attention dropout
    evaluation,  // ε = 0 (posterior mean), no dropout
};

struct ForwardResult {
    Var E;       // L x D embedding
    Var O;       // L x D continuous-channel output (invalid without NE)
    Var A;       // L x D self-attention stream (invalid without CA)
    Var C;       // L x D fused representation
    Var C_full;  // (L + 1) x D; row 0 is the learned pre-history row C_0
    std::optional<LatentBatch> latents;
    AttentionMaps self_weights;
    AttentionMaps cross_weights;
};

class Model {
public:
    Model() = default;
    // Initialises all parameters from `seed`. `initial_rates` (per mark)
    // seed the intensity base rates; empty means 1 per mark.
    static Model create(const ModelConfig& cfg, std::span<const double> initial_rates,
                        std::uint64_t seed);
    static Model from_params(const ModelConfig& cfg, ParamStore params);

    const ModelConfig& config() const noexcept { return cfg_; }
    const ParamStore& params() const noexcept { return params_; }
    ParamStore& params() noexcept { return params_; }

    // Records the forward pass on `tape` (which must be bound to params()).
    // `rng` supplies latent noise and dropout in training mode.
    ForwardResult forward(Tape& tape, const EventSequence& seq, ForwardMode mode, Rng* rng) const;

private:
    ModelConfig cfg_;
    ParamStore params_;
};

// Events per unit time for each mark over Σ (t_L - t_1).
std::vector<double> empirical_rates(const Dataset& data);

}  // namespace nextpp
