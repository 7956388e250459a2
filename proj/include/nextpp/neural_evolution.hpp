#pragma once

// Continuous channel: variational per-block encoding into a d-dimensional
// latent, reparameterised sampling, linear-field ODE evolution between
// blocks, and a linear decoder back to model space.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nextpp/autodiff.hpp"
#include "nextpp/ode.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

inline constexpr double kMinLogStd = -20.0;
inline constexpr double kMaxLogStd = 3.0;

struct EvolutionVars {
    // Feedforward D -> d (tanh hidden, width d) -> d, one per output head.
    Var mean_w1, mean_b1, mean_w2, mean_b2;
    Var logstd_w1, logstd_b1, logstd_w2, logstd_b2;
    // Linear field f(z, t) = z W_z + t w_t + b.
    Var field_wz, field_wt, field_b;
    // Affine decoder d -> D.
    Var dec_w, dec_b;
};

void register_evolution_params(ParamStore& params, std::size_t model_dim, std::size_t latent_dim,
                               Rng& rng);
EvolutionVars evolution_vars(Tape& tape);

// Latent quantities for K blocks, one row each (K x d).
struct LatentBatch {
    Var mean;
    Var log_std;  // clamped to [kMinLogStd, kMaxLogStd]
    Var z0;       // sampled initial state
    Var z1;       // evolved state; the last block's z1 equals its z0
};

// Plain-value view of one latent row.
struct LatentState {
    std::vector<double> mean, log_std, z0, z1;
};
std::vector<LatentState> latent_values(const LatentBatch& latents);

// Consecutive events grouped into blocks of ceil(1 / ratio) events.
struct BlockPartition {
    double ratio = 1.0;
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::size_t> block_of;  // event index -> block index

    static BlockPartition make(std::size_t length, double ratio);
    std::size_t block_size() const;
};

// (γ, log σ) for each row of `x` (K x D).
std::pair<Var, Var> encode(const Var& x, const EvolutionVars& v);

// z0 = γ + exp(log σ) ⊙ ε for a fixed noise tensor ε.
Var sample_z0(const Var& mean, const Var& log_std, const Tensor& eps);

// Evolves each row of z0 over [t0[r], t1[r]] under the linear field.
Var evolve(const Var& z0, std::span<const double> t0, std::span<const double> t1,
           const EvolutionVars& v, const OdeSolverConfig& cfg);

Var decode(const Var& z, const EvolutionVars& v);

struct ChannelOutput {
    Var O;  // L x D
    LatentBatch latents;
};

// Runs the channel over a sequence embedding. Row i of O only depends on
// blocks that end before event i: the rows of block k are the decoded state
// of block k-1's latent evolved from its last event time to block k's first
// event time; block 0 uses the prior mean (zero latent) evolved over
// [0, t_1]. `eps` is K x d (zeros for deterministic evaluation).
ChannelOutput run_channel(const Var& embedding, std::span<const double> times,
                          const BlockPartition& partition, const EvolutionVars& v,
                          const OdeSolverConfig& cfg, const Tensor& eps);

}  // namespace nextpp
