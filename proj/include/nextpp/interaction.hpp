#pragma once

// Discrete channel and fusion: residual causal self-attention over the
// event embeddings, and residual causal cross-attention in which the
// continuous-channel output queries the self-attention stream.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "nextpp/autodiff.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

struct AttentionBlockVars {
    Var wq, wk, wv, wo;    // D x D
    Var ln_gain, ln_bias;  // D
};

struct InteractionVars {
    std::vector<AttentionBlockVars> self_blocks;
    std::vector<AttentionBlockVars> cross_blocks;
};

void register_interaction_params(ParamStore& params, std::size_t model_dim, std::size_t layers,
                                 Rng& rng);
InteractionVars interaction_vars(Tape& tape, std::size_t layers);

// weights[layer][head] is an L x L row-stochastic causal matrix.
using AttentionMaps = std::vector<std::vector<Tensor>>;

struct BlockOutput {
    Var out;
    std::vector<Tensor> weights;  // per head
};

// A = LayerNorm(E + SelfAttention(E)).
BlockOutput self_attention_block(const Var& E, const AttentionBlockVars& v, std::size_t heads,
                                 std::span<const double> dropout_mask = {});

// C = LayerNorm(O + CrossAttention(query = O, key = A, value = A)).
BlockOutput cross_attention_block(const Var& O, const Var& A, const AttentionBlockVars& v,
                                  std::size_t heads, std::span<const double> dropout_mask = {});

struct InteractionConfig {
    std::size_t heads = 2;
    std::size_t layers = 2;
    double dropout = 0.0;  // on attention weights; 0 disables
    bool cross_attention = true;
};

struct FusedRepresentation {
    Var C;  // L x D
    Var A;  // L x D, output of the last self-attention block
    AttentionMaps self_weights;
    AttentionMaps cross_weights;
};

// Stacks (self-attention -> cross-attention) per layer. With
// cross_attention disabled C is O itself. `rng` drives dropout masks and
// may be null when dropout is zero.
FusedRepresentation interact(const Var& E, const Var& O, const InteractionVars& v,
                             const InteractionConfig& cfg, Rng* rng);

// CSV with header "layer,head,query,key,weight"; only causal (key <= query)
// entries are written.
std::string attention_csv(const AttentionMaps& weights);
void export_attention(const AttentionMaps& weights, const std::filesystem::path& path);

}  // namespace nextpp
