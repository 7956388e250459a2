#include "nextpp/interaction.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nextpp/errors.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {
namespace {

void register_block(ParamStore& params, const std::string& prefix, std::size_t D, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(D));
    for (const char* w : {"wq", "wk", "wv", "wo"}) params.add(prefix + "." + w, rng.normal({D, D}, s));
    params.add(prefix + ".ln_gain", Tensor(Shape{D}, 1.0));
    params.add(prefix + ".ln_bias", Tensor(Shape{D}));
}

AttentionBlockVars block_vars(Tape& t, const std::string& prefix) {
    return {t.param(prefix + ".wq"),      t.param(prefix + ".wk"),     t.param(prefix + ".wv"),
            t.param(prefix + ".wo"),      t.param(prefix + ".ln_gain"), t.param(prefix + ".ln_bias")};
}

std::string layer_prefix(std::size_t l, const char* kind) {
    return "attn." + std::to_string(l) + "." + kind;
}

std::vector<double> dropout_mask(Rng& rng, std::size_t heads, std::size_t L, double p) {
    std::vector<double> mask(heads * L * L);
    const double keep = 1.0 / (1.0 - p);
    for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
    return mask;
}

}  // namespace

void register_interaction_params(ParamStore& params, std::size_t model_dim, std::size_t layers,
                                 Rng& rng) {
    if (layers == 0) throw ContractError("layer count must be >= 1");
    for (std::size_t l = 0; l < layers; ++l) {
        register_block(params, layer_prefix(l, "self"), model_dim, rng);
        register_block(params, layer_prefix(l, "cross"), model_dim, rng);
    }
}

InteractionVars interaction_vars(Tape& tape, std::size_t layers) {
    InteractionVars v;
    for (std::size_t l = 0; l < layers; ++l) {
        v.self_blocks.push_back(block_vars(tape, layer_prefix(l, "self")));
        v.cross_blocks.push_back(block_vars(tape, layer_prefix(l, "cross")));
    }
    return v;
}

BlockOutput self_attention_block(const Var& E, const AttentionBlockVars& v, std::size_t heads,
                                 std::span<const double> dropout_mask) {
    auto att = ops::causal_attention(ops::matmul(E, v.wq), ops::matmul(E, v.wk),
                                     ops::matmul(E, v.wv), heads, dropout_mask);
    Var mixed = ops::matmul(att.out, v.wo);
    return {ops::layer_norm(ops::add(E, mixed), v.ln_gain, v.ln_bias), std::move(att.weights)};
}

BlockOutput cross_attention_block(const Var& O, const Var& A, const AttentionBlockVars& v,
                                  std::size_t heads, std::span<const double> dropout_mask) {
    auto att = ops::causal_attention(ops::matmul(O, v.wq), ops::matmul(A, v.wk),
                                     ops::matmul(A, v.wv), heads, dropout_mask);
    Var mixed = ops::matmul(att.out, v.wo);
    return {ops::layer_norm(ops::add(O, mixed), v.ln_gain, v.ln_bias), std::move(att.weights)};
}

FusedRepresentation interact(const Var& E, const Var& O, const InteractionVars& v,
                             const InteractionConfig& cfg, Rng* rng) {
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ContractError("dropout must lie in [0, 1)");
    const bool use_dropout = cfg.dropout > 0.0;
    if (use_dropout && !rng) throw ContractError("dropout needs a random generator");
    const std::size_t L = E.shape()[0];

    FusedRepresentation out;
    Var A = E;
    Var C = O;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        std::vector<double> mask;
        if (use_dropout) mask = dropout_mask(*rng, cfg.heads, L, cfg.dropout);
        auto sa = self_attention_block(A, v.self_blocks.at(l), cfg.heads, mask);
        A = sa.out;
        out.self_weights.push_back(std::move(sa.weights));
        if (cfg.cross_attention) {
            if (use_dropout) mask = dropout_mask(*rng, cfg.heads, L, cfg.dropout);
            auto ca = cross_attention_block(C, A, v.cross_blocks.at(l), cfg.heads, mask);
            C = ca.out;
            out.cross_weights.push_back(std::move(ca.weights));
        }
    }
    out.A = A;
    out.C = C;
    return out;
}

std::string attention_csv(const AttentionMaps& weights) {
    std::string s = "layer,head,query,key,weight\n";
    char buf[96];
    for (std::size_t l = 0; l < weights.size(); ++l)
        for (std::size_t h = 0; h < weights[l].size(); ++h) {
            const Tensor& w = weights[l][h];
            for (std::size_t i = 0; i < w.rows(); ++i)
                for (std::size_t j = 0; j <= i; ++j) {
                    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.17g\n", l, h, i, j, w.at(i, j));
                    s += buf;
                }
        }
    return s;
}

void export_attention(const AttentionMaps& weights, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << attention_csv(weights);
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace nextpp
