#include "nextpp/model.hpp"

#include <cmath>
#include <sstream>

#include "nextpp/embedding.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/intensity.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {

void ModelConfig::validate() const {
    if (mark_count < 1) throw ContractError("mark_count must be >= 1");
    if (model_dim < 2 || model_dim % 2 != 0) throw ContractError("model_dim must be even and >= 2");
    if (latent_dim < 1 || latent_dim >= model_dim) throw ContractError("latent_dim must satisfy 0 < d < D");
    if (heads < 1 || model_dim % heads != 0) throw ContractError("model_dim must be divisible by heads");
    if (layers < 1) throw ContractError("layers must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ContractError("dropout must lie in [0, 1)");
    if (ode_steps < 1) throw ContractError("ode_steps must be >= 1");
    if (!(block_ratio > 0.0 && block_ratio <= 1.0)) throw ContractError("block ratio must lie in (0, 1]");
    if (disable_neural_evolution && disable_cross_attention) {
        throw ContractError("cannot disable both neural evolution and cross-attention");
    }
}

std::uint64_t ModelConfig::shape_hash() const {
    std::ostringstream os;
    os << "M=" << mark_count << ";D=" << model_dim << ";d=" << latent_dim << ";heads=" << heads
       << ";layers=" << layers;
    // FNV-1a, stable across platforms unlike std::hash.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Model Model::create(const ModelConfig& cfg, std::span<const double> initial_rates,
                    std::uint64_t seed) {
    cfg.validate();
    std::vector<double> rates(initial_rates.begin(), initial_rates.end());
    if (rates.empty()) rates.assign(cfg.mark_count, 1.0);
    Rng rng(seed);
    Model m;
    m.cfg_ = cfg;
    const double emb_scale = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
    m.params_.add("embedding.marks", rng.normal({cfg.mark_count, cfg.model_dim}, emb_scale));
    register_evolution_params(m.params_, cfg.model_dim, cfg.latent_dim, rng);
    register_interaction_params(m.params_, cfg.model_dim, cfg.layers, rng);
    register_intensity_params(m.params_, cfg.mark_count, cfg.model_dim, rates, rng);
    return m;
}

Model Model::from_params(const ModelConfig& cfg, ParamStore params) {
    cfg.validate();
    Model reference = create(cfg, {}, 0);
    if (reference.params_.names() != params.names()) {
        throw IncompatibleError("parameter set does not match the model configuration");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params.get(i).shape() != reference.params_.get(i).shape()) {
            throw IncompatibleError("parameter '" + params.name(i) + "' has shape " +
                                    shape_string(params.get(i).shape()) + ", expected " +
                                    shape_string(reference.params_.get(i).shape()));
        }
    }
    Model m;
    m.cfg_ = cfg;
    m.params_ = std::move(params);
    return m;
}

ForwardResult Model::forward(Tape& tape, const EventSequence& seq, ForwardMode mode, Rng* rng) const {
    if (seq.empty()) throw ContractError("forward on an empty sequence");
    const bool training = mode == ForwardMode::training;
    if (training && !rng) throw ContractError("training-mode forward needs a random generator");

    ForwardResult r;
    r.E = embed_sequence(seq, tape.param("embedding.marks"));
    const auto times = seq.times();

    if (!cfg_.disable_neural_evolution) {
        const auto partition = BlockPartition::make(seq.size(), cfg_.block_ratio);
        Tensor eps(Shape{partition.blocks.size(), cfg_.latent_dim});
        if (training) eps = rng->normal(eps.shape());
        auto channel = run_channel(r.E, times, partition, evolution_vars(tape),
                                   OdeSolverConfig{cfg_.ode_steps}, eps);
        r.O = channel.O;
        r.latents = channel.latents;
    }

    if (cfg_.disable_cross_attention) {
        r.C = r.O;
    } else {
        InteractionConfig icfg{cfg_.heads, cfg_.layers, training ? cfg_.dropout : 0.0,
                               !cfg_.disable_neural_evolution};
        Var query = cfg_.disable_neural_evolution ? r.E : r.O;
        auto fused = interact(r.E, query, interaction_vars(tape, cfg_.layers), icfg, rng);
        r.A = fused.A;
        r.C = cfg_.disable_neural_evolution ? fused.A : fused.C;
        r.self_weights = std::move(fused.self_weights);
        r.cross_weights = std::move(fused.cross_weights);
    }
    r.C_full = ops::concat_rows(tape.param("intensity.c0"), r.C);
    return r;
}

std::vector<double> empirical_rates(const Dataset& data) {
    std::vector<double> counts(data.mark_count, 0.0);
    double duration = 0.0;
    for (const auto& seq : data.sequences) {
        for (const auto& e : seq) counts[e.mark] += 1.0;
        if (!seq.empty()) duration += seq.last_time() - seq[0].time;
    }
    if (duration <= 0.0) duration = 1.0;
    for (double& c : counts) c /= duration;
    return counts;
}

}  // namespace nextpp
