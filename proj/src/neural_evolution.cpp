#include "nextpp/neural_evolution.hpp"

#include <cmath>
#include <numeric>

#include "nextpp/errors.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {

void register_evolution_params(ParamStore& params, std::size_t model_dim, std::size_t latent_dim,
                               Rng& rng) {
    const std::size_t D = model_dim, d = latent_dim;
    if (d == 0 || d >= D) throw ContractError("latent dimension must satisfy 0 < d < D");
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(D));
    const double lat_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (const char* head : {"mean", "logstd"}) {
        const std::string p = std::string("evolution.") + head;
        params.add(p + ".w1", rng.normal({D, d}, in_scale));
        params.add(p + ".b1", Tensor(Shape{d}));
        params.add(p + ".w2", rng.normal({d, d}, lat_scale));
        params.add(p + ".b2", Tensor(Shape{d}));
    }
    params.add("evolution.field.wz", rng.normal({d, d}, 0.1 * lat_scale));
    params.add("evolution.field.wt", Tensor(Shape{d}));
    params.add("evolution.field.b", Tensor(Shape{d}));
    params.add("evolution.dec.w", rng.normal({d, D}, lat_scale));
    params.add("evolution.dec.b", Tensor(Shape{D}));
}

EvolutionVars evolution_vars(Tape& t) {
    return {t.param("evolution.mean.w1"),   t.param("evolution.mean.b1"),
            t.param("evolution.mean.w2"),   t.param("evolution.mean.b2"),
            t.param("evolution.logstd.w1"), t.param("evolution.logstd.b1"),
            t.param("evolution.logstd.w2"), t.param("evolution.logstd.b2"),
            t.param("evolution.field.wz"),  t.param("evolution.field.wt"),
            t.param("evolution.field.b"),   t.param("evolution.dec.w"),
            t.param("evolution.dec.b")};
}

std::vector<LatentState> latent_values(const LatentBatch& latents) {
    const Tensor& m = latents.mean.value();
    const std::size_t K = m.rows();
    std::vector<LatentState> out(K);
    auto copy_row = [](const Tensor& t, std::size_t r) {
        auto row = t.row(r);
        return std::vector<double>(row.begin(), row.end());
    };
    for (std::size_t k = 0; k < K; ++k) {
        out[k] = {copy_row(m, k), copy_row(latents.log_std.value(), k),
                  copy_row(latents.z0.value(), k), copy_row(latents.z1.value(), k)};
    }
    return out;
}

BlockPartition BlockPartition::make(std::size_t length, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ContractError("block ratio must lie in (0, 1]");
    if (length == 0) throw ContractError("cannot partition an empty sequence");
    BlockPartition p;
    p.ratio = ratio;
    const auto size = static_cast<std::size_t>(std::ceil(1.0 / ratio - 1e-9));
    p.block_of.resize(length);
    for (std::size_t start = 0; start < length; start += size) {
        std::vector<std::size_t> block;
        for (std::size_t i = start; i < std::min(length, start + size); ++i) {
            p.block_of[i] = p.blocks.size();
            block.push_back(i);
        }
        p.blocks.push_back(std::move(block));
    }
    return p;
}

std::size_t BlockPartition::block_size() const {
    return static_cast<std::size_t>(std::ceil(1.0 / ratio - 1e-9));
}

namespace {

Var feedforward(const Var& x, const Var& w1, const Var& b1, const Var& w2, const Var& b2) {
    Var h = ops::tanh(ops::add_row(ops::matmul(x, w1), b1));
    return ops::add_row(ops::matmul(h, w2), b2);
}

}  // namespace

std::pair<Var, Var> encode(const Var& x, const EvolutionVars& v) {
    if (!x.value().all_finite()) throw NumericError("encode: non-finite input");
    Var mean = feedforward(x, v.mean_w1, v.mean_b1, v.mean_w2, v.mean_b2);
    Var log_std = feedforward(x, v.logstd_w1, v.logstd_b1, v.logstd_w2, v.logstd_b2);
    return {mean, ops::clamp(log_std, kMinLogStd, kMaxLogStd)};
}

Var sample_z0(const Var& mean, const Var& log_std, const Tensor& eps) {
    if (eps.shape() != mean.shape()) throw DimensionError("sample_z0: noise shape mismatch");
    Var noise = mean.tape()->constant(eps);
    return ops::add(mean, ops::mul(ops::exp(log_std), noise));
}

Var evolve(const Var& z0, std::span<const double> t0, std::span<const double> t1,
           const EvolutionVars& v, const OdeSolverConfig& cfg) {
    OdeField field = [&v](const Var& z, std::span<const double> t) {
        return ops::add_row(ops::add(ops::matmul(z, v.field_wz), ops::outer(t, v.field_wt)),
                            v.field_b);
    };
    return ode_solve(field, z0, t0, t1, cfg);
}

Var decode(const Var& z, const EvolutionVars& v) {
    return ops::add_row(ops::matmul(z, v.dec_w), v.dec_b);
}

ChannelOutput run_channel(const Var& embedding, std::span<const double> times,
                          const BlockPartition& partition, const EvolutionVars& v,
                          const OdeSolverConfig& cfg, const Tensor& eps) {
    const std::size_t L = embedding.shape()[0];
    const std::size_t K = partition.blocks.size();
    if (K == 0) throw ContractError("run_channel: empty partition");
    if (partition.block_of.size() != L || times.size() != L) {
        throw ContractError("run_channel: partition does not cover the sequence");
    }
    Tape& tape = *embedding.tape();
    const std::size_t d = v.field_wz.shape()[0];

    Var block_input = K == L ? embedding : ops::mean_rows(embedding, partition.blocks);
    auto [mean, log_std] = encode(block_input, v);
    Var z0 = sample_z0(mean, log_std, eps);

    // Row 0 of the batch is the prior-mean latent carried from the origin to
    // the first event; row k (k >= 1) is block k-1 carried to block k.
    std::vector<double> t0(K), t1(K);
    t0[0] = 0.0;
    t1[0] = times[partition.blocks[0].front()];
    for (std::size_t k = 1; k < K; ++k) {
        t0[k] = times[partition.blocks[k - 1].back()];
        t1[k] = times[partition.blocks[k].front()];
    }
    Var start = tape.constant(Tensor(Shape{1, d}));
    if (K > 1) {
        std::vector<std::size_t> carried(K - 1);
        std::iota(carried.begin(), carried.end(), 0);
        start = ops::concat_rows(start, ops::gather_rows(z0, carried));
    }
    Var evolved = evolve(start, t0, t1, v, cfg);
    Var decoded = decode(evolved, v);
    Var O = K == L ? decoded : ops::gather_rows(decoded, partition.block_of);

    Var z1;
    std::vector<std::size_t> last{K - 1};
    if (K > 1) {
        std::vector<std::size_t> next(K - 1);
        std::iota(next.begin(), next.end(), 1);
        z1 = ops::concat_rows(ops::gather_rows(evolved, next), ops::gather_rows(z0, last));
    } else {
        z1 = z0;
    }
    return {O, LatentBatch{mean, log_std, z0, z1}};
}

}  // namespace nextpp
