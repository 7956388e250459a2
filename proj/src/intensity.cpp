#include "nextpp/intensity.hpp"

#include <cmath>

#include "nextpp/errors.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {

double scaled_softplus(double x, double gamma) { return ops::scaled_softplus(x, gamma); }

double gamma_from_raw(double raw) {
    return std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw))) + kGammaFloor;
}

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw DomainError("softplus inverse needs a positive argument");
    // log(exp(y) - 1), written to stay finite for large and tiny y.
    return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

void register_intensity_params(ParamStore& params, std::size_t mark_count, std::size_t model_dim,
                               std::span<const double> initial_rates, Rng& rng) {
    const std::size_t M = mark_count, D = model_dim;
    if (initial_rates.size() != M) throw ContractError("one initial rate per mark required");
    params.add("intensity.alpha", Tensor(Shape{M}, -0.1));
    params.add("intensity.w", rng.normal({D, M}, 1.0 / std::sqrt(static_cast<double>(D))));
    params.add("intensity.b", Tensor(Shape{M}));
    std::vector<double> beta(M);
    for (std::size_t m = 0; m < M; ++m) beta[m] = softplus_inverse(std::max(initial_rates[m], 1e-6));
    params.add("intensity.beta", Tensor::vector(beta));
    params.add("intensity.gamma_raw", Tensor(Shape{M}, softplus_inverse(1.0 - kGammaFloor)));
    params.add("intensity.c0", Tensor(Shape{1, D}));
}

IntensityParams IntensityParams::from_store(const ParamStore& params) {
    auto vec = [&](const char* n) {
        const auto d = params.get(n).data();
        return std::vector<double>(d.begin(), d.end());
    };
    return {vec("intensity.alpha"), params.get("intensity.w"), vec("intensity.b"),
            vec("intensity.beta"), vec("intensity.gamma_raw")};
}

std::vector<double> intensity_offsets(std::span<const double> c_row, const IntensityParams& p) {
    const std::size_t M = p.mark_count();
    const std::size_t D = p.readout.rows();
    if (c_row.size() != D) throw DimensionError("fused row length does not match readout");
    std::vector<double> out(M);
    for (std::size_t m = 0; m < M; ++m) {
        double s = p.bias[m] + p.base_rate[m];
        for (std::size_t j = 0; j < D; ++j) s += p.readout.at(j, m) * c_row[j];
        out[m] = s;
    }
    return out;
}

double intensity_at(const IntensityQuery& q, std::size_t mark, const IntensityParams& p) {
    if (q.elapsed < 0.0) throw ContractError("intensity query before the conditioning event");
    if (mark >= p.mark_count()) throw ContractError("mark out of range");
    const auto off = intensity_offsets(q.c_row, p);
    return scaled_softplus(p.alpha[mark] * q.elapsed + off[mark], p.gamma(mark));
}

double total_intensity_at(const IntensityQuery& q, const IntensityParams& p) {
    if (q.elapsed < 0.0) throw ContractError("intensity query before the conditioning event");
    const auto off = intensity_offsets(q.c_row, p);
    double s = 0.0;
    for (std::size_t m = 0; m < p.mark_count(); ++m) {
        s += scaled_softplus(p.alpha[m] * q.elapsed + off[m], p.gamma(m));
    }
    return s;
}

IntensityVars intensity_vars(Tape& t) {
    Var offset = ops::add(t.param("intensity.b"), t.param("intensity.beta"));
    Var gamma = ops::add_scalar(ops::softplus(t.param("intensity.gamma_raw")), kGammaFloor);
    return {t.param("intensity.alpha"), t.param("intensity.w"), offset, gamma,
            t.param("intensity.c0")};
}

Var intensity_base(const Var& C, const IntensityVars& v) {
    return ops::add_row(ops::matmul(C, v.readout), v.offset);
}

}  // namespace nextpp
