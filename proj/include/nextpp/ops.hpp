#pragma once

// Differentiable operations on Var. Shapes follow the row-major convention
// of Tensor: a "matrix" is rows x cols, a "row" parameter is a rank-1
// tensor broadcast over rows.

#include <cstddef>
#include <span>
#include <vector>

#include "nextpp/autodiff.hpp"

namespace nextpp::ops {

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_row(const Var& x, const Var& row);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double c);
// Multiplies row r by factors[r].
Var scale_rows(const Var& x, std::span<const double> factors);
// out[r, c] = column[r] * row[c]; only `row` is differentiable.
Var outer(std::span<const double> column, const Var& row);

Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var softplus(const Var& x);
Var square(const Var& x);
// Gradient is zero wherever the input lies outside [lo, hi].
Var clamp(const Var& x, double lo, double hi);

Var sum(const Var& x);
Var dot(const Var& x, std::span<const double> weights);

Var gather_rows(const Var& x, std::span<const std::size_t> rows);
Var concat_rows(const Var& top, const Var& bottom);
// Row k of the output is the mean of the input rows listed in groups[k].
Var mean_rows(const Var& x, const std::vector<std::vector<std::size_t>>& groups);
// Treats a rank-1 tensor of length n as a 1 x n matrix.
Var as_row_matrix(const Var& x);
Var as_vector(const Var& x);

// Row-wise layer normalisation with learned gain and bias (population
// variance, denominator sqrt(var + eps)).
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-9);

struct AttentionOutput {
    Var out;
    // weights[h] is an L x L row-stochastic matrix (before dropout).
    std::vector<Tensor> weights;
};

// Multi-head causal scaled dot-product attention. Query i attends to keys
// j <= i. `dropout_mask`, when non-empty, holds one multiplier per
// (head, query, key) applied after softmax (already scaled by 1/(1-p)).
AttentionOutput causal_attention(const Var& q, const Var& k, const Var& v,
                                 std::size_t heads,
                                 std::span<const double> dropout_mask = {});

// Scaled softplus γ log(1 + exp(x/γ)) evaluated stably.
double scaled_softplus(double x, double gamma);

// Per-point intensity of Eq-11 form: for point p,
//   λ_p = scaled_softplus(base[rows[p], marks[p]] + alpha[marks[p]] * elapsed[p],
//                         gamma[marks[p]]).
// base is R x M, alpha and gamma are length M. Returns a vector of length P.
Var mark_intensity(const Var& base, const Var& alpha, const Var& gamma,
                   std::span<const std::size_t> rows, std::span<const double> elapsed,
                   std::span<const std::size_t> marks);

// Same, summed over all M marks: λ_p = Σ_m scaled_softplus(...).
Var total_intensity(const Var& base, const Var& alpha, const Var& gamma,
                    std::span<const std::size_t> rows, std::span<const double> elapsed);

}  // namespace nextpp::ops
