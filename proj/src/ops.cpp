#include "nextpp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "nextpp/errors.hpp"

namespace nextpp::ops {
namespace {

Tape& same_tape(const Var& a, const Var& b) {
    if (!a.valid() || a.tape() != b.tape()) throw ContractError("operands live on different tapes");
    return *a.tape();
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

void require_matrix(const Var& x, const char* op) {
    if (x.value().rank() != 2) {
        throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(x.shape()));
    }
}

// out = a @ b  (n x k) @ (k x m)
void gemm(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
          std::size_t m) {
    std::fill(out, out + n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* o = out + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* br = b + p * m;
            for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
        }
    }
}

// Elementwise unary op with derivative expressed through input x and output y.
template <class F, class DF>
Var unary(const Var& x, const char* name, F f, DF df) {
    Tape& t = *x.tape();
    Tensor y = Tensor::zeros_like(x.value());
    const auto xs = x.value().data();
    auto ys = y.data();
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
    const std::size_t xi = x.id();
    return t.record(std::move(y), name, {xi}, [xi, df](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        const auto xv = tp.value(xi).data();
        const auto yv = tp.value(self).data();
        auto gx = tp.grad_buffer(xi).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
    });
}

double stable_softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

double sigmoid(double u) {
    if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    Tape& t = same_tape(a, b);
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    if (b.shape()[0] != k) {
        throw DimensionError("matmul: inner dimensions " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    }
    Tensor out(Shape{n, m});
    gemm(a.value().ptr(), b.value().ptr(), out.ptr(), n, k, m);
    const std::size_t ai = a.id(), bi = b.id();
    return t.record(std::move(out), "matmul", {ai, bi}, [ai, bi, n, k, m](Tape& tp, std::size_t self) {
        const double* g = tp.grad(self).ptr();
        if (tp.requires_grad(ai)) {
            // dA = G @ B^T
            const double* bv = tp.value(bi).ptr();
            double* ga = tp.grad_buffer(ai).ptr();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    const double gv = g[i * m + j];
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gv * bv[p * m + j];
                }
        }
        if (tp.requires_grad(bi)) {
            // dB = A^T @ G
            const double* av = tp.value(ai).ptr();
            double* gb = tp.grad_buffer(bi).ptr();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double a_ip = av[i * k + p];
                    if (a_ip == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += a_ip * g[i * m + j];
                }
        }
    });
}

namespace {

template <class Combine, class Da, class Db>
Var binary(const Var& a, const Var& b, const char* name, Combine f, Da da, Db db) {
    Tape& t = same_tape(a, b);
    require_same_shape(a, b, name);
    Tensor out = Tensor::zeros_like(a.value());
    const auto av = a.value().data(), bv = b.value().data();
    auto ov = out.data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = f(av[i], bv[i]);
    const std::size_t ai = a.id(), bi = b.id();
    return t.record(std::move(out), name, {ai, bi}, [ai, bi, da, db](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        const auto av = tp.value(ai).data(), bv = tp.value(bi).data();
        if (tp.requires_grad(ai)) {
            auto ga = tp.grad_buffer(ai).data();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(av[i], bv[i]);
        }
        if (tp.requires_grad(bi)) {
            auto gb = tp.grad_buffer(bi).data();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(av[i], bv[i]);
        }
    });
}

}  // namespace

Var add(const Var& a, const Var& b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var add_row(const Var& x, const Var& row) {
    Tape& t = same_tape(x, row);
    require_matrix(x, "add_row");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    if (row.value().size() != c) {
        throw DimensionError("add_row: row of " + shape_string(row.shape()) + " onto " +
                             shape_string(x.shape()));
    }
    Tensor out = x.value();
    const auto rv = row.value().data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) += rv[j];
    const std::size_t xi = x.id(), ri = row.id();
    return t.record(std::move(out), "add_row", {xi, ri}, [xi, ri, r, c](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(xi)) {
            auto gx = tp.grad_buffer(xi).data();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
        }
        if (tp.requires_grad(ri)) {
            auto gr = tp.grad_buffer(ri).data();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gr[j] += g[i * c + j];
        }
    });
}

Var scale(const Var& x, double factor) {
    return unary(
        x, "scale", [factor](double v) { return v * factor; },
        [factor](double, double) { return factor; });
}

Var add_scalar(const Var& x, double c) {
    return unary(
        x, "add_scalar", [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var scale_rows(const Var& x, std::span<const double> factors) {
    Tape& t = *x.tape();
    require_matrix(x, "scale_rows");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    if (factors.size() != r) throw DimensionError("scale_rows: factor count != rows");
    Tensor out = x.value();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) *= factors[i];
    std::vector<double> f(factors.begin(), factors.end());
    const std::size_t xi = x.id();
    return t.record(std::move(out), "scale_rows", {xi},
                    [xi, r, c, f = std::move(f)](Tape& tp, std::size_t self) {
                        const Tensor& g = tp.grad(self);
                        auto gx = tp.grad_buffer(xi).data();
                        for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * f[i];
                    });
}

Var outer(std::span<const double> column, const Var& row) {
    Tape& t = *row.tape();
    const std::size_t r = column.size(), c = row.value().size();
    Tensor out(Shape{r, c});
    const auto rv = row.value().data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) = column[i] * rv[j];
    std::vector<double> col(column.begin(), column.end());
    const std::size_t ri = row.id();
    return t.record(std::move(out), "outer", {ri},
                    [ri, r, c, col = std::move(col)](Tape& tp, std::size_t self) {
                        const Tensor& g = tp.grad(self);
                        auto gr = tp.grad_buffer(ri).data();
                        for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j) gr[j] += col[i] * g[i * c + j];
                    });
}

Var tanh(const Var& x) {
    return unary(
        x, "tanh", [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
}

Var exp(const Var& x) {
    return unary(
        x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
    return unary(
        x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var softplus(const Var& x) {
    return unary(
        x, "softplus", [](double v) { return stable_softplus(v); },
        [](double v, double) { return sigmoid(v); });
}

Var square(const Var& x) {
    return unary(
        x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var clamp(const Var& x, double lo, double hi) {
    return unary(
        x, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var sum(const Var& x) {
    Tape& t = *x.tape();
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    const std::size_t xi = x.id();
    return t.record(Tensor::scalar(s), "sum", {xi}, [xi](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (double& v : tp.grad_buffer(xi).data()) v += g;
    });
}

Var dot(const Var& x, std::span<const double> weights) {
    Tape& t = *x.tape();
    if (weights.size() != x.value().size()) throw DimensionError("dot: weight count mismatch");
    double s = 0.0;
    const auto xv = x.value().data();
    for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * weights[i];
    std::vector<double> w(weights.begin(), weights.end());
    const std::size_t xi = x.id();
    return t.record(Tensor::scalar(s), "dot", {xi}, [xi, w = std::move(w)](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        auto gx = tp.grad_buffer(xi).data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
    });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
    Tape& t = *x.tape();
    require_matrix(x, "gather_rows");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    Tensor out(Shape{rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= r) throw ContractError("gather_rows: row index out of range");
        std::copy_n(x.value().row(rows[i]).begin(), c, out.row(i).begin());
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    const std::size_t xi = x.id();
    return t.record(std::move(out), "gather_rows", {xi},
                    [xi, c, idx = std::move(idx)](Tape& tp, std::size_t self) {
                        const Tensor& g = tp.grad(self);
                        Tensor& gx = tp.grad_buffer(xi);
                        for (std::size_t i = 0; i < idx.size(); ++i)
                            for (std::size_t j = 0; j < c; ++j) gx.at(idx[i], j) += g.at(i, j);
                    });
}

Var concat_rows(const Var& top, const Var& bottom) {
    Tape& t = same_tape(top, bottom);
    require_matrix(top, "concat_rows");
    require_matrix(bottom, "concat_rows");
    const std::size_t c = top.shape()[1];
    if (bottom.shape()[1] != c) throw DimensionError("concat_rows: column mismatch");
    const std::size_t r1 = top.shape()[0], r2 = bottom.shape()[0];
    std::vector<double> data(top.value().data().begin(), top.value().data().end());
    data.insert(data.end(), bottom.value().data().begin(), bottom.value().data().end());
    Tensor out(Shape{r1 + r2, c}, std::move(data));
    const std::size_t ti = top.id(), bi = bottom.id();
    return t.record(std::move(out), "concat_rows", {ti, bi}, [ti, bi, r1, c](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        if (tp.requires_grad(ti)) {
            auto gt = tp.grad_buffer(ti).data();
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += g[i];
        }
        if (tp.requires_grad(bi)) {
            auto gb = tp.grad_buffer(bi).data();
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[r1 * c + i];
        }
    });
}

Var mean_rows(const Var& x, const std::vector<std::vector<std::size_t>>& groups) {
    Tape& t = *x.tape();
    require_matrix(x, "mean_rows");
    const std::size_t c = x.shape()[1];
    Tensor out(Shape{groups.size(), c});
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (groups[k].empty()) throw ContractError("mean_rows: empty group");
        const double inv = 1.0 / static_cast<double>(groups[k].size());
        for (auto r : groups[k]) {
            const auto src = x.value().row(r);
            for (std::size_t j = 0; j < c; ++j) out.at(k, j) += src[j] * inv;
        }
    }
    const std::size_t xi = x.id();
    return t.record(std::move(out), "mean_rows", {xi}, [xi, c, groups](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad_buffer(xi);
        for (std::size_t k = 0; k < groups.size(); ++k) {
            const double inv = 1.0 / static_cast<double>(groups[k].size());
            for (auto r : groups[k])
                for (std::size_t j = 0; j < c; ++j) gx.at(r, j) += g.at(k, j) * inv;
        }
    });
}

namespace {

Var reshape(const Var& x, Shape shape, const char* name) {
    Tape& t = *x.tape();
    Tensor out(std::move(shape), std::vector<double>(x.value().data().begin(), x.value().data().end()));
    const std::size_t xi = x.id();
    return t.record(std::move(out), name, {xi}, [xi](Tape& tp, std::size_t self) {
        const auto g = tp.grad(self).data();
        auto gx = tp.grad_buffer(xi).data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
}

}  // namespace

Var as_row_matrix(const Var& x) { return reshape(x, Shape{1, x.value().size()}, "as_row_matrix"); }

Var as_vector(const Var& x) { return reshape(x, Shape{x.value().size()}, "as_vector"); }

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    Tape& t = same_tape(x, gain);
    require_matrix(x, "layer_norm");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    if (gain.value().size() != c || bias.value().size() != c) {
        throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(c));
    }
    Tensor normalized(Shape{r, c});
    std::vector<double> inv_std(r);
    Tensor out(Shape{r, c});
    const auto gv = gain.value().data(), bv = bias.value().data();
    for (std::size_t i = 0; i < r; ++i) {
        const auto row = x.value().row(i);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(c);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            normalized.at(i, j) = (row[j] - mean) * inv_std[i];
            out.at(i, j) = normalized.at(i, j) * gv[j] + bv[j];
        }
    }
    const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
    return t.record(
        std::move(out), "layer_norm", {xi, gi, bi},
        [xi, gi, bi, r, c, normalized = std::move(normalized),
         inv_std = std::move(inv_std)](Tape& tp, std::size_t self) {
            const Tensor& g = tp.grad(self);
            if (tp.requires_grad(gi) || tp.requires_grad(bi)) {
                auto gg = tp.grad_buffer(gi).data();
                auto gb = tp.grad_buffer(bi).data();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                        gg[j] += g.at(i, j) * normalized.at(i, j);
                        gb[j] += g.at(i, j);
                    }
            }
            if (tp.requires_grad(xi)) {
                const auto gv = tp.value(gi).data();
                Tensor& gx = tp.grad_buffer(xi);
                const double inv_c = 1.0 / static_cast<double>(c);
                for (std::size_t i = 0; i < r; ++i) {
                    double mean_dn = 0.0, mean_dn_n = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dn = g.at(i, j) * gv[j];
                        mean_dn += dn;
                        mean_dn_n += dn * normalized.at(i, j);
                    }
                    mean_dn *= inv_c;
                    mean_dn_n *= inv_c;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dn = g.at(i, j) * gv[j];
                        gx.at(i, j) += inv_std[i] * (dn - mean_dn - normalized.at(i, j) * mean_dn_n);
                    }
                }
            }
        });
}

AttentionOutput causal_attention(const Var& q, const Var& k, const Var& v, std::size_t heads,
                                 std::span<const double> dropout_mask) {
    Tape& t = same_tape(q, k);
    require_matrix(q, "causal_attention");
    require_same_shape(q, k, "causal_attention");
    require_same_shape(q, v, "causal_attention");
    const std::size_t L = q.shape()[0], D = q.shape()[1];
    if (heads == 0 || D % heads != 0) {
        throw DimensionError("causal_attention: model dim " + std::to_string(D) +
                             " not divisible by " + std::to_string(heads) + " heads");
    }
    const bool use_mask = !dropout_mask.empty();
    if (use_mask && dropout_mask.size() != heads * L * L) {
        throw DimensionError("causal_attention: dropout mask size mismatch");
    }
    const std::size_t dh = D / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    const double* qv = q.value().ptr();
    const double* kv = k.value().ptr();
    const double* vv = v.value().ptr();
    std::vector<Tensor> weights(heads, Tensor(Shape{L, L}));
    Tensor out(Shape{L, D});
    double* ov = out.ptr();
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * dh;
        double* P = weights[h].ptr();
        for (std::size_t i = 0; i < L; ++i) {
            const double* qi_ = qv + i * D + off;
            double* Pi = P + i * L;
            double mx = -INFINITY;
            for (std::size_t j = 0; j <= i; ++j) {
                const double* kj = kv + j * D + off;
                double s = 0.0;
                for (std::size_t a = 0; a < dh; ++a) s += qi_[a] * kj[a];
                s *= scale;
                Pi[j] = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                Pi[j] = std::exp(Pi[j] - mx);
                z += Pi[j];
            }
            double* oi = ov + i * D + off;
            const double* mi = use_mask ? dropout_mask.data() + (h * L + i) * L : nullptr;
            for (std::size_t j = 0; j <= i; ++j) {
                Pi[j] /= z;
                const double w = mi ? Pi[j] * mi[j] : Pi[j];
                if (w == 0.0) continue;
                const double* vj = vv + j * D + off;
                for (std::size_t a = 0; a < dh; ++a) oi[a] += w * vj[a];
            }
        }
    }
    auto probs = std::make_shared<const std::vector<Tensor>>(weights);
    std::vector<double> mask(dropout_mask.begin(), dropout_mask.end());
    const std::size_t qi = q.id(), ki = k.id(), vi = v.id();
    Var o = t.record(
        std::move(out), "causal_attention", {qi, ki, vi},
        [qi, ki, vi, L, D, dh, heads, scale, probs, mask = std::move(mask)](Tape& tp, std::size_t self) {
            const double* g = tp.grad(self).ptr();
            const double* qv = tp.value(qi).ptr();
            const double* kv = tp.value(ki).ptr();
            const double* vv = tp.value(vi).ptr();
            double* gq = tp.grad_buffer(qi).ptr();
            double* gk = tp.grad_buffer(ki).ptr();
            double* gv = tp.grad_buffer(vi).ptr();
            std::vector<double> dP(L);
            for (std::size_t h = 0; h < heads; ++h) {
                const std::size_t off = h * dh;
                const double* P = (*probs)[h].ptr();
                for (std::size_t i = 0; i < L; ++i) {
                    const double* Pi = P + i * L;
                    const double* gi = g + i * D + off;
                    const double* mi = mask.empty() ? nullptr : mask.data() + (h * L + i) * L;
                    double dot_pd = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) {
                        const double m = mi ? mi[j] : 1.0;
                        const double* vj = vv + j * D + off;
                        double* gvj = gv + j * D + off;
                        const double pm = Pi[j] * m;
                        double d = 0.0;
                        for (std::size_t a = 0; a < dh; ++a) {
                            d += gi[a] * vj[a];
                            gvj[a] += pm * gi[a];
                        }
                        dP[j] = d * m;
                        dot_pd += Pi[j] * dP[j];
                    }
                    const double* qi_ = qv + i * D + off;
                    double* gqi = gq + i * D + off;
                    for (std::size_t j = 0; j <= i; ++j) {
                        const double ds = Pi[j] * (dP[j] - dot_pd) * scale;
                        if (ds == 0.0) continue;
                        const double* kj = kv + j * D + off;
                        double* gkj = gk + j * D + off;
                        for (std::size_t a = 0; a < dh; ++a) {
                            gqi[a] += ds * kj[a];
                            gkj[a] += ds * qi_[a];
                        }
                    }
                }
            }
        });
    return {o, std::move(weights)};
}

double scaled_softplus(double x, double gamma) {
    if (!(gamma > 0.0)) throw DomainError("scaled_softplus needs gamma > 0");
    return gamma * stable_softplus(x / gamma);
}

namespace {

// d/dx and d/dγ of γ softplus(x/γ).
struct SoftplusGrad {
    double value, dx, dgamma;
};

SoftplusGrad scaled_softplus_grad(double x, double gamma) {
    const double u = x / gamma;
    const double sp = stable_softplus(u);
    const double s = sigmoid(u);
    return {gamma * sp, s, sp - u * s};
}

void check_points(const Var& base, const Var& alpha, const Var& gamma,
                  std::span<const std::size_t> rows, std::span<const double> elapsed) {
    require_matrix(base, "intensity");
    const std::size_t M = base.shape()[1];
    if (alpha.value().size() != M || gamma.value().size() != M) {
        throw DimensionError("intensity: alpha/gamma length must equal mark count");
    }
    if (rows.size() != elapsed.size()) throw DimensionError("intensity: rows/elapsed mismatch");
    for (auto r : rows) {
        if (r >= base.shape()[0]) throw ContractError("intensity: row index out of range");
    }
    for (double g : gamma.value().data()) {
        if (!(g > 0.0)) throw DomainError("intensity: gamma must be positive");
    }
}

}  // namespace

Var mark_intensity(const Var& base, const Var& alpha, const Var& gamma,
                   std::span<const std::size_t> rows, std::span<const double> elapsed,
                   std::span<const std::size_t> marks) {
    Tape& t = same_tape(base, alpha);
    check_points(base, alpha, gamma, rows, elapsed);
    const std::size_t M = base.shape()[1];
    if (marks.size() != rows.size()) throw DimensionError("intensity: marks/rows mismatch");
    for (auto m : marks) {
        if (m >= M) throw ContractError("intensity: mark out of range");
    }
    const std::size_t P = rows.size();
    Tensor out(Shape{P});
    std::vector<double> dx(P), dg(P);
    for (std::size_t p = 0; p < P; ++p) {
        const std::size_t m = marks[p];
        const double x = base.value().at(rows[p], m) + alpha.value()[m] * elapsed[p];
        const auto sg = scaled_softplus_grad(x, gamma.value()[m]);
        out[p] = sg.value;
        dx[p] = sg.dx;
        dg[p] = sg.dgamma;
    }
    std::vector<std::size_t> r(rows.begin(), rows.end()), mk(marks.begin(), marks.end());
    std::vector<double> e(elapsed.begin(), elapsed.end());
    const std::size_t bi = base.id(), ai = alpha.id(), gi = gamma.id();
    return t.record(std::move(out), "mark_intensity", {bi, ai, gi},
                    [=, r = std::move(r), mk = std::move(mk), e = std::move(e), dx = std::move(dx),
                     dg = std::move(dg)](Tape& tp, std::size_t self) {
                        const auto g = tp.grad(self).data();
                        Tensor& gb = tp.grad_buffer(bi);
                        auto ga = tp.grad_buffer(ai).data();
                        auto gg = tp.grad_buffer(gi).data();
                        for (std::size_t p = 0; p < g.size(); ++p) {
                            const double d = g[p] * dx[p];
                            gb.at(r[p], mk[p]) += d;
                            ga[mk[p]] += d * e[p];
                            gg[mk[p]] += g[p] * dg[p];
                        }
                    });
}

Var total_intensity(const Var& base, const Var& alpha, const Var& gamma,
                    std::span<const std::size_t> rows, std::span<const double> elapsed) {
    Tape& t = same_tape(base, alpha);
    check_points(base, alpha, gamma, rows, elapsed);
    const std::size_t M = base.shape()[1];
    const std::size_t P = rows.size();
    Tensor out(Shape{P});
    std::vector<double> dx(P * M), dg(P * M);
    const auto av = alpha.value().data();
    const auto gv = gamma.value().data();
    for (std::size_t p = 0; p < P; ++p) {
        double s = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const double x = base.value().at(rows[p], m) + av[m] * elapsed[p];
            const auto sg = scaled_softplus_grad(x, gv[m]);
            s += sg.value;
            dx[p * M + m] = sg.dx;
            dg[p * M + m] = sg.dgamma;
        }
        out[p] = s;
    }
    std::vector<std::size_t> r(rows.begin(), rows.end());
    std::vector<double> e(elapsed.begin(), elapsed.end());
    const std::size_t bi = base.id(), ai = alpha.id(), gi = gamma.id();
    return t.record(std::move(out), "total_intensity", {bi, ai, gi},
                    [=, r = std::move(r), e = std::move(e), dx = std::move(dx),
                     dg = std::move(dg)](Tape& tp, std::size_t self) {
                        const auto g = tp.grad(self).data();
                        Tensor& gb = tp.grad_buffer(bi);
                        auto ga = tp.grad_buffer(ai).data();
                        auto gg = tp.grad_buffer(gi).data();
                        for (std::size_t p = 0; p < g.size(); ++p) {
                            if (g[p] == 0.0) continue;
                            for (std::size_t m = 0; m < M; ++m) {
                                const double d = g[p] * dx[p * M + m];
                                gb.at(r[p], m) += d;
                                ga[m] += d * e[p];
                                gg[m] += g[p] * dg[p * M + m];
                            }
                        }
                    });
}

}  // namespace nextpp::ops
