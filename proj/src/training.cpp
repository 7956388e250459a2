#include "nextpp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nextpp/checkpoint.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {

std::string to_string(Integrator i) {
    return i == Integrator::monte_carlo ? "monte_carlo" : "trapezoid";
}

Integrator integrator_from_string(const std::string& s) {
    if (s == "monte_carlo" || s == "mc") return Integrator::monte_carlo;
    if (s == "trapezoid") return Integrator::trapezoid;
    throw ContractError("unknown integrator '" + s + "'");
}

Var nll(const EventSequence& seq, const Var& c_full, const IntensityVars& iv,
        const IntegralConfig& integral, Rng* rng) {
    const std::size_t L = seq.size();
    if (L < 2) throw ContractError("nll needs at least two events");
    if (c_full.shape()[0] != L + 1) throw DimensionError("nll: c_full must have L + 1 rows");
    if (integral.points < 1) throw ContractError("nll: at least one integration point per interval");
    if (integral.method == Integrator::monte_carlo && !rng) {
        throw ContractError("nll: Monte Carlo integration needs a random generator");
    }

    Var base = intensity_base(c_full, iv);

    std::vector<std::size_t> rows(L), marks(L);
    std::vector<double> elapsed(L);
    double prev = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        rows[i] = i;
        marks[i] = seq[i].mark;
        elapsed[i] = seq[i].time - prev;
        prev = seq[i].time;
    }

    const std::size_t J = integral.points;
    const bool trapezoid = integral.method == Integrator::trapezoid;
    const std::size_t per_interval = trapezoid ? J + 1 : J;
    std::vector<std::size_t> qrows;
    std::vector<double> qelapsed, qweights;
    qrows.reserve((L - 1) * per_interval);
    qelapsed.reserve((L - 1) * per_interval);
    qweights.reserve((L - 1) * per_interval);
    for (std::size_t i = 1; i < L; ++i) {
        // Interval (t_i, t_{i+1}] is governed by C_i, row i of c_full.
        const double dt = seq[i].time - seq[i - 1].time;
        for (std::size_t j = 0; j < per_interval; ++j) {
            qrows.push_back(i);
            if (trapezoid) {
                qelapsed.push_back(dt * static_cast<double>(j) / static_cast<double>(J));
                qweights.push_back((j == 0 || j == J) ? 0.5 * dt / static_cast<double>(J)
                                                      : dt / static_cast<double>(J));
            } else {
                qelapsed.push_back(dt * rng->uniform());
                qweights.push_back(dt / static_cast<double>(J));
            }
        }
    }

    try {
        Var event_intensity = ops::mark_intensity(base, iv.alpha, iv.gamma, rows, elapsed, marks);
        Var log_term = ops::sum(ops::log(event_intensity));
        Var total = ops::total_intensity(base, iv.alpha, iv.gamma, qrows, qelapsed);
        Var compensator = ops::dot(total, qweights);
        return ops::sub(compensator, log_term);
    } catch (const NumericError& e) {
        const Tensor& b = base.value();
        for (std::size_t i = 0; i < L; ++i) {
            for (std::size_t m = 0; m < b.cols(); ++m) {
                const double x = b.at(i, m) + iv.alpha.value()[m] * elapsed[i];
                const double lam = ops::scaled_softplus(x, iv.gamma.value()[m]);
                if (!std::isfinite(lam) || lam <= 0.0) {
                    throw NumericError("nll: non-finite intensity in interval " + std::to_string(i) +
                                       " (" + e.what() + ")");
                }
            }
        }
        throw NumericError(std::string("nll: ") + e.what());
    }
}

Var kl_loss(const LatentBatch& latents) {
    // ½ Σ (γ² + σ² − 2 log σ − 1)
    Var sigma_sq = ops::exp(ops::scale(latents.log_std, 2.0));
    Var terms = ops::sub(ops::add(ops::square(latents.mean), sigma_sq), ops::scale(latents.log_std, 2.0));
    Var s = ops::sum(terms);
    const double n = static_cast<double>(latents.mean.value().size());
    return ops::scale(ops::add_scalar(s, -n), 0.5);
}

double kl_loss(const std::vector<LatentState>& latents) {
    double s = 0.0;
    for (const auto& l : latents) {
        if (l.mean.size() != l.log_std.size()) throw DimensionError("kl_loss: mean/log_std mismatch");
        for (std::size_t j = 0; j < l.mean.size(); ++j) {
            const double ls = l.log_std[j];
            s += 0.5 * (l.mean[j] * l.mean[j] + std::exp(2.0 * ls) - 2.0 * ls - 1.0);
        }
    }
    return s;
}

Var continuity_loss(const LatentBatch& latents) {
    const std::size_t K = latents.z0.shape()[0];
    if (K < 2) return ops::scale(ops::sum(latents.z0), 0.0);
    std::vector<std::size_t> head(K - 1), tail(K - 1);
    std::iota(head.begin(), head.end(), 0);
    std::iota(tail.begin(), tail.end(), 1);
    Var diff = ops::sub(ops::gather_rows(latents.z1, head), ops::gather_rows(latents.z0, tail));
    return ops::sum(ops::square(diff));
}

double continuity_loss(const std::vector<LatentState>& latents) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < latents.size(); ++k) {
        const auto& a = latents[k].z1;
        const auto& b = latents[k + 1].z0;
        if (a.size() != b.size()) throw DimensionError("continuity_loss: latent size mismatch");
        for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    }
    return s;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
    mle += o.mle;
    kl += o.kl;
    cont += o.cont;
    total += o.total;
    events += o.events;
    return *this;
}

LossBreakdown LossBreakdown::per_event() const {
    LossBreakdown r = *this;
    if (events == 0) return r;
    const double n = static_cast<double>(events);
    r.mle /= n;
    r.kl /= n;
    r.cont /= n;
    r.total /= n;
    return r;
}

SequenceLoss sequence_loss(Tape& tape, const Model& model, const EventSequence& seq,
                           const IntegralConfig& integral, ForwardMode mode, Rng& rng) {
    SequenceLoss out;
    out.forward = model.forward(tape, seq, mode, &rng);
    IntensityVars iv = intensity_vars(tape);
    Var mle = nll(seq, out.forward.C_full, iv, integral, &rng);
    Var total = mle;
    out.breakdown.mle = mle.value().item();
    if (out.forward.latents) {
        Var kl = kl_loss(*out.forward.latents);
        Var cont = continuity_loss(*out.forward.latents);
        total = ops::add(ops::add(mle, kl), cont);
        out.breakdown.kl = kl.value().item();
        out.breakdown.cont = cont.value().item();
    }
    out.breakdown.total = total.value().item();
    out.breakdown.events = seq.size();
    out.total = total;
    return out;
}

std::pair<LossBreakdown, Gradients> loss_and_gradients(const Model& model, const EventSequence& seq,
                                                       const IntegralConfig& integral,
                                                       ForwardMode mode, Rng& rng) {
    Tape tape(&model.params());
    auto loss = sequence_loss(tape, model, seq, integral, mode, rng);
    return {loss.breakdown, tape.backward(loss.total)};
}

void TrainConfig::validate() const {
    model.validate();
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ContractError("learning rate must be finite and nonnegative");
    }
    if (mc_samples < 1) throw ContractError("mc_samples must be >= 1");
    if (batch_size < 1) throw ContractError("batch_size must be >= 1");
}

Adam::Adam(const ParamStore& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_.push_back(Tensor::zeros_like(params.get(i)));
        v_.push_back(Tensor::zeros_like(params.get(i)));
    }
}

void Adam::step(ParamStore& params, const Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params.mutable_get(i).data();
        const auto g = grads.at(i).data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            p[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    }
}

TrainRun train(const Dataset& data, const TrainConfig& config, std::optional<Model> init,
               const EpochCallback& on_epoch) {
    config.validate();
    if (config.model.mark_count != data.mark_count) {
        throw ContractError("model mark_count differs from the dataset's");
    }
    TrainRun run;
    run.config = config;

    std::vector<const EventSequence*> usable;
    for (const auto& s : data.sequences) {
        if (s.size() >= 2) {
            usable.push_back(&s);
        } else {
            ++run.skipped_sequences;
        }
    }
    if (usable.empty()) throw ContractError("no training sequence has two or more events");
    if (run.skipped_sequences > 0) {
        std::fprintf(stderr, "warning: skipping %zu sequence(s) with fewer than two events\n",
                     run.skipped_sequences);
    }

    run.model = init ? std::move(*init)
                     : Model::create(config.model, empirical_rates(data), config.seed);
    Adam adam(run.model.params(), config.learning_rate);
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const IntegralConfig integral{config.integrator, config.mc_samples};
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const ParamStore last_good = run.model.params();
        std::vector<std::size_t> order(usable.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.next_u64() % i]);
        }
        LossBreakdown epoch_loss;
        try {
            for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
                const std::size_t e = std::min(order.size(), b + config.batch_size);
                Gradients batch;
                for (std::size_t k = b; k < e; ++k) {
                    auto [loss, grads] = loss_and_gradients(run.model, *usable[order[k]], integral,
                                                            ForwardMode::training, rng);
                    epoch_loss += loss;
                    batch.accumulate(grads);
                }
                batch.scale(1.0 / static_cast<double>(e - b));
                adam.step(run.model.params(), batch);
                for (std::size_t i = 0; i < run.model.params().size(); ++i) {
                    if (!run.model.params().get(i).all_finite()) {
                        throw NumericError("parameter '" + run.model.params().name(i) +
                                           "' became non-finite");
                    }
                }
            }
        } catch (const NumericError& err) {
            run.model.params() = last_good;
            if (!config.checkpoint_path.empty()) save_checkpoint(run.model, config.checkpoint_path);
            throw NumericError("training diverged in epoch " + std::to_string(epoch + 1) + ": " +
                               err.what() + "; parameters restored to the last completed epoch");
        }
        run.trace.push_back(epoch_loss.per_event());
        if (!config.checkpoint_path.empty()) save_checkpoint(run.model, config.checkpoint_path);
        if (on_epoch) on_epoch(epoch + 1, run.trace.back());
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

std::string loss_trace_csv(const std::vector<LossBreakdown>& trace) {
    std::string s = "epoch,mle,kl,cont,total\n";
    char buf[160];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& l = trace[i];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i + 1, l.mle, l.kl, l.cont,
                      l.total);
        s += buf;
    }
    return s;
}

double mean_loglik_per_event(const Model& model, const Dataset& data, std::size_t points) {
    double ll = 0.0;
    std::size_t events = 0;
    const IntegralConfig integral{Integrator::trapezoid, points};
    for (const auto& seq : data.sequences) {
        if (seq.size() < 2) continue;
        Tape tape(&model.params());
        auto fwd = model.forward(tape, seq, ForwardMode::evaluation, nullptr);
        Var loss = nll(seq, fwd.C_full, intensity_vars(tape), integral, nullptr);
        ll -= loss.value().item();
        events += seq.size();
    }
    if (events == 0) throw ContractError("no sequence with two or more events to evaluate");
    return ll / static_cast<double>(events);
}

}  // namespace nextpp
