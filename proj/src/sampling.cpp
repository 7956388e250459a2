#include "nextpp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nextpp/errors.hpp"
#include "nextpp/training.hpp"

namespace nextpp {

void ThinningConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ContractError("horizon must be positive");
    if (bound_margin && !(*bound_margin >= 0.0)) throw ContractError("bound margin must be >= 0");
    if (bound_grid_points < 2) throw ContractError("bound_grid_points must be >= 2");
    if (max_rejections < 1) throw ContractError("max_rejections must be >= 1");
}

double intensity_upper_bound(const ConditionalIntensity& state, std::size_t mark,
                             const ThinningConfig& cfg) {
    cfg.validate();
    const double t0 = state.last_time();
    const std::size_t n = cfg.bound_grid_points;
    double mx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + cfg.horizon * static_cast<double>(k) / static_cast<double>(n - 1);
        const double lam = state.intensity(t, mark);
        if (!std::isfinite(lam)) throw NumericError("non-finite intensity while bounding mark " +
                                                    std::to_string(mark));
        mx = std::max(mx, lam);
    }
    const double margin = cfg.bound_margin ? *cfg.bound_margin : 1e-3 * mx;
    return kBoundSafetyFactor * mx + margin;
}

ThinningDraw thinning_next(const ConditionalIntensity& state, const ThinningConfig& cfg, Rng& rng) {
    cfg.validate();
    const double t0 = state.last_time();
    ThinningDraw draw;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_mark = 0;
    for (std::size_t m = 0; m < state.mark_count(); ++m) {
        const double bound = intensity_upper_bound(state, m, cfg);
        if (!(bound > 0.0)) continue;
        double elapsed = 0.0;
        std::size_t rejected = 0;
        while (true) {
            elapsed += rng.exponential(bound);
            if (elapsed >= cfg.horizon) break;
            const double u = rng.uniform();
            const double lam = state.intensity(t0 + elapsed, m);
            if (lam > bound * (1.0 + 1e-12)) {
                throw SamplingError("intensity " + std::to_string(lam) + " exceeds its bound " +
                                    std::to_string(bound) + " for mark " + std::to_string(m));
            }
            if (u * bound <= lam) {
                if (t0 + elapsed < best) {
                    best = t0 + elapsed;
                    best_mark = m;
                }
                break;
            }
            if (++rejected > cfg.max_rejections) {
                throw SamplingError("mark " + std::to_string(m) + ": more than " +
                                    std::to_string(cfg.max_rejections) +
                                    " rejections (bound " + std::to_string(bound) + ", elapsed " +
                                    std::to_string(elapsed) + ")");
            }
        }
        draw.rejections += rejected;
    }
    if (std::isfinite(best)) draw.event = Event{best, best_mark};
    return draw;
}

SampledSequence simulate(const PointProcess& process, const EventSequence& prefix, std::size_t count,
                         const ThinningConfig& cfg, Rng& rng) {
    if (count < 1) throw ContractError("simulate: count must be >= 1");
    SampledSequence out;
    EventSequence history = prefix;
    for (std::size_t k = 0; k < count; ++k) {
        auto state = process.state_after(history);
        auto draw = thinning_next(*state, cfg, rng);
        if (!draw.event) {
            out.stopped_early = true;
            break;
        }
        if (!(draw.event->time > history.last_time()) && !history.empty()) {
            // Elapsed gaps are positive but may vanish in floating point.
            draw.event->time = std::nextafter(history.last_time(), INFINITY);
        }
        history.push_back(*draw.event);
        out.events.push_back(*draw.event);
        out.rejections.push_back(draw.rejections);
    }
    return out;
}

NextEventPrediction predict_next(const ConditionalIntensity& state, const ThinningConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.bound_grid_points;
    const std::size_t M = state.mark_count();
    const double t0 = state.last_time();
    const double h = cfg.horizon / static_cast<double>(n - 1);

    std::vector<double> elapsed(n), total(n), survival(n), density(n);
    std::vector<std::vector<double>> lam(n, std::vector<double>(M));
    for (std::size_t k = 0; k < n; ++k) {
        elapsed[k] = h * static_cast<double>(k);
        double s = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            lam[k][m] = state.intensity(t0 + elapsed[k], m);
            s += lam[k][m];
        }
        if (!std::isfinite(s)) throw NumericError("predict_next: non-finite intensity");
        total[k] = s;
    }
    double cumulative = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) cumulative += 0.5 * h * (total[k - 1] + total[k]);
        survival[k] = std::exp(-cumulative);
        density[k] = total[k] * survival[k];
    }

    NextEventPrediction pred;
    pred.mark_mass.assign(M, 0.0);
    double mass = 0.0, first_moment = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = (k == 0 || k == n - 1) ? 0.5 * h : h;
        mass += w * density[k];
        first_moment += w * density[k] * elapsed[k];
        for (std::size_t m = 0; m < M; ++m) pred.mark_mass[m] += w * lam[k][m] * survival[k];
    }
    if (!(mass > 0.0)) {
        throw PredictionError("no event probability mass within the horizon; increase it");
    }
    pred.time = t0 + first_moment / mass;
    pred.mark = static_cast<std::size_t>(
        std::max_element(pred.mark_mass.begin(), pred.mark_mass.end()) - pred.mark_mass.begin());
    return pred;
}

NeuralIntensity::NeuralIntensity(std::vector<double> offsets, std::vector<double> alpha,
                                 std::vector<double> gamma, double last_time)
    : offsets_(std::move(offsets)), alpha_(std::move(alpha)), gamma_(std::move(gamma)),
      last_time_(last_time) {}

double NeuralIntensity::intensity(double t, std::size_t mark) const {
    const double e = t - last_time_;
    if (e < 0.0) throw ContractError("intensity queried before the conditioning event");
    return scaled_softplus(alpha_[mark] * e + offsets_[mark], gamma_[mark]);
}

NeuralProcess::NeuralProcess(const Model& model, std::size_t integration_points)
    : model_(model), points_(integration_points) {}

std::vector<std::unique_ptr<ConditionalIntensity>> NeuralProcess::states(const EventSequence& seq) const {
    const IntensityParams ip = IntensityParams::from_store(model_.params());
    std::vector<double> gamma(ip.mark_count());
    for (std::size_t m = 0; m < gamma.size(); ++m) gamma[m] = ip.gamma(m);

    std::vector<std::unique_ptr<ConditionalIntensity>> out;
    out.reserve(seq.size() + 1);
    auto push = [&](std::span<const double> row, double last) {
        auto s = std::make_unique<NeuralIntensity>(intensity_offsets(row, ip), ip.alpha, gamma, last);
        s->quadrature_points = points_;
        out.push_back(std::move(s));
    };
    if (seq.empty()) {
        push(model_.params().get("intensity.c0").row(0), 0.0);
        return out;
    }
    Tape tape(&model_.params());
    auto fwd = model_.forward(tape, seq, ForwardMode::evaluation, nullptr);
    const Tensor& C = fwd.C_full.value();
    for (std::size_t k = 0; k <= seq.size(); ++k) push(C.row(k), k == 0 ? 0.0 : seq[k - 1].time);
    return out;
}

double NeuralProcess::log_likelihood(const EventSequence& seq) const {
    if (seq.size() < 2) return log_likelihood_from_states(*this, seq);
    Tape tape(&model_.params());
    auto fwd = model_.forward(tape, seq, ForwardMode::evaluation, nullptr);
    Var loss = nll(seq, fwd.C_full, intensity_vars(tape), {Integrator::trapezoid, points_}, nullptr);
    return -loss.value().item();
}

}  // namespace nextpp
