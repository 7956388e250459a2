#pragma once

// Event generation by per-mark thinning and deterministic next-event
// prediction from the conditional density.

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "nextpp/events.hpp"
#include "nextpp/intensity.hpp"
#include "nextpp/model.hpp"
#include "nextpp/process.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

struct ThinningConfig {
    double horizon = 10.0;                // ΔT_max, relative to the last event
    std::optional<double> bound_margin;   // ε; default 1e-3 x the grid maximum
    std::size_t bound_grid_points = 64;
    std::size_t max_rejections = 100000;  // per mark and draw

    void validate() const;
};

inline constexpr double kBoundSafetyFactor = 1.05;

// λ*_m = 1.05 * max over the window grid of λ(t, m) + ε. Endpoints are part
// of the grid, so monotone intensities are bounded exactly.
double intensity_upper_bound(const ConditionalIntensity& state, std::size_t mark,
                             const ThinningConfig& cfg);

struct ThinningDraw {
    std::optional<Event> event;  // empty: nothing within the horizon
    std::size_t rejections = 0;
};

// Per-mark thinning; returns the earliest accepted mark time (ties go to
// the lowest mark).
ThinningDraw thinning_next(const ConditionalIntensity& state, const ThinningConfig& cfg, Rng& rng);

struct SampledSequence {
    std::vector<Event> events;
    std::vector<std::size_t> rejections;
    bool stopped_early = false;
};

// Appends up to `count` events after `prefix`, re-conditioning the process
// on the grown history after each one.
SampledSequence simulate(const PointProcess& process, const EventSequence& prefix, std::size_t count,
                         const ThinningConfig& cfg, Rng& rng);

struct NextEventPrediction {
    double time = 0.0;
    std::size_t mark = 0;
    std::vector<double> mark_mass;  // ∫ p(t, m) dt over the horizon
};

// Conditional-mean time and maximum-mass mark of the next event, from the
// density λ(t, m) exp(-∫ Σ λ) on a grid of bound_grid_points over the
// horizon (cumulative trapezoid).
NextEventPrediction predict_next(const ConditionalIntensity& state, const ThinningConfig& cfg);

// Closed-form λ(t, m) = scaled_softplus(α_m (t - t_i) + offset_m, γ_m).
class NeuralIntensity : public ConditionalIntensity {
public:
    NeuralIntensity(std::vector<double> offsets, std::vector<double> alpha, std::vector<double> gamma,
                    double last_time);

    std::size_t mark_count() const override { return offsets_.size(); }
    double last_time() const override { return last_time_; }
    double intensity(double t, std::size_t mark) const override;

private:
    std::vector<double> offsets_, alpha_, gamma_;
    double last_time_;
};

// Adapter exposing a trained model as a PointProcess. States come from one
// evaluation-mode forward pass; causality makes row k valid for the prefix
// of k events.
class NeuralProcess : public PointProcess {
public:
    explicit NeuralProcess(const Model& model, std::size_t integration_points = 20);

    std::size_t mark_count() const override { return model_.config().mark_count; }
    std::string name() const override { return "nextpp"; }
    std::vector<std::unique_ptr<ConditionalIntensity>> states(const EventSequence& seq) const override;
    double log_likelihood(const EventSequence& seq) const override;

    const Model& model() const { return model_; }

private:
    const Model& model_;
    std::size_t points_;
};

}  // namespace nextpp
