#pragma once

// Training objective (negative log-likelihood + Gaussian KL + latent
// continuity, unit weights), Adam, and per-epoch checkpointing.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nextpp/autodiff.hpp"
#include "nextpp/events.hpp"
#include "nextpp/intensity.hpp"
#include "nextpp/model.hpp"
#include "nextpp/neural_evolution.hpp"
#include "nextpp/rng.hpp"

namespace nextpp {

enum class Integrator { monte_carlo, trapezoid };

std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& s);

// How the compensator integral over each inter-event interval is estimated.
// Monte Carlo draws `points` uniform positions per interval; trapezoid uses
// `points` equal sub-intervals.
struct IntegralConfig {
    Integrator method = Integrator::monte_carlo;
    std::size_t points = 20;
};

// Negative log-likelihood over the window [t_1, t_L]:
//   -Σ_i log λ(t_i, m_i | C_{i-1}) + Σ_i ∫_{t_i}^{t_{i+1}} Σ_m λ(s, m | C_i) ds
// `c_full` is (L + 1) x D with the pre-history row C_0 first. The first
// event's elapsed time is t_1 (origin 0). `rng` is needed for Monte Carlo.
Var nll(const EventSequence& seq, const Var& c_full, const IntensityVars& iv,
        const IntegralConfig& integral, Rng* rng);

// Σ_k KL(N(γ_k, diag σ_k²) || N(0, I)).
Var kl_loss(const LatentBatch& latents);
double kl_loss(const std::vector<LatentState>& latents);

// Σ_{k < K} ||z_k^(1) - z_{k+1}^(0)||².
Var continuity_loss(const LatentBatch& latents);
double continuity_loss(const std::vector<LatentState>& latents);

struct LossBreakdown {
    double mle = 0.0;
    double kl = 0.0;
    double cont = 0.0;
    double total = 0.0;
    std::size_t events = 0;

    LossBreakdown& operator+=(const LossBreakdown& o);
    // Divides the loss terms by the event count.
    LossBreakdown per_event() const;
};

struct SequenceLoss {
    Var total;
    LossBreakdown breakdown;
    ForwardResult forward;
};

// Records forward pass and loss for one sequence (L >= 2) on `tape`.
SequenceLoss sequence_loss(Tape& tape, const Model& model, const EventSequence& seq,
                           const IntegralConfig& integral, ForwardMode mode, Rng& rng);

// Loss and parameter gradients for one sequence.
std::pair<LossBreakdown, Gradients> loss_and_gradients(const Model& model, const EventSequence& seq,
                                                       const IntegralConfig& integral,
                                                       ForwardMode mode, Rng& rng);

struct TrainConfig {
    ModelConfig model;
    double learning_rate = 1e-3;
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    std::size_t mc_samples = 20;
    std::uint64_t seed = 1;
    Integrator integrator = Integrator::monte_carlo;
    // Written after every epoch when non-empty.
    std::filesystem::path checkpoint_path;

    void validate() const;
};

class Adam {
public:
    explicit Adam(const ParamStore& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(ParamStore& params, const Gradients& grads);
    std::size_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct TrainRun {
    TrainConfig config;
    std::vector<LossBreakdown> trace;  // per-event averages, one per epoch
    Model model;
    double seconds = 0.0;
    std::size_t skipped_sequences = 0;  // L < 2
};

using EpochCallback = std::function<void(std::size_t epoch, const LossBreakdown& loss)>;

// Throws NumericError on divergence after restoring (and checkpointing) the
// parameters from the last completed epoch.
TrainRun train(const Dataset& data, const TrainConfig& config, std::optional<Model> init = {},
               const EpochCallback& on_epoch = {});

// "epoch,mle,kl,cont,total"
std::string loss_trace_csv(const std::vector<LossBreakdown>& trace);

// Mean held-out log-likelihood per event (evaluation mode, trapezoid rule
// with `points` sub-intervals). Sequences with L < 2 are skipped.
double mean_loglik_per_event(const Model& model, const Dataset& data, std::size_t points = 20);

}  // namespace nextpp
