#pragma once

// Evaluation metrics, Kolmogorov-Smirnov tests and time-rescaling
// goodness of fit.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nextpp/events.hpp"
#include "nextpp/process.hpp"
#include "nextpp/sampling.hpp"

namespace nextpp {

double rmse(std::span<const double> predicted, std::span<const double> truth);
// Misclassified fraction.
double error_rate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// One-sample KS test; the p-value uses Stephens' finite-n scaling of the
// Kolmogorov limit.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
KsResult ks_test_exponential(std::vector<double> samples, double rate);

struct GofResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    bool informative = false;  // false with fewer than two gaps
};

// Λ(t_i) − Λ(t_{i−1}) for every event (the first gap runs from 0).
std::vector<double> rescaled_gaps(const PointProcess& process, const Dataset& data);
GofResult time_rescaling_gof(const PointProcess& process, const Dataset& data);
GofResult gof_from_gaps(std::vector<double> gaps);

struct MetricReport {
    std::string model;
    std::size_t sequences = 0;
    std::size_t events = 0;
    std::size_t predictions = 0;
    double loglik_per_event = 0.0;  // nats/event over [t_1, t_L]
    double rmse = 0.0;
    double error_rate = 0.0;
    double ks_statistic = 0.0;
    double ks_p_value = 1.0;
};

struct PredictionRecord {
    std::size_t seq_id = 0;
    std::size_t event_index = 0;  // 0-based index of the predicted event
    double true_t = 0.0, pred_t = 0.0;
    std::size_t true_m = 0, pred_m = 0;
};

struct Evaluation {
    MetricReport report;
    std::vector<PredictionRecord> predictions;
};

// Predicts every event after the first from its true prefix, and scores
// log-likelihood and time-rescaling fit on the full sequences.
Evaluation evaluate_model(const PointProcess& process, const Dataset& data, const ThinningConfig& cfg);

std::string report_json(const MetricReport& r);
std::string report_text(const MetricReport& r);
std::string predictions_csv(std::span<const PredictionRecord> rows);

// 10 x the mean inter-event interval of the data.
double default_horizon(const Dataset& data);

}  // namespace nextpp
