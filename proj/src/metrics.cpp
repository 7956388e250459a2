#include "nextpp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "nextpp/errors.hpp"

namespace nextpp {

double rmse(std::span<const double> predicted, std::span<const double> truth) {
    if (predicted.size() != truth.size()) throw ContractError("rmse: length mismatch");
    if (predicted.empty()) throw ContractError("rmse: no predictions");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = predicted[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(truth.size()));
}

double error_rate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size()) throw ContractError("error_rate: length mismatch");
    if (predicted.empty()) throw ContractError("error_rate: no predictions");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    constexpr double pi = std::numbers::pi;
    if (x < 1.18) {
        // Theta-function form, accurate where the alternating series is slow.
        const double c = -pi * pi / (8.0 * x * x);
        double s = 0.0;
        for (int k = 1; k <= 9; k += 2) s += std::exp(c * k * k);
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / x * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw ContractError("ks_test: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_survival(d * (sn + 0.12 + 0.11 / sn)), samples.size()};
}

KsResult ks_test_exponential(std::vector<double> samples, double rate) {
    if (!(rate > 0.0)) throw DomainError("ks_test_exponential: rate must be positive");
    return ks_test(std::move(samples), [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
}

std::vector<double> rescaled_gaps(const PointProcess& process, const Dataset& data) {
    std::vector<double> gaps;
    for (const auto& seq : data.sequences) {
        auto st = process.states(seq);
        for (std::size_t k = 0; k < seq.size(); ++k) gaps.push_back(st[k]->integrated_total(seq[k].time));
    }
    return gaps;
}

GofResult gof_from_gaps(std::vector<double> gaps) {
    if (gaps.empty()) throw ContractError("time_rescaling_gof: no events");
    const auto ks = ks_test_exponential(std::move(gaps), 1.0);
    return {ks.statistic, ks.p_value, ks.n, ks.n >= 2};
}

GofResult time_rescaling_gof(const PointProcess& process, const Dataset& data) {
    return gof_from_gaps(rescaled_gaps(process, data));
}

Evaluation evaluate_model(const PointProcess& process, const Dataset& data, const ThinningConfig& cfg) {
    if (data.sequences.empty()) throw ContractError("evaluate_model: empty test set");
    Evaluation ev;
    ev.report.model = process.name();
    std::vector<double> gaps, pred_t, true_t;
    std::vector<std::size_t> pred_m, true_m;
    double ll = 0.0;
    for (std::size_t s = 0; s < data.sequences.size(); ++s) {
        const auto& seq = data.sequences[s];
        ll += process.log_likelihood(seq);
        ev.report.events += seq.size();
        auto st = process.states(seq);
        for (std::size_t k = 0; k < seq.size(); ++k) {
            gaps.push_back(st[k]->integrated_total(seq[k].time));
            if (k == 0) continue;
            const auto p = predict_next(*st[k], cfg);
            ev.predictions.push_back({s, k, seq[k].time, p.time, seq[k].mark, p.mark});
            pred_t.push_back(p.time);
            true_t.push_back(seq[k].time);
            pred_m.push_back(p.mark);
            true_m.push_back(seq[k].mark);
        }
    }
    MetricReport& r = ev.report;
    r.sequences = data.sequences.size();
    r.predictions = ev.predictions.size();
    r.loglik_per_event = ll / static_cast<double>(r.events);
    if (!pred_t.empty()) {
        r.rmse = rmse(pred_t, true_t);
        r.error_rate = error_rate(pred_m, true_m);
    }
    const auto gof = gof_from_gaps(std::move(gaps));
    r.ks_statistic = gof.statistic;
    r.ks_p_value = gof.p_value;
    return ev;
}

std::string report_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["sequences"] = r.sequences;
    j["events"] = r.events;
    j["predictions"] = r.predictions;
    j["loglik_per_event"] = r.loglik_per_event;
    j["rmse"] = r.rmse;
    j["error_rate"] = r.error_rate;
    j["ks_statistic"] = r.ks_statistic;
    j["ks_p_value"] = r.ks_p_value;
    return j.dump(2) + "\n";
}

std::string report_text(const MetricReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "model              %s\n"
                  "sequences          %zu\n"
                  "events             %zu\n"
                  "predictions        %zu\n"
                  "loglik/event       %.6f\n"
                  "rmse               %.6f\n"
                  "error rate         %.4f\n"
                  "ks statistic       %.6f\n"
                  "ks p-value         %.6g\n",
                  r.model.c_str(), r.sequences, r.events, r.predictions, r.loglik_per_event, r.rmse,
                  r.error_rate, r.ks_statistic, r.ks_p_value);
    return buf;
}

std::string predictions_csv(std::span<const PredictionRecord> rows) {
    std::string out = "seq_id,event_index,true_t,pred_t,true_m,pred_m\n";
    char buf[160];
    for (const auto& p : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%zu,%zu\n", p.seq_id, p.event_index, p.true_t,
                      p.pred_t, p.true_m, p.pred_m);
        out += buf;
    }
    return out;
}

double default_horizon(const Dataset& data) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& seq : data.sequences) {
        for (double g : inter_event_intervals(seq)) {
            total += g;
            ++n;
        }
    }
    if (n == 0 || !(total > 0.0)) throw ContractError("default_horizon: no intervals in data");
    return 10.0 * total / static_cast<double>(n);
}

}  // namespace nextpp
