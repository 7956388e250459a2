#include "nextpp/process.hpp"

#include <cmath>

#include "nextpp/errors.hpp"

namespace nextpp {

double ConditionalIntensity::total_intensity(double t) const {
    double s = 0.0;
    for (std::size_t m = 0; m < mark_count(); ++m) s += intensity(t, m);
    return s;
}

double ConditionalIntensity::integrated_total(double t) const {
    const double t0 = last_time();
    if (t < t0) throw ContractError("integration end precedes the conditioning event");
    if (t == t0) return 0.0;
    const std::size_t n = std::max<std::size_t>(quadrature_points, 1);
    const double h = (t - t0) / static_cast<double>(n);
    double s = 0.5 * (total_intensity(t0) + total_intensity(t));
    for (std::size_t k = 1; k < n; ++k) s += total_intensity(t0 + h * static_cast<double>(k));
    return s * h;
}

std::unique_ptr<ConditionalIntensity> PointProcess::state_after(const EventSequence& prefix) const {
    auto all = states(prefix);
    return std::move(all.back());
}

double PointProcess::log_likelihood(const EventSequence& seq) const {
    return log_likelihood_from_states(*this, seq);
}

double log_likelihood_from_states(const PointProcess& process, const EventSequence& seq) {
    if (seq.empty()) throw ContractError("log-likelihood of an empty sequence");
    auto st = process.states(seq);
    double ll = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const double lam = st[i]->intensity(seq[i].time, seq[i].mark);
        if (!(lam > 0.0) || !std::isfinite(lam)) {
            throw NumericError("non-positive intensity at event " + std::to_string(i));
        }
        ll += std::log(lam);
        if (i + 1 < seq.size()) ll -= st[i + 1]->integrated_total(seq[i + 1].time);
    }
    return ll;
}

}  // namespace nextpp
