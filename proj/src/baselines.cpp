#include "nextpp/baselines.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <sstream>

#include "nextpp/errors.hpp"

namespace nextpp {

namespace {

std::size_t draw_mark(std::span<const double> weights, double total, Rng& rng) {
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t m = 0; m < weights.size(); ++m) {
        acc += weights[m];
        if (u < acc) return m;
    }
    return weights.size() - 1;
}

class ConstantIntensity : public ConditionalIntensity {
public:
    ConstantIntensity(const std::vector<double>& rates, double last) : rates_(rates), last_(last) {}

    std::size_t mark_count() const override { return rates_.size(); }
    double last_time() const override { return last_; }
    double intensity(double, std::size_t mark) const override { return rates_[mark]; }
    double integrated_total(double t) const override {
        return (t - last_) * std::accumulate(rates_.begin(), rates_.end(), 0.0);
    }

private:
    const std::vector<double>& rates_;
    double last_;
};

// λ_m(t) = μ_m + r_m e^{-b (t - last)}, r the excitation right after the
// last event.
class HawkesIntensity : public ConditionalIntensity {
public:
    HawkesIntensity(const HawkesParams& p, std::vector<double> r, double last)
        : p_(p), r_(std::move(r)), last_(last) {}

    std::size_t mark_count() const override { return p_.mark_count(); }
    double last_time() const override { return last_; }
    double intensity(double t, std::size_t mark) const override {
        return p_.base[mark] + r_[mark] * std::exp(-p_.decay * (t - last_));
    }
    double integrated_total(double t) const override {
        const double dt = t - last_;
        double s = 0.0;
        for (std::size_t m = 0; m < r_.size(); ++m) {
            s += p_.base[m] * dt - r_[m] * std::expm1(-p_.decay * dt) / p_.decay;
        }
        return s;
    }

private:
    const HawkesParams& p_;
    std::vector<double> r_;
    double last_;
};

}  // namespace

void PoissonParams::validate() const {
    if (rates.empty()) throw ContractError("poisson: no rates");
    for (double r : rates) {
        if (!(r > 0.0) || !std::isfinite(r)) throw ContractError("poisson: rates must be positive");
    }
}

double HawkesParams::spectral_radius() const {
    const std::size_t M = mark_count();
    Eigen::MatrixXd a(M, M);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j) a(i, j) = excitation[i][j] / decay;
    return a.eigenvalues().cwiseAbs().maxCoeff();
}

void HawkesParams::validate() const {
    const std::size_t M = mark_count();
    if (M == 0) throw ContractError("hawkes: no base rates");
    for (double m : base) {
        if (!(m > 0.0) || !std::isfinite(m)) throw ContractError("hawkes: base rates must be positive");
    }
    if (!(decay > 0.0) || !std::isfinite(decay)) throw ContractError("hawkes: decay must be positive");
    if (excitation.size() != M) throw ContractError("hawkes: excitation must be M x M");
    for (const auto& row : excitation) {
        if (row.size() != M) throw ContractError("hawkes: excitation must be M x M");
        for (double v : row) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("hawkes: excitation must be >= 0");
        }
    }
    const double rho = spectral_radius();
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "hawkes: spectral radius of a/b is " << rho << " (must be < 1 for a subcritical process)";
        throw ContractError(os.str());
    }
}

HawkesParams HawkesParams::benchmark() {
    return HawkesParams{{0.2, 0.2}, {{0.6, 0.1}, {0.1, 0.6}}, 1.0};
}

Dataset generate_poisson(const PoissonParams& params, double horizon, std::size_t n_seqs, Rng& rng) {
    params.validate();
    if (!(horizon > 0.0)) throw ContractError("generate_poisson: horizon must be positive");
    const double total = std::accumulate(params.rates.begin(), params.rates.end(), 0.0);
    Dataset out;
    out.mark_count = params.mark_count();
    for (std::size_t s = 0; s < n_seqs; ++s) {
        std::vector<Event> events;
        double t = 0.0;
        while (true) {
            t += rng.exponential(total);
            if (t > horizon) break;
            events.push_back({t, draw_mark(params.rates, total, rng)});
        }
        if (!events.empty()) out.sequences.emplace_back(std::move(events));
    }
    return out;
}

Dataset generate_hawkes(const HawkesParams& params, double horizon, std::size_t n_seqs, Rng& rng) {
    params.validate();
    if (!(horizon > 0.0)) throw ContractError("generate_hawkes: horizon must be positive");
    const std::size_t M = params.mark_count();
    Dataset out;
    out.mark_count = M;
    std::vector<double> r(M), lam(M);
    for (std::size_t s = 0; s < n_seqs; ++s) {
        std::vector<Event> events;
        std::fill(r.begin(), r.end(), 0.0);
        double t = 0.0;
        while (true) {
            // Between events the intensity only decays, so its value at the
            // current time bounds the rest of the interval.
            double bound = 0.0;
            for (std::size_t m = 0; m < M; ++m) bound += params.base[m] + r[m];
            const double gap = rng.exponential(bound);
            t += gap;
            if (t > horizon) break;
            const double f = std::exp(-params.decay * gap);
            double total = 0.0;
            for (std::size_t m = 0; m < M; ++m) {
                r[m] *= f;
                lam[m] = params.base[m] + r[m];
                total += lam[m];
            }
            if (rng.uniform() * bound > total) continue;
            const std::size_t mark = draw_mark(lam, total, rng);
            if (!events.empty() && !(t > events.back().time)) continue;
            events.push_back({t, mark});
            for (std::size_t m = 0; m < M; ++m) r[m] += params.excitation[m][mark];
        }
        if (!events.empty()) out.sequences.emplace_back(std::move(events));
    }
    return out;
}

PoissonProcess::PoissonProcess(PoissonParams params) : params_(std::move(params)) { params_.validate(); }

std::vector<std::unique_ptr<ConditionalIntensity>> PoissonProcess::states(const EventSequence& seq) const {
    std::vector<std::unique_ptr<ConditionalIntensity>> out;
    out.reserve(seq.size() + 1);
    out.push_back(std::make_unique<ConstantIntensity>(params_.rates, 0.0));
    for (const Event& e : seq) out.push_back(std::make_unique<ConstantIntensity>(params_.rates, e.time));
    return out;
}

double PoissonProcess::log_likelihood(const EventSequence& seq) const {
    if (seq.empty()) return 0.0;
    double ll = 0.0;
    for (const Event& e : seq) ll += std::log(params_.rates[e.mark]);
    const double total = std::accumulate(params_.rates.begin(), params_.rates.end(), 0.0);
    return ll - (seq.last_time() - seq[0].time) * total;
}

HawkesProcess::HawkesProcess(HawkesParams params) : params_(std::move(params)) { params_.validate(); }

std::vector<std::unique_ptr<ConditionalIntensity>> HawkesProcess::states(const EventSequence& seq) const {
    const std::size_t M = mark_count();
    std::vector<std::unique_ptr<ConditionalIntensity>> out;
    out.reserve(seq.size() + 1);
    std::vector<double> r(M, 0.0);
    out.push_back(std::make_unique<HawkesIntensity>(params_, r, 0.0));
    double last = 0.0;
    for (const Event& e : seq) {
        const double f = std::exp(-params_.decay * (e.time - last));
        for (std::size_t m = 0; m < M; ++m) r[m] = r[m] * f + params_.excitation[m][e.mark];
        last = e.time;
        out.push_back(std::make_unique<HawkesIntensity>(params_, r, last));
    }
    return out;
}

double HawkesProcess::log_likelihood(const EventSequence& seq) const {
    if (seq.empty()) return 0.0;
    const std::size_t M = mark_count();
    const double b = params_.decay;
    std::vector<double> r(M, 0.0);
    double ll = 0.0, last = seq[0].time;
    for (const Event& e : seq) {
        const double f = std::exp(-b * (e.time - last));
        for (std::size_t m = 0; m < M; ++m) r[m] *= f;
        ll += std::log(params_.base[e.mark] + r[e.mark]);
        for (std::size_t m = 0; m < M; ++m) r[m] += params_.excitation[m][e.mark];
        last = e.time;
    }
    const double tL = seq.last_time();
    double compensator = (tL - seq[0].time) * std::accumulate(params_.base.begin(), params_.base.end(), 0.0);
    for (const Event& e : seq) {
        double a = 0.0;
        for (std::size_t m = 0; m < M; ++m) a += params_.excitation[m][e.mark];
        compensator -= a * std::expm1(-b * (tL - e.time)) / b;
    }
    return ll - compensator;
}

double oracle_loglik(const Dataset& data, const PointProcess& oracle) {
    if (data.sequences.empty()) throw ContractError("oracle_loglik: empty dataset");
    double ll = 0.0;
    std::size_t n = 0;
    for (const auto& seq : data.sequences) {
        ll += oracle.log_likelihood(seq);
        n += seq.size();
    }
    return ll / static_cast<double>(n);
}

PoissonParams fit_poisson(const Dataset& data) {
    if (data.sequences.empty()) throw ContractError("fit_poisson: empty dataset");
    std::vector<double> counts(data.mark_count, 0.0);
    double duration = 0.0;
    for (const auto& seq : data.sequences) {
        for (const Event& e : seq) counts[e.mark] += 1.0;
        duration += seq.last_time() - seq[0].time;
    }
    if (!(duration > 0.0)) throw ContractError("fit_poisson: total observation window is zero");
    for (std::size_t m = 0; m < counts.size(); ++m) {
        // Unobserved marks get half a count so the rate stays positive.
        counts[m] = std::max(counts[m], 0.5) / duration;
    }
    return PoissonParams{counts};
}

}  // namespace nextpp
