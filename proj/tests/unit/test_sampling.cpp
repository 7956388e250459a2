#include <gtest/gtest.h>

#include <cmath>

#include "model_fixtures.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/metrics.hpp"
#include "nextpp/sampling.hpp"
#include "nextpp/training.hpp"

using namespace nextpp;
using nextpp::testing::make_constant_intensity;
using nextpp::testing::tiny_config;

namespace {

// λ(t, m) = rate_m, independent of history.
class Flat : public ConditionalIntensity {
public:
    Flat(std::vector<double> rates, double last) : rates_(std::move(rates)), last_(last) {}
    std::size_t mark_count() const override { return rates_.size(); }
    double last_time() const override { return last_; }
    double intensity(double, std::size_t m) const override { return rates_[m]; }

private:
    std::vector<double> rates_;
    double last_;
};

NeuralIntensity single(double offset, double alpha, double gamma, double last = 0.0) {
    return NeuralIntensity({offset}, {alpha}, {gamma}, last);
}

}  // namespace

TEST(UpperBound, ConstantIntensity) {
    Flat f({2.0}, 1.0);
    ThinningConfig cfg;
    cfg.bound_margin = 0.01;
    EXPECT_DOUBLE_EQ(intensity_upper_bound(f, 0, cfg), 1.05 * 2.0 + 0.01);
    cfg.bound_margin.reset();
    EXPECT_DOUBLE_EQ(intensity_upper_bound(f, 0, cfg), 1.05 * 2.0 + 1e-3 * 2.0);
}

TEST(UpperBound, MonotoneEndpoints) {
    ThinningConfig cfg;
    cfg.horizon = 3.0;
    cfg.bound_margin = 0.0;
    auto decay = single(0.5, -0.8, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(intensity_upper_bound(decay, 0, cfg), 1.05 * decay.intensity(2.0, 0));
    auto grow = single(0.5, 0.8, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(intensity_upper_bound(grow, 0, cfg), 1.05 * grow.intensity(5.0, 0));
}

TEST(UpperBound, DominatesRandomIntensities) {
    Rng rng(3);
    ThinningConfig cfg;
    cfg.horizon = 4.0;
    for (int trial = 0; trial < 20; ++trial) {
        NeuralIntensity s({rng.normal(), rng.normal()}, {rng.normal(), rng.normal()},
                          {0.2 + rng.uniform(), 0.2 + rng.uniform()}, 1.0);
        for (std::size_t m = 0; m < 2; ++m) {
            const double bound = intensity_upper_bound(s, m, cfg);
            for (int k = 0; k < 1000; ++k) {
                ASSERT_LE(s.intensity(1.0 + cfg.horizon * rng.uniform(), m), bound);
            }
        }
    }
}

TEST(UpperBound, NonFiniteIntensityIsNumericError) {
    Flat f({NAN}, 0.0);
    EXPECT_THROW(intensity_upper_bound(f, 0, {}), NumericError);
}

TEST(Thinning, ConstantIntensityGivesExponentialGaps) {
    const double lambda = 1.7;
    Flat f({lambda}, 0.0);
    ThinningConfig cfg;
    cfg.horizon = 60.0 / lambda;
    cfg.bound_margin = 0.0;
    Rng rng(12);
    std::vector<double> gaps;
    for (int i = 0; i < 10000; ++i) {
        auto d = thinning_next(f, cfg, rng);
        ASSERT_TRUE(d.event);
        gaps.push_back(d.event->time);
    }
    EXPECT_GT(ks_test_exponential(gaps, lambda).p_value, 0.01);
}

TEST(Thinning, VanishingIntensityGivesNoEvent) {
    auto s = single(-60.0, 0.0, 1.0);
    ThinningConfig cfg;
    cfg.horizon = 1.0;
    Rng rng(2);
    int none = 0;
    for (int i = 0; i < 1000; ++i) none += !thinning_next(s, cfg, rng).event;
    EXPECT_GE(none, 999);
}

TEST(Thinning, SymmetricMarksSplitEvenly) {
    Flat f({0.8, 0.8}, 0.0);
    ThinningConfig cfg;
    cfg.horizon = 100.0;
    Rng rng(5);
    int ones = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ones += thinning_next(f, cfg, rng).event->mark == 1;
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.02);
}

TEST(Thinning, ReturnsEarliestMark) {
    // Marks are tried in order and the minimum wins, so shrinking a mark's
    // rate must never make it win more often.
    Flat f({0.2, 5.0}, 0.0);
    ThinningConfig cfg;
    cfg.horizon = 100.0;
    Rng rng(6);
    int ones = 0;
    for (int i = 0; i < 4000; ++i) ones += thinning_next(f, cfg, rng).event->mark == 1;
    EXPECT_NEAR(ones / 4000.0, 5.0 / 5.2, 0.02);
}

TEST(Thinning, TooManyRejectionsIsSamplingError) {
    auto s = single(10.0, -1000.0, 1.0);
    ThinningConfig cfg;
    cfg.horizon = 1e4;
    cfg.max_rejections = 5;
    Rng rng(1);
    // The first candidate may land on the spike; keep drawing until one
    // goes past it.
    bool thrown = false;
    for (int i = 0; i < 50 && !thrown; ++i) {
        try {
            thinning_next(s, cfg, rng);
        } catch (const SamplingError& e) {
            thrown = true;
            EXPECT_NE(std::string(e.what()).find("rejections"), std::string::npos);
        }
    }
    EXPECT_TRUE(thrown);
}

TEST(Simulate, CountMustBePositive) {
    Model m = Model::create(tiny_config(2), {}, 1);
    NeuralProcess p(m);
    Rng rng(1);
    EXPECT_THROW(simulate(p, EventSequence(), 0, ThinningConfig{}, rng), ContractError);
}

TEST(Simulate, ConstantModelRate) {
    Model m = Model::create(tiny_config(2), {}, 1);
    const double lambda0 = 1.5;
    make_constant_intensity(m, lambda0);
    NeuralProcess p(m);
    ThinningConfig cfg;
    cfg.horizon = 20.0;
    Rng rng(8);
    const std::size_t n = 300;
    auto out = simulate(p, EventSequence(), n, cfg, rng);
    ASSERT_EQ(out.events.size(), n);
    for (std::size_t i = 1; i < n; ++i) ASSERT_GT(out.events[i].time, out.events[i - 1].time);
    const double rate = static_cast<double>(n) / out.events.back().time;
    const double expected = 2.0 * lambda0;
    EXPECT_NEAR(rate, expected, 3.0 * expected / std::sqrt(static_cast<double>(n)));
}

TEST(Simulate, ContinuesAfterPrefix) {
    Model m = Model::create(tiny_config(2), {}, 1);
    NeuralProcess p(m);
    EventSequence prefix({0.5, 1.25}, {0, 1});
    Rng rng(3);
    ThinningConfig cfg;
    cfg.horizon = 50.0;
    auto out = simulate(p, prefix, 5, cfg, rng);
    ASSERT_FALSE(out.events.empty());
    EXPECT_GT(out.events.front().time, 1.25);
    EXPECT_EQ(out.rejections.size(), out.events.size());
}

TEST(Simulate, SameSeedSameSequence) {
    Model m = Model::create(tiny_config(2), {}, 4);
    NeuralProcess p(m);
    ThinningConfig cfg;
    cfg.horizon = 30.0;
    Rng a(10), b(10);
    auto x = simulate(p, EventSequence(), 20, cfg, a);
    auto y = simulate(p, EventSequence(), 20, cfg, b);
    EXPECT_EQ(x.events, y.events);
}

TEST(PredictNext, ExponentialMean) {
    const double lambda = 2.0;
    Flat f({lambda}, 3.0);
    ThinningConfig cfg;
    cfg.horizon = 30.0 / lambda;
    cfg.bound_grid_points = 2001;
    auto p = predict_next(f, cfg);
    EXPECT_NEAR(p.time - 3.0, 1.0 / lambda, 0.01 / lambda);
    EXPECT_EQ(p.mark, 0u);
    EXPECT_NEAR(p.mark_mass[0], 1.0, 1e-4);
}

TEST(PredictNext, DefaultGridIsCloseToo) {
    Flat f({1.0}, 0.0);
    ThinningConfig cfg;
    cfg.horizon = 10.0;
    auto p = predict_next(f, cfg);
    // Mean of Exp(1) truncated at 10.
    const double truncated = (1.0 - 11.0 * std::exp(-10.0)) / (1.0 - std::exp(-10.0));
    EXPECT_NEAR(p.time, truncated, 0.01);
}

TEST(PredictNext, CompetingMarks) {
    Flat f({0.5, 1.5}, 0.0);
    ThinningConfig cfg;
    cfg.horizon = 40.0;
    cfg.bound_grid_points = 2001;
    auto p = predict_next(f, cfg);
    EXPECT_EQ(p.mark, 1u);
    EXPECT_NEAR(p.mark_mass[1], 0.75, 1e-3);
    EXPECT_LE(p.mark_mass[0] + p.mark_mass[1], 1.0 + 1e-3);
}

TEST(PredictNext, Deterministic) {
    NeuralIntensity s({0.3, -0.2}, {-0.4, 0.1}, {1.0, 0.7}, 2.0);
    ThinningConfig cfg;
    cfg.horizon = 8.0;
    auto a = predict_next(s, cfg), b = predict_next(s, cfg);
    EXPECT_EQ(a.time, b.time);
    EXPECT_EQ(a.mark, b.mark);
    EXPECT_EQ(a.mark_mass, b.mark_mass);
    EXPECT_GT(a.time, 2.0);
}

TEST(PredictNext, AgreesWithSimulation) {
    NeuralIntensity s({0.8, -0.5}, {-0.6, 0.05}, {1.0, 0.5}, 1.0);
    ThinningConfig cfg;
    cfg.horizon = 12.0;
    cfg.bound_grid_points = 4001;
    const auto p = predict_next(s, cfg);
    Rng rng(21);
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (int i = 0; i < 10000; ++i) {
        auto d = thinning_next(s, cfg, rng);
        if (!d.event) continue;
        const double g = d.event->time;
        sum += g;
        sq += g * g;
        ++n;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(p.time, mean, 3.0 * se);
}

TEST(PredictNext, NoMassIsPredictionError) {
    auto s = single(-1e5, 0.0, 1.0);
    EXPECT_THROW(predict_next(s, ThinningConfig{}), PredictionError);
}

TEST(NeuralProcess, StatesMatchPrefixForwards) {
    Model m = Model::create(tiny_config(3), std::vector<double>{0.5, 0.2, 0.9}, 6);
    NeuralProcess p(m);
    EventSequence s({0.4, 0.7, 1.9, 2.3}, {2, 0, 1, 1});
    auto all = p.states(s);
    ASSERT_EQ(all.size(), 5u);
    for (std::size_t k = 0; k <= s.size(); ++k) {
        auto st = p.state_after(s.prefix(k));
        EXPECT_EQ(st->last_time(), all[k]->last_time());
        for (std::size_t mk = 0; mk < 3; ++mk) {
            const double t = all[k]->last_time() + 0.37;
            EXPECT_EQ(st->intensity(t, mk), all[k]->intensity(t, mk)) << k << "," << mk;
        }
    }
}

TEST(NeuralProcess, LikelihoodMatchesStateQuadrature) {
    Model m = Model::create(tiny_config(2), std::vector<double>{0.5, 0.2}, 6);
    NeuralProcess p(m, 20);
    EventSequence s({0.4, 0.7, 1.9, 2.3, 4.0}, {1, 0, 1, 1, 0});
    EXPECT_NEAR(p.log_likelihood(s), log_likelihood_from_states(p, s), 1e-10);
    Dataset d;
    d.mark_count = 2;
    d.sequences.push_back(s);
    EXPECT_NEAR(p.log_likelihood(s) / 5.0, mean_loglik_per_event(m, d, 20), 1e-12);
}
