#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/neural_evolution.hpp"
#include "nextpp/ops.hpp"

using namespace nextpp;
namespace o = nextpp::ops;

namespace {

constexpr std::size_t D = 6, d = 3;

ParamStore evolution_store(std::uint64_t seed) {
    ParamStore ps;
    Rng rng(seed);
    register_evolution_params(ps, D, d, rng);
    // Non-trivial field and biases so that every path is exercised.
    Rng r2(seed + 100);
    for (const char* name : {"evolution.field.wt", "evolution.field.b", "evolution.dec.b",
                             "evolution.mean.b2", "evolution.logstd.b1"}) {
        ps.mutable_get(name) = r2.normal(ps.get(name).shape(), 0.3);
    }
    return ps;
}

void zero_all(ParamStore& ps) {
    for (std::size_t i = 0; i < ps.size(); ++i) ps.mutable_get(i) = Tensor::zeros_like(ps.get(i));
}

}  // namespace

TEST(Partition, BlocksOfInverseRatio) {
    auto p = BlockPartition::make(4, 0.5);
    ASSERT_EQ(p.blocks.size(), 2u);
    EXPECT_EQ(p.blocks[0], (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(p.block_of, (std::vector<std::size_t>{0, 0, 1, 1}));
    auto q = BlockPartition::make(10, 0.25);
    ASSERT_EQ(q.blocks.size(), 3u);
    EXPECT_EQ(q.blocks[2], (std::vector<std::size_t>{8, 9}));
    EXPECT_EQ(BlockPartition::make(5, 1.0).blocks.size(), 5u);
    EXPECT_THROW(BlockPartition::make(5, 0.0), ContractError);
    EXPECT_THROW(BlockPartition::make(5, 1.5), ContractError);
}

TEST(Encode, ZeroWeightsGiveStandardNormal) {
    ParamStore ps = evolution_store(1);
    zero_all(ps);
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    Rng rng(2);
    auto [mean, log_std] = encode(tape.constant(rng.normal({4, D})), v);
    EXPECT_EQ(mean.shape(), (Shape{4, d}));
    for (double x : mean.value().data()) EXPECT_EQ(x, 0.0);
    for (double x : log_std.value().data()) EXPECT_EQ(x, 0.0);
}

TEST(Encode, GradientMatchesFiniteDifferences) {
    ParamStore ps = evolution_store(3);
    Rng rng(4);
    Tensor x = rng.normal({3, D});
    auto errs = nextpp::testing::check_gradients(ps, [&](Tape& t) {
        auto v = evolution_vars(t);
        auto [m, s] = encode(t.constant(x), v);
        return o::add(o::sum(o::square(m)), o::sum(o::tanh(s)));
    });
    for (const auto& e : errs) {
        if (e.name.rfind("evolution.mean", 0) == 0 || e.name.rfind("evolution.logstd", 0) == 0) {
            EXPECT_LT(e.rel_error, 1e-4) << e.name;
        }
    }
}

TEST(SampleZ0, ClampedLogStdCollapsesToMean) {
    Tape tape;
    Var mean = tape.constant(Tensor({1, 2}, std::vector<double>{0.3, -1.2}));
    Var ls = o::clamp(tape.constant(Tensor({1, 2}, -1e6)), kMinLogStd, kMaxLogStd);
    Var z = sample_z0(mean, ls, Tensor({1, 2}, std::vector<double>{1.0, -2.0}));
    EXPECT_NEAR(z.value().data()[0], 0.3, 1e-8);
    EXPECT_NEAR(z.value().data()[1], -1.2, 1e-8);
}

TEST(SampleZ0, Moments) {
    const std::size_t n = 100000;
    const double mu = 0.7, log_std = std::log(1.5);
    Tape tape;
    Var mean = tape.constant(Tensor({n, 1}, mu));
    Var ls = tape.constant(Tensor({n, 1}, log_std));
    Rng rng(6);
    Var z = sample_z0(mean, ls, rng.normal({n, 1}));
    double m = 0.0, v = 0.0;
    for (double x : z.value().data()) m += x;
    m /= n;
    for (double x : z.value().data()) v += (x - m) * (x - m);
    const double sd = std::sqrt(v / n);
    EXPECT_NEAR(m, mu, 3.0 * 1.5 / std::sqrt(double(n)));
    EXPECT_NEAR(sd, 1.5, 0.05 * 1.5);
}

TEST(Evolve, ZeroFieldIsIdentity) {
    ParamStore ps = evolution_store(7);
    zero_all(ps);
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    Rng rng(1);
    Tensor z0 = rng.normal({2, d});
    std::vector<double> t0{0.0, 1.0}, t1{3.0, 1.5};
    EXPECT_EQ(evolve(tape.constant(z0), t0, t1, v, {8}).value(), z0);
}

TEST(Evolve, NegativeIdentityFieldDecays) {
    ParamStore ps = evolution_store(7);
    zero_all(ps);
    auto& wz = ps.mutable_get("evolution.field.wz");
    for (std::size_t i = 0; i < d; ++i) wz.at(i, i) = -1.0;
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    std::vector<double> t0{2.0}, t1{3.0};
    Var z1 = evolve(tape.constant(Tensor({1, d}, 1.0)), t0, t1, v, {10});
    for (double x : z1.value().data()) EXPECT_NEAR(x, std::exp(-1.0), 1e-6);
}

TEST(Evolve, EmptyIntervalIsBitExact) {
    ParamStore ps = evolution_store(8);
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    Rng rng(1);
    Tensor z0 = rng.normal({1, d});
    std::vector<double> t{1.25};
    EXPECT_EQ(evolve(tape.constant(z0), t, t, v, {8}).value(), z0);
}

TEST(Decode, ZeroWeightsGiveBias) {
    ParamStore ps = evolution_store(9);
    ps.mutable_get("evolution.dec.w") = Tensor({d, D});
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    Rng rng(1);
    Var y = decode(tape.constant(rng.normal({1, d})), v);
    const auto bias = ps.get("evolution.dec.b").data();
    for (std::size_t c = 0; c < D; ++c) EXPECT_EQ(y.value().data()[c], bias[c]);
}

TEST(Decode, Affine) {
    ParamStore ps = evolution_store(10);
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    Rng rng(2);
    Tensor z = rng.normal({1, d});
    Tensor az = z;
    for (double& x : az.data()) x *= 2.5;
    const Tensor y0 = decode(tape.constant(Tensor({1, d})), v).value();
    const Tensor y = decode(tape.constant(z), v).value();
    const Tensor ya = decode(tape.constant(az), v).value();
    for (std::size_t c = 0; c < D; ++c) {
        EXPECT_NEAR(ya.data()[c] - y0.data()[c], 2.5 * (y.data()[c] - y0.data()[c]), 1e-12);
    }
}

TEST(Decode, GradientMatchesFiniteDifferences) {
    ParamStore ps = evolution_store(11);
    Rng rng(3);
    Tensor z = rng.normal({2, d});
    auto errs = nextpp::testing::check_gradients(ps, [&](Tape& t) {
        auto v = evolution_vars(t);
        return o::sum(o::tanh(decode(t.constant(z), v)));
    });
    for (const auto& e : errs) {
        if (e.name.rfind("evolution.dec", 0) == 0) EXPECT_LT(e.rel_error, 1e-4) << e.name;
    }
}

class Channel : public ::testing::Test {
protected:
    void SetUp() override {
        ps = evolution_store(21);
        Rng rng(22);
        E = rng.normal({4, D});
        eps4 = rng.normal({4, d});
    }
    ParamStore ps;
    Tensor E, eps4;
    std::vector<double> times{0.4, 1.1, 1.5, 2.9};
};

// Row i of O is the decoded latent of event i-1 carried to t_i; row 0 is
// the zero latent carried from the origin to t_1.
TEST_F(Channel, SingleEventBlocksMatchComposition) {
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    OdeSolverConfig cfg{8};
    auto out = run_channel(tape.constant(E), times, BlockPartition::make(4, 1.0), v, cfg, eps4);

    auto [mean, log_std] = encode(tape.constant(E), v);
    Var z0 = sample_z0(mean, log_std, eps4);
    for (std::size_t i = 0; i < 4; ++i) {
        Tensor start(Shape{1, d});
        std::vector<double> a{0.0}, b{times[i]};
        if (i > 0) {
            auto r = z0.value().row(i - 1);
            std::copy(r.begin(), r.end(), start.data().begin());
            a[0] = times[i - 1];
        }
        Tensor expected = decode(evolve(tape.constant(start), a, b, v, cfg), v).value();
        for (std::size_t c = 0; c < D; ++c) {
            EXPECT_NEAR(out.O.value().at(i, c), expected.data()[c], 1e-12) << i << "," << c;
        }
    }
    // z1 of event i is its latent carried to t_{i+1}; the last one stays put.
    for (std::size_t i = 0; i + 1 < 4; ++i) {
        Tensor start(Shape{1, d});
        auto r = z0.value().row(i);
        std::copy(r.begin(), r.end(), start.data().begin());
        std::vector<double> a{times[i]}, b{times[i + 1]};
        Tensor z1 = evolve(tape.constant(start), a, b, v, cfg).value();
        for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(out.latents.z1.value().at(i, c), z1.data()[c], 1e-12);
    }
    for (std::size_t c = 0; c < d; ++c) EXPECT_EQ(out.latents.z1.value().at(3, c), z0.value().at(3, c));
}

TEST_F(Channel, SingleEventUsesOriginOnly) {
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    Tensor e1({1, D});
    std::copy(E.row(0).begin(), E.row(0).end(), e1.data().begin());
    std::vector<double> t{0.4};
    auto out = run_channel(tape.constant(e1), t, BlockPartition::make(1, 1.0), v, {8}, Tensor({1, d}, 0.5));
    std::vector<double> a{0.0};
    Tensor expected = decode(evolve(tape.constant(Tensor({1, d})), a, t, v, {8}), v).value();
    EXPECT_EQ(out.O.value(), expected);
}

TEST_F(Channel, HalfRatioBroadcastsPerBlock) {
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    auto out = run_channel(tape.constant(E), times, BlockPartition::make(4, 0.5), v, {8}, Tensor({2, d}, 0.1));
    const Tensor& O = out.O.value();
    ASSERT_EQ(O.rows(), 4u);
    for (std::size_t c = 0; c < D; ++c) {
        EXPECT_EQ(O.at(0, c), O.at(1, c));
        EXPECT_EQ(O.at(2, c), O.at(3, c));
    }
    EXPECT_NE(O.at(0, 0), O.at(2, 0));
    EXPECT_EQ(out.latents.mean.shape(), (Shape{2, d}));
}

TEST_F(Channel, RowsIgnoreCurrentAndLaterEvents) {
    Tape tape(&ps);
    auto v = evolution_vars(tape);
    auto base = run_channel(tape.constant(E), times, BlockPartition::make(4, 1.0), v, {8}, eps4);
    Tensor E2 = E;
    for (double& x : E2.row(2)) x += 5.0;
    auto pert = run_channel(tape.constant(E2), times, BlockPartition::make(4, 1.0), v, {8}, eps4);
    for (std::size_t i = 0; i <= 2; ++i)
        for (std::size_t c = 0; c < D; ++c) EXPECT_EQ(base.O.value().at(i, c), pert.O.value().at(i, c));
    EXPECT_NE(base.O.value().at(3, 0), pert.O.value().at(3, 0));
}
