#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nextpp/embedding.hpp"
#include "nextpp/ops.hpp"
#include "nextpp/rng.hpp"

using namespace nextpp;

TEST(TemporalEncoding, AtZero) {
    EXPECT_EQ(temporal_encoding(0.0, 4), (std::vector<double>{1, 0, 1, 0}));
}

TEST(TemporalEncoding, AtPiTwoDims) {
    const auto e = temporal_encoding(std::numbers::pi, 2);
    EXPECT_NEAR(e[0], -1.0, 1e-15);
    EXPECT_NEAR(e[1], 3.14159e-4, 1e-9);
}

TEST(TemporalEncoding, ComponentFormula) {
    const double t = 12.75;
    const std::size_t D = 6;
    const auto e = temporal_encoding(t, D);
    for (std::size_t l = 1; l <= D; ++l) {
        const double expected = (l % 2 == 1) ? std::cos(t / std::pow(10000.0, double(l - 1) / D))
                                             : std::sin(t / std::pow(10000.0, double(l) / D));
        EXPECT_DOUBLE_EQ(e[l - 1], expected) << "component " << l;
    }
}

TEST(TemporalEncoding, BoundedComponents) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        for (double v : temporal_encoding(rng.uniform() * 1e4, 16)) {
            EXPECT_LE(std::abs(v), 1.0);
        }
    }
}

TEST(EmbedSequence, ZeroMarkMatrixGivesEncoding) {
    Tape tape;
    EventSequence s({0.3, 1.7, 2.0}, {1, 0, 1});
    Var E = embed_sequence(s, tape.constant(Tensor({2, 4})));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto enc = temporal_encoding(s[i].time, 4);
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(E.value().at(i, c), enc[c]);
    }
}

TEST(EmbedSequence, EqualEventsEqualRows) {
    Rng rng(4);
    Tape tape;
    Var M = tape.constant(rng.normal({3, 8}));
    EventSequence a({1.25}, {2});
    Var Ea = embed_sequence(a, M), Eb = embed_sequence(a, M);
    EXPECT_EQ(Ea.value(), Eb.value());
}

TEST(EmbedSequence, LookupGradientCountsMarks) {
    Rng rng(4);
    ParamStore ps;
    ps.add("marks", rng.normal({3, 6}));
    Tape tape(&ps);
    EventSequence s({0.1, 0.2, 0.3, 0.4, 0.5}, {0, 2, 0, 0, 2});
    Gradients g = tape.backward(ops::sum(embed_sequence(s, tape.param("marks"))));
    const std::vector<double> expected_count{3, 0, 2};
    for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(g["marks"].at(m, c), expected_count[m]);
}
