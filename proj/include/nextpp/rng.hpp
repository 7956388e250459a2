#pragma once

#include <cstdint>
#include <random>

#include "nextpp/tensor.hpp"

namespace nextpp {

// Seeded generator. Identical seed and call sequence give identical draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    // Uniform on [0, 1), 53 random mantissa bits.
    double uniform();
    double normal();
    // Exponential with the given rate (mean 1 / rate).
    double exponential(double rate);
    std::uint64_t next_u64() { return engine_(); }

    Tensor uniform(const Shape& shape);
    Tensor normal(const Shape& shape, double stddev = 1.0);

    // Independent child stream, derived deterministically from this one.
    Rng split() { return Rng(engine_()); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nextpp
