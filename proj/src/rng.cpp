#include "nextpp/rng.hpp"

#include <cmath>

#include "nextpp/errors.hpp"

namespace nextpp {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() { return normal_(engine_); }

double Rng::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw DomainError("exponential rate must be positive and finite");
    }
    return -std::log1p(-uniform()) / rate;
}

Tensor Rng::uniform(const Shape& shape) {
    Tensor t(shape);
    for (double& v : t.data()) v = uniform();
    return t;
}

Tensor Rng::normal(const Shape& shape, double stddev) {
    Tensor t(shape);
    for (double& v : t.data()) v = stddev * normal();
    return t;
}

}  // namespace nextpp
