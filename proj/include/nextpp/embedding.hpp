#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nextpp/autodiff.hpp"
#include "nextpp/events.hpp"

namespace nextpp {

// Trigonometric time encoding. Component l (1-based) is
// cos(t / 10000^((l-1)/D)) for odd l and sin(t / 10000^(l/D)) for even l.
std::vector<double> temporal_encoding(double t, std::size_t dim);

// L x D matrix of temporal_encoding rows for the given times.
Tensor temporal_encoding_matrix(std::span<const double> times, std::size_t dim);

// E_i = mark_matrix[m_i] + temporal_encoding(t_i); L x D.
// Only `mark_matrix` (M x D) carries gradient.
Var embed_sequence(const EventSequence& seq, const Var& mark_matrix);

}  // namespace nextpp
