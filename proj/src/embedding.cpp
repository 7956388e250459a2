#include "nextpp/embedding.hpp"

#include <cmath>

#include "nextpp/errors.hpp"
#include "nextpp/ops.hpp"

namespace nextpp {

std::vector<double> temporal_encoding(double t, std::size_t dim) {
    if (dim < 2 || dim % 2 != 0) throw ContractError("temporal encoding dimension must be even and >= 2");
    std::vector<double> f(dim);
    const double d = static_cast<double>(dim);
    for (std::size_t l = 1; l <= dim; ++l) {
        const double li = static_cast<double>(l);
        if (l % 2 == 1) {
            f[l - 1] = std::cos(t / std::pow(10000.0, (li - 1.0) / d));
        } else {
            f[l - 1] = std::sin(t / std::pow(10000.0, li / d));
        }
    }
    return f;
}

Tensor temporal_encoding_matrix(std::span<const double> times, std::size_t dim) {
    Tensor out(Shape{times.size(), dim});
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto row = temporal_encoding(times[i], dim);
        std::copy(row.begin(), row.end(), out.row(i).begin());
    }
    return out;
}

Var embed_sequence(const EventSequence& seq, const Var& mark_matrix) {
    if (mark_matrix.value().rank() != 2) throw DimensionError("mark matrix must be M x D");
    const std::size_t M = mark_matrix.shape()[0];
    const std::size_t D = mark_matrix.shape()[1];
    const auto marks = seq.marks();
    for (auto m : marks) {
        if (m >= M) {
            throw ContractError("mark " + std::to_string(m) + " outside embedding table of " +
                                std::to_string(M));
        }
    }
    const auto times = seq.times();
    Var y = ops::gather_rows(mark_matrix, marks);
    Var f = mark_matrix.tape()->constant(temporal_encoding_matrix(times, D));
    return ops::add(y, f);
}

}  // namespace nextpp
