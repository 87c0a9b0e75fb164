#include "kcbo/consensus.hpp"

#include <cmath>

#include "kcbo/reduce.hpp"

namespace kcbo {

std::vector<double> row_mean(std::span<const double> rows, int J, int d) {
    std::vector<double> mean(d);
    for (int i = 0; i < d; ++i)
        mean[i] = pairwise_sum(0, static_cast<std::size_t>(J),
                               [&](std::size_t j) { return rows[j * d + i]; }) /
                  J;
    return mean;
}

ConsensusPoint weighted_consensus(std::span<const double> positions, int J, int d,
                                  double alpha, const ObjectiveSpec& objective) {
    if (J < 1) throw EmptyEnsembleError("weighted_consensus: empty ensemble");
    if (d < 1) throw DimensionError("weighted_consensus: dim must be positive");

    std::vector<double> fvals(J);
    objective.eval_all(positions.data(), J, fvals.data());

    // log weights -alpha f(x_j), shifted by their max before exponentiating
    double c = -alpha * fvals[0];
    for (int j = 1; j < J; ++j) c = std::max(c, -alpha * fvals[j]);

    std::vector<double> w(J);
    for (int j = 0; j < J; ++j) w[j] = std::exp(-alpha * fvals[j] - c);

    const double wsum = pairwise_sum(w);
    if (!std::isfinite(wsum) || wsum <= 0.0)
        throw NumericalError("weighted_consensus: non-finite weights after stabilization");

    ConsensusPoint out;
    out.point.resize(d);
    for (int i = 0; i < d; ++i) {
        const double s = pairwise_sum(0, static_cast<std::size_t>(J),
                                      [&](std::size_t j) { return w[j] * positions[j * d + i]; });
        out.point[i] = s / wsum;
        if (!std::isfinite(out.point[i]))
            throw NumericalError("weighted_consensus: non-finite consensus coordinate");
    }
    out.log_partition = c + std::log(wsum / J);
    return out;
}

std::vector<double> delta_alpha(std::span<const double> positions, int J, int d,
                                double alpha, const ObjectiveSpec& objective) {
    const auto consensus = weighted_consensus(positions, J, d, alpha, objective);
    auto mean = row_mean(positions, J, d);
    for (int i = 0; i < d; ++i) mean[i] -= consensus.point[i];
    return mean;
}

void noise_matrix_apply(std::span<const double> x, NoiseKind kind,
                        std::span<const double> dW, std::span<double> out) {
    const std::size_t d = x.size();
    if (kind == NoiseKind::Isotropic) {
        double n2 = 0.0;
        for (double a : x) n2 += a * a;
        const double n = std::sqrt(n2);
        for (std::size_t i = 0; i < d; ++i) out[i] = n * dW[i];
    } else {
        for (std::size_t i = 0; i < d; ++i) out[i] = x[i] * dW[i];
    }
}

std::vector<double> noise_matrix_apply(std::span<const double> x, NoiseKind kind,
                                       std::span<const double> dW) {
    std::vector<double> out(x.size());
    noise_matrix_apply(x, kind, dW, out);
    return out;
}

}  // namespace kcbo
