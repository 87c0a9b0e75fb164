#pragma once

#include <span>
#include <vector>

#include "kcbo/objectives.hpp"
#include "kcbo/types.hpp"

namespace kcbo {

struct ConsensusPoint {
    std::vector<double> point;  // M_alpha, convex combination of the rows
    double log_partition = 0.0; // log of the mean weight exp(-alpha f)
};

// Softmax-weighted ensemble mean with weights exp(-alpha f(x_j)),
// stabilized by a max shift so that alpha * (f_upper - f_lower) up to ~700
// stays finite. positions is row-major J x d.
ConsensusPoint weighted_consensus(std::span<const double> positions, int J, int d,
                                  double alpha, const ObjectiveSpec& objective);

inline ConsensusPoint weighted_consensus(const ParticleEnsemble& ens, double alpha,
                                         const ObjectiveSpec& objective) {
    return weighted_consensus(ens.X, ens.count, ens.dim, alpha, objective);
}

// Displacement of the weighted mean from the arithmetic mean:
// Delta_alpha = m_X - M_alpha.
std::vector<double> delta_alpha(std::span<const double> positions, int J, int d,
                                double alpha, const ObjectiveSpec& objective);

// Matrix-free action of the noise operator on an increment:
//   Isotropic   : |x| * dW
//   Anisotropic : x (componentwise) * dW
void noise_matrix_apply(std::span<const double> x, NoiseKind kind,
                        std::span<const double> dW, std::span<double> out);

std::vector<double> noise_matrix_apply(std::span<const double> x, NoiseKind kind,
                                       std::span<const double> dW);

// Arithmetic mean of the rows, pairwise-reduced.
std::vector<double> row_mean(std::span<const double> rows, int J, int d);

}  // namespace kcbo
