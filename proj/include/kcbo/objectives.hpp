#pragma once

#include <functional>
#include <span>
#include <string>

#include "kcbo/types.hpp"

namespace kcbo {

// Objective with certified global bounds and a global Lipschitz constant.
// The checker relies on f_lower <= f(x) <= f_upper for ALL x and
// |f(x) - f(y)| <= lipschitz * |x - y|, so the declared constants are
// conservative where they are not exact.
struct ObjectiveSpec {
    std::string name;
    int dim = 0;
    double f_lower = 0.0;
    double f_upper = 0.0;
    double lipschitz = 0.0;  // L_f

    std::function<double(std::span<const double>)> eval;
    // Optional tight-loop path used by the consensus inner loop.
    std::function<void(const double*, int, double*)> eval_rows;

    double range() const { return f_upper - f_lower; }

    void eval_all(const double* positions, int J, double* out) const {
        if (eval_rows) {
            eval_rows(positions, J, out);
            return;
        }
        for (int j = 0; j < J; ++j)
            out[j] = eval({positions + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)});
    }
};

// Shipped zoo: "ackley", "tanh_rastrigin", "tanh_quadratic", "cosine_well".
// Unknown name -> NameError, dim == 0 -> DimensionError.
ObjectiveSpec make_objective(const std::string& name, int dim);

}  // namespace kcbo
