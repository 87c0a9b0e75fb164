#include "kcbo/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace kcbo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm2sq(std::span<const double> x) {
    double s = 0.0;
    for (double a : x) s += a * a;
    return s;
}

// Ackley, standard form. Global minimum f(0) = 0.
double ackley_eval(std::span<const double> x) {
    const int d = static_cast<int>(x.size());
    double sq = 0.0, cs = 0.0;
    for (double a : x) {
        sq += a * a;
        cs += std::cos(kTwoPi * a);
    }
    const double rms = std::sqrt(sq / d);
    return -20.0 * std::exp(-0.2 * rms) - std::exp(cs / d) + 20.0 + std::numbers::e;
}

// Rastrigin wrapped in tanh and rescaled so the landscape does not saturate
// immediately: f = tanh(r(x) / (10 d)), r = 10 d + sum(x_i^2 - 10 cos(2 pi x_i)).
double tanh_rastrigin_eval(std::span<const double> x) {
    const int d = static_cast<int>(x.size());
    double r = 10.0 * d;
    for (double a : x) r += a * a - 10.0 * std::cos(kTwoPi * a);
    return std::tanh(r / (10.0 * d));
}

double tanh_quadratic_eval(std::span<const double> x) {
    return std::tanh(norm2sq(x));
}

double cosine_well_eval(std::span<const double> x) {
    const int d = static_cast<int>(x.size());
    double cs = 0.0;
    for (double a : x) cs += std::cos(a);
    return 1.0 - cs / d;
}

// sup_u 2 u sech^2(u^2) over u >= 0; the exact gradient-norm bound of
// tanh(|x|^2), independent of dimension. Golden-section on [0, 2].
double tanh_quadratic_lipschitz() {
    auto h = [](double u) {
        const double c = std::cosh(u * u);
        return 2.0 * u / (c * c);
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (h(c) > h(d)) b = d; else a = c;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    return h(0.5 * (a + b));
}

// |grad| of tanh_rastrigin has no closed-form supremum. Estimate it on a
// quasi-random grid (R2 sequence) over a box that provably contains the
// maximizer (outside it sech^2 is below 1e-7), then double.
double tanh_rastrigin_lipschitz(int d) {
    // generalized golden ratio: root of x^(d+1) = x + 1
    double phi = 1.5;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
    std::vector<double> alpha(d), u(d, 0.5);
    double inv = 1.0;
    for (int i = 0; i < d; ++i) {
        inv /= phi;
        alpha[i] = inv;
    }
    const double L = 8.0;
    const int n_points = 100000;
    double best = 0.0;
    std::vector<double> x(d);
    for (int n = 0; n < n_points; ++n) {
        for (int i = 0; i < d; ++i) {
            u[i] += alpha[i];
            u[i] -= std::floor(u[i]);
            x[i] = L * (2.0 * u[i] - 1.0);
        }
        double r = 10.0 * d, g2 = 0.0;
        for (int i = 0; i < d; ++i) r += x[i] * x[i] - 10.0 * std::cos(kTwoPi * x[i]);
        for (int i = 0; i < d; ++i) {
            const double gi = 2.0 * x[i] + 20.0 * std::numbers::pi * std::sin(kTwoPi * x[i]);
            g2 += gi * gi;
        }
        const double c = std::cosh(r / (10.0 * d));
        const double grad = std::sqrt(g2) / (10.0 * d * c * c);
        best = std::max(best, grad);
    }
    return 2.0 * best;
}

}  // namespace

ObjectiveSpec make_objective(const std::string& name, int dim) {
    if (dim <= 0) throw DimensionError("make_objective: dim must be positive");
    ObjectiveSpec spec;
    spec.name = name;
    spec.dim = dim;
    const double sqrt_d = std::sqrt(static_cast<double>(dim));

    if (name == "ackley") {
        spec.eval = ackley_eval;
        spec.f_lower = 0.0;
        spec.f_upper = 20.0 + std::numbers::e - std::exp(-1.0);
        // |grad| <= 4/sqrt(d) from the rms term plus 2 pi e/sqrt(d) from the cosine term
        spec.lipschitz = (4.0 + kTwoPi * std::numbers::e) / sqrt_d;
    } else if (name == "tanh_rastrigin") {
        spec.eval = tanh_rastrigin_eval;
        spec.f_lower = 0.0;
        spec.f_upper = 1.0;
        spec.lipschitz = tanh_rastrigin_lipschitz(dim);
    } else if (name == "tanh_quadratic") {
        spec.eval = tanh_quadratic_eval;
        spec.f_lower = 0.0;
        spec.f_upper = 1.0;
        spec.lipschitz = tanh_quadratic_lipschitz();
    } else if (name == "cosine_well") {
        spec.eval = cosine_well_eval;
        spec.f_lower = 0.0;
        spec.f_upper = 2.0;
        spec.lipschitz = 1.0 / sqrt_d;  // |grad| = |sin(x)|/d componentwise
        const int d = dim;
        spec.eval_rows = [d](const double* rows, int J, double* out) {
            for (int j = 0; j < J; ++j) {
                const double* x = rows + static_cast<std::size_t>(j) * d;
                double cs = 0.0;
                for (int i = 0; i < d; ++i) cs += std::cos(x[i]);
                out[j] = 1.0 - cs / d;
            }
        };
    } else {
        throw NameError("make_objective: unknown objective '" + name + "'");
    }
    return spec;
}

}  // namespace kcbo
