#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcbo {

// How the multiplicative noise acts on a displacement u:
//   Isotropic   : |u| * dW
//   Anisotropic : u (componentwise) * dW
enum class NoiseKind { Isotropic, Anisotropic };

struct NameError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyEnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AdmissibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite state detected during integration. Carries where it happened.
struct BlowupError : std::runtime_error {
    long step_index;
    double time;
    BlowupError(const std::string& what, long step, double t)
        : std::runtime_error(what), step_index(step), time(t) {}
};

// Parameters of the kinetic consensus dynamics:
//   dX^j = V^j dt
//   m dV^j = -gamma V^j dt - (X^j - M_alpha) dt + sigma S(X^j - M_alpha) dW^j
struct KineticParams {
    double mass = 1.0;                // m > 0
    double friction = 1.0;            // gamma > 0
    double noise_strength = 0.0;      // sigma >= 0
    double inverse_temperature = 0.0; // alpha >= 0
    NoiseKind noise_kind = NoiseKind::Isotropic;
    double dt = 1e-3;

    // dt <= m/(2 gamma) keeps the explicit velocity update contractive.
    void validate() const {
        if (!(mass > 0.0)) throw std::invalid_argument("KineticParams: mass must be positive");
        if (!(friction > 0.0)) throw std::invalid_argument("KineticParams: friction must be positive");
        if (!(noise_strength >= 0.0)) throw std::invalid_argument("KineticParams: sigma must be nonnegative");
        if (!(inverse_temperature >= 0.0)) throw std::invalid_argument("KineticParams: alpha must be nonnegative");
        if (!(dt > 0.0)) throw std::invalid_argument("KineticParams: dt must be positive");
        if (dt > mass / (2.0 * friction) * (1.0 + 1e-12))
            throw std::invalid_argument("KineticParams: dt exceeds m/(2 gamma) stability guard");
    }
};

// Positions and velocities of J particles in d dimensions, row-major J x d.
struct ParticleEnsemble {
    int dim = 0;
    int count = 0;
    std::vector<double> X;
    std::vector<double> V;
    double time = 0.0;

    ParticleEnsemble() = default;
    ParticleEnsemble(int J, int d)
        : dim(d), count(J),
          X(static_cast<std::size_t>(J) * d, 0.0),
          V(static_cast<std::size_t>(J) * d, 0.0) {
        if (d <= 0) throw DimensionError("ParticleEnsemble: dim must be positive");
        if (J <= 0) throw EmptyEnsembleError("ParticleEnsemble: count must be positive");
    }

    std::span<const double> x(int j) const { return {X.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)}; }
    std::span<double> x(int j) { return {X.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)}; }
    std::span<const double> v(int j) const { return {V.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)}; }
    std::span<double> v(int j) { return {V.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)}; }

    bool finite() const {
        for (double a : X)
            if (!std::isfinite(a)) return false;
        for (double a : V)
            if (!std::isfinite(a)) return false;
        return true;
    }
};

inline double tau_of(NoiseKind kind, int d) {
    return kind == NoiseKind::Isotropic ? static_cast<double>(d) : 1.0;
}

inline double chi_of(NoiseKind kind, int d, double p) {
    return tau_of(kind, d) + p - 2.0;
}

}  // namespace kcbo
