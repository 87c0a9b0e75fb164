#include "kcbo/dynamics.hpp"

#include <cmath>

namespace kcbo {

namespace {

void check_finite(const ParticleEnsemble& ens, long step_index, const char* where) {
    if (!ens.finite())
        throw BlowupError(std::string(where) + ": non-finite state", step_index, ens.time);
}

// Velocity update of particle j given its force displacement u = X_old - M:
//   V <- V - (gamma/m) V dt - u/m dt + (sigma/m) S(u) dW
inline void kick(double* v, const double* u, const double* dw, int d,
                 const KineticParams& params) {
    const double m = params.mass, gamma = params.friction, sigma = params.noise_strength;
    const double dt = params.dt;
    if (params.noise_kind == NoiseKind::Isotropic) {
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) n2 += u[i] * u[i];
        const double n = std::sqrt(n2);
        for (int i = 0; i < d; ++i)
            v[i] += -(gamma / m) * v[i] * dt - u[i] / m * dt + (sigma / m) * n * dw[i];
    } else {
        for (int i = 0; i < d; ++i)
            v[i] += -(gamma / m) * v[i] * dt - u[i] / m * dt + (sigma / m) * u[i] * dw[i];
    }
}

}  // namespace

void em_step_with(ParticleEnsemble& ens, const KineticParams& params,
                  std::span<const double> consensus, std::span<const double> dW,
                  long step_index) {
    const int J = ens.count, d = ens.dim;
    const double dt = params.dt;
    std::vector<double> u(d);
    for (int j = 0; j < J; ++j) {
        double* x = ens.X.data() + static_cast<std::size_t>(j) * d;
        double* v = ens.V.data() + static_cast<std::size_t>(j) * d;
        const double* dw = dW.data() + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < d; ++i) u[i] = x[i] - consensus[i];
        for (int i = 0; i < d; ++i) x[i] += v[i] * dt;  // transport uses pre-kick velocity
        kick(v, u.data(), dw, d, params);
    }
    ens.time += dt;
    check_finite(ens, step_index, "em_step");
}

void em_step(ParticleEnsemble& ens, const KineticParams& params,
             const ObjectiveSpec& objective, RngStream& stream, long step_index) {
    const auto consensus = weighted_consensus(ens, params.inverse_temperature, objective);
    std::vector<double> dW(static_cast<std::size_t>(ens.count) * ens.dim);
    fill_gaussian_increments(stream, params.dt, dW);
    em_step_with(ens, params, consensus.point, dW, step_index);
}

void em_step_first_order(std::vector<double>& positions, int J, int d,
                         const KineticParams& params, const ObjectiveSpec& objective,
                         RngStream& stream, long step_index) {
    const auto consensus =
        weighted_consensus(positions, J, d, params.inverse_temperature, objective);
    std::vector<double> dW(static_cast<std::size_t>(J) * d);
    fill_gaussian_increments(stream, params.dt, dW);
    const double dt = params.dt, sigma = params.noise_strength;
    std::vector<double> u(d);
    for (int j = 0; j < J; ++j) {
        double* x = positions.data() + static_cast<std::size_t>(j) * d;
        const double* dw = dW.data() + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < d; ++i) u[i] = x[i] - consensus.point[i];
        if (params.noise_kind == NoiseKind::Isotropic) {
            double n2 = 0.0;
            for (int i = 0; i < d; ++i) n2 += u[i] * u[i];
            const double n = std::sqrt(n2);
            for (int i = 0; i < d; ++i) x[i] += -u[i] * dt + sigma * n * dw[i];
        } else {
            for (int i = 0; i < d; ++i) x[i] += -u[i] * dt + sigma * u[i] * dw[i];
        }
    }
    for (double a : positions)
        if (!std::isfinite(a))
            throw BlowupError("em_step_first_order: non-finite state", step_index, 0.0);
}

void CoupledPair::validate() const {
    if (a.count != b.count || a.dim != b.dim)
        throw ShapeMismatchError("CoupledPair: systems must share J and dim");
    if (a.time != b.time)
        throw ShapeMismatchError("CoupledPair: systems must share the clock");
    if (mode == ConsensusModeB::ReferenceProxy) {
        if (!reference.has_value())
            throw ShapeMismatchError("CoupledPair: ReferenceProxy requires a reference ensemble");
        if (reference->dim != a.dim)
            throw ShapeMismatchError("CoupledPair: reference dim mismatch");
        if (reference->count < 8 * a.count)
            throw ShapeMismatchError("CoupledPair: reference must hold at least 8 J particles");
    }
}

void coupled_step(CoupledPair& pair, const KineticParams& params,
                  const ObjectiveSpec& objective, RngStream& stream, long step_index) {
    pair.validate();
    const int J = pair.a.count, d = pair.a.dim;
    const double alpha = params.inverse_temperature;

    std::vector<double> dW(static_cast<std::size_t>(J) * d);
    fill_gaussian_increments(stream, params.dt, dW);

    const auto consensus_a = weighted_consensus(pair.a, alpha, objective);
    std::vector<double> consensus_b;
    if (pair.mode == ConsensusModeB::Empirical) {
        consensus_b = weighted_consensus(pair.b, alpha, objective).point;
    } else {
        consensus_b = weighted_consensus(*pair.reference, alpha, objective).point;
    }

    em_step_with(pair.a, params, consensus_a.point, dW, step_index);
    em_step_with(pair.b, params, consensus_b, dW, step_index);

    if (pair.reference.has_value()) {
        auto& ref = *pair.reference;
        const auto consensus_ref = weighted_consensus(ref, alpha, objective);
        std::vector<double> dW_ref(static_cast<std::size_t>(ref.count) * d);
        fill_gaussian_increments(stream, params.dt, dW_ref);
        em_step_with(ref, params, consensus_ref.point, dW_ref, step_index);
    }
}

ParticleEnsemble run_trajectory(ParticleEnsemble ens, const KineticParams& params,
                                const ObjectiveSpec& objective, double T, RngStream& stream,
                                const TrajectoryObserver& observer,
                                const TrajectoryOptions& options) {
    if (T < 0.0) throw std::invalid_argument("run_trajectory: T must be >= 0");
    const long n_steps = static_cast<long>(std::ceil(T / params.dt - 1e-12));
    const int stride = options.record_stride > 0 ? options.record_stride : 1;

    if (observer) observer(make_report(ens, params, objective, options.report));
    for (long k = 1; k <= n_steps; ++k) {
        try {
            em_step(ens, params, objective, stream, k);
        } catch (const BlowupError& e) {
            throw BlowupError(std::string(e.what()) + " during trajectory", k, ens.time);
        }
        if (observer && (k % stride == 0 || k == n_steps))
            observer(make_report(ens, params, objective, options.report));
    }
    return ens;
}

}  // namespace kcbo
