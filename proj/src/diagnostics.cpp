#include "kcbo/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "kcbo/consensus.hpp"
#include "kcbo/reduce.hpp"

namespace kcbo {

namespace {

double row_norm(std::span<const double> rows, std::size_t j, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double a = rows[j * d + i];
        s += a * a;
    }
    return std::sqrt(s);
}

double row_dot(std::span<const double> a, std::span<const double> b, std::size_t j, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[j * d + i] * b[j * d + i];
    return s;
}

// phi_{a,p} for one row pair; |x|^{p-2}<x,v> taken as 0 at x = 0.
double phi_row(std::span<const double> x, std::span<const double> v, std::size_t j,
               int d, double a, double p, double m_over_gamma) {
    const double nx = row_norm(x, j, d);
    const double nv = row_norm(v, j, d);
    double cross = 0.0;
    if (nx > 0.0) cross = std::pow(nx, p - 2.0) * row_dot(x, v, j, d);
    return a * std::pow(nx, p) + std::pow(nv, p) + m_over_gamma * cross;
}

}  // namespace

ShiftedState centered_shifted(const ParticleEnsemble& ens, double gamma) {
    if (ens.count < 1) throw EmptyEnsembleError("centered_shifted: empty ensemble");
    const int J = ens.count, d = ens.dim;
    ShiftedState out;
    out.count = J;
    out.dim = d;
    out.Y.resize(static_cast<std::size_t>(J) * d);
    out.Zhat.resize(static_cast<std::size_t>(J) * d);

    const auto mx = row_mean(ens.X, J, d);
    const auto mv = row_mean(ens.V, J, d);
    for (int j = 0; j < J; ++j) {
        for (int i = 0; i < d; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * d + i;
            out.Y[k] = ens.X[k] - mx[i];
            out.Zhat[k] = (ens.V[k] - mv[i]) - out.Y[k] / gamma;
        }
    }
    return out;
}

double psi2_functional(const ShiftedState& state, const KineticParams& params) {
    const double m = params.mass, gamma = params.friction;
    if (!(gamma * gamma > 7.0 * m / 6.0))
        throw AdmissibilityError("psi2_functional: gamma^2 <= 7m/6, psi2 not coercive");
    const double a2 = 9.0 / (2.0 * m) + 1.0 / (gamma * gamma);
    const int J = state.count, d = state.dim;
    const double s = pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
        const double ny = row_norm(state.Y, j, d);
        const double nz = row_norm(state.Zhat, j, d);
        const double cross = row_dot(state.Y, state.Zhat, j, d);
        return a2 * ny * ny + nz * nz + (5.0 / gamma) * cross;
    });
    return s / J;
}

double phi_functional(std::span<const double> x_rows, std::span<const double> v_rows,
                      int J, int d, double a, double p, const KineticParams& params) {
    if (p < 2.0) throw std::invalid_argument("phi_functional: p must be >= 2");
    const double mg = params.mass / params.friction;
    const double s = pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
        return phi_row(x_rows, v_rows, j, d, a, p, mg);
    });
    return s / J;
}

double lyapunov_Lp(const ShiftedState& state, double p, const KineticParams& params) {
    if (!(p > 2.0)) throw std::invalid_argument("lyapunov_Lp: p must be > 2");
    const double m = params.mass, gamma = params.friction;
    const double a_p = (1.0 / p) * (1.0 - m * (p - 2.0) / (gamma * gamma));
    if (!(a_p > 0.0))
        throw AdmissibilityError("lyapunov_Lp: a_p <= 0 (gamma^2 <= m(p-2))");
    return phi_functional(state.Y, state.Zhat, state.count, state.dim, a_p, p, params);
}

CouplingEnergy coupling_energy(std::span<const double> dX, std::span<const double> dV,
                               int J, int d, const KineticParams& params) {
    const double m = params.mass, gamma = params.friction;
    if (!(gamma > m / std::sqrt(2.0)))
        throw AdmissibilityError("coupling_energy: gamma <= m/sqrt(2), energy not coercive");
    const double a = 0.5 + 1.0 / m;
    CouplingEnergy out;
    out.E = phi_functional(dX, dV, J, d, a, 2.0, params);
    const auto mean_dx = row_mean(dX, J, d);
    double cm2 = 0.0;
    for (double c : mean_dx) cm2 += c * c;
    out.E -= cm2 / m;
    out.Ehat = pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
                   const double nx = row_norm(dX, j, d);
                   const double nv = row_norm(dV, j, d);
                   return nx * nx + nv * nv;
               }) /
               J;
    return out;
}

double lstd_functional(const ParticleEnsemble& ens, const KineticParams& params,
                       double p, double a, double b, double c) {
    if (p < 2.0) throw std::invalid_argument("lstd_functional: p must be >= 2");
    const int J = ens.count, d = ens.dim;
    const auto mx = row_mean(ens.X, J, d);
    std::vector<double> Y(static_cast<std::size_t>(J) * d);
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < d; ++i)
            Y[static_cast<std::size_t>(j) * d + i] = ens.X[static_cast<std::size_t>(j) * d + i] - mx[i];
    const double s = pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
        const double ny = row_norm(Y, j, d);
        const double nv = row_norm(ens.V, j, d);
        double cross = 0.0;
        if (ny > 0.0) cross = std::pow(ny, p - 2.0) * row_dot(Y, ens.V, j, d);
        return a * std::pow(ny, p) + b * std::pow(nv, p) + c * cross;
    });
    return s / J;
}

double centered_moment(std::span<const double> rows, int J, int d, double p) {
    if (J < 1) throw EmptyEnsembleError("centered_moment: empty ensemble");
    if (p < 1.0) throw std::invalid_argument("centered_moment: p must be >= 1");
    const auto mean = row_mean(rows, J, d);
    const double s = pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double a = rows[j * d + i] - mean[i];
            n2 += a * a;
        }
        return std::pow(std::sqrt(n2), p);
    });
    return s / J;
}

double raw_moment(std::span<const double> rows, int J, int d, double p) {
    const double s = pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
        return std::pow(row_norm(rows, j, d), p);
    });
    return s / J;
}

double coupled_w2_bound(std::span<const double> dX, int J, int d) {
    return pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
               const double n = row_norm(dX, j, d);
               return n * n;
           }) /
           J;
}

double exact_w2_1d(std::span<const double> xs_a, std::span<const double> xs_b) {
    if (xs_a.size() != xs_b.size())
        throw ShapeMismatchError("exact_w2_1d: clouds must have equal size");
    std::vector<double> a(xs_a.begin(), xs_a.end());
    std::vector<double> b(xs_b.begin(), xs_b.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t J = a.size();
    return pairwise_sum(0, J, [&](std::size_t j) {
               const double diff = a[j] - b[j];
               return diff * diff;
           }) /
           static_cast<double>(J);
}

LyapunovReport make_report(const ParticleEnsemble& ens, const KineticParams& params,
                           const ObjectiveSpec& objective, const ReportSpec& spec) {
    LyapunovReport rep;
    rep.t = ens.time;
    const int J = ens.count, d = ens.dim;

    const auto shifted = centered_shifted(ens, params.friction);
    rep.L2 = psi2_functional(shifted, params);
    rep.M2_X = centered_moment(ens.X, J, d, 2.0);
    rep.M2_V = centered_moment(ens.V, J, d, 2.0);
    for (double p : spec.p_list) {
        if (p <= 2.0) continue;
        rep.Lp[p] = lyapunov_Lp(shifted, p, params);
        rep.Mp_X[p] = centered_moment(ens.X, J, d, p);
        rep.Mp_V[p] = centered_moment(ens.V, J, d, p);
    }
    rep.raw_V2 = raw_moment(ens.V, J, d, 2.0);
    rep.raw_X8 = raw_moment(ens.X, J, d, 8.0);

    const auto delta = delta_alpha(ens.X, J, d, params.inverse_temperature, objective);
    double dn = 0.0;
    for (double a : delta) dn += a * a;
    rep.delta_alpha_norm = std::sqrt(dn);

    if (spec.with_lstd) {
        const double p = spec.lstd_p;
        const double a = spec.lstd_a != 0.0
                             ? spec.lstd_a
                             : (params.friction / (p * params.mass)) * spec.lstd_c;
        rep.Lstd_p = lstd_functional(ens, params, p, a, spec.lstd_b, spec.lstd_c);
    }
    return rep;
}

}  // namespace kcbo
