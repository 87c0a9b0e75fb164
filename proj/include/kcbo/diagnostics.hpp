#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "kcbo/objectives.hpp"
#include "kcbo/types.hpp"

namespace kcbo {

// Centered positions and shifted velocities. Both columns sum to zero:
//   Y^j    = X^j - mean(X)
//   Zhat^j = (V^j - mean(V)) - Y^j / gamma
struct ShiftedState {
    int count = 0;
    int dim = 0;
    std::vector<double> Y;
    std::vector<double> Zhat;
};

ShiftedState centered_shifted(const ParticleEnsemble& ens, double gamma);

// Dedicated quadratic form for the p = 2 decay estimate:
//   psi_2(y, z) = a2 |y|^2 + |z|^2 + (5/gamma) <y, z>,  a2 = 9/(2m) + 1/gamma^2.
// Requires gamma^2 > 7m/6 (coercivity), else AdmissibilityError.
double psi2_functional(const ShiftedState& state, const KineticParams& params);

// Polynomial form phi_{a,p}(x,v) = a|x|^p + |v|^p + (m/gamma)|x|^{p-2}<x,v>,
// ensemble-averaged over the rows. The cross term is 0 at x = 0 (limit).
double phi_functional(std::span<const double> x_rows, std::span<const double> v_rows,
                      int J, int d, double a, double p, const KineticParams& params);

// Centered Lyapunov functional for p > 2: phi_{a_p,p} on (Y, Zhat) with
// a_p = (1/p)(1 - m(p-2)/gamma^2). AdmissibilityError when a_p <= 0.
double lyapunov_Lp(const ShiftedState& state, double p, const KineticParams& params);

// Modified coupling energy and Euclidean coupling error:
//   E    = (1/J) sum phi_{a,2}(dX^j, dV^j) - (1/m)|mean dX|^2,  a = 1/2 + 1/m
//   Ehat = (1/J) sum (|dX^j|^2 + |dV^j|^2)
// Requires gamma > m/sqrt(2), else AdmissibilityError.
struct CouplingEnergy {
    double E = 0.0;
    double Ehat = 0.0;
};
CouplingEnergy coupling_energy(std::span<const double> dX, std::span<const double> dV,
                               int J, int d, const KineticParams& params);

// Unshifted comparison functional evaluated on (X - mean(X), V):
//   (1/J) sum ( a|Y|^p + b|V|^p + c|Y|^{p-2}<Y,V> ).
double lstd_functional(const ParticleEnsemble& ens, const KineticParams& params,
                       double p, double a, double b, double c);

// (1/J) sum |x^j - mean|^p over the rows.
double centered_moment(std::span<const double> rows, int J, int d, double p);

// (1/J) sum |x^j|^p, raw moment of the rows.
double raw_moment(std::span<const double> rows, int J, int d, double p);

// Coupled upper bound (1/J) sum |dX^j|^2 for W2^2 under the synchronous
// pairing; exact only in 1-D via sorting.
double coupled_w2_bound(std::span<const double> dX, int J, int d);
double exact_w2_1d(std::span<const double> xs_a, std::span<const double> xs_b);

// Snapshot of every diagnostic the experiments record. Serialized to CSV in
// the fixed column order documented in experiments.cpp.
struct LyapunovReport {
    double t = 0.0;
    double L2 = 0.0;                   // psi2 on (Y, Zhat)
    std::map<double, double> Lp;       // p -> phi_{a_p,p} on (Y, Zhat), p > 2
    std::optional<double> Lstd_p;      // unshifted comparison functional
    double M2_X = 0.0;                 // centered second moments
    double M2_V = 0.0;
    std::map<double, double> Mp_X;     // centered spatial p-moments
    std::map<double, double> Mp_V;     // centered velocity p-moments
    double raw_V2 = 0.0;               // (1/J) sum |V^j|^2
    double raw_X8 = 0.0;               // (1/J) sum |X^j|^8
    double delta_alpha_norm = 0.0;     // |m_X - M_alpha|
    std::optional<double> coupling_E;
    std::optional<double> coupling_Ehat;
};

struct ReportSpec {
    std::vector<double> p_list = {8.0};  // extra orders beyond 2
    bool with_lstd = false;
    double lstd_p = 8.0;
    double lstd_a = 0.0;  // 0 means the default (gamma/(p m)) * lstd_c
    double lstd_b = 1.0;
    double lstd_c = 1.0;
};

LyapunovReport make_report(const ParticleEnsemble& ens, const KineticParams& params,
                           const ObjectiveSpec& objective, const ReportSpec& spec = {});

}  // namespace kcbo
