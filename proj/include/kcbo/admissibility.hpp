#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kcbo/objectives.hpp"
#include "kcbo/types.hpp"

namespace kcbo {

// mu_gap(p) = 2 - (p-1)^{-(p-2)/p} exp(((p-1)/p) alpha (f_upper - f_lower)).
// May be negative; positivity is exactly the admissibility signal.
double mu_gap(double p, double alpha, double f_lower, double f_upper);

// Largest alpha*(f_upper - f_lower) with mu_gap(p) > 0:
// (p log 2 + (p-2) log(p-1)) / (p-1).
double mu_gap_threshold(double p);

struct NormEquivalence {
    double c1 = 0.0;
    double c2 = 0.0;
};

// Sandwich constants of phi_{a,p}: for p = 2 the eigenvalues of
// [[a, m/(2 gamma)], [m/(2 gamma), 1]]; for p > 2 the Young-split bounds
// with 2(p-1)(m/(p gamma))^{p/(p-1)} and 1 -+ 2^{-(p-1)}.
NormEquivalence norm_equiv(double a, double p, double m, double gamma);

// Eigenvalue constants of the dedicated quadratic form psi2.
NormEquivalence psi2_norm_equiv(double m, double gamma);

// Spatial weight a_p = (1/p)(1 - m(p-2)/gamma^2) of the centered functional.
double lyapunov_weight(double p, double m, double gamma);

struct DecayRates {
    std::map<double, double> lambda;  // p -> decay rate of the centered functional
    std::optional<double> kappa;      // lambda_8 / 8 when 8 was requested
};

// lambda_p = p mu_gap_p/(4 gamma) for p > 2, lambda_2 = min(v1, v3)/c2_psi2.
// Throws AdmissibilityError for the p = 2 entry when gamma^2 <= 7m/6.
DecayRates decay_rates(const KineticParams& params, const ObjectiveSpec& objective,
                       const std::vector<double>& p_list);

struct CheckProfile {
    enum class Kind { Admissibility, CenteredDecay, PoC, Stability };
    Kind kind = Kind::Admissibility;
    std::vector<double> p_list = {2.0};  // Admissibility / CenteredDecay orders
    double r = 4.0;                      // PoC: moment order 2r >= 8
    double q = 1.0;                      // Stability: target rate J^{-q}, q > 1/2

    static CheckProfile admissibility(double p) { return {Kind::Admissibility, {p}, 4.0, 1.0}; }
    static CheckProfile centered_decay(std::vector<double> p) {
        return {Kind::CenteredDecay, std::move(p), 4.0, 1.0};
    }
    static CheckProfile poc(double r) { return {Kind::PoC, {}, r, 1.0}; }
    static CheckProfile stability(double q) { return {Kind::Stability, {}, 4.0, q}; }
};

struct ClauseCheck {
    std::string id;
    bool pass = false;
    double margin = 0.0;      // satisfied side minus required side, natural units
    std::string requirement;  // the inequality being enforced
};

struct AdmissibilityReport {
    std::map<std::string, double> constants;
    std::vector<ClauseCheck> checks;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::string to_text() const;
    std::string to_json(int indent = 2) const;
};

// Evaluates every structural constant and the clauses of the requested
// profile. Failures are report rows, never exceptions.
AdmissibilityReport check_assumptions(const KineticParams& params,
                                      const ObjectiveSpec& objective,
                                      const CheckProfile& profile);

struct SuggestOptions {
    double alpha = 0.0;
    NoiseKind noise_kind = NoiseKind::Anisotropic;
    double dt_target = 1e-3;  // keep m/(2 gamma) >= dt_target so dt_target is usable
    int budget = 1024;        // candidate evaluations
};

struct SuggestResult {
    std::optional<KineticParams> params;  // empty -> not found
    AdmissibilityReport report;           // passing report, or best near miss
    int evaluated = 0;
};

// Searches (m, gamma, sigma) for a parameter set passing the profile:
// m descends a small ladder, gamma scans its admissible window, sigma is
// halved until the noise clauses close. Heuristic, not exhaustive.
SuggestResult suggest_admissible(const ObjectiveSpec& objective, const CheckProfile& profile,
                                 const SuggestOptions& options = {});

// Convenience: CenteredDecay at each requested order.
SuggestResult suggest_admissible(const ObjectiveSpec& objective,
                                 const std::vector<double>& p_targets, int budget,
                                 const SuggestOptions& options = {});

std::string format_order(double p);  // map key suffix for a moment order

}  // namespace kcbo
