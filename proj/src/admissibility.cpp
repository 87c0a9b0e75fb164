#include "kcbo/admissibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kcbo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConstantsAtOrder {
    double mu = 0.0;       // mu_gap at this order
    double a_p = 0.0;      // spatial weight (p > 2)
    double c1 = 0.0;       // norm equivalence of the centered functional
    double c2 = 0.0;
    double chi = 0.0;      // tau + p - 2
    double Lambda_p = 0.0;
    double C_pos = 0.0;
    double eta_p = 0.0;
    double Gamma_Y = 0.0;
    double lambda = 0.0;   // decay rate
};

struct Constants {
    double m, gamma, sigma, alpha, tau, range, L_f;
    double C_lem, K_Z, K_Y, a2, c1_2, c2_2, K_sigma, v1, v3;
    double C_M, Lambda_noise, C_norm, cE1, cE2, a_coupling;
    std::map<double, ConstantsAtOrder> per_p;
};

ConstantsAtOrder order_constants(double p, const Constants& c) {
    ConstantsAtOrder o;
    o.mu = mu_gap(p, c.alpha, 0.0, c.range);
    o.chi = c.tau + p - 2.0;
    if (p > 2.0) {
        o.a_p = (1.0 / p) * (1.0 - c.m * (p - 2.0) / (c.gamma * c.gamma));
        const auto ne = norm_equiv(o.a_p, p, c.m, c.gamma);
        o.c1 = ne.c1;
        o.c2 = ne.c2;
        o.lambda = p * o.mu / (4.0 * c.gamma);
        if (o.mu > 0.0) {
            o.Lambda_p = (2.0 * (p - 2.0) * o.chi / (c.m * c.m)) *
                         std::pow(o.mu * c.m * c.m / (64.0 * o.chi), -2.0 / (p - 2.0)) *
                         (1.0 + std::pow(c.C_lem / 2.0, 2.0 / (p - 2.0)));
        } else {
            o.Lambda_p = kInf;
        }
        o.C_pos = 1.0 - 3.0 * o.mu / 16.0 - c.m * (p - 1.0) * (p - 2.0) / p;
        o.eta_p = o.C_pos - o.mu / 4.0;
        if (o.eta_p > 0.0) {
            o.Gamma_Y = std::max(
                {1.0,
                 std::pow(2.0 * std::pow(4.0, p - 1.0) * (2.0 / c.m + 1.0) / o.eta_p,
                          1.0 / (p - 2.0)),
                 o.mu * c.m * (p - 1.0) / (2.0 * o.eta_p)});
        } else {
            o.Gamma_Y = kInf;
        }
    } else {
        o.a_p = c.a2;
        o.c1 = c.c1_2;
        o.c2 = c.c2_2;
        o.lambda = c.c2_2 > 0.0 ? std::min(c.v1, c.v3) / c.c2_2 : 0.0;
    }
    return o;
}

Constants build_constants(const KineticParams& params, const ObjectiveSpec& objective,
                          const std::set<double>& orders) {
    Constants c{};
    c.m = params.mass;
    c.gamma = params.friction;
    c.sigma = params.noise_strength;
    c.alpha = params.inverse_temperature;
    c.tau = tau_of(params.noise_kind, objective.dim);
    c.range = objective.range();
    c.L_f = objective.lipschitz;

    c.C_lem = std::exp(c.alpha * c.range);
    c.K_Z = c.gamma / c.m + 1.0 / c.gamma;
    c.K_Y = 2.0 / c.m + 1.0 / (c.gamma * c.gamma);
    c.a2 = 9.0 / (2.0 * c.m) + 1.0 / (c.gamma * c.gamma);
    const auto psi = psi2_norm_equiv(c.m, c.gamma);
    c.c1_2 = psi.c1;
    c.c2_2 = psi.c2;
    c.K_sigma = 2.0 * c.sigma * c.sigma * c.tau * (1.0 + c.C_lem) / (c.m * c.m);
    c.v1 = 1.0 / (c.m * c.gamma) + 3.0 / (c.gamma * c.gamma * c.gamma) - c.K_sigma;
    c.v3 = 2.0 * c.gamma / c.m - 3.0 / c.gamma;
    c.C_M = 2.0 * c.alpha * c.L_f * std::exp(2.0 * c.alpha * c.range);
    c.Lambda_noise = c.sigma * c.sigma * c.tau / (c.m * c.m);

    c.a_coupling = 0.5 + 1.0 / c.m;
    const auto e1 = norm_equiv(c.a_coupling, 2.0, c.m, c.gamma);
    const auto e2 = norm_equiv(c.a_coupling - 1.0 / c.m, 2.0, c.m, c.gamma);
    c.cE1 = std::min(e1.c1, e2.c1);
    c.cE2 = std::max(e1.c2, e2.c2);
    c.C_norm = c.cE1 > 0.0
                   ? std::sqrt(2.0 / c.cE1 *
                               std::max(4.0 / (c.m * c.m), 1.0 / (c.gamma * c.gamma)))
                   : kInf;

    for (double p : orders) c.per_p[p] = order_constants(p, c);
    return c;
}

void emit_constants(const Constants& c, std::map<std::string, double>& out) {
    out["K_Z"] = c.K_Z;
    out["K_Y"] = c.K_Y;
    out["a2"] = c.a2;
    out["c1_psi2"] = c.c1_2;
    out["c2_psi2"] = c.c2_2;
    out["C_lem"] = c.C_lem;
    out["K_sigma"] = c.K_sigma;
    out["v1"] = c.v1;
    out["v3"] = c.v3;
    out["C_M"] = c.C_M;
    out["Lambda_noise"] = c.Lambda_noise;
    out["C_norm"] = c.C_norm;
    out["cE1"] = c.cE1;
    out["cE2"] = c.cE2;
    out["a_coupling"] = c.a_coupling;
    out["tau"] = c.tau;
    for (const auto& [p, o] : c.per_p) {
        const std::string s = format_order(p);
        out["mu_gap[" + s + "]"] = o.mu;
        out["lambda[" + s + "]"] = o.lambda;
        out["chi_S[" + s + "]"] = o.chi;
        // K_{p,gamma}-adjusted moment-equivalence constants
        const double K = std::max(1.0 + std::pow(2.0, p - 1.0) * std::pow(c.gamma, -p),
                                  std::pow(2.0, p - 1.0));
        out["C_p1[" + s + "]"] = o.c1 / K;
        out["C_p2[" + s + "]"] = o.c2 * K;
        if (p > 2.0) {
            out["a_p[" + s + "]"] = o.a_p;
            out["c1_phi[" + s + "]"] = o.c1;
            out["c2_phi[" + s + "]"] = o.c2;
            out["Lambda_p[" + s + "]"] = o.Lambda_p;
            out["C_pos[" + s + "]"] = o.C_pos;
            out["eta_p[" + s + "]"] = o.eta_p;
            out["Gamma_Y[" + s + "]"] = o.Gamma_Y;
            out["Lambda_noise_chi[" + s + "]"] = c.sigma * c.sigma * o.chi / (c.m * c.m);
        }
    }
    if (c.per_p.count(8.0)) out["kappa"] = c.per_p.at(8.0).lambda / 8.0;
}

void add_clause(AdmissibilityReport& rep, const std::string& id, double satisfied,
                double required, bool strict, const std::string& requirement) {
    ClauseCheck chk;
    chk.id = id;
    chk.margin = satisfied - required;
    chk.pass = strict ? chk.margin > 0.0 : chk.margin >= 0.0;
    chk.requirement = requirement;
    rep.checks.push_back(std::move(chk));
}

void admissibility_clauses(const Constants& c, double p, AdmissibilityReport& rep) {
    const std::string s = format_order(p);
    if (p == 2.0) {
        add_clause(rep, "adm[2].friction", c.gamma * c.gamma, 1.5 * c.m, true,
                   "gamma^2 > 3m/2");
        add_clause(rep, "adm[2].small_noise", 1.0 / (c.m * c.gamma), c.K_sigma, true,
                   "K_sigma < 1/(m gamma)");
        return;
    }
    const auto& o = c.per_p.at(p);
    add_clause(rep, "adm[" + s + "].mu_gap", o.mu, 0.0, true, "mu_gap > 0");
    add_clause(rep, "adm[" + s + "].friction", c.gamma * c.gamma, c.m * (p - 2.0), true,
               "gamma^2 > m(p-2)");
    add_clause(rep, "adm[" + s + "].mass",
               p * (16.0 - 7.0 * o.mu) / (16.0 * (p - 1.0) * (p - 2.0)), c.m, true,
               "m < p(16-7 mu_gap)/(16(p-1)(p-2))");
    add_clause(rep, "adm[" + s + "].coercivity", o.a_p,
               2.0 * (p - 1.0) * std::pow(c.m / (p * c.gamma), p / (p - 1.0)), true,
               "a_p > 2(p-1)(m/(p gamma))^{p/(p-1)}");
}

void centered_decay_clauses(const Constants& c, double p, AdmissibilityReport& rep) {
    admissibility_clauses(c, p, rep);
    if (p == 2.0) return;
    const std::string s = format_order(p);
    const auto& o = c.per_p.at(p);
    add_clause(rep, "cd[" + s + "].eta_pos", o.eta_p, 0.0, true,
               "eta_p = C_pos - mu_gap/4 > 0");
    add_clause(rep, "cd[" + s + "].gamma_floor", c.gamma, o.Gamma_Y, false,
               "gamma >= Gamma_Y");
    const double lhs = (o.mu > 0.0 && std::isfinite(o.Lambda_p)
                            ? o.Lambda_p * std::pow(c.sigma, 2.0 * p / (p - 2.0)) *
                                  std::pow(c.gamma, 2.0 / (p - 2.0))
                            : kInf) +
                       (p - 1.0) / (4.0 * c.gamma) +
                       2.0 * c.m * (p - 1.0) / (p * c.gamma) +
                       (p * o.mu / (4.0 * c.gamma)) * (1.0 + c.m / (p * c.gamma));
    add_clause(rep, "cd[" + s + "].z_closure", (p + 1.0) / (2.0 * c.m) * c.gamma, lhs, false,
               "noise + cross terms <= (p+1) gamma/(2m)");
}

void coupling_clauses(const Constants& c, double r_or_pstar, bool stability,
                      AdmissibilityReport& rep) {
    const std::string pre = stability ? "stab" : "poc";
    add_clause(rep, pre + ".coupling_coercivity", c.gamma, c.m / std::sqrt(2.0), true,
               "gamma > m/sqrt(2)");

    const double mu8 = c.per_p.at(8.0).mu;
    add_clause(rep, pre + ".concentration_gap_2", std::min(c.v1, c.v3),
               c.c2_2 * mu8 / (4.0 * c.gamma), true,
               "min(v1, v3) > c2_psi2 mu_gap[8]/(4 gamma)");

    const double p_hi = r_or_pstar;
    const std::string s = format_order(p_hi);
    add_clause(rep, pre + ".concentration_gap_high", c.per_p.at(p_hi).mu, mu8 / 2.0, true,
               "mu_gap[" + s + "] > mu_gap[8]/2");

    add_clause(rep, pre + ".coupling_small_noise", c.m * c.m / (c.gamma * c.tau),
               c.sigma * c.sigma, false, "sigma^2 <= m^2/(gamma tau)");

    const double lambda2 = c.per_p.at(2.0).lambda;
    const double kappa = c.per_p.at(8.0).lambda / 8.0;
    add_clause(rep, pre + ".concentration_small_noise",
               c.m * c.m * c.c1_2 * (lambda2 - kappa) / (2.0 * c.tau * (1.0 + c.C_lem)),
               c.sigma * c.sigma, false,
               "sigma^2 <= m^2 c1_psi2 (lambda_2 - kappa)/(2 tau (1 + C_lem))");
}

}  // namespace

std::string format_order(double p) {
    if (p == std::floor(p) && std::abs(p) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(p));
        return buf;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", p);
    return buf;
}

double mu_gap(double p, double alpha, double f_lower, double f_upper) {
    if (p < 2.0) throw std::invalid_argument("mu_gap: p must be >= 2");
    if (f_upper < f_lower) throw std::invalid_argument("mu_gap: f_upper < f_lower");
    const double spread = alpha * (f_upper - f_lower);
    return 2.0 - std::pow(p - 1.0, -(p - 2.0) / p) * std::exp((p - 1.0) / p * spread);
}

double mu_gap_threshold(double p) {
    return (p * std::log(2.0) + (p - 2.0) * std::log(p - 1.0)) / (p - 1.0);
}

NormEquivalence norm_equiv(double a, double p, double m, double gamma) {
    if (!(a > 0.0)) throw std::invalid_argument("norm_equiv: a must be positive");
    NormEquivalence out;
    if (p == 2.0) {
        const double disc = std::sqrt((a - 1.0) * (a - 1.0) + (m / gamma) * (m / gamma));
        out.c1 = (a + 1.0 - disc) / 2.0;
        out.c2 = (a + 1.0 + disc) / 2.0;
    } else if (p > 2.0) {
        const double young = 2.0 * (p - 1.0) * std::pow(m / (p * gamma), p / (p - 1.0));
        const double off = std::pow(2.0, -(p - 1.0));
        out.c1 = std::min(a - young, 1.0 - off);
        out.c2 = std::max(a + young, 1.0 + off);
    } else {
        throw std::invalid_argument("norm_equiv: p must be >= 2");
    }
    return out;
}

NormEquivalence psi2_norm_equiv(double m, double gamma) {
    const double a2 = 9.0 / (2.0 * m) + 1.0 / (gamma * gamma);
    const double disc = std::sqrt((a2 - 1.0) * (a2 - 1.0) + (5.0 / gamma) * (5.0 / gamma));
    return {(a2 + 1.0 - disc) / 2.0, (a2 + 1.0 + disc) / 2.0};
}

double lyapunov_weight(double p, double m, double gamma) {
    if (!(p > 2.0)) throw std::invalid_argument("lyapunov_weight: p must be > 2");
    return (1.0 / p) * (1.0 - m * (p - 2.0) / (gamma * gamma));
}

DecayRates decay_rates(const KineticParams& params, const ObjectiveSpec& objective,
                       const std::vector<double>& p_list) {
    std::set<double> orders(p_list.begin(), p_list.end());
    const bool wants_p2 = orders.count(2.0) > 0;
    if (wants_p2 &&
        !(params.friction * params.friction > 7.0 * params.mass / 6.0))
        throw AdmissibilityError("decay_rates: gamma^2 <= 7m/6, c2_psi2 coercivity fails");
    const Constants c = build_constants(params, objective, orders);
    DecayRates out;
    for (const auto& [p, o] : c.per_p) out.lambda[p] = o.lambda;
    if (orders.count(8.0)) out.kappa = c.per_p.at(8.0).lambda / 8.0;
    return out;
}

AdmissibilityReport check_assumptions(const KineticParams& params,
                                      const ObjectiveSpec& objective,
                                      const CheckProfile& profile) {
    std::set<double> orders;
    double p_hi = 0.0;
    switch (profile.kind) {
        case CheckProfile::Kind::Admissibility:
        case CheckProfile::Kind::CenteredDecay:
            orders.insert(profile.p_list.begin(), profile.p_list.end());
            break;
        case CheckProfile::Kind::PoC:
            if (2.0 * profile.r < 8.0)
                throw std::invalid_argument("check_assumptions: PoC requires 2r >= 8");
            p_hi = 2.0 * profile.r;
            orders = {2.0, 8.0, p_hi};
            break;
        case CheckProfile::Kind::Stability:
            if (!(profile.q > 0.5))
                throw std::invalid_argument("check_assumptions: Stability requires q > 1/2");
            p_hi = std::max(8.0, 8.0 * profile.q);
            orders = {2.0, 8.0, p_hi};
            break;
    }

    const Constants c = build_constants(params, objective, orders);
    AdmissibilityReport rep;
    emit_constants(c, rep.constants);

    switch (profile.kind) {
        case CheckProfile::Kind::Admissibility:
            for (double p : orders) admissibility_clauses(c, p, rep);
            break;
        case CheckProfile::Kind::CenteredDecay:
            for (double p : orders) centered_decay_clauses(c, p, rep);
            break;
        case CheckProfile::Kind::PoC:
            for (double p : orders) centered_decay_clauses(c, p, rep);
            coupling_clauses(c, p_hi, false, rep);
            break;
        case CheckProfile::Kind::Stability:
            for (double p : orders) centered_decay_clauses(c, p, rep);
            coupling_clauses(c, p_hi, true, rep);
            break;
    }
    return rep;
}

std::string AdmissibilityReport::to_text() const {
    std::ostringstream os;
    os << "constants:\n";
    for (const auto& [k, v] : constants) {
        char line[96];
        std::snprintf(line, sizeof(line), "  %-24s = %.12g\n", k.c_str(), v);
        os << line;
    }
    os << "checks:\n";
    for (const auto& c : checks) {
        char line[160];
        std::snprintf(line, sizeof(line), "  [%s] %-34s margin=%+.6g   (%s)\n",
                      c.pass ? "PASS" : "FAIL", c.id.c_str(), c.margin,
                      c.requirement.c_str());
        os << line;
    }
    os << "overall: " << (pass() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

std::string AdmissibilityReport::to_json(int indent) const {
    nlohmann::json j;
    for (const auto& [k, v] : constants)
        j["constants"][k] = std::isfinite(v) ? nlohmann::json(v)
                                             : nlohmann::json(v > 0 ? "inf" : "-inf");
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json jc;
        jc["id"] = c.id;
        jc["pass"] = c.pass;
        jc["margin"] = std::isfinite(c.margin)
                           ? nlohmann::json(c.margin)
                           : nlohmann::json(c.margin > 0 ? "inf" : "-inf");
        jc["requirement"] = c.requirement;
        j["checks"].push_back(jc);
    }
    j["pass"] = pass();
    return j.dump(indent);
}

SuggestResult suggest_admissible(const ObjectiveSpec& objective, const CheckProfile& profile,
                                 const SuggestOptions& options) {
    SuggestResult result;
    int best_fail_count = std::numeric_limits<int>::max();
    if (options.budget < 1) return result;

    std::set<double> orders;
    switch (profile.kind) {
        case CheckProfile::Kind::Admissibility:
        case CheckProfile::Kind::CenteredDecay:
            orders.insert(profile.p_list.begin(), profile.p_list.end());
            break;
        case CheckProfile::Kind::PoC:
            orders = {2.0, 8.0, 2.0 * profile.r};
            break;
        case CheckProfile::Kind::Stability:
            orders = {2.0, 8.0, std::max(8.0, 8.0 * profile.q)};
            break;
    }

    // mu_gap depends only on alpha * range: if any required order fails it,
    // no (m, gamma, sigma) can rescue the profile.
    for (double p : orders) {
        if (p > 2.0 && mu_gap(p, options.alpha, 0.0, objective.range()) <= 0.0) {
            KineticParams probe;
            probe.inverse_temperature = options.alpha;
            probe.noise_kind = options.noise_kind;
            result.report = check_assumptions(probe, objective, profile);
            result.evaluated = 1;
            return result;
        }
    }

    const double mass_ladder[] = {0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002};
    const double gamma_steps[] = {1.02, 1.1, 1.25, 1.5, 2.0, 3.0, 4.5, 7.0};

    for (double m : mass_ladder) {
        // friction window: floors from every order, ceiling from the dt guard
        double gamma_lo = std::sqrt(1.5 * m);
        for (double p : orders) {
            if (p <= 2.0) continue;
            gamma_lo = std::max(gamma_lo, std::sqrt(m * (p - 2.0)));
            const double mu = mu_gap(p, options.alpha, 0.0, objective.range());
            const double C_pos = 1.0 - 3.0 * mu / 16.0 - m * (p - 1.0) * (p - 2.0) / p;
            const double eta = C_pos - mu / 4.0;
            if (eta <= 0.0) {
                gamma_lo = kInf;  // this mass cannot satisfy the spatial-channel floor
                break;
            }
            gamma_lo = std::max(
                {gamma_lo,
                 std::pow(2.0 * std::pow(4.0, p - 1.0) * (2.0 / m + 1.0) / eta,
                          1.0 / (p - 2.0)),
                 mu * m * (p - 1.0) / (2.0 * eta)});
        }
        const double gamma_hi = m / (2.0 * options.dt_target);
        if (!(gamma_lo <= gamma_hi)) continue;

        for (double step : gamma_steps) {
            const double gamma = gamma_lo * step;
            if (gamma > gamma_hi) break;
            double sigma = 0.1;
            for (int k = 0; k < 32 && sigma > 1e-10; ++k, sigma *= 0.5) {
                if (result.evaluated >= options.budget) return result;
                KineticParams cand;
                cand.mass = m;
                cand.friction = gamma;
                cand.noise_strength = sigma;
                cand.inverse_temperature = options.alpha;
                cand.noise_kind = options.noise_kind;
                cand.dt = std::min(options.dt_target, m / (2.0 * gamma));
                auto rep = check_assumptions(cand, objective, profile);
                ++result.evaluated;
                int fails = 0;
                for (const auto& chk : rep.checks) fails += chk.pass ? 0 : 1;
                if (fails == 0) {
                    result.params = cand;
                    result.report = std::move(rep);
                    return result;
                }
                if (fails < best_fail_count) {
                    best_fail_count = fails;
                    result.report = std::move(rep);
                }
            }
        }
    }
    return result;
}

SuggestResult suggest_admissible(const ObjectiveSpec& objective,
                                 const std::vector<double>& p_targets, int budget,
                                 const SuggestOptions& options) {
    SuggestOptions opts = options;
    opts.budget = budget;
    return suggest_admissible(objective, CheckProfile::centered_decay(p_targets), opts);
}

}  // namespace kcbo
