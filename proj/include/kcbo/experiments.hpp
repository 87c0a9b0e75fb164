#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kcbo/admissibility.hpp"
#include "kcbo/dynamics.hpp"
#include "kcbo/objectives.hpp"
#include "kcbo/types.hpp"

namespace kcbo {

// Initial law for positions and velocities, i.i.d. across particles.
struct InitSpec {
    enum class Kind { Gaussian, Uniform };
    Kind kind = Kind::Gaussian;
    double x_mean = 0.0;
    double x_scale = 1.0;  // std (Gaussian) or half-width (Uniform)
    double v_mean = 0.0;
    double v_scale = 1.0;
};

struct ExperimentConfig {
    KineticParams params;
    int param_bits = 0;  // m/gamma/sigma seen in the config (bits 1|2|4)
    std::string objective = "cosine_well";
    int dim = 2;
    std::vector<int> J_list = {256};
    int replicas = 20;
    double horizon = 50.0;
    int record_stride = 250;
    std::uint64_t seed = 1;
    InitSpec init;
    std::vector<double> p_list = {2.0, 8.0};
    double q = 1.0;
    double r = 4.0;
    int N_ref = 8192;
    double t0_frac = 0.1;                    // fit window start, fraction of horizon
    std::vector<double> eps_list = {0.5, 1.0};
    double conc_kappa = 0.0;                 // 0 -> lambda_2/2
    double conc_A = 1.0;
    double lstd_p = 8.0;
    double lstd_a = 0.0;                     // 0 -> (gamma/(p m)) lstd_c
    double lstd_b = 1.0;
    double lstd_c = 1.0;
    int proxy_samples = 1000000;
    bool first_order = false;
    int threads = 0;      // 0 -> hardware concurrency
    int control_J = 128;  // twin-run size for the stability zero control

    int J() const { return J_list.empty() ? 0 : J_list.front(); }
    bool params_given() const { return param_bits == 7; }
};

// `key = value` lines, '#' comments, comma-separated lists. Unknown keys are
// an error so typos do not silently fall back to defaults.
ExperimentConfig load_config(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
    int n_dropped = 0;  // nonpositive values excluded from the log fit
};

// OLS of log(value) on t over t >= t0. Nonpositive values are dropped and
// counted; fewer than 3 usable points -> InsufficientDataError.
RateFit fit_exponential_rate(const std::vector<std::pair<double, double>>& series, double t0);

// OLS of log(y) on log(x); same dropping rule for nonpositive y.
RateFit fit_loglog(const std::vector<std::pair<double, double>>& xy);

struct SeriesTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
void write_csv(const SeriesTable& table, const std::string& path);

ParticleEnsemble draw_ensemble(int J, int d, const InitSpec& init, RngStream& stream);

// ----- moment decay ---------------------------------------------------------

struct MomentDecayResult {
    SeriesTable series;                    // t, then per p: M[p] (moment sum), L[p]
    std::map<double, double> predicted;    // lambda_p from the constants engine
    std::map<double, RateFit> fit_moments; // fit of E[M_p(X) + M_p(V)]
    std::map<double, RateFit> fit_lyapunov;
    std::map<double, bool> envelope_ok;
    std::map<double, std::string> verdict;  // PASS / PASS-trivial / FAIL
    int replicas_used = 0;
    int replicas_excluded = 0;
    double raw_X8_max_ratio = 0.0;          // max_t raw X8 over its initial value
    bool raw_V2_decreasing = false;         // after t0
    AdmissibilityReport admissibility;
    bool pass() const;
};
MomentDecayResult run_moment_decay(const ExperimentConfig& cfg);

// ----- propagation of chaos -------------------------------------------------

struct PocResult {
    std::vector<int> J_list;
    SeriesTable series;              // t, Ehat mean per J
    std::vector<double> sup_error;   // per J, sup over recorded times
    RateFit fit;                     // log sup vs log J
    bool pass = false;
    int replicas_used = 0;
    int replicas_excluded = 0;
    AdmissibilityReport admissibility;
};
PocResult run_poc_sweep(const ExperimentConfig& cfg);

// ----- stability ------------------------------------------------------------

struct StabilityResult {
    std::vector<int> J_list;
    std::vector<double> eps_list;
    std::vector<double> initial_error;            // measured, per eps
    std::vector<std::vector<double>> sup_error;   // [J index][eps index]
    std::vector<double> remainder;                // per J, extrapolated to eps -> 0
    bool control_zero = false;                    // eps = 0 twin bitwise zero
    bool strictly_decreasing = false;
    RateFit fit;                                  // log remainder vs log J
    bool pass = false;
    AdmissibilityReport admissibility;
};
StabilityResult run_stability_sweep(const ExperimentConfig& cfg);

// ----- weighted-mean Monte Carlo rate ----------------------------------------

struct WmRateResult {
    std::vector<int> J_list;
    std::vector<double> mse;  // E |M_alpha(emp) - M_alpha(proxy)|^2
    RateFit fit;
    bool pass = false;
};
WmRateResult run_wm_mc_rate(const ExperimentConfig& cfg);

// ----- shifted vs unshifted functional contrast ------------------------------

struct ContrastResult {
    SeriesTable series;  // t, L_shifted, L_std, ratio
    double predicted_lambda = 0.0;
    RateFit fit_shifted;
    std::optional<RateFit> fit_std;  // absent when the series is not positive
    AdmissibilityReport admissibility;
};
ContrastResult run_appendixB_contrast(const ExperimentConfig& cfg);

// ----- excursion probability --------------------------------------------------

struct ConcentrationResult {
    std::vector<int> J_list;
    std::vector<double> frequency;
    std::vector<double> wilson_low;
    std::vector<double> wilson_high;
    double kappa = 0.0;
    double A = 0.0;
    double L2_initial_mean = 0.0;
    bool monotone_ok = false;  // frequency non-increasing in J
};
ConcentrationResult run_concentration(const ExperimentConfig& cfg);

// ----- optimization run --------------------------------------------------------

struct OptimizeResult {
    std::vector<double> consensus;  // final M_alpha
    double f_at_consensus = 0.0;
    SeriesTable trace;              // t, f(M_alpha), |M_alpha|
    std::optional<double> first_order_f;  // matched baseline, final f(M_alpha)
};
OptimizeResult run_optimize(const ExperimentConfig& cfg);

// Resolves cfg.params: returns them when given, otherwise runs
// suggest_admissible for the profile and fails with AdmissibilityError if
// nothing passes.
KineticParams resolve_params(const ExperimentConfig& cfg, const ObjectiveSpec& objective,
                             const CheckProfile& profile);

}  // namespace kcbo
