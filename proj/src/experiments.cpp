#include "kcbo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "kcbo/parallel.hpp"
#include "kcbo/reduce.hpp"

namespace kcbo {

namespace {

constexpr double kTiny = 1e-300;

// Steps at which a run of n_steps records: 0, every stride, and the last.
std::vector<long> record_steps(long n_steps, int stride) {
    std::vector<long> out{0};
    for (long k = stride; k <= n_steps; k += stride) out.push_back(k);
    if (n_steps > 0 && out.back() != n_steps) out.push_back(n_steps);
    return out;
}

struct Ols {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

Ols ols(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    Ols out;
    out.slope = sxx > 0 ? sxy / sxx : 0.0;
    out.intercept = my - out.slope * mx;
    out.r2 = syy > 0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return out;
}

// Mean over replicas, pairwise over the replica index so thread count never
// changes the bits. values[r][i], mask selects included replicas.
std::vector<double> replica_mean(const std::vector<std::vector<double>>& values,
                                 const std::vector<char>& included) {
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < values.size(); ++r)
        if (included[r]) idx.push_back(r);
    const std::size_t n = values[idx.empty() ? 0 : idx[0]].size();
    std::vector<double> mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        mean[i] = pairwise_sum(0, idx.size(), [&](std::size_t k) { return values[idx[k]][i]; }) /
                  static_cast<double>(idx.size());
    return mean;
}

double sup_of(const std::vector<double>& v) {
    double s = -std::numeric_limits<double>::infinity();
    for (double a : v) s = std::max(s, a);
    return s;
}

double ehat_of(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    const int J = a.count, d = a.dim;
    return pairwise_sum(0, static_cast<std::size_t>(J), [&](std::size_t j) {
               double s = 0.0;
               for (int i = 0; i < d; ++i) {
                   const std::size_t k = j * d + i;
                   const double dx = a.X[k] - b.X[k];
                   const double dv = a.V[k] - b.V[k];
                   s += dx * dx + dv * dv;
               }
               return s;
           }) /
           J;
}

std::uint64_t stream_id(std::uint64_t block, std::uint64_t replica) {
    return (block << 32) | replica;
}

}  // namespace

ParticleEnsemble draw_ensemble(int J, int d, const InitSpec& init, RngStream& stream) {
    ParticleEnsemble ens(J, d);
    const bool gaussian = init.kind == InitSpec::Kind::Gaussian;
    for (auto& x : ens.X)
        x = init.x_mean + init.x_scale * (gaussian ? stream.gaussian() : stream.uniform_sym());
    for (auto& v : ens.V)
        v = init.v_mean + init.v_scale * (gaussian ? stream.gaussian() : stream.uniform_sym());
    return ens;
}

RateFit fit_exponential_rate(const std::vector<std::pair<double, double>>& series, double t0) {
    std::vector<double> t, logv;
    int dropped = 0;
    for (const auto& [ti, vi] : series) {
        if (ti < t0) continue;
        if (!(vi > 0.0)) {
            ++dropped;
            continue;
        }
        t.push_back(ti);
        logv.push_back(std::log(vi));
    }
    if (t.size() < 3)
        throw InsufficientDataError("fit_exponential_rate: fewer than 3 positive points after t0");
    const Ols o = ols(t, logv);
    RateFit fit;
    fit.slope = o.slope;
    fit.intercept = o.intercept;
    fit.r_squared = o.r2;
    fit.n_points = static_cast<int>(t.size());
    fit.n_dropped = dropped;
    return fit;
}

RateFit fit_loglog(const std::vector<std::pair<double, double>>& xy) {
    std::vector<double> lx, ly;
    int dropped = 0;
    for (const auto& [x, y] : xy) {
        if (!(x > 0.0) || !(y > 0.0)) {
            ++dropped;
            continue;
        }
        lx.push_back(std::log(x));
        ly.push_back(std::log(y));
    }
    if (lx.size() < 3)
        throw InsufficientDataError("fit_loglog: fewer than 3 positive points");
    const Ols o = ols(lx, ly);
    RateFit fit;
    fit.slope = o.slope;
    fit.intercept = o.intercept;
    fit.r_squared = o.r2;
    fit.n_points = static_cast<int>(lx.size());
    fit.n_dropped = dropped;
    return fit;
}

KineticParams resolve_params(const ExperimentConfig& cfg, const ObjectiveSpec& objective,
                             const CheckProfile& profile) {
    if (cfg.params_given()) {
        cfg.params.validate();
        return cfg.params;
    }
    SuggestOptions opts;
    opts.alpha = cfg.params.inverse_temperature;
    opts.noise_kind = cfg.params.noise_kind;
    opts.dt_target = cfg.params.dt;
    auto suggestion = suggest_admissible(objective, profile, opts);
    if (!suggestion.params.has_value())
        throw AdmissibilityError(
            "resolve_params: no admissible (m, gamma, sigma) found for this profile;"
            " nearest miss:\n" +
            suggestion.report.to_text());
    return *suggestion.params;
}

// ----- moment decay ----------------------------------------------------------

bool MomentDecayResult::pass() const {
    if (replicas_used == 0) return false;
    if (replicas_excluded > 0.01 * (replicas_used + replicas_excluded)) return false;
    for (const auto& [p, v] : verdict)
        if (v == "FAIL") return false;
    return true;
}

MomentDecayResult run_moment_decay(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    const auto profile = CheckProfile::centered_decay(cfg.p_list);
    const KineticParams params = resolve_params(cfg, objective, profile);
    MomentDecayResult result;
    result.admissibility = check_assumptions(params, objective, profile);
    if (!result.admissibility.pass())
        throw AdmissibilityError("run_moment_decay: profile fails:\n" +
                                 result.admissibility.to_text());

    const int R = cfg.replicas;
    const int J = cfg.J();
    const long n_steps = static_cast<long>(std::ceil(cfg.horizon / params.dt - 1e-12));
    const auto steps = record_steps(n_steps, cfg.record_stride);
    const std::size_t n_rec = steps.size();
    const std::size_t n_p = cfg.p_list.size();

    // per replica: for each p a moment-sum series and a Lyapunov series,
    // plus raw moments
    std::vector<std::vector<double>> moments(R), lyap(R), rawv(R), rawx8(R);
    std::vector<char> included(R, 1);

    TrajectoryOptions opts;
    opts.record_stride = cfg.record_stride;
    opts.report.p_list = cfg.p_list;

    parallel_for(R, [&](int rep) {
        RngStream stream(cfg.seed, stream_id(1, rep));
        auto ens = draw_ensemble(J, cfg.dim, cfg.init, stream);
        std::vector<double>& mom = moments[rep];
        std::vector<double>& ly = lyap[rep];
        mom.reserve(n_rec * n_p);
        ly.reserve(n_rec * n_p);
        try {
            run_trajectory(std::move(ens), params, objective, cfg.horizon, stream,
                           [&](const LyapunovReport& rp) {
                               for (double p : cfg.p_list) {
                                   if (p == 2.0) {
                                       mom.push_back(rp.M2_X + rp.M2_V);
                                       ly.push_back(rp.L2);
                                   } else {
                                       mom.push_back(rp.Mp_X.at(p) + rp.Mp_V.at(p));
                                       ly.push_back(rp.Lp.at(p));
                                   }
                               }
                               rawv[rep].push_back(rp.raw_V2);
                               rawx8[rep].push_back(rp.raw_X8);
                           },
                           opts);
        } catch (const BlowupError&) {
            included[rep] = 0;
        }
    }, cfg.threads);

    result.replicas_used = 0;
    for (char c : included) result.replicas_used += c;
    result.replicas_excluded = R - result.replicas_used;
    if (result.replicas_used == 0)
        throw BlowupError("run_moment_decay: every replica blew up", -1, 0.0);

    const auto mom_mean = replica_mean(moments, included);
    const auto ly_mean = replica_mean(lyap, included);
    const auto rawv_mean = replica_mean(rawv, included);
    const auto rawx8_mean = replica_mean(rawx8, included);

    const double t0 = cfg.t0_frac * cfg.horizon;
    const auto rates = decay_rates(params, objective, cfg.p_list);

    result.series.columns = {"t"};
    for (double p : cfg.p_list) {
        result.series.columns.push_back("M" + format_order(p));
        result.series.columns.push_back("L" + format_order(p));
    }
    result.series.columns.push_back("raw_V2");
    result.series.columns.push_back("raw_X8");
    for (std::size_t i = 0; i < n_rec; ++i) {
        std::vector<double> row{steps[i] * params.dt};
        for (std::size_t pi = 0; pi < n_p; ++pi) {
            row.push_back(mom_mean[i * n_p + pi]);
            row.push_back(ly_mean[i * n_p + pi]);
        }
        row.push_back(rawv_mean[i]);
        row.push_back(rawx8_mean[i]);
        result.series.rows.push_back(std::move(row));
    }

    for (std::size_t pi = 0; pi < n_p; ++pi) {
        const double p = cfg.p_list[pi];
        result.predicted[p] = rates.lambda.at(p);
        std::vector<std::pair<double, double>> mom_series, ly_series;
        double peak = 0.0;
        for (std::size_t i = 0; i < n_rec; ++i) {
            const double t = steps[i] * params.dt;
            mom_series.emplace_back(t, mom_mean[i * n_p + pi]);
            ly_series.emplace_back(t, ly_mean[i * n_p + pi]);
            peak = std::max(peak, mom_mean[i * n_p + pi]);
        }
        if (peak <= 1e-250) {
            result.verdict[p] = "PASS-trivial";
            result.envelope_ok[p] = true;
            continue;
        }
        // monotone envelope after t0: no record above 1.5x the running minimum
        bool env = true;
        double runmin = std::numeric_limits<double>::infinity();
        for (const auto& [t, v] : mom_series) {
            if (t < t0) continue;
            if (v > 1.5 * runmin + kTiny) env = false;
            runmin = std::min(runmin, v);
        }
        result.envelope_ok[p] = env;
        const auto fit = fit_exponential_rate(mom_series, t0);
        result.fit_moments[p] = fit;
        result.fit_lyapunov[p] = fit_exponential_rate(ly_series, t0);
        const double measured = -fit.slope;
        result.verdict[p] =
            (measured >= 0.8 * result.predicted[p] && env) ? "PASS" : "FAIL";
    }

    result.raw_X8_max_ratio = rawx8_mean[0] > 0.0 ? sup_of(rawx8_mean) / rawx8_mean[0] : 0.0;
    bool decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_rec; ++i) {
        const double t = steps[i] * params.dt;
        if (t < t0) continue;
        if (rawv_mean[i] > prev * (1.0 + 1e-9) + kTiny) decreasing = false;
        prev = rawv_mean[i];
    }
    result.raw_V2_decreasing = decreasing;
    return result;
}

// ----- propagation of chaos ---------------------------------------------------

PocResult run_poc_sweep(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    const auto profile = CheckProfile::poc(cfg.r);
    const KineticParams params = resolve_params(cfg, objective, profile);
    PocResult result;
    result.J_list = cfg.J_list;
    result.admissibility = check_assumptions(params, objective, profile);
    if (!result.admissibility.pass())
        throw AdmissibilityError("run_poc_sweep: profile fails:\n" +
                                 result.admissibility.to_text());
    int max_J = 0;
    for (int J : cfg.J_list) max_J = std::max(max_J, J);
    if (cfg.N_ref < 16 * max_J)
        throw std::invalid_argument("run_poc_sweep: N_ref must be at least 16 * max J");

    const int R = cfg.replicas;
    const std::size_t n_J = cfg.J_list.size();
    const long n_steps = static_cast<long>(std::ceil(cfg.horizon / params.dt - 1e-12));
    const auto steps = record_steps(n_steps, cfg.record_stride);
    const std::size_t n_rec = steps.size();

    // ehat[r] holds n_J series of length n_rec, flattened
    std::vector<std::vector<double>> ehat(R);
    std::vector<char> included(R, 1);

    parallel_for(R, [&](int rep) {
        try {
            RngStream ref_stream(cfg.seed, stream_id(2, rep));
            auto ref = draw_ensemble(cfg.N_ref, cfg.dim, cfg.init, ref_stream);

            std::vector<ParticleEnsemble> sys_a, sys_b;
            std::vector<RngStream> pair_streams;
            for (std::size_t jx = 0; jx < n_J; ++jx) {
                RngStream s(cfg.seed, stream_id(16 + jx, rep));
                auto a = draw_ensemble(cfg.J_list[jx], cfg.dim, cfg.init, s);
                sys_b.push_back(a);  // identical initial samples
                sys_a.push_back(std::move(a));
                pair_streams.push_back(s);
            }

            ehat[rep].assign(n_J * n_rec, 0.0);
            std::size_t rec = 0;
            auto record = [&](long k) {
                while (rec < n_rec && steps[rec] == k) {
                    for (std::size_t jx = 0; jx < n_J; ++jx)
                        ehat[rep][jx * n_rec + rec] = ehat_of(sys_a[jx], sys_b[jx]);
                    ++rec;
                }
            };
            record(0);
            std::vector<double> dW;
            for (long k = 1; k <= n_steps; ++k) {
                // one reference consensus per step, read by every coupled pair
                const auto consensus_ref =
                    weighted_consensus(ref, params.inverse_temperature, objective);
                for (std::size_t jx = 0; jx < n_J; ++jx) {
                    const auto consensus_a =
                        weighted_consensus(sys_a[jx], params.inverse_temperature, objective);
                    dW.resize(static_cast<std::size_t>(cfg.J_list[jx]) * cfg.dim);
                    fill_gaussian_increments(pair_streams[jx], params.dt, dW);
                    em_step_with(sys_a[jx], params, consensus_a.point, dW, k);
                    em_step_with(sys_b[jx], params, consensus_ref.point, dW, k);
                }
                dW.resize(static_cast<std::size_t>(cfg.N_ref) * cfg.dim);
                fill_gaussian_increments(ref_stream, params.dt, dW);
                em_step_with(ref, params, consensus_ref.point, dW, k);
                record(k);
            }
        } catch (const BlowupError&) {
            included[rep] = 0;
        }
    }, cfg.threads);

    result.replicas_used = 0;
    for (char c : included) result.replicas_used += c;
    result.replicas_excluded = R - result.replicas_used;
    if (result.replicas_used == 0)
        throw BlowupError("run_poc_sweep: every replica blew up", -1, 0.0);

    const auto mean = replica_mean(ehat, included);
    result.series.columns = {"t"};
    for (int J : cfg.J_list) result.series.columns.push_back("Ehat_J" + std::to_string(J));
    for (std::size_t i = 0; i < n_rec; ++i) {
        std::vector<double> row{steps[i] * params.dt};
        for (std::size_t jx = 0; jx < n_J; ++jx) row.push_back(mean[jx * n_rec + i]);
        result.series.rows.push_back(std::move(row));
    }
    std::vector<std::pair<double, double>> xy;
    for (std::size_t jx = 0; jx < n_J; ++jx) {
        double sup = 0.0;
        for (std::size_t i = 0; i < n_rec; ++i) sup = std::max(sup, mean[jx * n_rec + i]);
        result.sup_error.push_back(sup);
        xy.emplace_back(static_cast<double>(cfg.J_list[jx]), sup);
    }
    result.fit = fit_loglog(xy);
    const bool frac_ok =
        result.replicas_excluded <= 0.01 * R;
    result.pass = frac_ok && result.fit.slope >= -1.35 && result.fit.slope <= -0.65 &&
                  result.fit.r_squared >= 0.9;
    return result;
}

// ----- stability ---------------------------------------------------------------

StabilityResult run_stability_sweep(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    const auto profile = CheckProfile::stability(cfg.q);
    const KineticParams params = resolve_params(cfg, objective, profile);
    StabilityResult result;
    result.J_list = cfg.J_list;
    result.eps_list = cfg.eps_list;
    result.admissibility = check_assumptions(params, objective, profile);
    if (!result.admissibility.pass())
        throw AdmissibilityError("run_stability_sweep: profile fails:\n" +
                                 result.admissibility.to_text());
    if (cfg.eps_list.size() < 2)
        throw std::invalid_argument("run_stability_sweep: need at least two eps values");

    const long n_steps = static_cast<long>(std::ceil(cfg.horizon / params.dt - 1e-12));
    const auto steps = record_steps(n_steps, cfg.record_stride);
    const std::size_t n_rec = steps.size();
    const std::size_t n_J = cfg.J_list.size();
    const std::size_t n_e = cfg.eps_list.size();
    const int R = cfg.replicas;

    // eps = 0 twin control: identical data and increments must stay bitwise equal
    {
        RngStream s(cfg.seed, stream_id(63, 0));
        auto a = draw_ensemble(cfg.control_J, cfg.dim, cfg.init, s);
        CoupledPair pair{a, a, ConsensusModeB::Empirical, std::nullopt};
        bool zero = true;
        for (long k = 1; k <= n_steps && zero; ++k) {
            coupled_step(pair, params, objective, s, k);
            zero = std::memcmp(pair.a.X.data(), pair.b.X.data(),
                               pair.a.X.size() * sizeof(double)) == 0 &&
                   std::memcmp(pair.a.V.data(), pair.b.V.data(),
                               pair.a.V.size() * sizeof(double)) == 0;
        }
        result.control_zero = zero;
    }

    // flatten (J, eps, replica) into independent tasks
    const int tasks = static_cast<int>(n_J * n_e) * R;
    std::vector<std::vector<double>> ehat(tasks);  // per task: series over records
    std::vector<char> ok(tasks, 1);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.dim));

    parallel_for(tasks, [&](int task) {
        const int rep = task % R;
        const std::size_t ex = (task / R) % n_e;
        const std::size_t jx = task / (R * static_cast<int>(n_e));
        const double eps = cfg.eps_list[ex];
        try {
            RngStream s(cfg.seed, stream_id(64 + jx * 8 + ex, rep));
            auto a = draw_ensemble(cfg.J_list[jx], cfg.dim, cfg.init, s);
            auto b = a;
            for (int j = 0; j < b.count; ++j)
                for (int i = 0; i < b.dim; ++i)
                    b.X[static_cast<std::size_t>(j) * b.dim + i] += eps * inv_sqrt_d;
            CoupledPair pair{std::move(a), std::move(b), ConsensusModeB::Empirical,
                             std::nullopt};
            ehat[task].assign(n_rec, 0.0);
            std::size_t rec = 0;
            auto record = [&](long k) {
                while (rec < n_rec && steps[rec] == k) {
                    ehat[task][rec] = ehat_of(pair.a, pair.b);
                    ++rec;
                }
            };
            record(0);
            for (long k = 1; k <= n_steps; ++k) {
                coupled_step(pair, params, objective, s, k);
                record(k);
            }
        } catch (const BlowupError&) {
            ok[task] = 0;
        }
    }, cfg.threads);

    result.sup_error.assign(n_J, std::vector<double>(n_e, 0.0));
    result.initial_error.assign(n_e, 0.0);
    for (std::size_t jx = 0; jx < n_J; ++jx) {
        for (std::size_t ex = 0; ex < n_e; ++ex) {
            std::vector<std::vector<double>> block;
            std::vector<char> inc;
            for (int rep = 0; rep < R; ++rep) {
                const int task = static_cast<int>(jx * n_e + ex) * R + rep;
                block.push_back(std::move(ehat[task]));
                inc.push_back(ok[task]);
            }
            int used = 0;
            for (char c : inc) used += c;
            if (used == 0) throw BlowupError("run_stability_sweep: all replicas blew up", -1, 0.0);
            const auto mean = replica_mean(block, inc);
            result.sup_error[jx][ex] = sup_of(mean);
            result.initial_error[ex] = mean[0];  // same eps -> same measured e0
        }
    }

    // extrapolate sup error to zero initial error (OLS in e = eps^2)
    result.remainder.resize(n_J);
    for (std::size_t jx = 0; jx < n_J; ++jx) {
        std::vector<double> e(result.initial_error), s(result.sup_error[jx]);
        const Ols o = ols(e, s);
        result.remainder[jx] = o.intercept;
    }

    result.strictly_decreasing = true;
    for (std::size_t jx = 1; jx < n_J; ++jx)
        if (!(result.remainder[jx] < result.remainder[jx - 1]))
            result.strictly_decreasing = false;

    std::vector<std::pair<double, double>> xy;
    for (std::size_t jx = 0; jx < n_J; ++jx)
        xy.emplace_back(static_cast<double>(cfg.J_list[jx]), result.remainder[jx]);
    bool all_positive = true;
    for (double b : result.remainder) all_positive &= b > 0.0;
    if (all_positive) result.fit = fit_loglog(xy);

    result.pass = result.control_zero && all_positive && result.strictly_decreasing &&
                  result.fit.slope <= -0.6;
    return result;
}

// ----- weighted-mean Monte Carlo rate -------------------------------------------

WmRateResult run_wm_mc_rate(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    const double alpha = cfg.params.inverse_temperature;
    const int R = cfg.replicas;
    const std::size_t n_J = cfg.J_list.size();
    WmRateResult result;
    result.J_list = cfg.J_list;

    std::vector<std::vector<double>> err(R);
    std::vector<char> included(R, 1);
    parallel_for(R, [&](int rep) {
        RngStream s(cfg.seed, stream_id(3, rep));
        err[rep].assign(n_J, 0.0);
        std::vector<double> proxy(static_cast<std::size_t>(cfg.proxy_samples) * cfg.dim);
        const bool gaussian = cfg.init.kind == InitSpec::Kind::Gaussian;
        for (auto& x : proxy)
            x = cfg.init.x_mean +
                cfg.init.x_scale * (gaussian ? s.gaussian() : s.uniform_sym());
        const auto m_proxy =
            weighted_consensus(proxy, cfg.proxy_samples, cfg.dim, alpha, objective);
        std::vector<double> sample;
        for (std::size_t jx = 0; jx < n_J; ++jx) {
            const int J = cfg.J_list[jx];
            sample.resize(static_cast<std::size_t>(J) * cfg.dim);
            for (auto& x : sample)
                x = cfg.init.x_mean +
                    cfg.init.x_scale * (gaussian ? s.gaussian() : s.uniform_sym());
            const auto m_emp = weighted_consensus(sample, J, cfg.dim, alpha, objective);
            double e2 = 0.0;
            for (int i = 0; i < cfg.dim; ++i) {
                const double diff = m_emp.point[i] - m_proxy.point[i];
                e2 += diff * diff;
            }
            err[rep][jx] = e2;
        }
    }, cfg.threads);

    const auto mean = replica_mean(err, included);
    result.mse.assign(mean.begin(), mean.end());
    std::vector<std::pair<double, double>> xy;
    for (std::size_t jx = 0; jx < n_J; ++jx)
        xy.emplace_back(static_cast<double>(cfg.J_list[jx]), mean[jx]);
    result.fit = fit_loglog(xy);
    result.pass = result.fit.slope >= -1.3 && result.fit.slope <= -0.7;
    return result;
}

// ----- shifted vs unshifted functional contrast -----------------------------------

ContrastResult run_appendixB_contrast(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    const double p = cfg.lstd_p;
    const auto profile = CheckProfile::centered_decay({2.0, p});
    const KineticParams params = resolve_params(cfg, objective, profile);
    ContrastResult result;
    result.admissibility = check_assumptions(params, objective, profile);
    if (!result.admissibility.pass())
        throw AdmissibilityError("run_appendixB_contrast: profile fails:\n" +
                                 result.admissibility.to_text());

    const int R = cfg.replicas, J = cfg.J();
    const long n_steps = static_cast<long>(std::ceil(cfg.horizon / params.dt - 1e-12));
    const auto steps = record_steps(n_steps, cfg.record_stride);
    const std::size_t n_rec = steps.size();

    TrajectoryOptions opts;
    opts.record_stride = cfg.record_stride;
    opts.report.p_list = {p};
    opts.report.with_lstd = true;
    opts.report.lstd_p = p;
    opts.report.lstd_a = cfg.lstd_a;
    opts.report.lstd_b = cfg.lstd_b;
    opts.report.lstd_c = cfg.lstd_c;

    std::vector<std::vector<double>> shifted(R), lstd(R);
    std::vector<char> included(R, 1);
    parallel_for(R, [&](int rep) {
        RngStream stream(cfg.seed, stream_id(4, rep));
        auto ens = draw_ensemble(J, cfg.dim, cfg.init, stream);
        try {
            run_trajectory(std::move(ens), params, objective, cfg.horizon, stream,
                           [&](const LyapunovReport& rp) {
                               shifted[rep].push_back(p == 2.0 ? rp.L2 : rp.Lp.at(p));
                               lstd[rep].push_back(*rp.Lstd_p);
                           },
                           opts);
        } catch (const BlowupError&) {
            included[rep] = 0;
        }
    }, cfg.threads);

    const auto s_mean = replica_mean(shifted, included);
    const auto l_mean = replica_mean(lstd, included);
    result.series.columns = {"t", "L_shifted", "L_std", "ratio"};
    std::vector<std::pair<double, double>> s_series, l_series;
    for (std::size_t i = 0; i < n_rec; ++i) {
        const double t = steps[i] * params.dt;
        const double ratio = (s_mean[i] > 0.0 && l_mean[i] > 0.0)
                                 ? l_mean[i] / s_mean[i]
                                 : std::numeric_limits<double>::quiet_NaN();
        result.series.rows.push_back({t, s_mean[i], l_mean[i], ratio});
        s_series.emplace_back(t, s_mean[i]);
        l_series.emplace_back(t, l_mean[i]);
    }
    const double t0 = cfg.t0_frac * cfg.horizon;
    result.predicted_lambda = decay_rates(params, objective, {p}).lambda.at(p);
    result.fit_shifted = fit_exponential_rate(s_series, t0);
    try {
        result.fit_std = fit_exponential_rate(l_series, t0);
    } catch (const InsufficientDataError&) {
        result.fit_std.reset();
    }
    return result;
}

// ----- excursion probability --------------------------------------------------------

ConcentrationResult run_concentration(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    const auto profile = CheckProfile::centered_decay({2.0, 8.0});
    const KineticParams params = resolve_params(cfg, objective, profile);
    const auto rates = decay_rates(params, objective, {2.0});
    const double lambda2 = rates.lambda.at(2.0);
    ConcentrationResult result;
    result.kappa = cfg.conc_kappa > 0.0 ? cfg.conc_kappa : lambda2 / 2.0;
    result.A = cfg.conc_A;
    if (!(result.kappa < lambda2))
        throw AdmissibilityError("run_concentration: kappa must be below lambda_2");
    result.J_list = cfg.J_list;

    const int R = std::max(cfg.replicas, 500);
    const long n_steps = static_cast<long>(std::ceil(cfg.horizon / params.dt - 1e-12));
    const auto steps = record_steps(n_steps, cfg.record_stride);

    for (std::size_t jx = 0; jx < cfg.J_list.size(); ++jx) {
        const int J = cfg.J_list[jx];
        std::vector<double> sup_w(R, 0.0), l2_0(R, 0.0);
        parallel_for(R, [&](int rep) {
            RngStream stream(cfg.seed, stream_id(128 + jx, rep));
            auto ens = draw_ensemble(J, cfg.dim, cfg.init, stream);
            double sup = -std::numeric_limits<double>::infinity();
            std::size_t rec = 0;
            TrajectoryOptions opts;
            opts.record_stride = cfg.record_stride;
            opts.report.p_list = {};
            run_trajectory(std::move(ens), params, objective, cfg.horizon, stream,
                           [&](const LyapunovReport& rp) {
                               if (rec == 0) l2_0[rep] = rp.L2;
                               sup = std::max(sup, std::exp(result.kappa * rp.t) * rp.L2);
                               ++rec;
                           },
                           opts);
            sup_w[rep] = sup;
        }, cfg.threads);
        const double mean0 =
            pairwise_sum(0, static_cast<std::size_t>(R), [&](std::size_t r) { return l2_0[r]; }) /
            R;
        if (jx == 0) result.L2_initial_mean = mean0;
        int hits = 0;
        for (int rep = 0; rep < R; ++rep)
            if (sup_w[rep] >= mean0 + result.A) ++hits;
        const double phat = static_cast<double>(hits) / R;
        const double z = 1.959963984540054;  // 95%
        const double denom = 1.0 + z * z / R;
        const double center = (phat + z * z / (2.0 * R)) / denom;
        const double half =
            z * std::sqrt(phat * (1.0 - phat) / R + z * z / (4.0 * R * R)) / denom;
        result.frequency.push_back(phat);
        result.wilson_low.push_back(std::max(0.0, center - half));
        result.wilson_high.push_back(std::min(1.0, center + half));
    }
    result.monotone_ok = true;
    for (std::size_t jx = 1; jx < result.frequency.size(); ++jx)
        if (result.frequency[jx] > result.frequency[jx - 1] + 1e-12)
            result.monotone_ok = false;
    return result;
}

// ----- optimization run ----------------------------------------------------------------

OptimizeResult run_optimize(const ExperimentConfig& cfg) {
    const auto objective = make_objective(cfg.objective, cfg.dim);
    KineticParams params = cfg.params;
    if (!cfg.params_given())
        params = resolve_params(cfg, objective, CheckProfile::centered_decay({2.0, 8.0}));

    const int J = cfg.J();
    const long n_steps = static_cast<long>(std::ceil(cfg.horizon / params.dt - 1e-12));
    const auto steps = record_steps(n_steps, cfg.record_stride);

    OptimizeResult result;
    result.trace.columns = {"t", "f_at_consensus", "consensus_norm"};

    RngStream stream(cfg.seed, stream_id(5, 0));
    auto ens = draw_ensemble(J, cfg.dim, cfg.init, stream);
    const auto start_X = ens.X;  // reused by the first-order baseline

    std::size_t rec = 0;
    auto record = [&](long k, const ParticleEnsemble& e) {
        while (rec < steps.size() && steps[rec] == k) {
            const auto c = weighted_consensus(e, params.inverse_temperature, objective);
            double n2 = 0.0;
            for (double x : c.point) n2 += x * x;
            result.trace.rows.push_back(
                {k * params.dt, objective.eval(c.point), std::sqrt(n2)});
            ++rec;
        }
    };
    record(0, ens);
    for (long k = 1; k <= n_steps; ++k) {
        em_step(ens, params, objective, stream, k);
        record(k, ens);
    }
    const auto final_c = weighted_consensus(ens, params.inverse_temperature, objective);
    result.consensus = final_c.point;
    result.f_at_consensus = objective.eval(final_c.point);

    if (cfg.first_order) {
        RngStream s1(cfg.seed, stream_id(6, 0));
        std::vector<double> X = start_X;
        for (long k = 1; k <= n_steps; ++k)
            em_step_first_order(X, J, cfg.dim, params, objective, s1, k);
        const auto c1 = weighted_consensus(X, J, cfg.dim, params.inverse_temperature, objective);
        result.first_order_f = objective.eval(c1.point);
    }
    return result;
}

}  // namespace kcbo
