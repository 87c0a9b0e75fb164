// kcbo: experiment driver for the kinetic consensus-based optimization lab.
//
// Subcommands: check, simulate, decay, poc, stability, wm-rate, contrast,
// concentration, optimize, plot. Every experiment writes series.csv and
// summary.json under --out and is a pure function of (config, seed).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "kcbo/experiments.hpp"
#include "kcbo/plot.hpp"

using nlohmann::json;
using namespace kcbo;

namespace {

json params_to_json(const KineticParams& p) {
    return json{{"m", p.mass},
                {"gamma", p.friction},
                {"sigma", p.noise_strength},
                {"alpha", p.inverse_temperature},
                {"noise", p.noise_kind == NoiseKind::Isotropic ? "isotropic" : "anisotropic"},
                {"dt", p.dt}};
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["objective"] = cfg.objective;
    j["dim"] = cfg.dim;
    j["J"] = cfg.J_list;
    j["R"] = cfg.replicas;
    j["T"] = cfg.horizon;
    j["record_stride"] = cfg.record_stride;
    j["seed"] = cfg.seed;
    j["p_list"] = cfg.p_list;
    j["q"] = cfg.q;
    j["r"] = cfg.r;
    j["N_ref"] = cfg.N_ref;
    j["t0_frac"] = cfg.t0_frac;
    j["eps_list"] = cfg.eps_list;
    j["init"] = cfg.init.kind == InitSpec::Kind::Gaussian ? "gaussian" : "uniform";
    j["x_mean"] = cfg.init.x_mean;
    j["x_scale"] = cfg.init.x_scale;
    j["v_mean"] = cfg.init.v_mean;
    j["v_scale"] = cfg.init.v_scale;
    return j;
}

json fit_to_json(const RateFit& f) {
    return json{{"slope", f.slope},
                {"intercept", f.intercept},
                {"r_squared", f.r_squared},
                {"n_points", f.n_points},
                {"n_dropped", f.n_dropped}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool json_out = false;
};

ExperimentConfig make_cfg(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = load_config(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    return cfg;
}

void emit(const CommonArgs& args, const SeriesTable& series, const json& summary) {
    std::filesystem::create_directories(args.out_dir);
    if (!series.columns.empty()) write_csv(series, args.out_dir + "/series.csv");
    write_text(args.out_dir + "/summary.json", summary.dump(2) + "\n");
    if (args.json_out) std::cout << summary.dump(2) << std::endl;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "structured key = value config file");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
        args.seed_set = true;
    });
    cmd->add_flag("--json", args.json_out, "print summary JSON to stdout");
}

int exit_code_for(const json& summary) {
    if (summary.contains("pass") && !summary["pass"].get<bool>()) return 1;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinetic consensus-based optimization experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string profile_name = "decay";
    double check_p = 8.0;
    std::string plot_input, plot_output = "plot.svg";
    bool plot_logy = false;

    auto* cmd_check = app.add_subcommand("check", "evaluate structural constants and assumptions");
    add_common(cmd_check, args);
    cmd_check->add_option("--profile", profile_name,
                          "admissibility | decay | poc | stability");
    cmd_check->add_option("--p", check_p, "moment order for the admissibility profile");

    auto* cmd_sim = app.add_subcommand("simulate", "single trajectory with full diagnostics");
    add_common(cmd_sim, args);
    auto* cmd_decay = app.add_subcommand("decay", "centered moment decay rates vs prediction");
    add_common(cmd_decay, args);
    auto* cmd_poc = app.add_subcommand("poc", "propagation-of-chaos exponent sweep over J");
    add_common(cmd_poc, args);
    auto* cmd_stab = app.add_subcommand("stability", "twin-system stability and remainder sweep");
    add_common(cmd_stab, args);
    auto* cmd_wm = app.add_subcommand("wm-rate", "weighted-mean Monte Carlo rate");
    add_common(cmd_wm, args);
    auto* cmd_con = app.add_subcommand("contrast", "shifted vs unshifted functional contrast");
    add_common(cmd_con, args);
    auto* cmd_conc = app.add_subcommand("concentration", "excursion probability tails");
    add_common(cmd_conc, args);
    auto* cmd_opt = app.add_subcommand("optimize", "run the optimizer and report f(M_alpha)");
    add_common(cmd_opt, args);

    auto* cmd_plot = app.add_subcommand("plot", "render series.csv columns to SVG");
    cmd_plot->add_option("input", plot_input, "series.csv path")->required();
    cmd_plot->add_option("--output", plot_output, "output .svg path");
    cmd_plot->add_flag("--logy", plot_logy, "log scale on the value axis");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_check->parsed()) {
            const auto cfg = make_cfg(args);
            const auto objective = make_objective(cfg.objective, cfg.dim);
            CheckProfile profile;
            if (profile_name == "admissibility")
                profile = CheckProfile::admissibility(check_p);
            else if (profile_name == "decay")
                profile = CheckProfile::centered_decay(cfg.p_list);
            else if (profile_name == "poc")
                profile = CheckProfile::poc(cfg.r);
            else if (profile_name == "stability")
                profile = CheckProfile::stability(cfg.q);
            else
                throw std::invalid_argument("unknown profile " + profile_name);
            KineticParams params = cfg.params;
            if (!cfg.params_given()) {
                SuggestOptions opts;
                opts.alpha = cfg.params.inverse_temperature;
                opts.noise_kind = cfg.params.noise_kind;
                opts.dt_target = cfg.params.dt;
                const auto res = suggest_admissible(objective, profile, opts);
                if (res.params.has_value()) {
                    params = *res.params;
                    std::printf("suggested parameters: m=%g gamma=%g sigma=%g dt=%g\n",
                                params.mass, params.friction, params.noise_strength,
                                params.dt);
                } else {
                    std::printf("no admissible parameters found (%d candidates); nearest miss:\n%s",
                                res.evaluated, res.report.to_text().c_str());
                    return 2;
                }
            }
            const auto report = check_assumptions(params, objective, profile);
            if (args.json_out)
                std::cout << report.to_json() << std::endl;
            else
                std::cout << report.to_text();
            return report.pass() ? 0 : 2;
        }

        if (cmd_sim->parsed()) {
            const auto cfg = make_cfg(args);
            const auto objective = make_objective(cfg.objective, cfg.dim);
            const auto params =
                resolve_params(cfg, objective, CheckProfile::centered_decay(cfg.p_list));
            RngStream stream(cfg.seed, 0);
            auto ens = draw_ensemble(cfg.J(), cfg.dim, cfg.init, stream);
            TrajectoryOptions opts;
            opts.record_stride = cfg.record_stride;
            opts.report.p_list = cfg.p_list;
            SeriesTable table;
            table.columns = {"t", "M2_X", "M2_V", "raw_V2", "raw_X8", "delta_alpha_norm", "L2"};
            for (double p : cfg.p_list)
                if (p > 2.0) {
                    table.columns.push_back("L" + format_order(p));
                    table.columns.push_back("M" + format_order(p) + "_X");
                    table.columns.push_back("M" + format_order(p) + "_V");
                }
            run_trajectory(std::move(ens), params, objective, cfg.horizon, stream,
                           [&](const LyapunovReport& rp) {
                               std::vector<double> row{rp.t,      rp.M2_X,  rp.M2_V, rp.raw_V2,
                                                       rp.raw_X8, rp.delta_alpha_norm, rp.L2};
                               for (double p : cfg.p_list)
                                   if (p > 2.0) {
                                       row.push_back(rp.Lp.at(p));
                                       row.push_back(rp.Mp_X.at(p));
                                       row.push_back(rp.Mp_V.at(p));
                                   }
                               table.rows.push_back(std::move(row));
                           },
                           opts);
            json summary;
            summary["experiment"] = "simulate";
            summary["config"] = config_to_json(cfg);
            summary["params"] = params_to_json(params);
            emit(args, table, summary);
            return 0;
        }

        if (cmd_decay->parsed()) {
            const auto cfg = make_cfg(args);
            const auto result = run_moment_decay(cfg);
            json summary;
            summary["experiment"] = "decay";
            summary["config"] = config_to_json(cfg);
            summary["replicas_used"] = result.replicas_used;
            summary["replicas_excluded"] = result.replicas_excluded;
            for (const auto& [p, v] : result.verdict) {
                const auto key = format_order(p);
                summary["predicted_lambda"][key] = result.predicted.at(p);
                if (result.fit_moments.count(p))
                    summary["fit_moments"][key] = fit_to_json(result.fit_moments.at(p));
                if (result.fit_lyapunov.count(p))
                    summary["fit_lyapunov"][key] = fit_to_json(result.fit_lyapunov.at(p));
                summary["verdict"][key] = v;
                std::printf("p=%s predicted lambda=%.6g fitted=%.6g verdict=%s\n", key.c_str(),
                            result.predicted.at(p),
                            result.fit_moments.count(p) ? -result.fit_moments.at(p).slope : 0.0,
                            v.c_str());
            }
            summary["raw_X8_max_ratio"] = result.raw_X8_max_ratio;
            summary["raw_V2_decreasing"] = result.raw_V2_decreasing;
            summary["pass"] = result.pass();
            emit(args, result.series, summary);
            return exit_code_for(summary);
        }

        if (cmd_poc->parsed()) {
            const auto cfg = make_cfg(args);
            const auto result = run_poc_sweep(cfg);
            json summary;
            summary["experiment"] = "poc";
            summary["config"] = config_to_json(cfg);
            summary["sup_error"] = result.sup_error;
            summary["fit"] = fit_to_json(result.fit);
            summary["replicas_used"] = result.replicas_used;
            summary["replicas_excluded"] = result.replicas_excluded;
            summary["pass"] = result.pass;
            std::printf("poc slope=%.4f r2=%.4f -> %s\n", result.fit.slope,
                        result.fit.r_squared, result.pass ? "PASS" : "FAIL");
            emit(args, result.series, summary);
            return exit_code_for(summary);
        }

        if (cmd_stab->parsed()) {
            const auto cfg = make_cfg(args);
            const auto result = run_stability_sweep(cfg);
            json summary;
            summary["experiment"] = "stability";
            summary["config"] = config_to_json(cfg);
            summary["control_zero"] = result.control_zero;
            summary["initial_error"] = result.initial_error;
            summary["sup_error"] = result.sup_error;
            summary["remainder"] = result.remainder;
            summary["strictly_decreasing"] = result.strictly_decreasing;
            summary["fit"] = fit_to_json(result.fit);
            summary["pass"] = result.pass;
            std::printf("stability control_zero=%d decreasing=%d slope=%.4f -> %s\n",
                        result.control_zero ? 1 : 0, result.strictly_decreasing ? 1 : 0,
                        result.fit.slope, result.pass ? "PASS" : "FAIL");
            SeriesTable table;
            table.columns = {"J"};
            for (double e : result.eps_list)
                table.columns.push_back("sup_eps" + format_order(e));
            table.columns.push_back("remainder");
            for (std::size_t jx = 0; jx < result.J_list.size(); ++jx) {
                std::vector<double> row{static_cast<double>(result.J_list[jx])};
                for (double v : result.sup_error[jx]) row.push_back(v);
                row.push_back(result.remainder[jx]);
                table.rows.push_back(std::move(row));
            }
            emit(args, table, summary);
            return exit_code_for(summary);
        }

        if (cmd_wm->parsed()) {
            auto cfg = make_cfg(args);
            if (args.config_path.empty()) cfg.J_list = {100, 1000, 10000, 100000};
            const auto result = run_wm_mc_rate(cfg);
            json summary;
            summary["experiment"] = "wm-rate";
            summary["config"] = config_to_json(cfg);
            summary["mse"] = result.mse;
            summary["fit"] = fit_to_json(result.fit);
            summary["pass"] = result.pass;
            std::printf("wm-rate slope=%.4f -> %s\n", result.fit.slope,
                        result.pass ? "PASS" : "FAIL");
            SeriesTable table;
            table.columns = {"J", "mse"};
            for (std::size_t jx = 0; jx < result.J_list.size(); ++jx)
                table.rows.push_back(
                    {static_cast<double>(result.J_list[jx]), result.mse[jx]});
            emit(args, table, summary);
            return exit_code_for(summary);
        }

        if (cmd_con->parsed()) {
            const auto cfg = make_cfg(args);
            const auto result = run_appendixB_contrast(cfg);
            json summary;
            summary["experiment"] = "contrast";
            summary["config"] = config_to_json(cfg);
            summary["predicted_lambda"] = result.predicted_lambda;
            summary["fit_shifted"] = fit_to_json(result.fit_shifted);
            if (result.fit_std.has_value()) summary["fit_std"] = fit_to_json(*result.fit_std);
            emit(args, result.series, summary);
            return 0;
        }

        if (cmd_conc->parsed()) {
            const auto cfg = make_cfg(args);
            const auto result = run_concentration(cfg);
            json summary;
            summary["experiment"] = "concentration";
            summary["config"] = config_to_json(cfg);
            summary["kappa"] = result.kappa;
            summary["A"] = result.A;
            summary["L2_initial_mean"] = result.L2_initial_mean;
            summary["frequency"] = result.frequency;
            summary["wilson_low"] = result.wilson_low;
            summary["wilson_high"] = result.wilson_high;
            summary["pass"] = result.monotone_ok;
            SeriesTable table;
            table.columns = {"J", "frequency", "wilson_low", "wilson_high"};
            for (std::size_t jx = 0; jx < result.J_list.size(); ++jx)
                table.rows.push_back({static_cast<double>(result.J_list[jx]),
                                      result.frequency[jx], result.wilson_low[jx],
                                      result.wilson_high[jx]});
            emit(args, table, summary);
            return exit_code_for(summary);
        }

        if (cmd_opt->parsed()) {
            const auto cfg = make_cfg(args);
            const auto result = run_optimize(cfg);
            json summary;
            summary["experiment"] = "optimize";
            summary["config"] = config_to_json(cfg);
            summary["consensus"] = result.consensus;
            summary["f_at_consensus"] = result.f_at_consensus;
            if (result.first_order_f.has_value())
                summary["first_order_f"] = *result.first_order_f;
            std::printf("optimize f(M_alpha)=%.6g\n", result.f_at_consensus);
            emit(args, result.trace, summary);
            return 0;
        }

        if (cmd_plot->parsed()) {
            render_csv_to_svg(plot_input, plot_output, plot_logy);
            return 0;
        }
    } catch (const AdmissibilityError& e) {
        std::fprintf(stderr, "admissibility failure: %s\n", e.what());
        return 2;
    } catch (const BlowupError& e) {
        std::fprintf(stderr, "blowup: %s (step %ld, t=%g)\n", e.what(), e.step_index, e.time);
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
