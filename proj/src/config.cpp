#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kcbo/experiments.hpp"

namespace kcbo {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("config: key '" + key + "' has non-boolean value '" + v + "'");
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "objective") {
        cfg.objective = value;
    } else if (key == "dim") {
        cfg.dim = static_cast<int>(to_real(key, value));
    } else if (key == "alpha") {
        cfg.params.inverse_temperature = to_real(key, value);
    } else if (key == "m" || key == "mass") {
        cfg.params.mass = to_real(key, value);
        cfg.param_bits |= 1;
    } else if (key == "gamma") {
        cfg.params.friction = to_real(key, value);
        cfg.param_bits |= 2;
    } else if (key == "sigma") {
        cfg.params.noise_strength = to_real(key, value);
        cfg.param_bits |= 4;
    } else if (key == "noise") {
        if (value == "isotropic") cfg.params.noise_kind = NoiseKind::Isotropic;
        else if (value == "anisotropic") cfg.params.noise_kind = NoiseKind::Anisotropic;
        else throw std::invalid_argument("config: noise must be isotropic or anisotropic");
    } else if (key == "dt") {
        cfg.params.dt = to_real(key, value);
    } else if (key == "J") {
        cfg.J_list.clear();
        for (const auto& item : split_list(value))
            cfg.J_list.push_back(static_cast<int>(to_real(key, item)));
    } else if (key == "R" || key == "replicas") {
        cfg.replicas = static_cast<int>(to_real(key, value));
    } else if (key == "T" || key == "horizon") {
        cfg.horizon = to_real(key, value);
    } else if (key == "stride" || key == "record_stride") {
        cfg.record_stride = static_cast<int>(to_real(key, value));
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_real(key, value));
    } else if (key == "p_list") {
        cfg.p_list.clear();
        for (const auto& item : split_list(value)) cfg.p_list.push_back(to_real(key, item));
    } else if (key == "q") {
        cfg.q = to_real(key, value);
    } else if (key == "r") {
        cfg.r = to_real(key, value);
    } else if (key == "N_ref") {
        cfg.N_ref = static_cast<int>(to_real(key, value));
    } else if (key == "t0_frac") {
        cfg.t0_frac = to_real(key, value);
    } else if (key == "eps" || key == "eps_list") {
        cfg.eps_list.clear();
        for (const auto& item : split_list(value)) cfg.eps_list.push_back(to_real(key, item));
    } else if (key == "kappa") {
        cfg.conc_kappa = to_real(key, value);
    } else if (key == "A") {
        cfg.conc_A = to_real(key, value);
    } else if (key == "lstd_p") {
        cfg.lstd_p = to_real(key, value);
    } else if (key == "lstd_a") {
        cfg.lstd_a = to_real(key, value);
    } else if (key == "lstd_b") {
        cfg.lstd_b = to_real(key, value);
    } else if (key == "lstd_c") {
        cfg.lstd_c = to_real(key, value);
    } else if (key == "proxy_J" || key == "proxy_samples") {
        cfg.proxy_samples = static_cast<int>(to_real(key, value));
    } else if (key == "first_order") {
        cfg.first_order = to_bool(key, value);
    } else if (key == "threads") {
        cfg.threads = static_cast<int>(to_real(key, value));
    } else if (key == "control_J") {
        cfg.control_J = static_cast<int>(to_real(key, value));
    } else if (key == "init") {
        if (value == "gaussian") cfg.init.kind = InitSpec::Kind::Gaussian;
        else if (value == "uniform") cfg.init.kind = InitSpec::Kind::Uniform;
        else throw std::invalid_argument("config: init must be gaussian or uniform");
    } else if (key == "x_mean") {
        cfg.init.x_mean = to_real(key, value);
    } else if (key == "x_std" || key == "x_scale") {
        cfg.init.x_scale = to_real(key, value);
    } else if (key == "v_mean") {
        cfg.init.v_mean = to_real(key, value);
    } else if (key == "v_std" || key == "v_scale") {
        cfg.init.v_scale = to_real(key, value);
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value'");
        apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void write_csv(const SeriesTable& table, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        std::fprintf(f, "%s%s", table.columns[i].c_str(),
                     i + 1 < table.columns.size() ? "," : "\n");
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            std::fprintf(f, "%.17g%s", row[i], i + 1 < row.size() ? "," : "\n");
    }
    std::fclose(f);
}

}  // namespace kcbo
