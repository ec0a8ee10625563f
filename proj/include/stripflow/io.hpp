#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stripflow/evolution.hpp"
#include "stripflow/spectrum.hpp"
#include "stripflow/stationary.hpp"

namespace stripflow {

/// Exit codes of the CLI: 0 success, 1 config error, 2 model-validity error,
/// 3 numerical-tolerance failure, 4 simulation terminated early.
enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_model = 2,
    exit_tolerance = 3,
    exit_early_stop = 4,
};

/// Fully resolved run configuration (defaults applied before validation).
struct RunConfig {
    ModelParameters params{};
    int nx = 64;
    int ny = 64;

    struct {
        int samples = 101;
    } stationary;

    struct {
        int k_max = 100;
        bool oracle = true;
        int ny_oracle = 2048;
    } spectrum;

    struct {
        int k_scan = 50;
        double tol = 1e-6;
    } threshold;

    struct {
        double t_end = 5.0;
        std::optional<double> dt;  // nullopt = "auto"
        std::string stepper = "imex";
        int perturbation_k = 1;
        double perturbation_eps = 1e-3;
        std::vector<int> tracked_modes = {1, 2, 3, 4};
        int record_every = 10;
    } evolve;

    nlohmann::json resolved() const {
        nlohmann::json j;
        j["params"] = {{"mu", params.mu},
                       {"sigma_tilde", params.sigma_tilde},
                       {"sigma_bar_1", params.sigma_bar_1},
                       {"sigma_bar_2", params.sigma_bar_2},
                       {"gamma", params.gamma}};
        j["grid"] = {{"nx", nx}, {"ny", ny}};
        j["stationary"] = {{"samples", stationary.samples}};
        j["spectrum"] = {{"k_max", spectrum.k_max},
                         {"oracle", spectrum.oracle},
                         {"ny_oracle", spectrum.ny_oracle}};
        j["threshold"] = {{"k_scan", threshold.k_scan}, {"tol", threshold.tol}};
        nlohmann::json ev;
        ev["t_end"] = evolve.t_end;
        if (evolve.dt)
            ev["dt"] = *evolve.dt;
        else
            ev["dt"] = "auto";
        ev["stepper"] = evolve.stepper;
        ev["perturbation"] = {{"k", evolve.perturbation_k}, {"eps", evolve.perturbation_eps}};
        ev["tracked_modes"] = evolve.tracked_modes;
        ev["record_every"] = evolve.record_every;
        j["evolve"] = ev;
        return j;
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unknown key: " + (path.empty() ? it.key() : path + "." + it.key()));
}

inline double finite_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path + " must be finite");
    return v;
}

inline int integer_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + " must be an integer");
    return j.get<int>();
}

/// Shortest round-trip decimal representation (bit-exact reproducibility).
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& comments,
              const std::vector<std::string>& header)
        : out_(file, std::ios::binary) {
        if (!out_) throw Error("cannot open " + file.string() + " for writing");
        for (const auto& c : comments) out_ << "# " << c << "\n";
        for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    /// A row of pre-formatted cells (empty string = empty cell).
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

  private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot open " + file.string() + " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace detail

/// Strict parse of the JSON configuration document: unknown keys rejected,
/// all numerics finite, defaults applied before validation.
inline RunConfig parse_config(const nlohmann::json& root) {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown_keys(root, {"params", "grid", "stationary", "spectrum", "threshold", "evolve"},
                                "");
    if (!root.contains("params")) throw ConfigError("missing required key: params");

    RunConfig cfg;
    {
        const auto& p = root.at("params");
        if (!p.is_object()) throw ConfigError("params must be an object");
        detail::reject_unknown_keys(p, {"mu", "sigma_tilde", "sigma_bar_1", "sigma_bar_2", "gamma"},
                                    "params");
        for (const char* key : {"mu", "sigma_tilde", "sigma_bar_1", "sigma_bar_2", "gamma"})
            if (!p.contains(key)) throw ConfigError(std::string("missing required key: params.") + key);
        cfg.params.mu = detail::finite_number(p.at("mu"), "params.mu");
        cfg.params.sigma_tilde = detail::finite_number(p.at("sigma_tilde"), "params.sigma_tilde");
        cfg.params.sigma_bar_1 = detail::finite_number(p.at("sigma_bar_1"), "params.sigma_bar_1");
        cfg.params.sigma_bar_2 = detail::finite_number(p.at("sigma_bar_2"), "params.sigma_bar_2");
        cfg.params.gamma = detail::finite_number(p.at("gamma"), "params.gamma");
    }
    if (root.contains("grid")) {
        const auto& g = root.at("grid");
        detail::reject_unknown_keys(g, {"nx", "ny"}, "grid");
        if (g.contains("nx")) cfg.nx = detail::integer_number(g.at("nx"), "grid.nx");
        if (g.contains("ny")) cfg.ny = detail::integer_number(g.at("ny"), "grid.ny");
        if (cfg.nx < 8 || cfg.nx % 2 != 0) throw ConfigError("grid.nx must be even and >= 8");
        if (cfg.ny < 8) throw ConfigError("grid.ny must be >= 8");
    }
    if (root.contains("stationary")) {
        const auto& s = root.at("stationary");
        detail::reject_unknown_keys(s, {"samples"}, "stationary");
        if (s.contains("samples"))
            cfg.stationary.samples = detail::integer_number(s.at("samples"), "stationary.samples");
        if (cfg.stationary.samples < 1) throw ConfigError("stationary.samples must be >= 1");
    }
    if (root.contains("spectrum")) {
        const auto& s = root.at("spectrum");
        detail::reject_unknown_keys(s, {"k_max", "oracle", "ny_oracle"}, "spectrum");
        if (s.contains("k_max"))
            cfg.spectrum.k_max = detail::integer_number(s.at("k_max"), "spectrum.k_max");
        if (s.contains("oracle")) {
            if (!s.at("oracle").is_boolean()) throw ConfigError("spectrum.oracle must be a boolean");
            cfg.spectrum.oracle = s.at("oracle").get<bool>();
        }
        if (s.contains("ny_oracle"))
            cfg.spectrum.ny_oracle = detail::integer_number(s.at("ny_oracle"), "spectrum.ny_oracle");
        if (cfg.spectrum.k_max < 0) throw ConfigError("spectrum.k_max must be >= 0");
        if (cfg.spectrum.ny_oracle < 128 || cfg.spectrum.ny_oracle % 2 != 0)
            throw ConfigError("spectrum.ny_oracle must be even and >= 128");
    }
    if (root.contains("threshold")) {
        const auto& s = root.at("threshold");
        detail::reject_unknown_keys(s, {"k_scan", "tol"}, "threshold");
        if (s.contains("k_scan"))
            cfg.threshold.k_scan = detail::integer_number(s.at("k_scan"), "threshold.k_scan");
        if (s.contains("tol")) cfg.threshold.tol = detail::finite_number(s.at("tol"), "threshold.tol");
        if (cfg.threshold.k_scan < 1) throw ConfigError("threshold.k_scan must be >= 1");
        if (!(cfg.threshold.tol > 0.0)) throw ConfigError("threshold.tol must be positive");
    }
    if (root.contains("evolve")) {
        const auto& e = root.at("evolve");
        detail::reject_unknown_keys(
            e, {"t_end", "dt", "stepper", "perturbation", "tracked_modes", "record_every"}, "evolve");
        if (e.contains("t_end")) cfg.evolve.t_end = detail::finite_number(e.at("t_end"), "evolve.t_end");
        if (!(cfg.evolve.t_end > 0.0)) throw ConfigError("evolve.t_end must be positive");
        if (e.contains("dt")) {
            if (e.at("dt").is_string()) {
                if (e.at("dt").get<std::string>() != "auto")
                    throw ConfigError("evolve.dt must be a positive number or \"auto\"");
                cfg.evolve.dt.reset();
            } else {
                const double dt = detail::finite_number(e.at("dt"), "evolve.dt");
                if (!(dt > 0.0)) throw ConfigError("evolve.dt must be positive");
                cfg.evolve.dt = dt;
            }
        }
        if (e.contains("stepper")) {
            if (!e.at("stepper").is_string()) throw ConfigError("evolve.stepper must be a string");
            cfg.evolve.stepper = e.at("stepper").get<std::string>();
            if (cfg.evolve.stepper != "imex" && cfg.evolve.stepper != "rk4")
                throw ConfigError("evolve.stepper must be \"imex\" or \"rk4\"");
        }
        if (e.contains("perturbation")) {
            const auto& pert = e.at("perturbation");
            detail::reject_unknown_keys(pert, {"k", "eps"}, "evolve.perturbation");
            if (pert.contains("k"))
                cfg.evolve.perturbation_k = detail::integer_number(pert.at("k"), "evolve.perturbation.k");
            if (pert.contains("eps"))
                cfg.evolve.perturbation_eps =
                    detail::finite_number(pert.at("eps"), "evolve.perturbation.eps");
            if (cfg.evolve.perturbation_k < 1 || cfg.evolve.perturbation_k > cfg.nx / 2 - 1)
                throw ConfigError("evolve.perturbation.k must be in [1, nx/2 - 1]");
            if (cfg.evolve.perturbation_eps < 0.0)
                throw ConfigError("evolve.perturbation.eps must be >= 0");
        }
        if (e.contains("tracked_modes")) {
            if (!e.at("tracked_modes").is_array())
                throw ConfigError("evolve.tracked_modes must be an array");
            cfg.evolve.tracked_modes.clear();
            for (const auto& m : e.at("tracked_modes"))
                cfg.evolve.tracked_modes.push_back(detail::integer_number(m, "evolve.tracked_modes[]"));
            if (cfg.evolve.tracked_modes.empty())
                throw ConfigError("evolve.tracked_modes must not be empty");
            for (int k : cfg.evolve.tracked_modes)
                if (k < 1 || k > cfg.nx / 2 - 1)
                    throw ConfigError("evolve.tracked_modes entries must be in [1, nx/2 - 1]");
        } else {
            std::vector<int> modes;
            for (int k : cfg.evolve.tracked_modes)
                if (k <= cfg.nx / 2 - 1) modes.push_back(k);
            cfg.evolve.tracked_modes = modes;
        }
        if (e.contains("record_every"))
            cfg.evolve.record_every = detail::integer_number(e.at("record_every"), "evolve.record_every");
        if (cfg.evolve.record_every < 1) throw ConfigError("evolve.record_every must be >= 1");
    }
    return cfg;
}

/// Loads and strictly parses a configuration file.
inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        return parse_config(root);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

namespace detail {

inline void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    write_json(out_dir / "resolved_config.json", cfg.resolved());
}

}  // namespace detail

/// stationary: writes stationary.json (rho_star, constants, lambda_0,
/// f_alpha residual) and stationary_profiles.csv (y, sigma_star, p_star).
inline int cmd_stationary(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const FlatStationaryState state = make_state(cfg.params);  // throws before any file is written
    std::filesystem::create_directories(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    nlohmann::json j;
    j["rho_star"] = state.rho_star;
    j["c1"] = state.c1;
    j["c3"] = state.c3;
    j["lambda_0"] = lambda_k(state, cfg.params.gamma, 0);
    j["f_alpha_residual"] = f_alpha(cfg.params.alpha(), state.rho_star);
    j["config"] = cfg.resolved();
    detail::write_json(out_dir / "stationary.json", j);

    detail::CsvWriter csv(out_dir / "stationary_profiles.csv", {"config: resolved_config.json"},
                          {"y", "sigma_star", "p_star"});
    const int n = cfg.stationary.samples;
    for (int i = 0; i < n; ++i) {
        const double y = (n == 1) ? 0.0 : state.rho_star * i / (n - 1);
        csv.row({detail::format_double(y), detail::format_double(sigma_star(state, y)),
                 detail::format_double(p_star(state, y))});
    }
    return exit_ok;
}

/// spectrum: spectrum.csv (k, lambda_k, lambda_oracle, rel_err, tail_ratio)
/// and spectrum_summary.json. The modal-oracle columns stop at the oracle
/// mode cutoff; the oracle is convergence-checked by Richardson
/// extrapolation against the closed form.
inline int cmd_spectrum(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    constexpr int k_oracle_max = 16;
    const FlatStationaryState state = make_state(cfg.params);
    const SpectrumReport report = spectrum(state, cfg.params.gamma, cfg.spectrum.k_max);

    // The oracle column carries the Richardson-extrapolated estimate from
    // (ny_oracle/2, ny_oracle); the same pair gates convergence.
    std::vector<double> oracle(static_cast<size_t>(cfg.spectrum.k_max) + 1,
                               std::numeric_limits<double>::quiet_NaN());
    if (cfg.spectrum.oracle) {
        for (int k = 0; k <= std::min(cfg.spectrum.k_max, k_oracle_max); ++k) {
            const double fine = modal_oracle(state, cfg.params.gamma, k, cfg.spectrum.ny_oracle).lambda;
            const double coarse =
                modal_oracle(state, cfg.params.gamma, k, cfg.spectrum.ny_oracle / 2).lambda;
            const double extrapolated = (4.0 * fine - coarse) / 3.0;
            const double closed = report.lambdas[static_cast<size_t>(k)];
            const double scale = std::max(1.0, std::abs(closed));
            if (std::abs(extrapolated - closed) > 1e-4 * scale)
                throw ToleranceNotReached(
                    "cmd_spectrum: modal oracle did not converge to the closed form at k = " +
                    std::to_string(k));
            oracle[static_cast<size_t>(k)] = extrapolated;
        }
    }

    std::filesystem::create_directories(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    detail::CsvWriter csv(out_dir / "spectrum.csv", {"config: resolved_config.json"},
                          {"k", "lambda_k", "lambda_oracle", "rel_err", "tail_ratio"});
    for (int k = 0; k <= cfg.spectrum.k_max; ++k) {
        const double lam = report.lambdas[static_cast<size_t>(k)];
        const double orc = oracle[static_cast<size_t>(k)];
        std::string oracle_cell, err_cell, tail_cell;
        if (std::isfinite(orc)) {
            oracle_cell = detail::format_double(orc);
            err_cell = detail::format_double(std::abs(orc - lam) / std::max(1e-300, std::abs(lam)));
        }
        if (k >= 1) tail_cell = detail::format_double(tail_ratio(state, cfg.params.gamma, k));
        csv.row({std::to_string(k), detail::format_double(lam), oracle_cell, err_cell, tail_cell});
    }

    nlohmann::json j;
    j["k_max"] = cfg.spectrum.k_max;
    j["min_lambda"] = report.min_lambda;
    j["all_positive"] = report.all_positive;
    j["rho_star"] = state.rho_star;
    j["config"] = cfg.resolved();
    detail::write_json(out_dir / "spectrum_summary.json", j);
    return exit_ok;
}

/// threshold: threshold.json {gamma_min, bracket_lo, bracket_hi, k_eff}.
/// The scan covers k >= 1 (lambda_0 is positive for every valid parameter
/// set and is reported separately).
inline int cmd_threshold(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const FlatStationaryState state = make_state(cfg.params);
    const GammaThreshold th = gamma_threshold(state, cfg.threshold.k_scan, cfg.threshold.tol);

    std::filesystem::create_directories(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    nlohmann::json j;
    j["gamma_min"] = th.gamma_min;
    j["bracket_lo"] = th.bracket_lo;
    j["bracket_hi"] = th.bracket_hi;
    j["k_eff"] = th.k_eff;
    j["lambda_0"] = lambda_k(state, cfg.params.gamma, 0);
    j["scan_convention"] = "k >= 1 scanned; lambda_0 checked separately (always positive)";
    j["config"] = cfg.resolved();
    detail::write_json(out_dir / "threshold.json", j);
    return exit_ok;
}

/// evolve: evolve.csv (t, volume, volume_residual, max_rho, min_rho, |a_k|,
/// |b_k| per tracked mode) and decay.json (per-mode fit vs. the multiplier
/// prediction). Deterministic for identical config. Exit 4 on pinch-off
/// before t_end (trace still written).
inline int cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const FlatStationaryState state = make_state(cfg.params);
    const PeriodicGrid grid(cfg.nx);

    std::vector<double> rho0(static_cast<size_t>(cfg.nx));
    for (int j = 0; j < cfg.nx; ++j)
        rho0[static_cast<size_t>(j)] =
            state.rho_star + cfg.evolve.perturbation_eps * std::cos(cfg.evolve.perturbation_k * grid.node(j));
    for (double v : rho0)
        if (!(v > 0.0))
            throw NonPositiveProfile("cmd_evolve: initial profile is not strictly positive");

    EvolutionConfig ec{cfg.params,
                       BoundaryProfile(grid, std::move(rho0)),
                       cfg.ny,
                       cfg.evolve.t_end,
                       cfg.evolve.stepper == "rk4" ? Stepper::rk4 : Stepper::imex,
                       cfg.evolve.dt,
                       cfg.evolve.record_every,
                       cfg.evolve.tracked_modes,
                       0.1};
    const EvolutionTrace trace = evolve(ec);

    std::filesystem::create_directories(out_dir);
    detail::write_resolved_config(cfg, out_dir);

    std::vector<std::string> header = {"t", "volume", "volume_residual", "max_rho", "min_rho"};
    for (int k : trace.tracked_modes) {
        header.push_back("a" + std::to_string(k));
        header.push_back("b" + std::to_string(k));
    }
    detail::CsvWriter csv(out_dir / "evolve.csv", {"config: resolved_config.json"}, header);
    for (size_t i = 0; i < trace.times.size(); ++i) {
        std::vector<std::string> row = {
            detail::format_double(trace.times[i]), detail::format_double(trace.volumes[i]),
            detail::format_double(trace.volume_residuals[i]), detail::format_double(trace.max_rho[i]),
            detail::format_double(trace.min_rho[i])};
        for (size_t mi = 0; mi < trace.tracked_modes.size(); ++mi) {
            row.push_back(detail::format_double(trace.amp_cos[mi][i]));
            row.push_back(detail::format_double(trace.amp_sin[mi][i]));
        }
        csv.row(row);
    }

    nlohmann::json j;
    j["termination"] = trace.termination;
    j["dt_used"] = trace.dt_used;
    j["steps_taken"] = trace.steps_taken;
    bool growth = false;
    nlohmann::json modes = nlohmann::json::array();
    for (size_t mi = 0; mi < trace.tracked_modes.size(); ++mi) {
        const int k = trace.tracked_modes[mi];
        nlohmann::json m;
        m["k"] = k;
        const double lam = lambda_k(state, cfg.params.gamma, k);
        m["lambda_predicted"] = lam;
        try {
            const DecayEstimate est = fit_decay(trace, k);
            m["omega_fit"] = est.omega;
            m["rel_dev"] = std::abs(est.omega - lam) / std::max(1e-300, std::abs(lam));
            m["r_squared"] = est.r_squared;
            if (est.omega < 0.0) growth = true;
        } catch (const Error& e) {
            m["fit_error"] = e.what();
        }
        if (!trace.amp_cos[mi].empty() &&
            trace.amp_cos[mi].back() > 10.0 * std::max(1e-14, trace.amp_cos[mi].front()))
            growth = true;
        modes.push_back(m);
    }
    j["modes"] = modes;
    if (growth) j["note"] = "unstable_growth_observed";
    j["config"] = cfg.resolved();
    detail::write_json(out_dir / "decay.json", j);

    return trace.termination == "completed" ? exit_ok : exit_early_stop;
}

}  // namespace stripflow
