// stripflow command-line front end: stationary | spectrum | threshold | evolve,
// each driven by a JSON config and writing CSV/JSON results into --out.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "stripflow/io.hpp"

namespace {

int run(const std::string& sub, const std::string& config_path, const std::string& out_dir) {
    using namespace stripflow;
    try {
        const RunConfig cfg = load_config(config_path);
        if (sub == "stationary") return cmd_stationary(cfg, out_dir);
        if (sub == "spectrum") return cmd_spectrum(cfg, out_dir);
        if (sub == "threshold") return cmd_threshold(cfg, out_dir);
        if (sub == "evolve") return cmd_evolve(cfg, out_dir);
        std::fprintf(stderr, "unknown subcommand: %s\n", sub.c_str());
        return exit_config;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const AlphaOutOfRange& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return exit_model;
    } catch (const NonPositiveParameter& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return exit_model;
    } catch (const NonPositiveProfile& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return exit_model;
    } catch (const BracketNotFound& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return exit_model;
    } catch (const ToleranceNotReached& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return exit_tolerance;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return exit_tolerance;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free-boundary layer growth on a periodic strip"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    for (const char* name : {"stationary", "spectrum", "threshold", "evolve"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (default: current)");
    }

    CLI11_PARSE(app, argc, argv);
    return run(app.get_subcommands().front()->get_name(), config_path, out_dir);
}
