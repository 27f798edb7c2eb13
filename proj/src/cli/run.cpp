#include <iostream>

#include "CLI11.hpp"
#include "yamabe/cli.hpp"

namespace yamabe::cli {

namespace {

// A command-line value that overrides the configuration only when given.
template <class T>
struct Override {
    T value{};
    CLI::Option* option = nullptr;
    void apply(T& target) const {
        if (option != nullptr && option->count() > 0) target = value;
    }
};

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Blow-up ansatz toolkit for the boundary Yamabe problem", kToolName};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);

    Override<int> n, eps_points, grid_cells;
    Override<std::uint64_t> seed;
    Override<double> scale, eps_min, eps_max, lambda_a, lambda_b, lambda, tol;
    Override<std::string> out, curvature;
    n.option = app.add_option("--n", n.value, "ambient dimension (8..16)");
    seed.option = app.add_option("--seed", seed.value, "seed of the random curvature data");
    scale.option = app.add_option("--scale", scale.value, "Frobenius norm of the random curvature tensors");
    curvature.option = app.add_option("--curvature", curvature.value, "curvature JSON file (replaces seed/scale)");
    eps_min.option = app.add_option("--eps-min", eps_min.value, "smallest eps of the scaling grid");
    eps_max.option = app.add_option("--eps-max", eps_max.value, "largest eps of the scaling grid");
    eps_points.option = app.add_option("--eps-points", eps_points.value, "number of eps grid points");
    lambda_a.option = app.add_option("--lambda-a", lambda_a.value, "left end of the lambda interval");
    lambda_b.option = app.add_option("--lambda-b", lambda_b.value, "right end of the lambda interval");
    lambda.option = app.add_option("--lambda", lambda.value, "concentration parameter of the scaling study");
    grid_cells.option = app.add_option("--grid-cells", grid_cells.value, "cells per axis of the corrector grid");
    tol.option = app.add_option("--tol", tol.value, "relative residual bound of the corrector solve");
    out.option = app.add_option("--out", out.value, "output directory");

    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const StudyConfig&);
    };
    const Command commands[] = {
        {"constants", "energy expansion constants with dual oracles", cmd_constants},
        {"corrector", "solve (or load) the corrector and report its properties", cmd_corrector},
        {"landscape", "reduced energy over the lambda interval with the maximizer", cmd_landscape},
        {"scaling", "remainder norms against eps with exponent fits", cmd_scaling},
        {"verify", "every invariant suite with one PASS/FAIL summary", cmd_verify},
        {"profile", "sampled field of the blow-up profile", cmd_profile},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        StudyConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path, cfg);
        n.apply(cfg.n);
        seed.apply(cfg.seed);
        scale.apply(cfg.scale);
        curvature.apply(cfg.curvature_file);
        eps_min.apply(cfg.eps_min);
        eps_max.apply(cfg.eps_max);
        eps_points.apply(cfg.eps_points);
        lambda_a.apply(cfg.lambda_a);
        lambda_b.apply(cfg.lambda_b);
        lambda.apply(cfg.lambda);
        grid_cells.apply(cfg.grid_cells);
        tol.apply(cfg.tol);
        out.apply(cfg.out);
        validate(cfg);

        for (const auto& c : commands) {
            if (app.got_subcommand(c.name)) return c.fn(cfg);
        }
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << kToolName << ": " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << kToolName << ": " << e.what() << "\n";
        return kFail;
    }
}

}  // namespace yamabe::cli
