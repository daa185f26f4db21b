// nlkw command-line driver: batch experiments around nonlinear stochastic
// integrals, Kunita-Watanabe projections and the pointwise L2 solver.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nlkw/nlkw.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> paths;
    std::optional<std::uint32_t> steps;
    std::optional<double> rho;
    std::optional<std::string> family;
    std::string dump_file; // simulate only
};

nlkw::ExperimentConfig load_config(const CliOverrides& cli) {
    nlkw::ExperimentConfig cfg;
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw nlkw::IoError("cannot open config file " + cli.config_path);
        std::ostringstream text;
        text << in.rdbuf();
        cfg = nlkw::parse_config(text.str());
    }
    if (cli.seed) cfg.master_seed = *cli.seed;
    if (cli.paths) cfg.n_paths = *cli.paths;
    if (cli.steps) cfg.n_steps = *cli.steps;
    if (cli.rho) cfg.rho = *cli.rho;
    if (cli.family) cfg.family = *cli.family;
    if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
    nlkw::validate_config(cfg);
    return cfg;
}

void print_estimate(const char* label, const nlkw::MCEstimate& e) {
    std::cout << label << ": " << e.mean << " (se " << e.se << ", n " << e.n << ")\n";
}

int cmd_simulate(const CliOverrides& cli) {
    const nlkw::ExperimentConfig cfg = load_config(cli);
    const nlkw::PathBatch batch = nlkw::simulate_batch(
        nlkw::TimeGrid::uniform(cfg.horizon, cfg.n_steps), cfg.n_paths, cfg.rho,
        cfg.master_seed);

    const nlkw::Accumulator acc =
        nlkw::par::reduce(batch.size(), 2, [&](std::size_t i, std::span<double> out) {
            const nlkw::PathBundle p = batch.path(i);
            out[0] = p.w.back();
            out[1] = p.w.back() * p.w.back();
        });
    const double mean = acc.estimate(0).mean;
    const double var = acc.estimate(1).mean - mean * mean;
    std::cout << "simulated " << batch.size() << " paths, N=" << cfg.n_steps
              << ", T=" << cfg.horizon << ", rho=" << cfg.rho << "\n";
    std::cout << "terminal W: mean " << mean << ", variance " << var << " (expected ~"
              << cfg.horizon << ")\n";

    if (!cli.dump_file.empty()) {
        nlkw::dump_batch(batch, cli.dump_file);
        std::cout << "wrote " << cli.dump_file << "\n";
    }
    return 0;
}

int cmd_verify_family(const CliOverrides& cli) {
    const nlkw::ExperimentConfig cfg = load_config(cli);
    const nlkw::MartingaleFamily family = nlkw::family_by_name(cfg.effective_family());
    const nlkw::PathBatch proto(nlkw::TimeGrid::uniform(cfg.horizon, 2),
                                std::min<std::size_t>(cfg.n_paths, cfg.ladder_paths), cfg.rho,
                                cfg.master_seed);
    const std::vector<std::size_t> ladder(cfg.ladder.begin(), cfg.ladder.end());

    nlkw::RunSummary partial;
    partial.config = cfg;
    const auto value_report = nlkw::representation_check(family, cfg.rep_x, proto, ladder,
                                                         nlkw::RepresentationRoute::value);
    partial.representation = value_report.rungs;
    std::cout << "representation ladder (x=" << cfg.rep_x << "):\n";
    for (const nlkw::LadderRung& r : value_report.rungs)
        std::cout << "  N=" << r.n_steps << "  rmse=" << r.rmse << "\n";
    for (double ratio : value_report.ratios()) std::cout << "  ratio " << ratio << "\n";

    if (family.d_integrand && family.d_value) {
        const auto dx_report = nlkw::representation_check(family, cfg.rep_x, proto, ladder,
                                                          nlkw::RepresentationRoute::derivative);
        partial.representation_dx = dx_report.rungs;
        std::cout << "derivative ladder:\n";
        for (const nlkw::LadderRung& r : dx_report.rungs)
            std::cout << "  N=" << r.n_steps << "  rmse=" << r.rmse << "\n";
    }

    // spot derivative check on a fresh path
    const nlkw::PathBundle probe = nlkw::simulate_path(
        std::make_shared<const nlkw::TimeGrid>(nlkw::TimeGrid::uniform(cfg.horizon, 64)),
        cfg.rho, cfg.master_seed, 0);
    const nlkw::DerivativeCheck dc = nlkw::derivative_check(family, 32, 0.7, probe, 1e-5);
    std::cout << "derivative check at (t=" << probe.grid->node(32) << ", x=0.7): rel err d_mu "
              << dc.rel_err_d_integrand << ", rel err d_M " << dc.rel_err_d_value << "\n";

    const nlkw::PathBatch holder_batch(nlkw::TimeGrid::uniform(cfg.horizon, 64),
                                       std::min<std::size_t>(cfg.n_paths, 2000), cfg.rho,
                                       cfg.master_seed);
    std::vector<double> x_grid;
    for (int i = 0; i <= 8; ++i) x_grid.push_back(-0.04 + 0.01 * i);
    const nlkw::HolderReport holder = nlkw::holder_estimate(family, holder_batch, x_grid);
    if (holder.derivative_constant)
        std::cout << "holder diagnostic: " << holder.note << "\n";
    else
        std::cout << "holder diagnostic: delta_hat " << holder.delta_hat << ", K_hat "
                  << holder.k_hat << "\n";

    nlkw::emit_outputs(partial, cfg.out_dir);
    std::cout << "wrote ladder.csv / ladder.svg to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_kw(const CliOverrides& cli) {
    const nlkw::ExperimentConfig cfg = load_config(cli);
    const nlkw::PathBatch batch(nlkw::TimeGrid::uniform(cfg.horizon, cfg.n_steps), cfg.n_paths,
                                cfg.rho, cfg.master_seed);

    const nlkw::KWDecomposition analytic = nlkw::analytic_kw_example(cfg.rho, batch);
    print_estimate("analytic lambda_sq", analytic.lambda_sq);
    std::cout << "closed form 2(1-rho^2)T^2 = "
              << 2.0 * (1.0 - cfg.rho * cfg.rho) * cfg.horizon * cfg.horizon << "\n";

    const nlkw::KWDecomposition reg =
        nlkw::regression_kw(nlkw::payoff_by_name(cfg.payoff), cfg.basis, batch,
                            cfg.hold_out_fraction);
    for (std::size_t i = 0; i < reg.beta.size(); ++i)
        std::cout << "beta[" << reg.feature_names[i] << "] = " << reg.beta[i] << " (se "
                  << reg.beta_se[i] << ")\n";
    print_estimate("regression lambda_sq (held out)", reg.lambda_sq);
    print_estimate("regression residual (in sample)", reg.in_sample_residual);
    return 0;
}

int cmd_pipeline(const CliOverrides& cli, bool force_defaults) {
    CliOverrides effective = cli;
    if (force_defaults) effective.config_path.clear();
    const nlkw::ExperimentConfig cfg = load_config(effective);
    const nlkw::RunSummary summary = nlkw::run_pipeline(cfg);
    nlkw::emit_outputs(summary, cfg.out_dir);

    print_estimate("lambda_sq", summary.lambda_sq);
    print_estimate("objective", summary.objective);
    print_estimate("orthogonality", summary.orthogonality);
    if (summary.has_excess) print_estimate("excess", summary.excess);
    std::cout << "modes: " << summary.root_nodes << " root, " << summary.stationary_nodes
              << " stationary\n";
    for (const nlkw::DirectionalRow& row : summary.directional)
        std::cout << "eps " << row.eps << ": fd " << row.fd.mean << ", diff from analytic "
                  << row.diff.mean << " (se " << row.diff.se << ")\n";
    std::cout << "wall clock " << summary.wall_clock_ms << " ms\n";
    std::cout << "outputs in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_sweep(const CliOverrides& cli) {
    const nlkw::ExperimentConfig cfg = load_config(cli);
    const nlkw::SweepResult sweep = nlkw::sweep_rho(cfg);
    nlkw::emit_sweep_outputs(sweep, cfg.out_dir);
    for (const nlkw::SweepRow& row : sweep.rows)
        std::cout << "rho " << row.rho << ": floor " << row.lambda_sq.mean << ", objective "
                  << row.objective.mean << ", excess " << row.excess.mean << "\n";
    std::cout << "outputs in " << cfg.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nlkw: Monte Carlo experiments with nonlinear stochastic integrals"};
    app.require_subcommand(1);

    CliOverrides cli;
    app.add_option("--config", cli.config_path, "JSON config file");
    app.add_option("--out", cli.out_dir, "output directory (overrides config)");
    app.add_option("--seed", cli.seed, "master seed (overrides config)");
    app.add_option("--paths", cli.paths, "number of paths (overrides config)");
    app.add_option("--steps", cli.steps, "number of grid steps (overrides config)");
    app.add_option("--rho", cli.rho, "correlation in [0,1] (overrides config)");
    app.add_option("--family", cli.family, "family: linear | exp | exp-as-printed");

    CLI::App* simulate = app.add_subcommand("simulate", "simulate a path batch");
    simulate->add_option("--dump", cli.dump_file, "write the batch to a binary file");
    CLI::App* verify = app.add_subcommand("verify-family",
                                          "representation/derivative/holder checks");
    CLI::App* kw = app.add_subcommand("kw", "Kunita-Watanabe decompositions of the payoff");
    CLI::App* optimize = app.add_subcommand("optimize", "full pipeline with the given config");
    CLI::App* reproduce = app.add_subcommand("reproduce-example",
                                             "full pipeline with the built-in example defaults");
    CLI::App* sweep = app.add_subcommand("sweep-rho", "objective and floor across rho values");
    for (CLI::App* sub : {simulate, verify, kw, optimize, reproduce, sweep}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(cli);
        if (verify->parsed()) return cmd_verify_family(cli);
        if (kw->parsed()) return cmd_kw(cli);
        if (optimize->parsed()) return cmd_pipeline(cli, false);
        if (reproduce->parsed()) return cmd_pipeline(cli, true);
        if (sweep->parsed()) return cmd_sweep(cli);
    } catch (const nlkw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlkw::ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const nlkw::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 2;
    } catch (const nlkw::CapabilityError& e) {
        std::cerr << "capability error: " << e.what() << "\n";
        return 2;
    } catch (const nlkw::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const nlkw::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
