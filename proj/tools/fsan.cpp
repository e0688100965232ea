#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <fsan/experiment/commands.hpp>

using namespace fsan;
using namespace fsan::experiment;

namespace
{

enum ExitCode
{
    exit_ok = 0,
    exit_failure = 1,
    exit_usage = 2,
    exit_divergence = 3
};

struct CommonOptions
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string solver;
    bool no_fs = false;
    std::optional<int> workers;
    std::optional<int> trials;
    std::optional<int> max_iters;
    std::optional<double> lambda;
};

void add_common(CLI::App* app, CommonOptions& o)
{
    app->add_option("--config", o.config, "JSON experiment config");
    app->add_option("--seed", o.seed, "base seed (overrides config)");
    app->add_option("--out", o.out, "output file (default: config output or stdout)");
    app->add_option("--solver", o.solver, "constrained or regularized")
        ->check(CLI::IsMember({"constrained", "regularized"}));
    app->add_flag("--no-fs", o.no_fs, "plain ADMM: K = 0 and full-width bands");
    app->add_option("--workers", o.workers, "parallel trial workers")
        ->check(CLI::PositiveNumber);
    app->add_option("--trials", o.trials, "trials per cell")->check(CLI::PositiveNumber);
    app->add_option("--max-iters", o.max_iters, "ADMM iterations")
        ->check(CLI::PositiveNumber);
    app->add_option("--lambda", o.lambda, "regularization weight")
        ->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonOptions& o)
{
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.output = o.out;
    if (!o.solver.empty()) c.solver = parse_solver_mode(o.solver);
    if (o.no_fs) c.no_fs = true;
    if (o.workers) c.workers = *o.workers;
    if (o.trials) c.trials = *o.trials;
    if (o.max_iters) c.params.max_iters = *o.max_iters;
    if (o.lambda) c.params.lambda = *o.lambda;
    c.validate();
    return c;
}

void emit(const std::string& path, const std::string& content)
{
    if (path.empty())
    {
        std::cout << content;
    }
    else
    {
        write_atomically(path, content);
    }
}

std::string peaks_path(const std::string& surface_path)
{
    if (surface_path.empty()) return {};
    const auto dot = surface_path.rfind('.');
    const auto slash = surface_path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    {
        return surface_path + ".peaks";
    }
    return surface_path.substr(0, dot) + ".peaks" + surface_path.substr(dot);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Frequency-selective atomic-norm super-resolution experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    CommonOptions common;
    std::string instance_path;

    auto* synth = app.add_subcommand("synth", "draw a scene and its solver instance");
    auto* solve = app.add_subcommand("solve", "solve an instance JSON");
    auto* conv = app.add_subcommand("convergence", "NMSE per iteration");
    auto* phase = app.add_subcommand("phase-transition", "success rate over (N_s, r)");
    auto* rmse = app.add_subcommand("rmse-snr", "frequency RMSE per SNR");
    auto* dual = app.add_subcommand("dual-surface", "dual polynomial modulus and peaks");
    auto* bench = app.add_subcommand("bench", "solver wall-clock per size");
    auto* fixture = app.add_subcommand("fixture", "T and T_g matrices of a random generator");
    for (auto* sub : {synth, conv, phase, rmse, dual, bench, fixture}) add_common(sub, common);

    SolverOverrides solve_overrides;
    std::string solve_out;
    solve->add_option("--instance", instance_path, "instance JSON")->required();
    solve->add_option("--out", solve_out, "output JSON (default stdout)");
    solve->add_option("--max-iters", solve_overrides.max_iters, "ADMM iterations")
        ->check(CLI::PositiveNumber);
    solve->add_option("--inner-iters", solve_overrides.inner_iters, "refinement sweeps K")
        ->check(CLI::NonNegativeNumber);
    solve->add_option("--varrho", solve_overrides.varrho, "refinement weight");
    solve->add_option("--rho", solve_overrides.rho, "ADMM penalty");
    solve->add_option("--lambda", solve_overrides.lambda, "regularization weight");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    try
    {
        if (solve->parsed())
        {
            const Instance inst = instance_from_json(read_json(instance_path));
            emit(solve_out, cmd_solve(inst, solve_overrides).dump(1) + "\n");
            return exit_ok;
        }
        const ExperimentConfig cfg = resolve(common);
        if (synth->parsed())
        {
            emit(cfg.output, cmd_synth(cfg).dump(1) + "\n");
        }
        else if (conv->parsed())
        {
            emit(cfg.output, cmd_convergence(cfg).to_csv());
        }
        else if (phase->parsed())
        {
            emit(cfg.output, cmd_phase_transition(cfg).to_csv());
        }
        else if (rmse->parsed())
        {
            emit(cfg.output, cmd_rmse_snr(cfg).to_csv());
        }
        else if (dual->parsed())
        {
            const SurfaceResult res = cmd_dual_surface(cfg);
            if (!cfg.output.empty()) emit(cfg.output, res.surface.to_csv());
            emit(peaks_path(cfg.output), res.peaks.to_csv());
        }
        else if (bench->parsed())
        {
            emit(cfg.output, cmd_bench(cfg).to_csv());
        }
        else if (fixture->parsed())
        {
            emit(cfg.output, cmd_fixture(cfg).dump(1) + "\n");
        }
        return exit_ok;
    }
    catch (const DivergenceError& e)
    {
        std::cerr << "fsan: " << e.what() << '\n';
        return exit_divergence;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "fsan: invalid input: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "fsan: " << e.what() << '\n';
        return exit_failure;
    }
}
