#ifndef FSAN_EXPERIMENT_COMMANDS_HPP
#define FSAN_EXPERIMENT_COMMANDS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include <fsan/admm.hpp>
#include <fsan/experiment/config.hpp>
#include <fsan/experiment/io.hpp>
#include <fsan/experiment/scene.hpp>
#include <fsan/experiment/table.hpp>

namespace fsan::experiment
{

/// Scene, solver settings and output of one trial.
struct TrialResult
{
    Scene scene;
    SolverMode mode = SolverMode::constrained;
    AdmmParams params;
    std::vector<FrequencyBand> bands;
    SolverOutput<double> out;
    double seconds = 0.0;
};

TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed);

/// Frequencies located by the configured method: MUSIC with model order r
/// (at most r peaks above the quantile), or dual-polynomial peaks near the
/// certificate level (1 or lambda).
std::vector<std::vector<double>> localize(const ExperimentConfig& cfg,
                                          const TrialResult& trial);

/// Calls f(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any call is rethrown after all threads join.
void parallel_for(int n, int workers, const std::function<void(int)>& f);

/// Adds command, config hash, seed and version to the table metadata.
void stamp(ResultTable& t, const ExperimentConfig& cfg, const std::string& command);

/// Scene of trial 0 plus the matching solver instance.
nlohmann::json cmd_synth(const ExperimentConfig& cfg);

/// Runs the solver described by an instance document.
nlohmann::json cmd_solve(const Instance& inst, const SolverOverrides& overrides);

/// Per-iteration trace of trial 0 (one row per iteration).
ResultTable cmd_convergence(const ExperimentConfig& cfg);

/// Success rate over the (ns_values x r_values) grid; success is
/// NMSE < success_nmse.
ResultTable cmd_phase_transition(const ExperimentConfig& cfg);

/// RMSE of localized frequencies per SNR point, `trials` runs each.
ResultTable cmd_rmse_snr(const ExperimentConfig& cfg);

struct SurfaceResult
{
    ResultTable surface;
    ResultTable peaks;
    double level = 1.0;
};

/// |Q| over the band grid for trial 0 and its peaks near the level.
SurfaceResult cmd_dual_surface(const ExperimentConfig& cfg);

/// Wall-clock seconds per problem size in bench_sizes.
ResultTable cmd_bench(const ExperimentConfig& cfg);

/// T and T_g matrices of a seeded random generator for the config dims and
/// bands.
nlohmann::json cmd_fixture(const ExperimentConfig& cfg);

} // namespace fsan::experiment

#endif // FSAN_EXPERIMENT_COMMANDS_HPP
