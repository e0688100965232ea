#ifndef FSAN_EXPERIMENT_CONFIG_HPP
#define FSAN_EXPERIMENT_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <fsan/admm.hpp>
#include <fsan/toeplitz.hpp>

namespace fsan::experiment
{

enum class GainModel
{
    random_phase, ///< unit modulus, phase uniform on [0, 2 pi)
    unit          ///< all gains equal to 1
};

enum class Localizer
{
    music,
    dual
};

/// Optional overrides applied on top of the noiseless or noisy preset.
struct SolverOverrides
{
    std::optional<double> rho;
    std::optional<double> varrho;
    std::optional<int> inner_iters;
    std::optional<int> max_iters;
    std::optional<double> lambda;
    std::optional<bool> retarget_each_sweep;
    double lambda_log_base = 2.718281828459045;
};

///
/// One experiment description. Unset scene fields are drawn per trial:
/// frequencies uniformly inside `bands`, gains per `gain_model`, and a
/// random 0/1 mask with `n_samples` ones when `n_samples` > 0.
///
struct ExperimentConfig
{
    std::vector<int> dims{8, 8};
    std::vector<FrequencyBand> bands{{0.3, 0.4}, {0.5, 0.6}};
    int r = 2;
    std::vector<std::vector<double>> frequencies;
    GainModel gain_model = GainModel::random_phase;
    int n_samples = 0; ///< 0 observes every entry
    std::optional<double> snr_db;
    std::optional<SolverMode> solver; ///< default follows snr_db
    SolverOverrides params;
    bool no_fs = false;
    int trials = 10;
    std::uint64_t seed = 1;
    double grid_step = 1e-3;
    std::string output;
    int workers = 1;

    Localizer localizer = Localizer::music;
    double music_quantile = 0.9;
    double dual_rel_tol = 0.1;
    double success_nmse = 1e-3;
    std::vector<int> ns_values;
    std::vector<int> r_values;
    std::vector<double> snr_values{4, 8, 12, 16, 20};
    std::vector<std::vector<int>> bench_sizes{{8, 8}, {12, 12}, {16, 16}};
    int bench_repeats = 3;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;

    bool noisy() const noexcept { return snr_db.has_value(); }
    SolverMode mode() const;
    Dims dimensions() const { return Dims(dims); }

    /// Bands handed to the solver and localizer: the prior, or [eps, 1-eps]
    /// in every dimension when `no_fs` is set.
    std::vector<FrequencyBand> solver_bands() const;

    /// Preset for the noise level with overrides applied. `noise_std` feeds
    /// the default lambda.
    AdmmParams resolve_params(double noise_std) const;
};

/// Half-width of the margin used by the full-width band of --no-fs.
inline constexpr double full_band_margin = 1e-3;

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Seed of trial `index`: base ^ index.
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index)
{
    return base ^ index;
}

const char* to_string(SolverMode m);
SolverMode parse_solver_mode(const std::string& s);

} // namespace fsan::experiment

#endif // FSAN_EXPERIMENT_CONFIG_HPP
