#include <fsan/experiment/commands.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <fsan/experiment/metrics.hpp>
#include <fsan/localization.hpp>

namespace fsan::experiment
{

using nlohmann::json;

namespace
{

std::vector<std::string> frequency_columns(std::size_t d, const std::string& prefix)
{
    std::vector<std::string> c;
    for (std::size_t i = 0; i < d; ++i) c.push_back(prefix + std::to_string(i + 1));
    return c;
}

double dual_level(const TrialResult& t)
{
    return t.mode == SolverMode::constrained ? 1.0 : t.params.lambda;
}

} // namespace

TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed)
{
    TrialResult t;
    t.scene = make_scene(cfg, seed);
    t.mode = cfg.mode();
    t.params = cfg.resolve_params(t.scene.noise_std);
    t.bands = cfg.solver_bands();
    const auto start = std::chrono::steady_clock::now();
    t.out = AdmmSolver<double>(t.scene.meas, t.bands, t.params, t.mode).run(t.scene.x);
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
    return t;
}

std::vector<std::vector<double>> localize(const ExperimentConfig& cfg,
                                          const TrialResult& trial)
{
    if (cfg.localizer == Localizer::music)
    {
        const auto m = music_spectrum<double>(trial.out.b_hat, cfg.r,
                                              std::span(trial.bands), cfg.grid_step);
        return locate_music(m, std::size_t(cfg.r), cfg.music_quantile);
    }
    const auto s = dual_surface<double>(trial.out.dual_embedding,
                                        trial.scene.meas.dims, std::span(trial.bands),
                                        cfg.grid_step);
    return locate_from_dual(s, dual_level(trial), cfg.dual_rel_tol);
}

void parallel_for(int n, int workers, const std::function<void(int)>& f)
{
    if (n <= 0) return;
    const int threads = std::max(1, std::min(workers, n));
    if (threads == 1)
    {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
    {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++)
            {
                try
                {
                    f(i);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

void stamp(ResultTable& t, const ExperimentConfig& cfg, const std::string& command)
{
    t.metadata()["command"] = command;
    t.metadata()["config_hash"] = config_hash(cfg);
    t.metadata()["seed"] = std::to_string(cfg.seed);
    t.metadata()["version"] = version_string();
    t.metadata()["solver"] = to_string(cfg.mode());
    t.metadata()["fs"] = cfg.no_fs ? "off" : "on";
}

json cmd_synth(const ExperimentConfig& cfg)
{
    const Scene scene = make_scene(cfg, trial_seed(cfg.seed, 0));
    const AdmmParams p = cfg.resolve_params(scene.noise_std);
    json j;
    j["config_hash"] = config_hash(cfg);
    j["version"] = version_string();
    j["scene"] = scene_to_json(scene);
    j["instance"] = instance_to_json(
        make_instance(scene, cfg.solver_bands(), cfg.mode(), p.lambda));
    return j;
}

json cmd_solve(const Instance& inst, const SolverOverrides& o)
{
    AdmmParams p = inst.mode == SolverMode::regularized
                       ? AdmmParams::noisy(inst.lambda.value_or(1.0))
                       : AdmmParams::noiseless();
    if (o.rho) p.rho = *o.rho;
    if (o.varrho) p.varrho = *o.varrho;
    if (o.inner_iters) p.inner_iters = *o.inner_iters;
    if (o.max_iters) p.max_iters = *o.max_iters;
    if (o.lambda) p.lambda = *o.lambda;
    if (o.retarget_each_sweep) p.retarget_each_sweep = *o.retarget_each_sweep;
    const auto out =
        AdmmSolver<double>(inst.meas, inst.bands, p, inst.mode).run(inst.truth_x);
    json j = output_to_json(out, inst.mode, p);
    j["version"] = version_string();
    return j;
}

ResultTable cmd_convergence(const ExperimentConfig& cfg)
{
    cfg.validate();
    const TrialResult t = run_trial(cfg, trial_seed(cfg.seed, 0));
    ResultTable table(
        {"iteration", "nmse", "primal_residual", "data_residual", "objective"});
    for (const auto& rec : t.out.trace)
    {
        table.add_row({double(rec.iteration), rec.nmse, rec.primal_residual,
                       rec.data_residual, rec.objective});
    }
    stamp(table, cfg, "convergence");
    return table;
}

ResultTable cmd_phase_transition(const ExperimentConfig& cfg)
{
    cfg.validate();
    const std::vector<int> ns_values =
        cfg.ns_values.empty() ? std::vector<int>{int(cfg.dimensions().total())}
                              : cfg.ns_values;
    const std::vector<int> r_values =
        cfg.r_values.empty() ? std::vector<int>{cfg.r} : cfg.r_values;
    ResultTable table({"n_samples", "r", "trials", "successes", "success_rate",
                       "median_nmse"});
    for (int ns : ns_values)
    {
        for (int r : r_values)
        {
            ExperimentConfig cell = cfg;
            cell.n_samples = ns;
            cell.r = r;
            if (int(cell.frequencies.size()) != r) cell.frequencies.clear();
            std::vector<double> errors(cfg.trials);
            parallel_for(cfg.trials, cfg.workers, [&](int i) {
                errors[i] = run_trial(cell, trial_seed(cfg.seed, i)).out.trace.back().nmse;
            });
            int successes = 0;
            for (double e : errors) successes += e < cfg.success_nmse ? 1 : 0;
            std::sort(errors.begin(), errors.end());
            const std::size_t m = errors.size();
            const double median = m % 2 ? errors[m / 2]
                                        : 0.5 * (errors[m / 2 - 1] + errors[m / 2]);
            table.add_row({double(ns), double(r), double(cfg.trials), double(successes),
                           double(successes) / cfg.trials, median});
        }
    }
    stamp(table, cfg, "phase-transition");
    return table;
}

ResultTable cmd_rmse_snr(const ExperimentConfig& cfg)
{
    cfg.validate();
    if (cfg.snr_values.empty())
    {
        throw std::invalid_argument("rmse-snr: snr_values is empty");
    }
    const std::size_t d = cfg.dims.size();
    std::vector<double> cap;
    for (const auto& b : cfg.bands) cap.push_back(b.width());

    std::vector<std::string> cols{"snr_db"};
    for (const auto& c : frequency_columns(d, "rmse_f")) cols.push_back(c);
    cols.push_back("rmse_mean");
    cols.push_back("mean_detections");
    cols.push_back("runs");
    ResultTable table(cols);

    for (double snr : cfg.snr_values)
    {
        ExperimentConfig cell = cfg;
        cell.snr_db = snr;
        std::vector<std::vector<double>> per_run(cfg.trials);
        std::vector<std::size_t> detections(cfg.trials);
        parallel_for(cfg.trials, cfg.workers, [&](int i) {
            const TrialResult t = run_trial(cell, trial_seed(cfg.seed, i));
            const auto est = localize(cell, t);
            detections[i] = est.size();
            per_run[i] = run_squared_errors(est, t.scene.model.freqs, cap);
        });
        const auto r = rmse(per_run);
        std::vector<double> row{snr};
        double mean = 0.0;
        for (double v : r)
        {
            row.push_back(v);
            mean += v / double(d);
        }
        row.push_back(mean);
        double det = 0.0;
        for (auto k : detections) det += double(k) / cfg.trials;
        row.push_back(det);
        row.push_back(cfg.trials);
        table.add_row(std::move(row));
    }
    stamp(table, cfg, "rmse-snr");
    return table;
}

SurfaceResult cmd_dual_surface(const ExperimentConfig& cfg)
{
    cfg.validate();
    const TrialResult t = run_trial(cfg, trial_seed(cfg.seed, 0));
    const std::size_t d = cfg.dims.size();
    const auto s = dual_surface<double>(t.out.dual_embedding, t.scene.meas.dims,
                                        std::span(t.bands), cfg.grid_step);
    SurfaceResult res;
    res.level = dual_level(t);

    auto cols = frequency_columns(d, "f");
    cols.push_back("modulus");
    res.surface = ResultTable(cols);
    for (Eigen::Index k = 0; k < s.values.size(); ++k)
    {
        auto row = s.point(k);
        row.push_back(s.values[k]);
        res.surface.add_row(std::move(row));
    }

    cols.push_back("modulus_over_level");
    res.peaks = ResultTable(cols);
    for (const Peak& p : locate_peaks(s, res.level * (1.0 - cfg.dual_rel_tol)))
    {
        auto row = s.point(p.index);
        row.push_back(p.value);
        row.push_back(p.value / res.level);
        res.peaks.add_row(std::move(row));
    }
    for (auto* table : {&res.surface, &res.peaks})
    {
        stamp(*table, cfg, "dual-surface");
        table->metadata()["level"] = std::to_string(res.level);
    }
    return res;
}

ResultTable cmd_bench(const ExperimentConfig& cfg)
{
    cfg.validate();
    const std::size_t d = cfg.dims.size();
    std::vector<std::string> cols{"n_total"};
    for (const auto& c : frequency_columns(d, "n")) cols.push_back(c);
    for (const char* c : {"iterations", "repeats", "mean_seconds", "stddev_seconds",
                          "min_seconds"})
    {
        cols.push_back(c);
    }
    ResultTable table(cols);
    for (const auto& size : cfg.bench_sizes)
    {
        ExperimentConfig cell = cfg;
        cell.dims = size;
        if (cfg.n_samples > 0)
        {
            const double frac = double(cfg.n_samples) / double(cfg.dimensions().total());
            cell.n_samples =
                std::max(1, int(std::lround(frac * double(cell.dimensions().total()))));
        }
        std::vector<double> times;
        int iterations = 0;
        for (int k = 0; k < cfg.bench_repeats; ++k)
        {
            const TrialResult t = run_trial(cell, trial_seed(cfg.seed, k));
            times.push_back(t.seconds);
            iterations = int(t.out.trace.size());
        }
        double mean = 0.0, var = 0.0;
        for (double v : times) mean += v / times.size();
        for (double v : times) var += (v - mean) * (v - mean);
        var = times.size() > 1 ? var / double(times.size() - 1) : 0.0;
        std::vector<double> row{double(cell.dimensions().total())};
        for (int n : size) row.push_back(n);
        row.push_back(iterations);
        row.push_back(cfg.bench_repeats);
        row.push_back(mean);
        row.push_back(std::sqrt(var));
        row.push_back(*std::min_element(times.begin(), times.end()));
        table.add_row(std::move(row));
    }
    stamp(table, cfg, "bench");
    table.metadata()["timing"] = "wall-clock seconds of the solver only";
    return table;
}

json cmd_fixture(const ExperimentConfig& cfg)
{
    cfg.validate();
    const Dims dims = cfg.dimensions();
    GeneratorTensor<double> b(dims);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < b.size(); ++k)
    {
        const double re = normal(rng);
        const double im = normal(rng);
        b.data()[k] = {re, im};
    }
    json j = fixture_to_json(b, cfg.bands);
    j["config_hash"] = config_hash(cfg);
    j["version"] = version_string();
    return j;
}

} // namespace fsan::experiment
