#include <fsan/experiment/config.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fsan::experiment
{

using nlohmann::json;

namespace
{

const char* to_string(GainModel g)
{
    return g == GainModel::unit ? "unit" : "random_phase";
}

GainModel parse_gain_model(const std::string& s)
{
    if (s == "unit") return GainModel::unit;
    if (s == "random_phase") return GainModel::random_phase;
    throw std::invalid_argument("unknown gain_model '" + s + "'");
}

const char* to_string(Localizer l)
{
    return l == Localizer::dual ? "dual" : "music";
}

Localizer parse_localizer(const std::string& s)
{
    if (s == "music") return Localizer::music;
    if (s == "dual") return Localizer::dual;
    throw std::invalid_argument("unknown localizer '" + s + "'");
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v)
{
    if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v)
{
    if (j.contains(key) && !j.at(key).is_null()) v = j.at(key).get<T>();
}

template <typename T>
void get_if(const json& j, const char* key, T& v)
{
    if (j.contains(key)) j.at(key).get_to(v);
}

} // namespace

const char* to_string(SolverMode m)
{
    return m == SolverMode::constrained ? "constrained" : "regularized";
}

SolverMode parse_solver_mode(const std::string& s)
{
    if (s == "constrained") return SolverMode::constrained;
    if (s == "regularized") return SolverMode::regularized;
    throw std::invalid_argument("unknown solver '" + s +
                                "' (expected constrained|regularized)");
}

void ExperimentConfig::validate() const
{
    const Dims d = dimensions();
    if (bands.size() != d.rank())
    {
        throw std::invalid_argument("config: one band per dimension required");
    }
    for (const auto& b : bands) b.validate();
    if (r < 1) throw std::invalid_argument("config: r must be >= 1");
    if (!frequencies.empty())
    {
        if (frequencies.size() != std::size_t(r))
        {
            throw std::invalid_argument("config: frequencies must list r vectors");
        }
        for (const auto& f : frequencies)
        {
            if (f.size() != d.rank())
            {
                throw std::invalid_argument("config: frequency vector has wrong length");
            }
        }
    }
    if (n_samples < 0 || n_samples > d.total())
    {
        throw std::invalid_argument("config: n_samples must lie in [0, N_D]");
    }
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (!(grid_step > 0.0 && grid_step < 1.0))
    {
        throw std::invalid_argument("config: grid_step must be in (0, 1)");
    }
    if (!(music_quantile >= 0.0 && music_quantile < 1.0))
    {
        throw std::invalid_argument("config: music_quantile must be in [0, 1)");
    }
    if (!(success_nmse > 0.0))
    {
        throw std::invalid_argument("config: success_nmse must be > 0");
    }
    if (mode() == SolverMode::regularized && !noisy() && !params.lambda)
    {
        throw std::invalid_argument(
            "config: regularized solver on noiseless data needs params.lambda");
    }
    for (int ns : ns_values)
    {
        if (ns < 1 || ns > d.total())
        {
            throw std::invalid_argument("config: ns_values must lie in [1, N_D]");
        }
    }
    for (int rv : r_values)
    {
        if (rv < 1) throw std::invalid_argument("config: r_values must be >= 1");
    }
    for (const auto& s : bench_sizes)
    {
        if (s.size() != d.rank())
        {
            throw std::invalid_argument("config: bench size rank differs from dims");
        }
    }
    if (bench_repeats < 1)
    {
        throw std::invalid_argument("config: bench_repeats must be >= 1");
    }
    resolve_params(1.0).validate(mode());
}

SolverMode ExperimentConfig::mode() const
{
    if (solver) return *solver;
    return noisy() ? SolverMode::regularized : SolverMode::constrained;
}

std::vector<FrequencyBand> ExperimentConfig::solver_bands() const
{
    if (!no_fs) return bands;
    return std::vector<FrequencyBand>(
        dims.size(), FrequencyBand{full_band_margin, 1.0 - full_band_margin});
}

AdmmParams ExperimentConfig::resolve_params(double noise_std) const
{
    const Dims d = dimensions();
    AdmmParams p = noisy() ? AdmmParams::noisy(default_lambda(
                                 noise_std, d.total(), params.lambda_log_base))
                           : AdmmParams::noiseless();
    if (params.rho) p.rho = *params.rho;
    if (params.varrho) p.varrho = *params.varrho;
    if (params.inner_iters) p.inner_iters = *params.inner_iters;
    if (params.max_iters) p.max_iters = *params.max_iters;
    if (params.lambda) p.lambda = *params.lambda;
    if (params.retarget_each_sweep) p.retarget_each_sweep = *params.retarget_each_sweep;
    if (no_fs) p.inner_iters = 0;
    return p;
}

void to_json(json& j, const ExperimentConfig& c)
{
    j = json::object();
    j["dims"] = c.dims;
    json bands = json::array();
    for (const auto& b : c.bands) bands.push_back({b.f_low, b.f_high});
    j["bands"] = bands;
    j["r"] = c.r;
    if (!c.frequencies.empty()) j["frequencies"] = c.frequencies;
    j["gain_model"] = to_string(c.gain_model);
    j["n_samples"] = c.n_samples;
    put_optional(j, "snr_db", c.snr_db);
    if (c.solver) j["solver"] = to_string(*c.solver);
    json p = json::object();
    put_optional(p, "rho", c.params.rho);
    put_optional(p, "varrho", c.params.varrho);
    put_optional(p, "inner_iters", c.params.inner_iters);
    put_optional(p, "max_iters", c.params.max_iters);
    put_optional(p, "lambda", c.params.lambda);
    put_optional(p, "retarget_each_sweep", c.params.retarget_each_sweep);
    p["lambda_log_base"] = c.params.lambda_log_base;
    j["params"] = p;
    j["no_fs"] = c.no_fs;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["grid_step"] = c.grid_step;
    j["output"] = c.output;
    j["workers"] = c.workers;
    j["localizer"] = to_string(c.localizer);
    j["music_quantile"] = c.music_quantile;
    j["dual_rel_tol"] = c.dual_rel_tol;
    j["success_nmse"] = c.success_nmse;
    j["ns_values"] = c.ns_values;
    j["r_values"] = c.r_values;
    j["snr_values"] = c.snr_values;
    j["bench_sizes"] = c.bench_sizes;
    j["bench_repeats"] = c.bench_repeats;
}

void from_json(const json& j, ExperimentConfig& c)
{
    static const char* known[] = {
        "dims", "bands", "r", "frequencies", "gain_model", "n_samples",
        "snr_db", "solver", "params", "no_fs", "trials", "seed", "grid_step",
        "output", "workers", "localizer", "music_quantile", "dual_rel_tol",
        "success_nmse", "ns_values", "r_values", "snr_values", "bench_sizes",
        "bench_repeats"};
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [key, value] : j.items())
    {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw std::invalid_argument("config: unknown field '" + key + "'");
    }
    get_if(j, "dims", c.dims);
    if (j.contains("bands"))
    {
        c.bands.clear();
        for (const auto& b : j.at("bands"))
        {
            if (!b.is_array() || b.size() != 2)
            {
                throw std::invalid_argument("config: each band is [f_low, f_high]");
            }
            c.bands.push_back({b[0].get<double>(), b[1].get<double>()});
        }
    }
    get_if(j, "r", c.r);
    get_if(j, "frequencies", c.frequencies);
    if (j.contains("gain_model"))
    {
        c.gain_model = parse_gain_model(j.at("gain_model").get<std::string>());
    }
    get_if(j, "n_samples", c.n_samples);
    get_optional(j, "snr_db", c.snr_db);
    if (j.contains("solver") && !j.at("solver").is_null())
    {
        c.solver = parse_solver_mode(j.at("solver").get<std::string>());
    }
    if (j.contains("params"))
    {
        const json& p = j.at("params");
        get_optional(p, "rho", c.params.rho);
        get_optional(p, "varrho", c.params.varrho);
        get_optional(p, "inner_iters", c.params.inner_iters);
        get_optional(p, "max_iters", c.params.max_iters);
        get_optional(p, "lambda", c.params.lambda);
        get_optional(p, "retarget_each_sweep", c.params.retarget_each_sweep);
        get_if(p, "lambda_log_base", c.params.lambda_log_base);
    }
    get_if(j, "no_fs", c.no_fs);
    get_if(j, "trials", c.trials);
    get_if(j, "seed", c.seed);
    get_if(j, "grid_step", c.grid_step);
    get_if(j, "output", c.output);
    get_if(j, "workers", c.workers);
    if (j.contains("localizer"))
    {
        c.localizer = parse_localizer(j.at("localizer").get<std::string>());
    }
    get_if(j, "music_quantile", c.music_quantile);
    get_if(j, "dual_rel_tol", c.dual_rel_tol);
    get_if(j, "success_nmse", c.success_nmse);
    get_if(j, "ns_values", c.ns_values);
    get_if(j, "r_values", c.r_values);
    get_if(j, "snr_values", c.snr_values);
    get_if(j, "bench_sizes", c.bench_sizes);
    get_if(j, "bench_repeats", c.bench_repeats);
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    try
    {
        json j;
        in >> j;
        return j.get<ExperimentConfig>();
    }
    catch (const json::exception& e)
    {
        throw std::invalid_argument("config '" + path + "': " + e.what());
    }
}

std::string config_hash(const ExperimentConfig& c)
{
    json j = c;
    // Destination and parallelism do not affect any result column.
    j.erase("output");
    j.erase("workers");
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : j.dump())
    {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace fsan::experiment
