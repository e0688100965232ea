#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fsan/experiment/commands.hpp>
#include <fsan/experiment/metrics.hpp>

using namespace fsan;
using namespace fsan::experiment;
using C = std::complex<double>;
using nlohmann::json;

namespace
{

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.dims = {5, 5};
    c.r = 1;
    c.trials = 2;
    c.seed = 9;
    c.params.max_iters = 40;
    c.grid_step = 0.01;
    return c;
}

// N x N selector with ones where row - col = p.
CMatrix<double> selector(int n, int p)
{
    CMatrix<double> s = CMatrix<double>::Zero(n, n);
    for (int r = 0; r < n; ++r)
    {
        const int c = r - p;
        if (c >= 0 && c < n) s(r, c) = 1.0;
    }
    return s;
}

CMatrix<double> kron(const CMatrix<double>& a, const CMatrix<double>& b)
{
    CMatrix<double> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Kronecker product of per-dimension selectors over the given sizes.
CMatrix<double> upsilon(const std::vector<int>& sizes, const std::vector<int>& p)
{
    CMatrix<double> out = selector(sizes[0], p[0]);
    for (std::size_t i = 1; i < sizes.size(); ++i) out = kron(out, selector(sizes[i], p[i]));
    return out;
}

std::string temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "fsan_test_experiment";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

} // namespace

TEST_CASE("config JSON round trip, validation and hash")
{
    ExperimentConfig c = small_config();
    c.snr_db = 12.0;
    c.params.varrho = 5.0;
    c.bands = {{0.9, 0.1}, {0.2, 0.3}};
    const json j = c;
    const auto back = j.get<ExperimentConfig>();
    CHECK(json(back) == j);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);

    ExperimentConfig moved = c;
    moved.output = "elsewhere.csv";
    moved.workers = 4;
    CHECK(config_hash(moved) == config_hash(c));
    moved.seed = 10;
    CHECK(config_hash(moved) != config_hash(c));

    CHECK_THROWS_AS(json({{"bogus", 1}}).get<ExperimentConfig>(), std::invalid_argument);
    ExperimentConfig bad = small_config();
    bad.bands.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.trials = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.n_samples = 26;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.solver = SolverMode::regularized;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.params.lambda = 0.3;
    bad.validate();
}

TEST_CASE("resolved parameters follow the noise level and --no-fs")
{
    ExperimentConfig c = small_config();
    c.params = {};
    CHECK(c.mode() == SolverMode::constrained);
    CHECK(c.resolve_params(0.0).max_iters == 2000);
    c.snr_db = 15.0;
    CHECK(c.mode() == SolverMode::regularized);
    const auto p = c.resolve_params(0.25);
    CHECK(p.max_iters == 1000);
    CHECK(p.lambda == doctest::Approx(0.25 * std::sqrt(2 * std::log(25.0))));
    c.no_fs = true;
    CHECK(c.resolve_params(0.25).inner_iters == 0);
    const auto full = c.solver_bands();
    CHECK(full[0].f_low == full_band_margin);
    CHECK(full[0].f_high == 1.0 - full_band_margin);
}

TEST_CASE("make_scene draws inside the bands and is deterministic")
{
    ExperimentConfig c = small_config();
    c.dims = {8, 8};
    c.r = 2;
    c.bands = {{0.3, 0.4}, {0.95, 0.05}};
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        const Scene s = make_scene(c, seed);
        REQUIRE(s.model.order() == 2);
        for (const auto& f : s.model.freqs)
        {
            CHECK(c.bands[0].contains(f[0]));
            CHECK(c.bands[1].contains(f[1]));
        }
        for (const auto& g : s.model.gains) CHECK(std::abs(std::abs(g) - 1.0) < 1e-12);
        CHECK((s.meas.y - s.x).norm() == 0.0);
    }
    c.n_samples = 24;
    c.snr_db = 10.0;
    const Scene a = make_scene(c, 3), b = make_scene(c, 3);
    CHECK((a.meas.y - b.meas.y).norm() == 0.0);
    CHECK(a.meas.phi.real().sum() == doctest::Approx(24.0));
    CHECK(a.noise_std == doctest::Approx(std::sqrt(0.2)));
    c.snr_db.reset();
    const Scene clean = make_scene(c, 3);
    for (Eigen::Index k = 0; k < 64; ++k)
    {
        if (clean.meas.phi[k] == 0.0) CHECK(std::abs(clean.meas.y[k]) == 0.0);
    }

    c.frequencies = {{0.35, 0.51}, {0.31, 0.59}};
    c.gain_model = GainModel::unit;
    const Scene fixed = make_scene(c, 1);
    CHECK(fixed.model.freqs == c.frequencies);
    CHECK(fixed.model.gains[1] == C(1, 0));
}

TEST_CASE("RMSE conventions")
{
    const std::vector<std::vector<double>> truth{{0.35, 0.51}, {0.31, 0.59}};
    const std::vector<double> cap{0.1, 0.1};
    const auto perfect = run_squared_errors(truth, truth, cap);
    CHECK(perfect[0] == 0.0);
    CHECK(perfect[1] == 0.0);

    const auto empty = run_squared_errors({}, truth, cap);
    CHECK(rmse({empty})[0] == doctest::Approx(0.1));

    const auto far = run_squared_errors({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}}, truth, cap);
    CHECK(rmse({far})[0] <= 0.1 + 1e-15);
    CHECK(rmse({far})[1] <= 0.1 + 1e-15);

    // One estimate 0.01 off in dimension 1, one detection missing.
    const auto half = run_squared_errors({{0.36, 0.51}}, truth, cap);
    CHECK(half[0] == doctest::Approx((0.01 * 0.01 + 0.01) / 2));
    CHECK(half[1] == doctest::Approx(0.01 / 2));

    // Errors wrap on the torus.
    const auto wrapped = run_squared_errors({{0.99, 0.5}}, {{0.01, 0.5}}, cap);
    CHECK(wrapped[0] == doctest::Approx(0.0004));

    CHECK(rmse({perfect, empty})[0] == doctest::Approx(std::sqrt(0.01 / 2)));
    CHECK_THROWS_AS(rmse({}), std::invalid_argument);
}

TEST_CASE("ResultTable CSV round trip and atomic write")
{
    ResultTable t({"a", "b"});
    t.add_row({1.0, 0.1});
    t.add_row({-2.5, 1.0 / 3.0});
    t.metadata()["config_hash"] = "0123456789abcdef";
    CHECK_THROWS_AS(t.add_row({1.0}), std::invalid_argument);
    const auto text = t.to_csv();
    CHECK(text.rfind("# config_hash=0123456789abcdef\na,b\n", 0) == 0);
    const auto back = parse_csv(text);
    CHECK(back.columns() == t.columns());
    CHECK(back.rows() == t.rows());
    CHECK(back.metadata() == t.metadata());
    CHECK(back.at(1, "b") == 1.0 / 3.0);
    CHECK_THROWS_AS(back.column("c"), std::out_of_range);

    const auto path = temp_path("nested/table.csv");
    write_atomically(path, text);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == text);
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
}

TEST_CASE("instance and output documents")
{
    ExperimentConfig c = small_config();
    c.snr_db = 20.0;
    const Scene s = make_scene(c, 4);
    const Instance inst = make_instance(s, c.bands, SolverMode::regularized, 0.4);
    const json j = instance_to_json(inst);
    CHECK(j.at("schema") == instance_schema);
    const Instance back = instance_from_json(j);
    CHECK((back.meas.y - inst.meas.y).norm() == 0.0);
    CHECK((back.meas.phi - inst.meas.phi).norm() == 0.0);
    CHECK((back.truth_x - s.x).norm() == 0.0);
    CHECK(back.lambda == 0.4);
    CHECK(back.truth_model->freqs == s.model.freqs);

    json broken = j;
    broken["schema"] = "other/1";
    CHECK_THROWS_AS(instance_from_json(broken), std::invalid_argument);
    broken = j;
    broken.erase("y");
    CHECK_THROWS_AS(instance_from_json(broken), std::invalid_argument);
    broken = j;
    broken["y"]["re"].erase(0);
    CHECK_THROWS_AS(instance_from_json(broken), std::invalid_argument);
    broken = j;
    broken.erase("lambda");
    CHECK_THROWS_AS(instance_from_json(broken), std::invalid_argument);

    SolverOverrides o;
    o.max_iters = 20;
    const json out = cmd_solve(back, o);
    CHECK(out.at("schema") == output_schema);
    CHECK(out.at("iterations") == 20);
    const auto x_hat = vector_from_json(out.at("x_hat"));
    CHECK(x_hat.size() == 25);
    const auto b_hat = generator_from_json(out.at("b_hat"));
    CHECK(b_hat.dims() == Dims{5, 5});
    CHECK(out.contains("dual_mismatch"));
    CHECK(out.contains("nmse"));
}

TEST_CASE("matrix and generator JSON round trip")
{
    CMatrix<double> m(2, 3);
    m << C(1, 2), C(3, 4), C(5, 6), C(-1, 0), C(0, -1), C(7, 8);
    CHECK((matrix_from_json(matrix_to_json(m)) - m).norm() == 0.0);
    json bad = matrix_to_json(m);
    bad["rows"] = 3;
    CHECK_THROWS_AS(matrix_from_json(bad), std::invalid_argument);
    json even = generator_to_json(GeneratorTensor<double>(Dims{2, 3}));
    CHECK(even.at("shape") == json({3, 5}));
    even["shape"] = {4, 5};
    CHECK_THROWS_AS(generator_from_json(even), std::invalid_argument);
}

TEST_CASE("fixture matrices agree with selector-matrix reconstructions")
{
    ExperimentConfig c = small_config();
    c.dims = {3, 4};
    c.bands = {{0.3, 0.4}, {0.8, 0.05}};
    const json fx = cmd_fixture(c);
    CHECK(fx.at("schema") == fixture_schema);
    const auto b = generator_from_json(fx.at("generator"));
    const auto t = matrix_from_json(fx.at("toeplitz"));
    const std::vector<int> sizes = c.dims;

    CMatrix<double> t_ref = CMatrix<double>::Zero(12, 12);
    for (Eigen::Index k = 0; k < b.size(); ++k) t_ref += upsilon(sizes, b.offsets(k)) * b.data()[k];
    CHECK((t - t_ref).cwiseAbs().maxCoeff() < 1e-12);

    std::vector<int> reduced;
    for (int n : sizes) reduced.push_back(n - 1);
    for (const auto& entry : fx.at("tg"))
    {
        const std::size_t axis = entry.at("axis");
        const double r0 = entry.at("r0");
        const C r1(entry.at("r1")[0].get<double>(), entry.at("r1")[1].get<double>());
        const C coeff[3] = {std::conj(r1), r0, r1}; // r_{-1}, r_0, r_1
        const auto tg = matrix_from_json(entry.at("matrix"));
        CMatrix<double> ref = CMatrix<double>::Zero(tg.rows(), tg.cols());
        for (Eigen::Index k = 0; k < b.size(); ++k)
        {
            const auto p = b.offsets(k);
            bool others_inside = true;
            for (std::size_t j = 0; j < p.size(); ++j)
            {
                if (j != axis) others_inside &= std::abs(p[j]) <= sizes[j] - 2;
            }
            if (!others_inside) continue;
            // Upsilon_{g,p} = sum_k r_k Upsilon_bar_{p + k e_axis} over in-range shifts.
            for (int kk = -1; kk <= 1; ++kk)
            {
                auto q = p;
                q[axis] += kk;
                if (std::abs(q[axis]) > sizes[axis] - 2) continue;
                ref += coeff[kk + 1] * upsilon(reduced, q) * b.data()[k];
            }
        }
        CHECK((tg - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("synth is reproducible and noiseless full sampling gives y = x")
{
    ExperimentConfig c = small_config();
    const json a = cmd_synth(c), b = cmd_synth(c);
    CHECK(a.dump() == b.dump());
    CHECK(a.at("scene").at("y") == a.at("scene").at("x"));
    const Instance inst = instance_from_json(a.at("instance"));
    CHECK(inst.mode == SolverMode::constrained);
    CHECK(inst.bands.size() == 2);
}

TEST_CASE("convergence table: one row per iteration, deterministic")
{
    ExperimentConfig c = small_config();
    const auto t1 = cmd_convergence(c);
    const auto t2 = cmd_convergence(c);
    CHECK(t1.rows().size() == 40);
    CHECK(t1.to_csv() == t2.to_csv());
    CHECK(t1.metadata().at("config_hash") == config_hash(c));
    CHECK(t1.metadata().at("seed") == "9");
    CHECK(t1.metadata().count("version") == 1);
}

TEST_CASE("convergence on a fully observed noiseless scene reaches NMSE < 1e-3")
{
    ExperimentConfig c = small_config();
    c.dims = {6, 6};
    c.params.max_iters = 1000;
    const auto t = cmd_convergence(c);
    CHECK(t.rows().back()[t.column("nmse")] < 1e-3);
}

TEST_CASE("phase transition cells")
{
    ExperimentConfig c = small_config();
    c.dims = {6, 6};
    c.params.max_iters = 1000;
    c.trials = 10;
    c.ns_values = {36};
    c.r_values = {1};
    const auto easy = cmd_phase_transition(c);
    REQUIRE(easy.rows().size() == 1);
    CHECK(easy.at(0, "success_rate") == 1.0);

    c.trials = 2;
    c.params.max_iters = 30;
    c.ns_values = {2};
    c.r_values = {3};
    const auto hard = cmd_phase_transition(c);
    const double rate = hard.at(0, "success_rate");
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
}

TEST_CASE("parallel trials reproduce the serial table")
{
    ExperimentConfig c = small_config();
    c.trials = 4;
    c.ns_values = {15, 25};
    const auto serial = cmd_phase_transition(c);
    c.workers = 3;
    const auto parallel = cmd_phase_transition(c);
    CHECK(serial.rows() == parallel.rows());

    CHECK_THROWS_AS(parallel_for(5, 2, [](int i) {
                        if (i == 3) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("rmse-snr rows stay within the band width")
{
    ExperimentConfig c = small_config();
    c.dims = {6, 6};
    c.r = 2;
    c.trials = 2;
    c.snr_values = {5, 25};
    c.params.max_iters = 60;
    const auto t = cmd_rmse_snr(c);
    REQUIRE(t.rows().size() == 2);
    for (std::size_t r = 0; r < 2; ++r)
    {
        CHECK(t.at(r, "rmse_f1") <= 0.1 + 1e-12);
        CHECK(t.at(r, "rmse_f2") <= 0.1 + 1e-12);
        CHECK(t.at(r, "rmse_mean") >= 0.0);
        CHECK(t.at(r, "runs") == 2.0);
    }
    c.localizer = Localizer::dual;
    CHECK(cmd_rmse_snr(c).rows().size() == 2);
}

TEST_CASE("dual-surface: zero data gives no peaks")
{
    ExperimentConfig c = small_config();
    c.n_samples = 0;
    c.frequencies = {{0.35, 0.55}};
    c.gain_model = GainModel::unit;
    // A regularized fit with a huge lambda keeps x = 0 and a vanishing dual.
    c.solver = SolverMode::regularized;
    c.params.lambda = 1e6;
    const auto res = cmd_dual_surface(c);
    CHECK(res.level == 1e6);
    CHECK(res.peaks.rows().empty());
    CHECK(res.surface.rows().size() == 11 * 11);
}

TEST_CASE("bench: one row per size, work grows with size")
{
    ExperimentConfig c = small_config();
    c.bench_sizes = {{4, 4}, {6, 6}, {10, 10}};
    c.bench_repeats = 2;
    c.params.max_iters = 5;
    const auto t = cmd_bench(c);
    REQUIRE(t.rows().size() == 3);
    CHECK(t.at(0, "n_total") == 16.0);
    CHECK(t.at(2, "n1") == 10.0);
    CHECK(t.at(0, "mean_seconds") < t.at(2, "mean_seconds"));
    CHECK(t.at(1, "stddev_seconds") >= 0.0);
}

TEST_CASE("convergence at SNR 20 dB plateaus between 1000 and 2000 iterations")
{
    ExperimentConfig c;
    c.dims = {8, 8};
    c.n_samples = 40;
    c.snr_db = 20.0;
    c.params.max_iters = 2000;
    const auto t = cmd_convergence(c);
    const double at_1000 = t.at(999, "nmse"), at_2000 = t.at(1999, "nmse");
    CHECK(at_1000 <= 2.0 * at_2000);
    CHECK(at_2000 <= 2.0 * at_1000);
}
