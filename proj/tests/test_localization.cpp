#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>

#include <fsan/admm.hpp>
#include <fsan/localization.hpp>

using namespace fsan;
using C = std::complex<double>;

namespace
{

const std::vector<FrequencyBand> prior_bands{{0.3, 0.4}, {0.5, 0.6}};

CVector<double> random_vector(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CVector<double> v(n);
    for (Eigen::Index k = 0; k < n; ++k) v[k] = {g(rng), g(rng)};
    return v;
}

DualSurface<double> surface_from(std::vector<std::vector<double>> grids,
                                 std::vector<double> values)
{
    DualSurface<double> s;
    s.grids = std::move(grids);
    s.values = Eigen::Map<RVector<double>>(values.data(), Eigen::Index(values.size()));
    return s;
}

std::vector<double> axis(int n)
{
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = 0.1 * k;
    return g;
}

double max_torus_error(const std::vector<double>& a, const std::vector<double>& b)
{
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, torus_distance(a[i], b[i]));
    return e;
}

// Greedy match of each truth to its closest estimate; returns the worst error.
double match_error(const std::vector<std::vector<double>>& est,
                   const std::vector<std::vector<double>>& truth)
{
    double worst = 0.0;
    for (const auto& f : truth)
    {
        double best = 1.0;
        for (const auto& e : est) best = std::min(best, max_torus_error(e, f));
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

TEST_CASE("band_grid covers the band, wrap-around included")
{
    const auto g = band_grid<double>({0.3, 0.4}, 0.01);
    CHECK(g.size() == 11);
    CHECK(g.front() == doctest::Approx(0.3));
    CHECK(g.back() == doctest::Approx(0.4));
    const auto w = band_grid<double>({0.95, 0.05}, 0.01);
    CHECK(w.size() == 11);
    CHECK(w[5] == doctest::Approx(0.0).epsilon(1e-12));
    for (double f : w) CHECK(FrequencyBand{0.95, 0.05}.contains(f, 1e-12));
    CHECK_THROWS_AS(band_grid<double>({0.3, 0.4}, 0.0), std::invalid_argument);
}

TEST_CASE("inner_with_atoms equals a(f)^H v evaluated atom by atom")
{
    std::mt19937_64 rng(41);
    for (const Dims& d : {Dims{5}, Dims{4, 3}, Dims{3, 2, 4}})
    {
        const auto v = random_vector(d.total(), rng);
        std::vector<std::vector<double>> grids;
        for (std::size_t i = 0; i < d.rank(); ++i)
        {
            grids.push_back(band_grid<double>({0.1 * double(i + 1), 0.9}, 0.17));
        }
        const auto got = inner_with_atoms<double>(v, d, grids);
        DualSurface<double> shape{grids, {}};
        for (Eigen::Index k = 0; k < got.size(); ++k)
        {
            const C ref = atom<double>(shape.point(k), d).dot(v);
            CHECK(std::abs(got[k] - ref) < 1e-11);
        }
    }
}

TEST_CASE("dual surface ignores a global phase on the dual vector")
{
    std::mt19937_64 rng(43);
    const Dims d{6, 6};
    const auto v = random_vector(36, rng);
    const auto a = dual_surface<double>(v, d, std::span(prior_bands), 0.01);
    const auto b = dual_surface<double>(std::polar(1.0, 1.234) * v, d,
                                        std::span(prior_bands), 0.01);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("locate_peaks examples")
{
    SUBCASE("single planted spike")
    {
        std::vector<double> vals(25, 0.2);
        vals[13] = 1.0;
        const auto s = surface_from({axis(5), axis(5)}, vals);
        const auto peaks = locate_peaks(s, 0.9);
        REQUIRE(peaks.size() == 1);
        CHECK(peaks[0].index == 13);
        const auto f = locate_from_dual(s, 1.0).front();
        CHECK(f[0] == doctest::Approx(0.2));
        CHECK(f[1] == doctest::Approx(0.3));
    }
    SUBCASE("flat surface below threshold")
    {
        const auto s = surface_from({axis(4), axis(4)}, std::vector<double>(16, 0.5));
        CHECK(locate_peaks(s, 0.9).empty());
    }
    SUBCASE("plateau yields one peak at its lowest index")
    {
        std::vector<double> vals(16, 0.0);
        vals[5] = vals[6] = vals[9] = 1.0;
        const auto peaks = locate_peaks(surface_from({axis(4), axis(4)}, vals), 0.5);
        REQUIRE(peaks.size() == 1);
        CHECK(peaks[0].index == 5);
    }
    SUBCASE("peaks sorted by value, edges count as maxima")
    {
        std::vector<double> vals{0.9, 0.1, 0.2, 0.1, 0.95, 0.1, 0.8};
        const auto peaks = locate_peaks(surface_from({axis(7)}, vals), 0.5);
        REQUIRE(peaks.size() == 3);
        CHECK(peaks[0].index == 4);
        CHECK(peaks[1].index == 0);
        CHECK(peaks[2].index == 6);
    }
}

TEST_CASE("locate_from_dual: zero dual gives nothing, peaks stay in band")
{
    const Dims d{6, 6};
    const auto zero = dual_surface<double>(CVector<double>::Zero(36), d,
                                           std::span(prior_bands), 0.01);
    CHECK(locate_from_dual(zero, 1.0).empty());

    std::mt19937_64 rng(47);
    const auto s = dual_surface<double>(random_vector(36, rng), d, std::span(prior_bands), 0.01);
    const double level = s.values.maxCoeff();
    for (const auto& f : locate_from_dual(s, level, 0.5))
    {
        CHECK(prior_bands[0].contains(f[0], 1e-12));
        CHECK(prior_bands[1].contains(f[1], 1e-12));
    }
    CHECK_THROWS_AS(locate_from_dual(s, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("eigengap_order")
{
    RVector<double> ev(5);
    ev << 10, 9, 1e-3, 1e-4, 0;
    CHECK(eigengap_order<double>(ev) == 2);
    ev << 1e-8, 1e-9, 0, 0, 0;
    CHECK_FALSE(eigengap_order<double>(ev).has_value());
}

TEST_CASE("music_spectrum on exact low-rank generators")
{
    const Dims d{8, 8};
    const double step = 1e-3;
    SUBCASE("single atom, r = 1")
    {
        const std::vector<double> f{0.337, 0.561};
        const auto b = GeneratorTensor<double>::from_model({{f}, {C(1, 0)}}, d);
        const auto m = music_spectrum<double>(b, 1, std::span(prior_bands), step);
        const auto peaks = locate_music(m, 1);
        REQUIRE(peaks.size() == 1);
        CHECK(max_torus_error(peaks[0], f) <= step);
    }
    SUBCASE("two atoms, r = 2 and automatic order")
    {
        const SpectralModel<double> model{{{0.35, 0.51}, {0.31, 0.59}}, {C(1, 0), C(0.6, 0)}};
        const auto b = GeneratorTensor<double>::from_model(model, d);
        const auto m = music_spectrum<double>(b, 2, std::span(prior_bands), step);
        const auto peaks = locate_music(m, 2);
        REQUIRE(peaks.size() == 2);
        CHECK(match_error(peaks, model.freqs) <= step);

        const auto automatic = music_spectrum<double>(b, std::nullopt, std::span(prior_bands), step);
        CHECK(automatic.order == 2);
        CHECK_FALSE(automatic.order_fallback);
    }
    SUBCASE("peak locations invariant under positive scaling")
    {
        const SpectralModel<double> model{{{0.36, 0.52}}, {C(1, 0)}};
        auto b = GeneratorTensor<double>::from_model(model, d);
        const auto m1 = music_spectrum<double>(b, 1, std::span(prior_bands), 0.005);
        b.data() *= 37.5;
        const auto m2 = music_spectrum<double>(b, 1, std::span(prior_bands), 0.005);
        Eigen::Index i1, i2;
        m1.surface.values.maxCoeff(&i1);
        m2.surface.values.maxCoeff(&i2);
        CHECK(i1 == i2);
    }
    SUBCASE("errors and fallback")
    {
        const GeneratorTensor<double> zero(d);
        CHECK_THROWS_AS(music_spectrum<double>(zero, 0, std::span(prior_bands), step),
                        std::invalid_argument);
        CHECK_THROWS_AS(music_spectrum<double>(zero, 64, std::span(prior_bands), step),
                        std::invalid_argument);
        const auto fb = music_spectrum<double>(zero, std::nullopt, std::span(prior_bands), 0.01);
        CHECK(fb.order_fallback);
        CHECK(fb.order == 1);
    }
}

TEST_CASE("estimate_gains examples")
{
    const Dims d{6, 6};
    const SpectralModel<double> model{{{0.35, 0.51}, {0.31, 0.59}}, {C(1, 0.5), C(-0.3, 2)}};
    const auto x = synthesize(model, d);
    CVector<double> mask = CVector<double>::Ones(36);
    for (int k : {1, 4, 9, 16, 25}) mask[k] = 0.0;
    const auto exact = estimate_gains(model.freqs, observe<double>(d, x, mask, 0.0, 1));
    CHECK(std::abs(exact[0] - model.gains[0]) < 1e-8);
    CHECK(std::abs(exact[1] - model.gains[1]) < 1e-8);

    const std::vector<double> f{0.2, 0.7};
    const auto one = observe<double>(d, atom<double>(f, d), CVector<double>::Ones(36), 0.0, 1);
    CHECK(std::abs(estimate_gains(std::vector<std::vector<double>>{f}, one)[0] - 1.0) < 1e-12);

    const auto noisy = observe<double>(d, x, mask, 0.3, 2);
    const auto g = estimate_gains(model.freqs, noisy);
    CMatrix<double> a(36, 2);
    for (int l = 0; l < 2; ++l) a.col(l) = mask.cwiseProduct(atom<double>(model.freqs[l], d));
    CVector<double> truth(2);
    truth << model.gains[0], model.gains[1];
    CHECK((noisy.y - a * g).norm() <= (noisy.y - a * truth).norm() + 1e-12);

    CHECK_THROWS_AS(estimate_gains(std::vector<std::vector<double>>{}, one),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_gains(std::vector<std::vector<double>>{f, f}, one),
                    std::runtime_error);
}

TEST_CASE("noiseless masked scene: dual peaks sit on the planted frequencies")
{
    const Dims d{8, 8};
    const SpectralModel<double> model{{{0.35, 0.51}, {0.31, 0.59}}, {C(1, 0), C(1, 0)}};
    const auto x = synthesize(model, d);
    std::vector<Eigen::Index> order(64);
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::mt19937_64 rng(7);
    std::shuffle(order.begin(), order.end(), rng);
    CVector<double> phi = CVector<double>::Zero(64);
    for (int k = 0; k < 40; ++k) phi[order[k]] = 1.0;
    const auto m = observe<double>(d, x, phi, 0.0, 1);
    const auto out = solve_constrained<double>(m, prior_bands, AdmmParams::noiseless());
    const auto s = dual_surface<double>(out.dual_embedding, d, std::span(prior_bands), 1e-3);
    const auto peaks = locate_from_dual(s, 1.0);
    REQUIRE(peaks.size() == 2);
    CHECK(match_error(peaks, model.freqs) <= 1e-3 + 1e-12);
}
