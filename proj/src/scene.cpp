#include <fsan/experiment/scene.hpp>

#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

namespace fsan::experiment
{

double draw_in_band(const FrequencyBand& band, double u)
{
    return wrap_unit(band.f_low + u * band.width());
}

Scene make_scene(const ExperimentConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const Dims dims = cfg.dimensions();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Scene s;
    if (!cfg.frequencies.empty())
    {
        s.model.freqs = cfg.frequencies;
    }
    else
    {
        for (int l = 0; l < cfg.r; ++l)
        {
            std::vector<double> f(dims.rank());
            for (std::size_t i = 0; i < f.size(); ++i)
            {
                f[i] = draw_in_band(cfg.bands[i], unif(rng));
            }
            s.model.freqs.push_back(std::move(f));
        }
    }
    for (int l = 0; l < cfg.r; ++l)
    {
        if (cfg.gain_model == GainModel::unit)
        {
            s.model.gains.emplace_back(1.0, 0.0);
        }
        else
        {
            s.model.gains.push_back(
                std::polar(1.0, 2.0 * std::numbers::pi * unif(rng)));
        }
    }
    s.x = synthesize(s.model, dims);

    CVector<double> phi = CVector<double>::Ones(dims.total());
    if (cfg.n_samples > 0 && cfg.n_samples < dims.total())
    {
        std::vector<Eigen::Index> order(dims.total());
        std::iota(order.begin(), order.end(), Eigen::Index(0));
        std::shuffle(order.begin(), order.end(), rng);
        phi.setZero();
        for (int k = 0; k < cfg.n_samples; ++k) phi[order[k]] = 1.0;
    }

    if (cfg.snr_db)
    {
        s.noise_std = std::sqrt(snr_to_noise_var(cfg.r, *cfg.snr_db));
    }
    s.meas = observe<double>(dims, s.x, phi, s.noise_std, rng());
    return s;
}

} // namespace fsan::experiment
