#ifndef FSAN_EXPERIMENT_SCENE_HPP
#define FSAN_EXPERIMENT_SCENE_HPP

#include <cstdint>
#include <vector>

#include <fsan/experiment/config.hpp>
#include <fsan/tensor.hpp>

namespace fsan::experiment
{

/// Ground truth and observation for one trial.
struct Scene
{
    SpectralModel<double> model;
    CVector<double> x;
    Measurement<double> meas;
    double noise_std = 0.0;
};

///
/// Draws a scene from `seed`: frequencies (unless fixed in the config),
/// gains, mask and noise, in that order, all from one mt19937_64 stream.
///
Scene make_scene(const ExperimentConfig& cfg, std::uint64_t seed);

/// Uniform draw on a band, wrap-around aware.
double draw_in_band(const FrequencyBand& band, double u);

} // namespace fsan::experiment

#endif // FSAN_EXPERIMENT_SCENE_HPP
