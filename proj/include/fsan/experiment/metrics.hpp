#ifndef FSAN_EXPERIMENT_METRICS_HPP
#define FSAN_EXPERIMENT_METRICS_HPP

#include <vector>

namespace fsan::experiment
{

///
/// Per-dimension mean squared absolute error of one run. For estimate l and
/// dimension i, AE = min(min_m |f_hat_{l,i} - f_{m,i}| on the torus, cap_i).
/// When fewer than r = truth.size() estimates are given, each missing one
/// adds cap_i^2 and the mean runs over max(r_hat, r) terms.
///
std::vector<double> run_squared_errors(const std::vector<std::vector<double>>& est,
                                       const std::vector<std::vector<double>>& truth,
                                       const std::vector<double>& cap);

/// sqrt of the mean over runs of per-run squared errors, per dimension.
std::vector<double> rmse(const std::vector<std::vector<double>>& per_run);

} // namespace fsan::experiment

#endif // FSAN_EXPERIMENT_METRICS_HPP
