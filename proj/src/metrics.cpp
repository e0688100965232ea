#include <fsan/experiment/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fsan/tensor.hpp>

namespace fsan::experiment
{

std::vector<double> run_squared_errors(const std::vector<std::vector<double>>& est,
                                       const std::vector<std::vector<double>>& truth,
                                       const std::vector<double>& cap)
{
    const std::size_t d = cap.size();
    if (truth.empty()) throw std::invalid_argument("run_squared_errors: empty truth");
    for (const auto& f : truth)
    {
        if (f.size() != d) throw std::invalid_argument("run_squared_errors: truth rank");
    }
    for (const auto& f : est)
    {
        if (f.size() != d) throw std::invalid_argument("run_squared_errors: estimate rank");
    }
    const std::size_t terms = std::max(est.size(), truth.size());
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
    {
        double acc = 0.0;
        for (const auto& fh : est)
        {
            double ae = std::numeric_limits<double>::infinity();
            for (const auto& f : truth)
            {
                ae = std::min(ae, torus_distance(fh[i], f[i]));
            }
            ae = std::min(ae, cap[i]);
            acc += ae * ae;
        }
        acc += double(terms - est.size()) * cap[i] * cap[i];
        out[i] = acc / double(terms);
    }
    return out;
}

std::vector<double> rmse(const std::vector<std::vector<double>>& per_run)
{
    if (per_run.empty()) throw std::invalid_argument("rmse: no runs");
    std::vector<double> out(per_run.front().size(), 0.0);
    for (const auto& run : per_run)
    {
        if (run.size() != out.size()) throw std::invalid_argument("rmse: rank mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += run[i];
    }
    for (double& v : out) v = std::sqrt(v / double(per_run.size()));
    return out;
}

} // namespace fsan::experiment
