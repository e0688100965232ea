#ifndef FSAN_ADMM_HPP
#define FSAN_ADMM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fsan/dims.hpp>
#include <fsan/tensor.hpp>
#include <fsan/toeplitz.hpp>

namespace fsan
{

enum class SolverMode
{
    constrained, ///< y = Phi x enforced; noiseless data.
    regularized  ///< least-squares fit plus lambda times the atomic norm.
};

struct AdmmParams
{
    double rho = 0.05;    ///< ADMM penalty.
    double varrho = 9.0;  ///< refinement weight, > 1.
    int inner_iters = 10; ///< refinement sweeps K per dimension; 0 disables.
    int max_iters = 2000;
    double lambda = 1.0;  ///< regularization weight (regularized mode only).
    /// Stop once the primal residual drops below this value; 0 runs all
    /// iterations.
    double early_stop_tol = 0.0;
    /// Recompute P([T_{g_i}(B)]^+) before every refinement sweep instead of
    /// once per ADMM iteration.
    bool retarget_each_sweep = false;
    /// Treat the run as divergent once the primal residual exceeds this
    /// multiple of max(1, ||y||).
    double divergence_limit = 1e8;

    static AdmmParams noiseless() { return {}; }

    /// The fixed-target refinement with (varrho, K) = (3, 20) grows without
    /// bound on noisy data, so the noisy preset keeps (9, 10) and only
    /// shortens the run.
    static AdmmParams noisy(double lambda)
    {
        AdmmParams p;
        p.max_iters = 1000;
        p.lambda = lambda;
        return p;
    }

    void validate(SolverMode mode) const
    {
        if (!(rho > 0.0)) throw std::invalid_argument("AdmmParams: rho must be > 0");
        if (inner_iters < 0)
        {
            throw std::invalid_argument("AdmmParams: inner_iters must be >= 0");
        }
        if (inner_iters > 0 && !(varrho > 1.0))
        {
            throw std::invalid_argument("AdmmParams: varrho must be > 1");
        }
        if (!(divergence_limit > 0.0))
        {
            throw std::invalid_argument("AdmmParams: divergence_limit must be > 0");
        }
        if (max_iters < 1)
        {
            throw std::invalid_argument("AdmmParams: max_iters must be >= 1");
        }
        if (mode == SolverMode::regularized && !(lambda > 0.0))
        {
            throw std::invalid_argument("AdmmParams: lambda must be > 0");
        }
    }
};

/// lambda = noise_std * sqrt(2 log_base(N_D)); natural log unless specified.
inline double default_lambda(double noise_std, Eigen::Index n_total,
                             double log_base = std::exp(1.0))
{
    return noise_std *
           std::sqrt(2.0 * std::log(double(n_total)) / std::log(log_base));
}

/// Non-finite iterate encountered.
class DivergenceError : public std::runtime_error
{
public:
    DivergenceError(int iteration, const std::string& what)
        : std::runtime_error("ADMM diverged at iteration " +
                             std::to_string(iteration) + ": " + what),
          iteration_(iteration)
    {
    }
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

///
/// Primal variables (x, B, t), the splitting variable Theta and the
/// multipliers. Theta and U are (N_D+1) x (N_D+1) and partition as
/// [Theta_bar theta_bar; theta_bar^H Theta_c]. `w` multiplies y - Phi x in the
/// constrained mode and stays zero otherwise.
///
template <typename Real>
struct SolverState
{
    CVector<Real> x;
    GeneratorTensor<Real> b;
    Real t{};
    CMatrix<Real> theta;
    CMatrix<Real> u;
    CVector<Real> w;

    static SolverState zero(const Dims& dims)
    {
        const Eigen::Index n = dims.total();
        return {CVector<Real>::Zero(n),
                GeneratorTensor<Real>(dims),
                Real(0),
                CMatrix<Real>::Zero(n + 1, n + 1),
                CMatrix<Real>::Zero(n + 1, n + 1),
                CVector<Real>::Zero(n)};
    }
};

struct TraceRecord
{
    int iteration = 0;
    double primal_residual = 0.0; ///< ||Theta - [T(B) x; x^H t]||_F
    double data_residual = 0.0;   ///< ||y - Phi x||_2
    double objective = 0.0;
    double nmse = std::numeric_limits<double>::quiet_NaN();
};

template <typename Real>
struct SolverOutput
{
    CVector<Real> x_hat;
    GeneratorTensor<Real> b_hat;
    Real t_hat{};
    /// Phi^H nu recovered from the multipliers as -2 u_bar.
    CVector<Real> dual_embedding;
    /// Regularized mode: Phi^H (y - Phi x_hat), the same quantity through the
    /// optimality condition of the data-fit term, and its relative mismatch
    /// to `dual_embedding`.
    CVector<Real> residual_embedding;
    double dual_mismatch = std::numeric_limits<double>::quiet_NaN();
    std::vector<TraceRecord> trace;
};

/// [T(B) x; x^H t].
template <typename Real>
CMatrix<Real> lifted_matrix(const GeneratorTensor<Real>& b, const CVector<Real>& x,
                            Real t)
{
    const Eigen::Index n = x.size();
    CMatrix<Real> z(n + 1, n + 1);
    z.topLeftCorner(n, n) = build_toeplitz(b);
    z.col(n).head(n) = x;
    z.row(n).head(n) = x.adjoint();
    z(n, n) = t;
    return z;
}

namespace detail
{

// Full-generator position of every interior offset |p_j| <= N_j - 2, listed
// in the flat order of the reduced generator.
template <typename Real>
std::vector<Eigen::Index> interior_positions(const GeneratorTensor<Real>& b)
{
    const Dims& dims = b.dims();
    std::vector<Eigen::Index> interior;
    interior.reserve(dims.reduced().generator_size());
    std::vector<int> extent(dims.rank());
    for (std::size_t j = 0; j < dims.rank(); ++j) extent[j] = 2 * dims[j] - 3;
    std::vector<int> q(dims.rank(), 0);
    do
    {
        Eigen::Index pos = 0;
        for (std::size_t j = 0; j < q.size(); ++j) pos += (q[j] + 1) * b.stride(j);
        interior.push_back(pos);
    } while (next_index(q, extent));
    return interior;
}

} // namespace detail

///
/// `sweeps` Jacobi passes of the refinement along one axis:
///
///   B(p) <- target(p) / (r0 (1 + varrho))
///         + (varrho B(p) - r_{-1}/r0 B(p + e_i) - r1/r0 B(p - e_i)) / (1 + varrho)
///
/// over the interior offsets |p_j| <= N_j - 2; boundary offsets are left
/// untouched. `target` lives on the reduced dims (N_j - 1).
///
template <typename Real>
void refine_axis(GeneratorTensor<Real>& b, const GeneratorTensor<Real>& target,
                 const BandPolynomial<Real>& g, std::size_t axis, double varrho,
                 int sweeps, std::span<const Eigen::Index> interior)
{
    if (target.size() != Eigen::Index(interior.size()))
    {
        throw std::invalid_argument("refine_axis: target has wrong dims");
    }
    if (std::abs(g.r0) < Real(1e-8))
    {
        throw std::domain_error("refine_axis: r0 vanishes (band width 1/2)");
    }
    const Real rho_w = Real(varrho);
    const Complex<Real> c_target = Real(1) / (g.r0 * (Real(1) + rho_w));
    const Complex<Real> c_up = g.r_minus1() / g.r0;
    const Complex<Real> c_down = g.r1 / g.r0;
    const Real c_all = Real(1) / (Real(1) + rho_w);
    const Eigen::Index step = b.stride(axis);
    const CVector<Real>& tgt = target.data();

    for (int kappa = 0; kappa < sweeps; ++kappa)
    {
        const CVector<Real> old = b.data();
        CVector<Real>& nxt = b.data();
        for (std::size_t k = 0; k < interior.size(); ++k)
        {
            const Eigen::Index pos = interior[k];
            nxt[pos] = c_target * tgt[Eigen::Index(k)] +
                       c_all * (rho_w * old[pos] - c_up * old[pos + step] -
                                c_down * old[pos - step]);
        }
    }
}

///
/// Approximate refinement of the generator toward T_{g_i}(B) >= 0.
///
/// `targets[i]` is P([T_{g_i}(B_temp)]^+). Dimensions are processed in
/// order, each with `sweeps` passes of refine_axis, the result of one
/// dimension seeding the next.
///
template <typename Real>
GeneratorTensor<Real> refine_generator(
    const GeneratorTensor<Real>& b_temp,
    std::span<const GeneratorTensor<Real>> targets,
    std::span<const BandPolynomial<Real>> polys, double varrho, int sweeps)
{
    const Dims& dims = b_temp.dims();
    if (targets.size() != dims.rank() || polys.size() != dims.rank())
    {
        throw std::invalid_argument("refine_generator: one target per dimension");
    }
    if (sweeps < 0) throw std::invalid_argument("refine_generator: sweeps < 0");
    if (sweeps == 0) return b_temp;
    if (!(varrho > 1.0)) throw std::invalid_argument("refine_generator: varrho <= 1");

    const auto interior = detail::interior_positions(b_temp);
    GeneratorTensor<Real> cur = b_temp;
    for (std::size_t i = 0; i < dims.rank(); ++i)
    {
        refine_axis(cur, targets[i], polys[i], i, varrho, sweeps,
                    std::span<const Eigen::Index>(interior));
    }
    return cur;
}

/// P([T_{g_i}(B)]^+) for every dimension.
template <typename Real>
std::vector<GeneratorTensor<Real>> refinement_targets(
    const GeneratorTensor<Real>& b, std::span<const BandPolynomial<Real>> polys)
{
    const Dims reduced = b.dims().reduced();
    std::vector<GeneratorTensor<Real>> out;
    out.reserve(polys.size());
    for (std::size_t i = 0; i < polys.size(); ++i)
    {
        out.push_back(toeplitz_average<Real>(
            psd_project<Real>(build_tg(b, polys[i], i)), reduced));
    }
    return out;
}

/// Gradients of the smooth part of the augmented Lagrangian; complex entries
/// are d/d(Re) + i d/d(Im).
template <typename Real>
struct LagrangianGradient
{
    CVector<Real> x;
    GeneratorTensor<Real> b;
    Real t{};
};

///
/// Smooth part of the augmented Lagrangian (the PSD indicators are left
/// out), evaluated through the full lifted matrix:
///
///   s (Re Tr T(B) / (2 N_D) + t / 2) + Re<U, R> + rho/2 ||R||_F^2 + data terms
///
/// with R = Theta - [T(B) x; x^H t] and s = 1 (constrained) or lambda. The
/// data terms are Re<w, y - Phi x> + rho/2 ||y - Phi x||^2 (constrained) or
/// 1/2 ||y - Phi x||^2 (regularized).
///
template <typename Real>
Real smooth_lagrangian(const SolverState<Real>& s, const Measurement<Real>& m,
                       const AdmmParams& params, SolverMode mode)
{
    const Real rho = Real(params.rho);
    const Real scale = mode == SolverMode::regularized ? Real(params.lambda) : Real(1);
    const CMatrix<Real> r = s.theta - lifted_matrix(s.b, s.x, s.t);
    const CVector<Real> resid = m.y - m.phi.cwiseProduct(s.x);

    // Re Tr T(B) / (2 N_D) = Re B(0) / 2.
    Real value = scale * (std::real(s.b.data()[s.b.center_index()]) + s.t) / Real(2);
    value += std::real((r.conjugate().cwiseProduct(s.u)).sum());
    value += rho / Real(2) * r.squaredNorm();
    if (mode == SolverMode::constrained)
    {
        value += std::real(resid.dot(s.w));
        value += rho / Real(2) * resid.squaredNorm();
    }
    else
    {
        value += resid.squaredNorm() / Real(2);
    }
    return value;
}

///
/// Closed-form gradients of smooth_lagrangian, valid for Hermitian Theta and
/// U:
///
///   grad_x    = c Phi^H (Phi x - y) - Phi^H w - 2 u_bar + 2 rho (x - theta_bar)
///   grad_B(p) = s/2 delta_p + beta_p (rho B(p) - P(rho Theta_bar + U_bar)(p))
///   grad_t    = s/2 - u_c + rho (t - Theta_c)
///
/// with c = rho and the w term present only in the constrained mode (c = 1
/// otherwise).
///
template <typename Real>
LagrangianGradient<Real> lagrangian_gradient(const SolverState<Real>& s,
                                             const Measurement<Real>& m,
                                             const AdmmParams& params,
                                             SolverMode mode)
{
    const Real rho = Real(params.rho);
    const bool constrained = mode == SolverMode::constrained;
    const Real scale = constrained ? Real(1) : Real(params.lambda);
    const Dims& dims = m.dims;
    const Eigen::Index n = dims.total();

    LagrangianGradient<Real> g;
    const CVector<Real> phi_h = m.phi.conjugate();
    const CVector<Real> misfit = m.phi.cwiseProduct(s.x) - m.y;
    const CVector<Real> u_bar = s.u.col(n).head(n);
    const CVector<Real> theta_bar = s.theta.col(n).head(n);
    g.x = (constrained ? rho : Real(1)) * phi_h.cwiseProduct(misfit) -
          Real(2) * u_bar + Real(2) * rho * (s.x - theta_bar);
    if (constrained) g.x -= phi_h.cwiseProduct(s.w);

    const GeneratorTensor<Real> avg = toeplitz_average<Real>(
        rho * s.theta.topLeftCorner(n, n) + s.u.topLeftCorner(n, n), dims);
    g.b = GeneratorTensor<Real>(dims);
    for (Eigen::Index k = 0; k < g.b.size(); ++k)
    {
        const Real beta = Real(beta_weight(g.b.offsets(k), dims));
        g.b.data()[k] = beta * (rho * s.b.data()[k] - avg.data()[k]);
    }
    g.b.data()[g.b.center_index()] += scale / Real(2);

    g.t = scale / Real(2) - std::real(s.u(n, n)) +
          rho * (s.t - std::real(s.theta(n, n)));
    return g;
}

///
/// ADMM iterations for the frequency-selective atomic-norm SDPs.
///
/// Each iteration updates x, t and an intermediate generator in closed form,
/// refines the generator toward T_{g_i}(B) >= 0, projects the lifted matrix
/// onto the PSD cone and takes a dual ascent step.
///
template <typename Real>
class AdmmSolver
{
public:
    AdmmSolver(Measurement<Real> meas, std::vector<FrequencyBand> bands,
               AdmmParams params, SolverMode mode)
        : meas_(std::move(meas)), bands_(std::move(bands)), params_(params),
          mode_(mode)
    {
        meas_.validate();
        params_.validate(mode_);
        if (bands_.size() != meas_.dims.rank())
        {
            throw std::invalid_argument("AdmmSolver: one band per dimension");
        }
        for (const auto& band : bands_)
        {
            polys_.push_back(band_polynomial<Real>(band));
        }
        state_ = SolverState<Real>::zero(meas_.dims);
        if (params_.inner_iters > 0)
        {
            meas_.dims.reduced();
            interior_ = detail::interior_positions(state_.b);
        }
    }

    /// One ADMM iteration; returns the trace record.
    TraceRecord step(const CVector<Real>& truth = {})
    {
        const Eigen::Index n = meas_.dims.total();
        const Real rho = Real(params_.rho);
        const bool constrained = mode_ == SolverMode::constrained;
        const Real scale = constrained ? Real(1) : Real(params_.lambda);
        ++iteration_;

        const CVector<Real> u_bar = state_.u.col(n).head(n);
        const CVector<Real> theta_bar = state_.theta.col(n).head(n);
        const Real u_c = std::real(state_.u(n, n));
        const Real theta_c = std::real(state_.theta(n, n));
        const CVector<Real> phi_h = meas_.phi.conjugate();
        const RVector<Real> phi2 = meas_.phi.cwiseAbs2();

        // x: the normal matrix is diagonal.
        if (constrained)
        {
            state_.x = (rho * phi_h.cwiseProduct(meas_.y) +
                        phi_h.cwiseProduct(state_.w) + Real(2) * u_bar +
                        Real(2) * rho * theta_bar)
                           .cwiseQuotient(
                               (rho * phi2.array() + Real(2) * rho)
                                   .matrix()
                                   .template cast<Complex<Real>>());
        }
        else
        {
            state_.x = (phi_h.cwiseProduct(meas_.y) + Real(2) * u_bar +
                        Real(2) * rho * theta_bar)
                           .cwiseQuotient((phi2.array() + Real(2) * rho)
                                              .matrix()
                                              .template cast<Complex<Real>>());
        }

        GeneratorTensor<Real> b_temp = toeplitz_average<Real>(
            state_.theta.topLeftCorner(n, n) + state_.u.topLeftCorner(n, n) / rho,
            meas_.dims);
        b_temp.data()[b_temp.center_index()] -= scale / (Real(2) * rho * Real(n));

        state_.t = theta_c + (u_c - scale / Real(2)) / rho;

        if (params_.inner_iters > 0 && params_.retarget_each_sweep)
        {
            const Dims reduced = meas_.dims.reduced();
            for (std::size_t i = 0; i < polys_.size(); ++i)
            {
                for (int kappa = 0; kappa < params_.inner_iters; ++kappa)
                {
                    const auto target = toeplitz_average<Real>(
                        psd_project<Real>(build_tg(b_temp, polys_[i], i)), reduced);
                    refine_axis(b_temp, target, polys_[i], i, params_.varrho, 1,
                                std::span<const Eigen::Index>(interior_));
                }
            }
            state_.b = std::move(b_temp);
        }
        else if (params_.inner_iters > 0)
        {
            const auto targets =
                refinement_targets<Real>(b_temp, std::span(polys_));
            state_.b = refine_generator<Real>(b_temp, targets, polys_,
                                              params_.varrho, params_.inner_iters);
        }
        else
        {
            state_.b = std::move(b_temp);
        }

        if (!state_.x.allFinite() || !state_.b.data().allFinite() ||
            !std::isfinite(state_.t))
        {
            throw DivergenceError(iteration_, "non-finite primal iterate");
        }

        const CMatrix<Real> z = lifted_matrix(state_.b, state_.x, state_.t);
        state_.theta = psd_project<Real>(z - state_.u / rho);
        const CMatrix<Real> r = state_.theta - z;
        state_.u += rho * r;
        const CVector<Real> resid = meas_.y - meas_.phi.cwiseProduct(state_.x);
        if (constrained) state_.w += rho * resid;

        TraceRecord rec;
        rec.iteration = iteration_;
        rec.primal_residual = double(r.norm());
        rec.data_residual = double(resid.norm());
        const Real atomic = std::real(state_.b.data()[state_.b.center_index()]) /
                                Real(2) +
                            state_.t / Real(2);
        rec.objective = double(constrained
                                   ? atomic
                                   : resid.squaredNorm() / Real(2) + scale * atomic);
        if (truth.size() == n) rec.nmse = double(nmse<Real>(state_.x, truth));
        if (!std::isfinite(rec.primal_residual) || !std::isfinite(rec.objective))
        {
            throw DivergenceError(iteration_, "non-finite residual");
        }
        if (rec.primal_residual >
            params_.divergence_limit * std::max(1.0, double(meas_.y.norm())))
        {
            throw DivergenceError(iteration_, "primal residual exceeded limit");
        }
        return rec;
    }

    SolverOutput<Real> run(const CVector<Real>& truth = {})
    {
        SolverOutput<Real> out;
        out.trace.reserve(params_.max_iters);
        for (int q = 0; q < params_.max_iters; ++q)
        {
            out.trace.push_back(step(truth));
            if (params_.early_stop_tol > 0.0 &&
                out.trace.back().primal_residual < params_.early_stop_tol)
            {
                break;
            }
        }
        finish(out);
        return out;
    }

    const SolverState<Real>& state() const noexcept { return state_; }
    const Measurement<Real>& measurement() const noexcept { return meas_; }
    int iteration() const noexcept { return iteration_; }

private:
    void finish(SolverOutput<Real>& out) const
    {
        const Eigen::Index n = meas_.dims.total();
        out.x_hat = state_.x;
        out.b_hat = state_.b;
        out.t_hat = state_.t;
        out.dual_embedding = Real(-2) * state_.u.col(n).head(n);
        if (mode_ == SolverMode::regularized)
        {
            out.residual_embedding = meas_.phi.conjugate().cwiseProduct(
                meas_.y - meas_.phi.cwiseProduct(state_.x));
            const Real denom = out.residual_embedding.norm();
            out.dual_mismatch =
                denom > Real(0)
                    ? double((out.dual_embedding - out.residual_embedding).norm() /
                             denom)
                    : double((out.dual_embedding - out.residual_embedding).norm());
        }
    }

    Measurement<Real> meas_;
    std::vector<FrequencyBand> bands_;
    std::vector<BandPolynomial<Real>> polys_;
    AdmmParams params_;
    SolverMode mode_;
    SolverState<Real> state_;
    std::vector<Eigen::Index> interior_;
    int iteration_ = 0;
};

/// Noiseless recovery: min atomic norm subject to y = Phi x.
template <typename Real>
SolverOutput<Real> solve_constrained(const Measurement<Real>& meas,
                                     std::vector<FrequencyBand> bands,
                                     const AdmmParams& params,
                                     const CVector<Real>& truth = {})
{
    return AdmmSolver<Real>(meas, std::move(bands), params,
                            SolverMode::constrained)
        .run(truth);
}

/// Noisy recovery: min 1/2 ||y - Phi x||^2 + lambda * atomic norm.
template <typename Real>
SolverOutput<Real> solve_regularized(const Measurement<Real>& meas,
                                     std::vector<FrequencyBand> bands,
                                     const AdmmParams& params,
                                     const CVector<Real>& truth = {})
{
    return AdmmSolver<Real>(meas, std::move(bands), params,
                            SolverMode::regularized)
        .run(truth);
}

} // namespace fsan

#endif // FSAN_ADMM_HPP
