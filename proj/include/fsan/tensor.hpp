#ifndef FSAN_TENSOR_HPP
#define FSAN_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <fsan/dims.hpp>

namespace fsan
{

/// Reduces a frequency onto [0, 1).
template <typename Real>
Real wrap_unit(Real f)
{
    Real w = f - std::floor(f);
    return w >= Real(1) ? Real(0) : w;
}

/// Distance between two frequencies on the unit torus.
template <typename Real>
Real torus_distance(Real a, Real b)
{
    Real d = std::abs(wrap_unit(a) - wrap_unit(b));
    return std::min(d, Real(1) - d);
}

/// s(f, N) = [1, e^{i2 pi f}, ..., e^{i2 pi (N-1) f}]^T.
template <typename Real>
CVector<Real> steering_vector(Real f, int n)
{
    if (n < 1) throw std::invalid_argument("steering_vector: N must be >= 1");
    const Real w = wrap_unit(f);
    CVector<Real> s(n);
    for (int k = 0; k < n; ++k)
    {
        // Reduce k*f mod 1 before scaling by 2 pi; keeps the phase exact for
        // dyadic frequencies such as 1/4.
        const Real phase = Real(2) * std::numbers::pi_v<Real> * wrap_unit(k * w);
        s[k] = std::polar(Real(1), phase);
    }
    return s;
}

/// Kronecker product of two vectors with `b` varying fastest.
template <typename Real>
CVector<Real> kron(const CVector<Real>& a, const CVector<Real>& b)
{
    CVector<Real> out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
    {
        out.segment(i * b.size(), b.size()) = a[i] * b;
    }
    return out;
}

///
/// vec of the d-dimensional sinusoid s(f_1,N_1) o ... o s(f_d,N_d).
///
/// Entry lin(k) equals prod_i e^{i 2 pi k_i f_i} under VecIndexMap.
///
template <typename Real>
CVector<Real> atom(std::span<const Real> f, const Dims& dims)
{
    if (f.size() != dims.rank())
    {
        throw std::invalid_argument("atom: frequency/dimension mismatch");
    }
    CVector<Real> a = steering_vector<Real>(f[0], dims[0]);
    for (std::size_t i = 1; i < dims.rank(); ++i)
    {
        a = kron<Real>(a, steering_vector<Real>(f[i], dims[i]));
    }
    return a;
}

template <typename Real>
CVector<Real> atom(const std::vector<Real>& f, const Dims& dims)
{
    return atom<Real>(std::span<const Real>(f), dims);
}

/// r frequency vectors in [0,1)^d with their complex gains.
template <typename Real>
struct SpectralModel
{
    std::vector<std::vector<Real>> freqs;
    std::vector<Complex<Real>> gains;

    std::size_t order() const noexcept { return freqs.size(); }

    void validate(std::size_t d) const
    {
        if (freqs.size() != gains.size())
        {
            throw std::invalid_argument(
                "SpectralModel: frequency and gain counts differ");
        }
        for (const auto& f : freqs)
        {
            if (f.size() != d)
            {
                throw std::invalid_argument(
                    "SpectralModel: frequency vector has wrong dimension");
            }
        }
        for (const auto& g : gains)
        {
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
            {
                throw std::invalid_argument("SpectralModel: non-finite gain");
            }
        }
    }
};

/// vec(X) with X = sum_l sigma_l A(f_l).
template <typename Real>
CVector<Real> synthesize(const SpectralModel<Real>& model, const Dims& dims)
{
    model.validate(dims.rank());
    CVector<Real> x = CVector<Real>::Zero(dims.total());
    for (std::size_t l = 0; l < model.order(); ++l)
    {
        x += model.gains[l] * atom<Real>(model.freqs[l], dims);
    }
    return x;
}

///
/// Observed data y = Phi x + n, with Phi = diag(phi) the vectorized
/// observation tensor.
///
template <typename Real>
struct Measurement
{
    Dims dims;
    CVector<Real> y;
    CVector<Real> phi;

    void validate() const
    {
        if (y.size() != dims.total() || phi.size() != dims.total())
        {
            throw std::invalid_argument("Measurement: length differs from N_D");
        }
        if (!phi.allFinite() || !y.allFinite())
        {
            throw std::invalid_argument("Measurement: non-finite entries");
        }
    }
};

///
/// Applies the observation tensor and adds circular complex Gaussian noise
/// with E|n|^2 = noise_std^2. The draw sequence is fixed by `seed`.
///
template <typename Real>
Measurement<Real> observe(const Dims& dims, const CVector<Real>& x,
                          const CVector<Real>& phi, Real noise_std,
                          std::uint64_t seed)
{
    if (x.size() != dims.total() || phi.size() != dims.total())
    {
        throw std::invalid_argument("observe: shape mismatch");
    }
    if (!(noise_std >= Real(0)))
    {
        throw std::invalid_argument("observe: noise_std must be >= 0");
    }
    Measurement<Real> m{dims, phi.cwiseProduct(x), phi};
    if (noise_std > Real(0))
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<Real> normal(Real(0),
                                              noise_std / std::sqrt(Real(2)));
        for (Eigen::Index k = 0; k < m.y.size(); ++k)
        {
            const Real re = normal(rng);
            const Real im = normal(rng);
            m.y[k] += Complex<Real>(re, im);
        }
    }
    return m;
}

/// Noise variance for SNR = r / sigma_w^2.
template <typename Real>
Real snr_to_noise_var(int r, Real snr_db)
{
    if (r < 1) throw std::invalid_argument("snr_to_noise_var: r must be >= 1");
    return Real(r) / std::pow(Real(10), snr_db / Real(10));
}

/// ||x_hat - x||_2 / ||x||_2.
template <typename Real>
Real nmse(const CVector<Real>& x_hat, const CVector<Real>& x_ref)
{
    if (x_hat.size() != x_ref.size())
    {
        throw std::invalid_argument("nmse: length mismatch");
    }
    const Real ref = x_ref.norm();
    if (ref == Real(0)) throw std::invalid_argument("nmse: zero reference");
    return (x_hat - x_ref).norm() / ref;
}

} // namespace fsan

#endif // FSAN_TENSOR_HPP
