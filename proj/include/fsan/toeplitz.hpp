#ifndef FSAN_TOEPLITZ_HPP
#define FSAN_TOEPLITZ_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include <fsan/dims.hpp>
#include <fsan/tensor.hpp>

namespace fsan
{

///
/// d-way tensor B of size (2N_1-1) x ... x (2N_d-1) holding the diagonal
/// values of a d-level block Toeplitz matrix.
///
/// Offset p_i in [-N_i+1, N_i-1] is stored at position p_i + N_i - 1; the
/// flat layout is row-major with the last dimension fastest.
///
template <typename Real>
class GeneratorTensor
{
public:
    GeneratorTensor() = default;

    explicit GeneratorTensor(const Dims& dims)
        : dims_(dims), strides_(dims.rank()),
          data_(CVector<Real>::Zero(dims.generator_size()))
    {
        Eigen::Index s = 1;
        for (std::size_t i = dims.rank(); i-- > 0;)
        {
            strides_[i] = s;
            s *= 2 * dims[i] - 1;
        }
    }

    GeneratorTensor(const Dims& dims, CVector<Real> data) : GeneratorTensor(dims)
    {
        if (data.size() != dims.generator_size())
        {
            throw std::invalid_argument("GeneratorTensor: size mismatch");
        }
        data_ = std::move(data);
    }

    static GeneratorTensor zero(const Dims& dims) { return GeneratorTensor(dims); }

    /// Unit entry at p = 0; generates the identity.
    static GeneratorTensor delta(const Dims& dims)
    {
        GeneratorTensor b(dims);
        b.data_[b.center_index()] = Real(1);
        return b;
    }

    /// B(p) = sum_l sigma_l exp(i 2 pi <p, f_l>), the generator of A diag(sigma) A^H.
    static GeneratorTensor from_model(const SpectralModel<Real>& model,
                                      const Dims& dims)
    {
        model.validate(dims.rank());
        GeneratorTensor b(dims);
        for (std::size_t l = 0; l < model.order(); ++l)
        {
            CVector<Real> outer = shifted_steering(model.freqs[l][0], dims[0]);
            for (std::size_t i = 1; i < dims.rank(); ++i)
            {
                outer = kron<Real>(outer,
                                   shifted_steering(model.freqs[l][i], dims[i]));
            }
            b.data_ += model.gains[l] * outer;
        }
        return b;
    }

    /// s_bar(f, N) = [e^{i2 pi (1-N) f}, ..., 1, ..., e^{i2 pi (N-1) f}]^T.
    static CVector<Real> shifted_steering(Real f, int n)
    {
        const Real w = wrap_unit(f);
        CVector<Real> s(2 * n - 1);
        for (int p = -n + 1; p <= n - 1; ++p)
        {
            s[p + n - 1] = std::polar(
                Real(1), Real(2) * std::numbers::pi_v<Real> * wrap_unit(p * w));
        }
        return s;
    }

    const Dims& dims() const noexcept { return dims_; }
    Eigen::Index size() const noexcept { return data_.size(); }
    Eigen::Index stride(std::size_t i) const { return strides_[i]; }

    Eigen::Index center_index() const
    {
        Eigen::Index idx = 0;
        for (std::size_t i = 0; i < dims_.rank(); ++i)
        {
            idx += (dims_[i] - 1) * strides_[i];
        }
        return idx;
    }

    Eigen::Index index(std::span<const int> p) const
    {
        if (p.size() != dims_.rank())
        {
            throw std::invalid_argument("GeneratorTensor: rank mismatch");
        }
        Eigen::Index idx = 0;
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            if (std::abs(p[i]) > dims_[i] - 1)
            {
                throw std::out_of_range("GeneratorTensor: offset out of range");
            }
            idx += (p[i] + dims_[i] - 1) * strides_[i];
        }
        return idx;
    }

    /// Offsets of a flat position.
    std::vector<int> offsets(Eigen::Index idx) const
    {
        std::vector<int> p(dims_.rank());
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            p[i] = static_cast<int>(idx / strides_[i]) - (dims_[i] - 1);
            idx %= strides_[i];
        }
        return p;
    }

    Complex<Real>& operator()(std::span<const int> p) { return data_[index(p)]; }
    const Complex<Real>& operator()(std::span<const int> p) const
    {
        return data_[index(p)];
    }
    Complex<Real>& operator()(std::initializer_list<int> p)
    {
        return (*this)(std::span<const int>(p.begin(), p.size()));
    }
    const Complex<Real>& operator()(std::initializer_list<int> p) const
    {
        return (*this)(std::span<const int>(p.begin(), p.size()));
    }

    CVector<Real>& data() noexcept { return data_; }
    const CVector<Real>& data() const noexcept { return data_; }

    /// True when B(-p) = B(p)^* up to `tol`, i.e. T(B) is Hermitian.
    bool is_conjugate_symmetric(Real tol) const
    {
        for (Eigen::Index k = 0; k < size(); ++k)
        {
            // The flat layout is point-symmetric about the center.
            if (std::abs(data_[k] - std::conj(data_[size() - 1 - k])) > tol)
            {
                return false;
            }
        }
        return true;
    }

private:
    Dims dims_;
    std::vector<Eigen::Index> strides_;
    CVector<Real> data_;
};

/// beta_p = prod (N_i - |p_i|), the number of entries on the p-th diagonal.
inline long beta_weight(std::span<const int> p, const Dims& dims)
{
    if (p.size() != dims.rank())
    {
        throw std::invalid_argument("beta_weight: rank mismatch");
    }
    long beta = 1;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
        if (std::abs(p[i]) > dims[i] - 1)
        {
            throw std::out_of_range("beta_weight: offset out of range");
        }
        beta *= dims[i] - std::abs(p[i]);
    }
    return beta;
}

inline long beta_weight(std::initializer_list<int> p, const Dims& dims)
{
    return beta_weight(std::span<const int>(p.begin(), p.size()), dims);
}

namespace detail
{

// Generator positions addressed by a block-Toeplitz matrix whose level sizes
// are `block`, built from a generator of sample dims `gen`. The generator
// index of entry (r, c) is row[r] - col[c].
struct ToeplitzAddressing
{
    std::vector<Eigen::Index> row;
    std::vector<Eigen::Index> col;
};

template <typename Real>
ToeplitzAddressing addressing(const GeneratorTensor<Real>& b, const Dims& block)
{
    const Dims& gen = b.dims();
    ToeplitzAddressing a;
    a.row.reserve(block.total());
    a.col.reserve(block.total());
    std::vector<int> k(block.rank(), 0);
    do
    {
        Eigen::Index r = 0, c = 0;
        for (std::size_t i = 0; i < k.size(); ++i)
        {
            r += (k[i] + gen[i] - 1) * b.stride(i);
            c += k[i] * b.stride(i);
        }
        a.row.push_back(r);
        a.col.push_back(c);
    } while (next_index(k, block.sizes()));
    return a;
}

} // namespace detail

///
/// Multi-level block Toeplitz matrix T(B) with
/// T[lin(m), lin(n)] = B(m_1 - n_1, ..., m_d - n_d).
///
template <typename Real>
CMatrix<Real> build_toeplitz(const GeneratorTensor<Real>& b)
{
    const Dims& dims = b.dims();
    const auto a = detail::addressing(b, dims);
    const Eigen::Index n = dims.total();
    CMatrix<Real> t(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
    {
        for (Eigen::Index r = 0; r < n; ++r)
        {
            t(r, c) = b.data()[a.row[r] - a.col[c]];
        }
    }
    return t;
}

///
/// Diagonal averaging P(M): the generator whose p-th entry is the mean of
/// M over all (m, n) with m - n = p. Inverts build_toeplitz on its range.
///
/// `dims` are the level sizes of M; the result has the same sample dims.
///
template <typename Real>
GeneratorTensor<Real> toeplitz_average(const CMatrix<Real>& m, const Dims& dims)
{
    const Eigen::Index n = dims.total();
    if (m.rows() != n || m.cols() != n)
    {
        throw std::invalid_argument("toeplitz_average: size mismatch");
    }
    GeneratorTensor<Real> out(dims);
    const auto a = detail::addressing(out, dims);
    CVector<Real>& acc = out.data();
    for (Eigen::Index c = 0; c < n; ++c)
    {
        for (Eigen::Index r = 0; r < n; ++r)
        {
            acc[a.row[r] - a.col[c]] += m(r, c);
        }
    }
    for (Eigen::Index k = 0; k < out.size(); ++k)
    {
        acc[k] /= Real(beta_weight(out.offsets(k), dims));
    }
    return out;
}

///
/// Prior interval [f_low, f_high] on the unit torus. When f_low > f_high the
/// band wraps: it is [0,1) minus the open interval (f_high, f_low).
///
struct FrequencyBand
{
    double f_low = 0.0;
    double f_high = 0.0;

    void validate() const
    {
        if (!(f_low >= 0.0 && f_low < 1.0 && f_high >= 0.0 && f_high < 1.0))
        {
            throw std::invalid_argument("FrequencyBand: endpoints must lie in [0,1)");
        }
        if (f_low == f_high)
        {
            throw std::invalid_argument("FrequencyBand: degenerate band");
        }
    }

    bool wraps() const noexcept { return f_low > f_high; }

    double width() const noexcept
    {
        return wraps() ? 1.0 - (f_low - f_high) : f_high - f_low;
    }

    /// Closed-interval membership, `slack` widening both ends.
    bool contains(double f, double slack = 0.0) const
    {
        const double w = wrap_unit(f);
        const double from_low = wrap_unit(w - f_low + slack);
        return from_low <= width() + 2.0 * slack;
    }
};

/// g(f) = r0 + 2 Re(r1 e^{-i 2 pi f}); r_{-1} = conj(r1).
template <typename Real>
struct BandPolynomial
{
    Real r0{};
    Complex<Real> r1{};

    Complex<Real> r_minus1() const { return std::conj(r1); }

    Real operator()(Real f) const
    {
        const Complex<Real> e =
            std::polar(Real(1), -Real(2) * std::numbers::pi_v<Real> * f);
        return r0 + Real(2) * std::real(r1 * e);
    }
};

///
/// Degree-one Hermitian trigonometric polynomial that vanishes at the band
/// edges, is positive strictly inside the band and negative strictly outside.
///
template <typename Real>
BandPolynomial<Real> band_polynomial(const FrequencyBand& band)
{
    band.validate();
    const Real lo = Real(band.f_low);
    const Real hi = Real(band.f_high);
    const Real sign = hi > lo ? Real(1) : Real(-1);
    const Real pi = std::numbers::pi_v<Real>;
    return {-Real(2) * std::cos(pi * (hi - lo)) * sign,
            std::polar(Real(1), pi * (lo + hi)) * sign};
}

///
/// Shifted block Toeplitz matrix T_g for the band polynomial along `axis`:
/// entry (m; n), m_j, n_j in [0, N_j - 2], equals
/// sum_{k=-1..1} r_k B(m - n - k e_axis).
///
template <typename Real>
CMatrix<Real> build_tg(const GeneratorTensor<Real>& b,
                       const BandPolynomial<Real>& poly, std::size_t axis)
{
    const Dims& dims = b.dims();
    if (axis >= dims.rank()) throw std::out_of_range("build_tg: bad axis");
    const Dims block = dims.reduced();
    const auto a = detail::addressing(b, block);
    const Eigen::Index n = block.total();
    const Eigen::Index step = b.stride(axis);
    const Complex<Real> rm = poly.r_minus1();
    const Complex<Real> rp = poly.r1;
    const CVector<Real>& g = b.data();
    CMatrix<Real> t(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
    {
        for (Eigen::Index r = 0; r < n; ++r)
        {
            const Eigen::Index k = a.row[r] - a.col[c];
            t(r, c) = rm * g[k + step] + poly.r0 * g[k] + rp * g[k - step];
        }
    }
    return t;
}

/// (H + H^H) / 2.
template <typename Real>
CMatrix<Real> hermitian_part(const CMatrix<Real>& h)
{
    return (h + h.adjoint()) * Real(0.5);
}

///
/// Frobenius-nearest PSD matrix: symmetrize, then clamp negative eigenvalues
/// to zero.
///
template <typename Real>
CMatrix<Real> psd_project(const CMatrix<Real>& h)
{
    if (h.rows() != h.cols())
    {
        throw std::invalid_argument("psd_project: matrix must be square");
    }
    if (!h.allFinite())
    {
        throw std::runtime_error("psd_project: non-finite entries");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(hermitian_part<Real>(h));
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("psd_project: eigendecomposition failed");
    }
    const RVector<Real> lambda = es.eigenvalues().cwiseMax(Real(0));
    const CMatrix<Real>& v = es.eigenvectors();
    return v * lambda.template cast<Complex<Real>>().asDiagonal() * v.adjoint();
}

template <typename Real>
Real min_eigenvalue(const CMatrix<Real>& h)
{
    if (h.size() == 0) return Real(0);
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(hermitian_part<Real>(h),
                                                     Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("min_eigenvalue: eigendecomposition failed");
    }
    return es.eigenvalues()[0];
}

struct PsdCertificate
{
    double min_eigenvalue = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

template <typename Real>
PsdCertificate certify_psd(const CMatrix<Real>& h, double rel_tol = 1e-8)
{
    PsdCertificate c;
    c.min_eigenvalue = double(min_eigenvalue<Real>(h));
    c.tolerance = rel_tol * std::max(1.0, double(h.norm()));
    c.pass = c.min_eigenvalue >= -c.tolerance;
    return c;
}

///
/// PSD certificates for T(B) followed by T_{g_i}(B), i = 1..d. Together they
/// certify a frequency-selective Vandermonde decomposition when the rank of
/// T(B) is below min N_i; the rank condition itself is not checked.
///
template <typename Real>
std::vector<PsdCertificate> check_fs_feasible(
    const GeneratorTensor<Real>& b, std::span<const FrequencyBand> bands,
    double rel_tol = 1e-8)
{
    if (bands.size() != b.dims().rank())
    {
        throw std::invalid_argument("check_fs_feasible: one band per dimension");
    }
    std::vector<PsdCertificate> out;
    out.push_back(certify_psd<Real>(build_toeplitz(b), rel_tol));
    for (std::size_t i = 0; i < bands.size(); ++i)
    {
        out.push_back(certify_psd<Real>(
            build_tg(b, band_polynomial<Real>(bands[i]), i), rel_tol));
    }
    return out;
}

inline bool all_pass(std::span<const PsdCertificate> certs)
{
    return std::all_of(certs.begin(), certs.end(),
                       [](const PsdCertificate& c) { return c.pass; });
}

} // namespace fsan

#endif // FSAN_TOEPLITZ_HPP
