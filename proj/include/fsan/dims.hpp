#ifndef FSAN_DIMS_HPP
#define FSAN_DIMS_HPP

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fsan
{

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using CMatrix =
    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

///
/// Sizes (N_1, ..., N_d) of a d-way sample tensor.
///
/// Vectorization follows a row-major convention: dimension 1 varies slowest
/// and dimension d fastest, so the multi-index (k_1, ..., k_d) (zero based)
/// maps to k_1 N_2...N_d + ... + k_{d-1} N_d + k_d.
///
class Dims
{
public:
    Dims() = default;

    explicit Dims(std::vector<int> sizes) : sizes_(std::move(sizes))
    {
        if (sizes_.empty())
        {
            throw std::invalid_argument("Dims: at least one dimension");
        }
        for (int n : sizes_)
        {
            if (n < 1)
            {
                throw std::invalid_argument("Dims: sizes must be positive");
            }
        }
    }

    Dims(std::initializer_list<int> sizes) : Dims(std::vector<int>(sizes)) {}

    std::size_t rank() const noexcept { return sizes_.size(); }

    int operator[](std::size_t i) const { return sizes_[i]; }

    const std::vector<int>& sizes() const noexcept { return sizes_; }

    /// N_D, the number of samples.
    Eigen::Index total() const noexcept
    {
        Eigen::Index n = 1;
        for (int s : sizes_) n *= s;
        return n;
    }

    /// prod (N_i - 1), the side of the shifted Toeplitz matrices.
    Eigen::Index reduced_total() const noexcept
    {
        Eigen::Index n = 1;
        for (int s : sizes_) n *= (s - 1);
        return n;
    }

    /// Sizes (N_1 - 1, ..., N_d - 1).
    Dims reduced() const
    {
        std::vector<int> r(sizes_);
        for (int& s : r)
        {
            if (s < 2)
            {
                throw std::invalid_argument(
                    "Dims: frequency-selective constraints need N_i >= 2");
            }
            --s;
        }
        return Dims(std::move(r));
    }

    /// Number of generator entries, prod (2 N_i - 1).
    Eigen::Index generator_size() const noexcept
    {
        Eigen::Index n = 1;
        for (int s : sizes_) n *= (2 * s - 1);
        return n;
    }

    friend bool operator==(const Dims&, const Dims&) = default;

    std::string to_string() const
    {
        std::string s;
        for (std::size_t i = 0; i < sizes_.size(); ++i)
        {
            if (i) s += 'x';
            s += std::to_string(sizes_[i]);
        }
        return s;
    }

private:
    std::vector<int> sizes_;
};

///
/// Bijection between zero-based multi-indices and the linear index used by
/// vec(.) and by the rows/columns of multi-level Toeplitz matrices.
///
class VecIndexMap
{
public:
    explicit VecIndexMap(const Dims& dims) : dims_(dims), strides_(dims.rank())
    {
        Eigen::Index s = 1;
        for (std::size_t i = dims.rank(); i-- > 0;)
        {
            strides_[i] = s;
            s *= dims[i];
        }
    }

    Eigen::Index linear(std::span<const int> k) const
    {
        if (k.size() != dims_.rank())
        {
            throw std::invalid_argument("VecIndexMap: rank mismatch");
        }
        Eigen::Index idx = 0;
        for (std::size_t i = 0; i < k.size(); ++i)
        {
            if (k[i] < 0 || k[i] >= dims_[i])
            {
                throw std::out_of_range("VecIndexMap: index out of range");
            }
            idx += k[i] * strides_[i];
        }
        return idx;
    }

    std::vector<int> multi(Eigen::Index idx) const
    {
        if (idx < 0 || idx >= dims_.total())
        {
            throw std::out_of_range("VecIndexMap: linear index out of range");
        }
        std::vector<int> k(dims_.rank());
        for (std::size_t i = 0; i < k.size(); ++i)
        {
            k[i] = static_cast<int>(idx / strides_[i]);
            idx %= strides_[i];
        }
        return k;
    }

    const Dims& dims() const noexcept { return dims_; }
    Eigen::Index stride(std::size_t i) const { return strides_[i]; }

private:
    Dims dims_;
    std::vector<Eigen::Index> strides_;
};

/// Advances a zero-based multi-index with the last dimension fastest.
/// Returns false after wrapping past the final index.
inline bool next_index(std::vector<int>& k, const std::vector<int>& extent)
{
    for (std::size_t i = k.size(); i-- > 0;)
    {
        if (++k[i] < extent[i]) return true;
        k[i] = 0;
    }
    return false;
}

} // namespace fsan

#endif // FSAN_DIMS_HPP
