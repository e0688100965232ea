#ifndef FSAN_LOCALIZATION_HPP
#define FSAN_LOCALIZATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <fsan/dims.hpp>
#include <fsan/tensor.hpp>
#include <fsan/toeplitz.hpp>

namespace fsan
{

/// Frequency grid over a band with spacing `step`, starting at f_low.
template <typename Real>
std::vector<Real> band_grid(const FrequencyBand& band, double step)
{
    band.validate();
    if (!(step > 0.0)) throw std::invalid_argument("band_grid: step must be > 0");
    const auto count =
        static_cast<std::size_t>(std::floor(band.width() / step + 1e-9)) + 1;
    std::vector<Real> g(count);
    for (std::size_t k = 0; k < count; ++k)
    {
        g[k] = wrap_unit(Real(band.f_low + double(k) * step));
    }
    return g;
}

///
/// Real-valued surface sampled on the product of per-dimension grids; values
/// are stored with the last dimension fastest.
///
template <typename Real>
struct DualSurface
{
    std::vector<std::vector<Real>> grids;
    RVector<Real> values;

    std::vector<int> shape() const
    {
        std::vector<int> s;
        for (const auto& g : grids) s.push_back(int(g.size()));
        return s;
    }

    std::vector<Real> point(Eigen::Index flat) const
    {
        std::vector<Real> f(grids.size());
        for (std::size_t i = grids.size(); i-- > 0;)
        {
            const auto n = Eigen::Index(grids[i].size());
            f[i] = grids[i][flat % n];
            flat /= n;
        }
        return f;
    }
};

template <typename Real>
std::vector<std::vector<Real>> band_grids(std::span<const FrequencyBand> bands,
                                          double step)
{
    std::vector<std::vector<Real>> grids;
    for (const auto& b : bands) grids.push_back(band_grid<Real>(b, step));
    return grids;
}

///
/// a(f)^H v for every f on the grid product, by contracting one dimension at
/// a time.
///
template <typename Real>
CVector<Real> inner_with_atoms(const CVector<Real>& v, const Dims& dims,
                               const std::vector<std::vector<Real>>& grids)
{
    using RowMajor = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>;
    if (v.size() != dims.total() || grids.size() != dims.rank())
    {
        throw std::invalid_argument("inner_with_atoms: shape mismatch");
    }
    CVector<Real> cur = v;
    Eigen::Index pre = 1;
    for (std::size_t i = 0; i < dims.rank(); ++i)
    {
        const Eigen::Index n = dims[i];
        const auto g = Eigen::Index(grids[i].size());
        if (g == 0) throw std::invalid_argument("inner_with_atoms: empty grid");
        Eigen::Index post = 1;
        for (std::size_t j = i + 1; j < dims.rank(); ++j) post *= dims[j];

        RowMajor s(g, n);
        for (Eigen::Index r = 0; r < g; ++r)
        {
            s.row(r) = steering_vector<Real>(grids[i][r], int(n)).adjoint();
        }
        CVector<Real> next(pre * g * post);
        for (Eigen::Index a = 0; a < pre; ++a)
        {
            Eigen::Map<const RowMajor> in(cur.data() + a * n * post, n, post);
            Eigen::Map<RowMajor> out(next.data() + a * g * post, g, post);
            out.noalias() = s * in;
        }
        cur = std::move(next);
        pre *= g;
    }
    return cur;
}

///
/// |Q(f)| = |a(f)^H (Phi^H nu)| over the band grids, the modulus of the dual
/// polynomial.
///
template <typename Real>
DualSurface<Real> dual_surface(const CVector<Real>& dual_embedding,
                               const Dims& dims,
                               std::span<const FrequencyBand> bands,
                               double grid_step)
{
    if (bands.size() != dims.rank())
    {
        throw std::invalid_argument("dual_surface: one band per dimension");
    }
    DualSurface<Real> s;
    s.grids = band_grids<Real>(bands, grid_step);
    s.values = inner_with_atoms<Real>(dual_embedding, dims, s.grids).cwiseAbs();
    return s;
}

struct Peak
{
    Eigen::Index index = 0;
    double value = 0.0;
};

///
/// Local maxima of a surface with value >= threshold, sorted by decreasing
/// value. A point must dominate all 3^d - 1 grid neighbours; among equal
/// neighbours the one with the lowest flat index is kept, so a plateau of
/// tied points yields a single peak.
///
template <typename Real>
std::vector<Peak> locate_peaks(const DualSurface<Real>& s, double threshold)
{
    const std::vector<int> shape = s.shape();
    const std::size_t d = shape.size();
    std::vector<Eigen::Index> strides(d);
    {
        Eigen::Index st = 1;
        for (std::size_t i = d; i-- > 0;)
        {
            strides[i] = st;
            st *= shape[i];
        }
    }
    std::vector<std::vector<int>> deltas;
    {
        std::vector<int> k(d, 0);
        const std::vector<int> ext(d, 3);
        do
        {
            std::vector<int> delta(d);
            bool zero = true;
            for (std::size_t i = 0; i < d; ++i)
            {
                delta[i] = k[i] - 1;
                zero = zero && delta[i] == 0;
            }
            if (!zero) deltas.push_back(delta);
        } while (next_index(k, ext));
    }

    std::vector<Peak> peaks;
    std::vector<int> pos(d, 0);
    Eigen::Index flat = 0;
    do
    {
        const Real v = s.values[flat];
        if (double(v) >= threshold)
        {
            bool is_max = true;
            for (const auto& delta : deltas)
            {
                Eigen::Index nb = flat;
                bool inside = true;
                for (std::size_t i = 0; i < d && inside; ++i)
                {
                    const int q = pos[i] + delta[i];
                    inside = q >= 0 && q < shape[i];
                    nb += delta[i] * strides[i];
                }
                if (!inside) continue;
                const Real w = s.values[nb];
                if (w > v || (w == v && nb < flat))
                {
                    is_max = false;
                    break;
                }
            }
            if (is_max) peaks.push_back({flat, double(v)});
        }
        ++flat;
    } while (next_index(pos, shape));

    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.value > b.value; });
    return peaks;
}

///
/// Frequencies where the dual polynomial modulus peaks at `level` (1 for
/// the constrained problem, lambda for the regularized one), accepting
/// maxima down to level * (1 - rel_tol).
///
template <typename Real>
std::vector<std::vector<Real>> locate_from_dual(const DualSurface<Real>& s,
                                                double level, double rel_tol = 0.1)
{
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
    {
        throw std::invalid_argument("locate_from_dual: rel_tol must be in (0,1)");
    }
    std::vector<std::vector<Real>> out;
    for (const Peak& p : locate_peaks(s, level * (1.0 - rel_tol)))
    {
        out.push_back(s.point(p.index));
    }
    return out;
}

template <typename Real>
struct MusicSpectrum
{
    DualSurface<Real> surface; ///< pseudospectrum 1 / ||E_n^H a(f)||^2
    int order = 0;             ///< signal subspace dimension used
    bool order_fallback = false; ///< auto order found no usable eigengap
    RVector<Real> eigenvalues;   ///< of T(B), descending
};

///
/// Model order from the largest ratio between consecutive sorted
/// eigenvalues, each floored at `floor`. Returns nullopt when every
/// eigenvalue is at or below the floor.
///
template <typename Real>
std::optional<int> eigengap_order(const RVector<Real>& descending, Real floor = Real(1e-6))
{
    const Eigen::Index n = descending.size();
    if (n < 2 || descending[0] <= floor) return std::nullopt;
    int best = 1;
    Real best_ratio = Real(0);
    for (Eigen::Index k = 0; k + 1 < n; ++k)
    {
        const Real ratio =
            std::max(descending[k], floor) / std::max(descending[k + 1], floor);
        if (ratio > best_ratio)
        {
            best_ratio = ratio;
            best = int(k + 1);
        }
    }
    return best;
}

///
/// MUSIC pseudospectrum of the recovered block Toeplitz matrix T(B_hat).
/// `order` is the number of signal eigenvectors; when absent it is chosen by
/// eigengap_order (falling back to 1).
///
template <typename Real>
MusicSpectrum<Real> music_spectrum(const GeneratorTensor<Real>& b_hat,
                                   std::optional<int> order,
                                   std::span<const FrequencyBand> bands,
                                   double grid_step)
{
    const Dims& dims = b_hat.dims();
    const Eigen::Index n = dims.total();
    if (bands.size() != dims.rank())
    {
        throw std::invalid_argument("music_spectrum: one band per dimension");
    }
    if (order && (*order < 1 || *order >= n))
    {
        throw std::invalid_argument("music_spectrum: order must be in [1, N_D)");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(
        hermitian_part<Real>(build_toeplitz(b_hat)));
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("music_spectrum: eigendecomposition failed");
    }
    MusicSpectrum<Real> out;
    out.eigenvalues = es.eigenvalues().reverse();
    if (order)
    {
        out.order = *order;
    }
    else if (auto r = eigengap_order<Real>(out.eigenvalues))
    {
        out.order = *r;
    }
    else
    {
        out.order = 1;
        out.order_fallback = true;
    }

    out.surface.grids = band_grids<Real>(bands, grid_step);
    // Eigen sorts ascending: the noise subspace is the leading n - order columns.
    const Eigen::Index noise = n - out.order;
    RVector<Real> denom = RVector<Real>::Zero(0);
    for (Eigen::Index j = 0; j < noise; ++j)
    {
        const RVector<Real> proj =
            inner_with_atoms<Real>(es.eigenvectors().col(j), dims, out.surface.grids)
                .cwiseAbs2();
        if (denom.size() == 0) denom = RVector<Real>::Zero(proj.size());
        denom += proj;
    }
    const Real tiny = std::numeric_limits<Real>::min();
    out.surface.values = denom.cwiseMax(tiny).cwiseInverse();
    return out;
}

/// Value below which a fraction `q` of the surface lies.
template <typename Real>
double surface_quantile(const DualSurface<Real>& s, double q)
{
    if (s.values.size() == 0) throw std::invalid_argument("surface_quantile: empty");
    std::vector<Real> v(s.values.data(), s.values.data() + s.values.size());
    const auto k = static_cast<std::size_t>(
        std::clamp(q, 0.0, 1.0) * double(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + Eigen::Index(k), v.end());
    return double(v[k]);
}

///
/// MUSIC peaks: local maxima above the `quantile` of the pseudospectrum,
/// strongest first, at most `max_peaks`.
///
template <typename Real>
std::vector<std::vector<Real>> locate_music(const MusicSpectrum<Real>& m,
                                            std::size_t max_peaks,
                                            double quantile = 0.9)
{
    std::vector<std::vector<Real>> out;
    for (const Peak& p : locate_peaks(m.surface, surface_quantile(m.surface, quantile)))
    {
        if (out.size() == max_peaks) break;
        out.push_back(m.surface.point(p.index));
    }
    return out;
}

/// Least-squares gains: argmin ||y - Phi A sigma||_2 by column-pivoted QR.
template <typename Real>
CVector<Real> estimate_gains(const std::vector<std::vector<Real>>& freqs,
                             const Measurement<Real>& meas)
{
    if (freqs.empty()) throw std::invalid_argument("estimate_gains: no frequencies");
    meas.validate();
    CMatrix<Real> a(meas.dims.total(), Eigen::Index(freqs.size()));
    for (std::size_t l = 0; l < freqs.size(); ++l)
    {
        a.col(Eigen::Index(l)) = meas.phi.cwiseProduct(atom<Real>(freqs[l], meas.dims));
    }
    Eigen::ColPivHouseholderQR<CMatrix<Real>> qr(a);
    qr.setThreshold(Real(1e-10));
    if (qr.rank() < a.cols())
    {
        throw std::runtime_error("estimate_gains: design matrix is rank deficient");
    }
    return qr.solve(meas.y);
}

} // namespace fsan

#endif // FSAN_LOCALIZATION_HPP
