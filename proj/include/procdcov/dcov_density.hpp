#pragma once

// Sample distance covariance for integrable weight densities: the V-statistic
// T_n, its U-statistic variant, the distance correlation R_n, a Monte Carlo
// oracle for the population distance covariance, and the goodness-of-fit
// distance between two marginal laws.
//
// The quartic term is evaluated as a blocked inner-product reduction over
// flattened (i,j) kernel-field pairs; the reduction order within and across
// blocks is fixed, so results do not depend on the worker count.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gaussian_sim.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace procdcov {

enum class DcovVariant { V, U };

struct DcovDensityResult {
    double t_xy = 0.0;
    double t_xx = 0.0;
    double t_yy = 0.0;
    double r = 0.0;
    DcovVariant variant = DcovVariant::V;
    WeightKernel kernel_x;
    WeightKernel kernel_y;
};

namespace detail {

struct FlatPairs {
    // Unordered pairs i <= j, each owning a contiguous G-vector; mult is 1
    // on the diagonal and 2 off it.
    std::vector<double> data;
    std::vector<double> mult;
    std::size_t count = 0;
    std::size_t g = 0;
};

inline FlatPairs flatten_pairs(const KernelField& field, bool apply_weights) {
    FlatPairs fp;
    fp.g = field.g_count;
    fp.count = field.n * (field.n + 1) / 2;
    fp.data.resize(fp.count * fp.g);
    fp.mult.resize(fp.count);
    const auto& w = field.grid->weights;
    std::size_t p = 0;
    for (std::size_t i = 0; i < field.n; ++i) {
        for (std::size_t j = i; j < field.n; ++j, ++p) {
            const double* src = field.pair(i, j);
            double* dst = fp.data.data() + p * fp.g;
            for (std::size_t g = 0; g < fp.g; ++g)
                dst[g] = apply_weights ? w[g] * src[g] : src[g];
            fp.mult[p] = (i == j) ? 1.0 : 2.0;
        }
    }
    return fp;
}

inline double dot(const double* a, const double* b, std::size_t g) {
    double s = 0.0;
    for (std::size_t k = 0; k < g; ++k) s += a[k] * b[k];
    return s;
}

/// Weighted copy of a field: wb(i,j,g) = w_g * B(i,j,g).
inline std::vector<double> weighted_entries(const KernelField& field) {
    std::vector<double> out(field.entries.size());
    const auto& w = field.grid->weights;
    const std::size_t g = field.g_count;
    for (std::size_t p = 0; p < field.n * field.n; ++p)
        for (std::size_t k = 0; k < g; ++k)
            out[p * g + k] = w[k] * field.entries[p * g + k];
    return out;
}

constexpr std::size_t kPairBlock = 256;

/// sum over all ordered (j1,j2),(j3,j4) of exp(<A_{j1j2}, w B_{j3j4}>),
/// via unordered pairs with multiplicities. Returns the raw sum (no 1/n^4).
inline double quartic_sum(const FlatPairs& a, const FlatPairs& wb, unsigned workers) {
    const std::size_t blocks = (a.count + kPairBlock - 1) / kPairBlock;
    std::vector<double> partial(blocks, 0.0);
    for_each_block(blocks, workers, [&](std::size_t blk) {
        const std::size_t lo = blk * kPairBlock;
        const std::size_t hi = std::min(lo + kPairBlock, a.count);
        double acc = 0.0;
        for (std::size_t p = lo; p < hi; ++p) {
            const double* pa = a.data.data() + p * a.g;
            double row = 0.0;
            for (std::size_t q = 0; q < wb.count; ++q) {
                const double* pb = wb.data.data() + q * wb.g;
                row += wb.mult[q] * std::exp(dot(pa, pb, a.g));
            }
            acc += a.mult[p] * row;
        }
        partial[blk] = acc;
    });
    double sum = 0.0;
    for (double v : partial) sum += v;
    return sum;
}

struct VstatTerms {
    double term1 = 0.0; // 1/n^2 sum
    double term2 = 0.0; // 1/n^4 sum
    double term3 = 0.0; // 1/n^3 sum (without the factor 2)
};

inline VstatTerms vstat_terms(const KernelField& a, const KernelField& b,
                              unsigned workers) {
    if (a.grid.get() != b.grid.get() || a.n != b.n)
        throw std::invalid_argument("vstat: mismatched kernel fields");
    const std::size_t n = a.n;
    const std::size_t g = a.g_count;
    const std::vector<double> wb = weighted_entries(b);

    VstatTerms out;

    // term1: diagonal pairs contribute exp(sum of weights).
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                sum += std::exp(dot(a.pair(i, j), wb.data() + (i * n + j) * g, g));
        out.term1 = sum / (static_cast<double>(n) * n);
    }

    // term3: blocked over the leading index.
    {
        std::vector<double> partial(n, 0.0);
        for_each_block(n, workers, [&](std::size_t i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double* pa = a.pair(i, j);
                for (std::size_t l = 0; l < n; ++l)
                    acc += std::exp(dot(pa, wb.data() + (i * n + l) * g, g));
            }
            partial[i] = acc;
        });
        double sum = 0.0;
        for (double v : partial) sum += v;
        out.term3 = sum / (static_cast<double>(n) * n * n);
    }

    // term2: blocked pair-by-pair reduction.
    {
        FlatPairs fa = flatten_pairs(a, false);
        FlatPairs fwb = flatten_pairs(b, true);
        out.term2 = quartic_sum(fa, fwb, workers) /
                    (static_cast<double>(n) * n * static_cast<double>(n) * n);
    }
    return out;
}

} // namespace detail

/// V-statistic T_n(X,Y) = term1 + term2 - 2*term3.
inline double vstat_dcov_fields(const KernelField& a, const KernelField& b,
                                unsigned workers = 1) {
    const auto t = detail::vstat_terms(a, b, workers);
    return t.term1 + t.term2 - 2.0 * t.term3;
}

inline double vstat_dcov(const PairedSample& sample, const WeightKernel& kx,
                         const WeightKernel& ky, unsigned workers = 1) {
    const KernelField a = build_kernel_field(sample.x_paths, kx);
    const KernelField b = build_kernel_field(sample.y_paths, ky);
    return vstat_dcov_fields(a, b, workers);
}

/// U-statistic variant: all summation indices pairwise distinct, with
/// normalizers n(n-1), n(n-1)(n-2)(n-3) and n(n-1)(n-2).
inline double ustat_dcov(const PairedSample& sample, const WeightKernel& kx,
                         const WeightKernel& ky, unsigned workers = 1) {
    const std::size_t n = sample.size();
    if (n < 4)
        throw insufficient_sample_error(
            "ustat_dcov: need n >= 4 for four distinct indices");

    const KernelField a = build_kernel_field(sample.x_paths, kx);
    const KernelField b = build_kernel_field(sample.y_paths, ky);
    const std::size_t g = a.g_count;
    const std::vector<double> wb = detail::weighted_entries(b);
    const auto& w = a.grid->weights;
    const double weight_total = a.grid->weight_sum();

    auto e_pq = [&](std::size_t j1, std::size_t j2, std::size_t j3, std::size_t j4) {
        return std::exp(detail::dot(a.pair(j1, j2), wb.data() + (j3 * n + j4) * g, g));
    };

    // Term 1: off-diagonal pairs only.
    double t1 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) t1 += e_pq(i, j, i, j);
    t1 /= static_cast<double>(n) * (n - 1);

    // Term 3: direct triple loop over distinct (j1, j2, j3).
    double t3 = 0.0;
    for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t j2 = 0; j2 < n; ++j2) {
            if (j2 == j1) continue;
            const double* pa = a.pair(j1, j2);
            for (std::size_t j3 = 0; j3 < n; ++j3) {
                if (j3 == j1 || j3 == j2) continue;
                t3 += std::exp(detail::dot(pa, wb.data() + (j1 * n + j3) * g, g));
            }
        }
    t3 /= static_cast<double>(n) * (n - 1) * (n - 2);

    // Term 2 by inclusion-exclusion: start from the full ordered pair-by-pair
    // sum, remove diagonal rows/columns, then remove off-diagonal (j3,j4)
    // sharing an index with (j1,j2).
    detail::FlatPairs fa = detail::flatten_pairs(a, false);
    detail::FlatPairs fwb = detail::flatten_pairs(b, true);
    const double s_full = detail::quartic_sum(fa, fwb, workers);

    double sa = 0.0, sb = 0.0; // sums over ordered pairs of exp(<pair, w*ones>)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double da = 0.0, db = 0.0;
            const double* pa = a.pair(i, j);
            const double* pb = b.pair(i, j);
            for (std::size_t k = 0; k < g; ++k) {
                da += w[k] * pa[k];
                db += w[k] * pb[k];
            }
            sa += std::exp(da);
            sb += std::exp(db);
        }
    const double nd = static_cast<double>(n);
    double t2 = s_full - nd * sb - nd * sa + nd * nd * std::exp(weight_total);

    // Overlapping off-diagonal (j3,j4): j3 in {j1,j2} with any j4 != j3, or
    // j4 in {j1,j2} with j3 outside {j1,j2}.
    double overlap = 0.0;
    for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t j2 = 0; j2 < n; ++j2) {
            if (j2 == j1) continue;
            for (std::size_t j4 = 0; j4 < n; ++j4) {
                if (j4 != j1) overlap += e_pq(j1, j2, j1, j4);
                if (j4 != j2) overlap += e_pq(j1, j2, j2, j4);
            }
            for (std::size_t j3 = 0; j3 < n; ++j3) {
                if (j3 == j1 || j3 == j2) continue;
                overlap += e_pq(j1, j2, j3, j1);
                overlap += e_pq(j1, j2, j3, j2);
            }
        }
    t2 -= overlap;
    t2 /= static_cast<double>(n) * (n - 1) * (n - 2) * (n - 3);

    return t1 + t2 - 2.0 * t3;
}

/// R_n(X,Y) = T_n(X,Y)/sqrt(T_n(X,X) T_n(Y,Y)) with all three statistics.
inline DcovDensityResult distance_correlation(const PairedSample& sample,
                                              const WeightKernel& kx,
                                              const WeightKernel& ky,
                                              DcovVariant variant = DcovVariant::V,
                                              unsigned workers = 1) {
    DcovDensityResult res;
    res.variant = variant;
    res.kernel_x = kx;
    res.kernel_y = ky;

    if (variant == DcovVariant::V) {
        const KernelField a = build_kernel_field(sample.x_paths, kx);
        const KernelField b = build_kernel_field(sample.y_paths, ky);
        res.t_xy = vstat_dcov_fields(a, b, workers);
        res.t_xx = vstat_dcov_fields(a, a, workers);
        res.t_yy = vstat_dcov_fields(b, b, workers);
    } else {
        PairedSample xx{sample.grid, sample.x_paths, sample.x_paths};
        PairedSample yy{sample.grid, sample.y_paths, sample.y_paths};
        res.t_xy = ustat_dcov(sample, kx, ky, workers);
        res.t_xx = ustat_dcov(xx, kx, kx, workers);
        res.t_yy = ustat_dcov(yy, ky, ky, workers);
    }

    if (!(res.t_xx > 1e-12) || !(res.t_yy > 1e-12))
        throw degenerate_sample_error(
            "distance_correlation: degenerate sample, T_n(X,X) or T_n(Y,Y) vanishes");
    res.r = res.t_xy / std::sqrt(res.t_xx * res.t_yy);
    return res;
}

/// Monte Carlo estimate of the population distance covariance
/// d(P_{X,Y}, P_X (x) P_Y) for a built-in model: average over m_draws
/// six-tuples (X,Y,X',Y',Y'',Y''') with the inner uniform expectation
/// realized as grid quadrature.
inline double population_dcov_mc(const ProcessModel& model,
                                 const WeightKernel& kx, const WeightKernel& ky,
                                 std::size_t m_draws,
                                 const std::shared_ptr<const Grid>& grid,
                                 std::uint64_t seed) {
    model.validate();
    kx.validate();
    ky.validate();
    if (kx.alpha != ky.alpha)
        throw std::invalid_argument("population_dcov_mc: kernels must share alpha");
    if (m_draws < 1)
        throw std::invalid_argument("population_dcov_mc: m_draws must be >= 1");

    const std::size_t m = grid->size();
    std::vector<double> fac;
    if (model.kind != ModelKind::PiecewiseIidNormalPair)
        fac = detail::cholesky_factor(detail::covariance_matrix(model, grid->points), m);

    const double c1 = model.rho;
    const double c2 = std::sqrt(std::max(0.0, 1.0 - model.rho * model.rho));

    auto draw_path = [&](RngStream& rng, std::vector<double>& z) {
        z.resize(m);
        for (auto& v : z) v = rng.normal();
    };

    double acc = 0.0;
    std::vector<double> z(m), zmix(m);
    std::vector<double> x, y, xp, yp, ypp, yppp;
    std::vector<double> cells;

    auto draw_piecewise = [&](RngStream& rng, std::vector<double>& out) {
        cells.resize(model.cells);
        for (auto& v : cells) v = rng.normal();
        out.resize(m);
        for (std::size_t gidx = 0; gidx < m; ++gidx)
            out[gidx] = cells[detail::piecewise_cell(grid->points[gidx], model.cells) - 1];
    };

    for (std::size_t d = 0; d < m_draws; ++d) {
        RngStream rng = rng_stream(seed, d);
        if (model.kind == ModelKind::PiecewiseIidNormalPair) {
            draw_piecewise(rng, x);
            draw_piecewise(rng, y);
            draw_piecewise(rng, xp);
            draw_piecewise(rng, yp);
            draw_piecewise(rng, ypp);
            draw_piecewise(rng, yppp);
        } else {
            auto correlated_pair = [&](std::vector<double>& xo, std::vector<double>& yo) {
                draw_path(rng, z);
                draw_path(rng, zmix);
                for (std::size_t k = 0; k < m; ++k)
                    zmix[k] = c1 * z[k] + c2 * zmix[k];
                xo = detail::apply_factor(fac, z);
                yo = detail::apply_factor(fac, zmix);
            };
            correlated_pair(x, y);
            correlated_pair(xp, yp);
            draw_path(rng, z);
            ypp = detail::apply_factor(fac, z);
            draw_path(rng, z);
            yppp = detail::apply_factor(fac, z);
        }

        double q1 = 0.0, q2 = 0.0, q3 = 0.0;
        for (std::size_t gidx = 0; gidx < m; ++gidx) {
            const double wg = grid->weights[gidx];
            const double wx = kernel_value(kx, x[gidx] - xp[gidx]);
            q1 += wg * wx * kernel_value(ky, y[gidx] - yp[gidx]);
            q2 += wg * wx * kernel_value(ky, ypp[gidx] - yppp[gidx]);
            q3 += wg * wx * kernel_value(ky, y[gidx] - ypp[gidx]);
        }
        acc += std::exp(q1) + std::exp(q2) - 2.0 * std::exp(q3);
    }
    return std::exp(-1.0) * acc / static_cast<double>(m_draws);
}

/// Sample goodness-of-fit distance e^1 * d(P_{n,X}, P_{n,Y}) between two
/// samples of paths observed on one grid.
inline double gof_distance(const std::vector<SampledPath>& xs,
                           const std::vector<SampledPath>& ys,
                           const WeightKernel& k) {
    k.validate();
    if (xs.size() != ys.size())
        throw std::invalid_argument("gof_distance: mismatched sample sizes");
    if (xs.empty())
        throw std::invalid_argument("gof_distance: empty samples");
    const auto grid = xs.front().grid;
    for (const auto& p : xs)
        if (p.grid.get() != grid.get())
            throw std::invalid_argument("gof_distance: mismatched grids");
    for (const auto& p : ys)
        if (p.grid.get() != grid.get())
            throw std::invalid_argument("gof_distance: mismatched grids");

    const std::size_t n = xs.size();
    const std::size_t g = grid->size();
    auto term = [&](const std::vector<SampledPath>& u, const std::vector<SampledPath>& v) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double q = 0.0;
                for (std::size_t gi = 0; gi < g; ++gi)
                    q += grid->weights[gi] *
                         kernel_value(k, u[i].values[gi] - v[j].values[gi]);
                sum += std::exp(q);
            }
        return sum / (static_cast<double>(n) * n);
    };
    return term(xs, xs) + term(ys, ys) - 2.0 * term(xs, ys);
}

} // namespace procdcov
