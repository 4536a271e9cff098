#pragma once

// Naive reference forms of the estimators: direct nested loops over all
// index tuples with the quadrature recomputed in place. Slow but
// transparent; the `selftest` command and the test suites check the
// production (blocked / factorized) paths against these.

#include <cmath>
#include <cstdint>
#include <vector>

#include "dcov_alpha.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "szekely.hpp"

namespace procdcov::reference {

inline double exponent(const PairedSample& s, const WeightKernel& kx,
                       const WeightKernel& ky, std::size_t j1, std::size_t j2,
                       std::size_t j3, std::size_t j4) {
    double q = 0.0;
    const auto& g = *s.grid;
    for (std::size_t k = 0; k < g.size(); ++k)
        q += g.weights[k] *
             kernel_value(kx, s.x_paths[j1].values[k] - s.x_paths[j2].values[k]) *
             kernel_value(ky, s.y_paths[j3].values[k] - s.y_paths[j4].values[k]);
    return q;
}

inline double naive_vstat_dcov(const PairedSample& s, const WeightKernel& kx,
                               const WeightKernel& ky) {
    const std::size_t n = s.size();
    const double nd = static_cast<double>(n);
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t j2 = 0; j2 < n; ++j2) {
            t1 += std::exp(exponent(s, kx, ky, j1, j2, j1, j2));
            for (std::size_t j3 = 0; j3 < n; ++j3) {
                t3 += std::exp(exponent(s, kx, ky, j1, j2, j1, j3));
                for (std::size_t j4 = 0; j4 < n; ++j4)
                    t2 += std::exp(exponent(s, kx, ky, j1, j2, j3, j4));
            }
        }
    return t1 / (nd * nd) + t2 / (nd * nd * nd * nd) - 2.0 * t3 / (nd * nd * nd);
}

inline double naive_ustat_dcov(const PairedSample& s, const WeightKernel& kx,
                               const WeightKernel& ky) {
    const std::size_t n = s.size();
    const double nd = static_cast<double>(n);
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t j2 = 0; j2 < n; ++j2) {
            if (j2 == j1) continue;
            t1 += std::exp(exponent(s, kx, ky, j1, j2, j1, j2));
            for (std::size_t j3 = 0; j3 < n; ++j3) {
                if (j3 == j1 || j3 == j2) continue;
                t3 += std::exp(exponent(s, kx, ky, j1, j2, j1, j3));
                for (std::size_t j4 = 0; j4 < n; ++j4) {
                    if (j4 == j1 || j4 == j2 || j4 == j3) continue;
                    t2 += std::exp(exponent(s, kx, ky, j1, j2, j3, j4));
                }
            }
        }
    return t1 / (nd * (nd - 1)) + t2 / (nd * (nd - 1) * (nd - 2) * (nd - 3)) -
           2.0 * t3 / (nd * (nd - 1) * (nd - 2));
}

inline double naive_szekely_dcov(const VectorSample& s) {
    const std::size_t n = s.size();
    const double nd = static_cast<double>(n);
    auto dist = [](const std::vector<double>& u, const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k)
            acc += (u[k] - v[k]) * (u[k] - v[k]);
        return std::sqrt(acc);
    };
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t j2 = 0; j2 < n; ++j2) {
            t1 += dist(s.x_vectors[j1], s.x_vectors[j2]) *
                  dist(s.y_vectors[j1], s.y_vectors[j2]);
            for (std::size_t j3 = 0; j3 < n; ++j3) {
                t3 += dist(s.x_vectors[j1], s.x_vectors[j2]) *
                      dist(s.y_vectors[j1], s.y_vectors[j3]);
                for (std::size_t j4 = 0; j4 < n; ++j4)
                    t2 += dist(s.x_vectors[j1], s.x_vectors[j2]) *
                          dist(s.y_vectors[j3], s.y_vectors[j4]);
            }
        }
    return t1 / (nd * nd) + t2 / (nd * nd * nd * nd) - 2.0 * t3 / (nd * nd * nd);
}

/// Alpha-distance statistic with the cubic term as a plain triple loop;
/// same per-grid distance matrices as the production path.
inline AlphaEstimate naive_alpha_terms(
    const std::vector<std::vector<double>>& a_matrices,
    const std::vector<std::vector<double>>& b_matrices, std::size_t n,
    double alpha, std::size_t l_n) {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t k = 0; k < a_matrices.size(); ++k) {
        const auto& a = a_matrices[k];
        const auto& b = b_matrices[k];
        double sa = 0.0, sb = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                s1 += a[i * n + j] * b[i * n + j];
                sa += a[i * n + j];
                sb += b[i * n + j];
                for (std::size_t l = 0; l < n; ++l)
                    s3 += a[i * n + j] * b[i * n + l];
            }
        s2 += sa * sb; // I2 factors paired per grid
    }
    const double nd = static_cast<double>(n);
    const double ld = static_cast<double>(l_n);
    AlphaEstimate est;
    est.alpha = alpha;
    est.l_n = l_n;
    est.n = n;
    est.i1_hat = s1 / (ld * nd * nd);
    est.i2_hat = s2 / (ld * nd * nd * nd * nd);
    est.i3_hat = s3 / (ld * nd * nd * nd);
    est.value = est.i1_hat + est.i2_hat - 2.0 * est.i3_hat;
    return est;
}

} // namespace procdcov::reference
