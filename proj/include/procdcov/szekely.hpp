#pragma once

// Classical vector distance covariance and correlation (the comparison
// baseline). Distance matrices are materialized once per side and reused by
// all three terms; the quartic and cubic terms are exact algebraic rewrites
// (product of means, row-mean factorization).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace procdcov {

struct VectorSample {
    std::vector<std::vector<double>> x_vectors;
    std::vector<std::vector<double>> y_vectors;

    std::size_t size() const { return x_vectors.size(); }

    void validate() const {
        if (x_vectors.size() != y_vectors.size() || x_vectors.empty())
            throw std::invalid_argument("VectorSample: need equal nonzero counts");
        for (const auto& v : x_vectors)
            if (v.size() != x_vectors.front().size())
                throw std::invalid_argument("VectorSample: inconsistent x dimension");
        for (const auto& v : y_vectors)
            if (v.size() != y_vectors.front().size())
                throw std::invalid_argument("VectorSample: inconsistent y dimension");
    }
};

namespace detail {

inline std::vector<double> distance_matrix(const std::vector<std::vector<double>>& vecs) {
    const std::size_t n = vecs.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < vecs[i].size(); ++k) {
                const double diff = vecs[i][k] - vecs[j][k];
                s += diff * diff;
            }
            d[i * n + j] = d[j * n + i] = std::sqrt(s);
        }
    return d;
}

inline double szekely_from_matrices(const std::vector<double>& dx,
                                    const std::vector<double>& dy, std::size_t n) {
    const double nd = static_cast<double>(n);
    double t1 = 0.0, sx = 0.0, sy = 0.0, t3 = 0.0;
    std::vector<double> rx(n, 0.0), ry(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double rxi = 0.0, ryi = 0.0, t1i = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            rxi += dx[i * n + j];
            ryi += dy[i * n + j];
            t1i += dx[i * n + j] * dy[i * n + j];
        }
        rx[i] = rxi;
        ry[i] = ryi;
        t1 += t1i;
        sx += rxi;
        sy += ryi;
        t3 += rxi * ryi;
    }
    return t1 / (nd * nd) + (sx / (nd * nd)) * (sy / (nd * nd)) -
           2.0 * t3 / (nd * nd * nd);
}

} // namespace detail

inline double szekely_dcov(const VectorSample& sample) {
    sample.validate();
    const std::size_t n = sample.size();
    const auto dx = detail::distance_matrix(sample.x_vectors);
    const auto dy = detail::distance_matrix(sample.y_vectors);
    return detail::szekely_from_matrices(dx, dy, n);
}

inline double szekely_dcor(const VectorSample& sample) {
    sample.validate();
    const std::size_t n = sample.size();
    const auto dx = detail::distance_matrix(sample.x_vectors);
    const auto dy = detail::distance_matrix(sample.y_vectors);
    const double txy = detail::szekely_from_matrices(dx, dy, n);
    const double txx = detail::szekely_from_matrices(dx, dx, n);
    const double tyy = detail::szekely_from_matrices(dy, dy, n);
    if (!(txx > 0.0) || !(tyy > 0.0))
        throw degenerate_sample_error("szekely_dcor: degenerate (constant) sample");
    return txy / std::sqrt(txx * tyy);
}

/// Each path becomes its grid-value vector, so the same simulated paths feed
/// both the process statistic and the vector baseline.
inline VectorSample paths_to_vectors(const PairedSample& sample) {
    VectorSample out;
    out.x_vectors.reserve(sample.size());
    out.y_vectors.reserve(sample.size());
    for (const auto& p : sample.x_paths) out.x_vectors.push_back(p.values);
    for (const auto& p : sample.y_paths) out.y_vectors.push_back(p.values);
    return out;
}

} // namespace procdcov
