#pragma once

// Weight kernels w(u) = exp(-c|u|^alpha) (the Fourier transforms of the
// symmetric alpha-stable weight densities) and the pairwise kernel fields
// over a sample. The field is materialized once (n^2 * G reals) and reused
// across the quartic term of the V-statistic.
//
// Scale conventions: c = 1 for the generic alpha-stable family, c = 1/2
// with alpha = 2 for the standard normal weight used by the simulation
// experiments.

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace procdcov {

struct WeightKernel {
    double alpha = 2.0;
    double scale = 0.5;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 2.0))
            throw std::invalid_argument("WeightKernel: alpha must be in (0,2]");
        if (!(scale > 0.0))
            throw std::invalid_argument("WeightKernel: scale must be positive");
    }
};

/// Standard normal weight density (alpha=2, c=1/2).
inline WeightKernel gaussian_kernel() { return {2.0, 0.5}; }

/// Unit-scale alpha-stable weight density.
inline WeightKernel stable_kernel(double alpha) { return {alpha, 1.0}; }

inline double kernel_value(const WeightKernel& k, double u) {
    return std::exp(-k.scale * std::pow(std::abs(u), k.alpha));
}

/// n x n x G tensor of kernel-transformed pairwise path differences:
/// entries(i,j,g) = w(X_i(x_g) - X_j(x_g)). Symmetric in (i,j), ones on the
/// diagonal, all entries in (0,1]. Each (i,j) pair owns a contiguous
/// G-vector.
struct KernelField {
    std::size_t n = 0;
    std::size_t g_count = 0;
    std::shared_ptr<const Grid> grid;
    std::vector<double> entries; // [(i*n+j)*G + g]

    const double* pair(std::size_t i, std::size_t j) const {
        return entries.data() + (i * n + j) * g_count;
    }
    double* pair(std::size_t i, std::size_t j) {
        return entries.data() + (i * n + j) * g_count;
    }
};

inline KernelField build_kernel_field(const std::vector<SampledPath>& paths,
                                      const WeightKernel& k) {
    k.validate();
    if (paths.empty())
        throw std::invalid_argument("build_kernel_field: empty path set");
    const auto grid = paths.front().grid;
    for (const auto& p : paths)
        if (p.grid.get() != grid.get())
            throw std::invalid_argument("build_kernel_field: mismatched grids");

    KernelField field;
    field.n = paths.size();
    field.g_count = grid->size();
    field.grid = grid;
    field.entries.assign(field.n * field.n * field.g_count, 1.0);

    for (std::size_t i = 0; i < field.n; ++i) {
        for (std::size_t j = i + 1; j < field.n; ++j) {
            double* ij = field.pair(i, j);
            double* ji = field.pair(j, i);
            for (std::size_t g = 0; g < field.g_count; ++g) {
                const double v = kernel_value(k, paths[i].values[g] - paths[j].values[g]);
                ij[g] = v;
                ji[g] = v;
            }
        }
    }
    return field;
}

/// Grid quadrature of the product of two field slices:
/// sum_g w_g * A(i,j,g) * B(k,l,g). This is the inner [0,1]-integral of the
/// V-statistic exponent before exponentiation.
inline double integrated_exponent(const KernelField& a, const KernelField& b,
                                  std::size_t i, std::size_t j,
                                  std::size_t k, std::size_t l) {
    if (a.grid.get() != b.grid.get() || a.n != b.n)
        throw std::invalid_argument("integrated_exponent: mismatched fields");
    const double* pa = a.pair(i, j);
    const double* pb = b.pair(k, l);
    const auto& w = a.grid->weights;
    double sum = 0.0;
    for (std::size_t g = 0; g < a.g_count; ++g) sum += w[g] * pa[g] * pb[g];
    return sum;
}

} // namespace procdcov
