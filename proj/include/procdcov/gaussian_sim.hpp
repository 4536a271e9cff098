#pragma once

// Exact simulation of the built-in process models: correlated bivariate
// Brownian motion, correlated bivariate fractional Brownian motion, and
// piecewise-constant iid-normal processes.
//
// Gaussian pairs are drawn by Cholesky factorization of the single-process
// covariance on the requested points; the second path is the mixture
// W2 = rho*W1 + sqrt(1-rho^2)*W~, which reproduces the cross-covariance
// rho*C(s,t) exactly at half the factorization cost of a joint 2m x 2m
// factor.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "rng.hpp"

namespace procdcov {

enum class ModelKind { BrownianPair, FractionalBrownianPair, PiecewiseIidNormalPair };

struct ProcessModel {
    ModelKind kind = ModelKind::BrownianPair;
    double rho = 0.0;
    double hurst = 0.5;   // FractionalBrownianPair only
    std::size_t cells = 50; // PiecewiseIidNormalPair only

    void validate() const {
        if (!(rho >= -1.0 && rho <= 1.0))
            throw std::invalid_argument("ProcessModel: |rho| must be <= 1");
        if (kind == ModelKind::FractionalBrownianPair &&
            !(hurst > 0.0 && hurst < 1.0))
            throw std::invalid_argument("ProcessModel: hurst must be in (0,1)");
        if (kind == ModelKind::PiecewiseIidNormalPair && cells == 0)
            throw std::invalid_argument("ProcessModel: cells must be positive");
    }
};

inline double bm_cross_cov(double s, double t, double rho) {
    return rho * std::min(s, t);
}

inline double fbm_cross_cov(double s, double t, double rho, double hurst) {
    const double two_h = 2.0 * hurst;
    return 0.5 * rho *
           (std::pow(std::abs(s), two_h) + std::pow(std::abs(t), two_h) -
            std::pow(std::abs(t - s), two_h));
}

namespace detail {

/// Lower-triangular Cholesky factor, row-major. Retries once with a 1e-12
/// diagonal jitter; the retry is logged.
inline std::vector<double> cholesky_factor(std::vector<double> cov, std::size_t m) {
    // Returns the index of the first non-positive pivot, or m on success.
    auto attempt = [m](std::vector<double>& a) -> std::size_t {
        for (std::size_t j = 0; j < m; ++j) {
            double d = a[j * m + j];
            for (std::size_t k = 0; k < j; ++k) d -= a[j * m + k] * a[j * m + k];
            if (!(d > 0.0)) return j;
            const double ljj = std::sqrt(d);
            a[j * m + j] = ljj;
            for (std::size_t i = j + 1; i < m; ++i) {
                double s = a[i * m + j];
                for (std::size_t k = 0; k < j; ++k) s -= a[i * m + k] * a[j * m + k];
                a[i * m + j] = s / ljj;
            }
            for (std::size_t k = j + 1; k < m; ++k) a[j * m + k] = 0.0;
        }
        return m;
    };

    std::vector<double> work = cov;
    if (attempt(work) == m) return work;

    std::cerr << "procdcov: covariance not positive definite, retrying with "
                 "1e-12 diagonal jitter\n";
    for (std::size_t j = 0; j < m; ++j) cov[j * m + j] += 1e-12;
    work = cov;
    const std::size_t pivot = attempt(work);
    if (pivot == m) return work;
    throw numerical_degeneracy_error(
        "cholesky_factor: non-positive pivot at index " + std::to_string(pivot));
}

inline std::vector<double> covariance_matrix(const ProcessModel& model,
                                             const std::vector<double>& pts) {
    const std::size_t m = pts.size();
    std::vector<double> cov(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            cov[i * m + j] = (model.kind == ModelKind::BrownianPair)
                                 ? bm_cross_cov(pts[i], pts[j], 1.0)
                                 : fbm_cross_cov(pts[i], pts[j], 1.0, model.hurst);
        }
    return cov;
}

/// path = L z
inline std::vector<double> apply_factor(const std::vector<double>& fac,
                                        const std::vector<double>& z) {
    const std::size_t m = z.size();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += fac[i * m + k] * z[k];
        out[i] = s;
    }
    return out;
}

/// Cell containing x for right-closed cells ((i-1)/c, i/c], 1-based.
inline std::size_t piecewise_cell(double x, std::size_t cells) {
    double scaled = x * static_cast<double>(cells);
    // Points like 3/50 scale to 3 + 1 ulp; snap near-integers back onto the
    // boundary so they stay in their right-closed cell.
    const double snapped = std::nearbyint(scaled);
    if (std::abs(scaled - snapped) <= 1e-9 * std::max(1.0, std::abs(scaled)))
        scaled = snapped;
    auto idx = static_cast<std::size_t>(std::ceil(scaled));
    if (idx < 1) idx = 1;
    if (idx > cells) idx = cells;
    return idx;
}

inline void simulate_pair_at(const ProcessModel& model,
                             const std::vector<double>& pts,
                             const std::vector<double>& fac,
                             RngStream& rng,
                             std::vector<double>& x_out,
                             std::vector<double>& y_out) {
    const std::size_t m = pts.size();
    if (model.kind == ModelKind::PiecewiseIidNormalPair) {
        std::vector<double> cx(model.cells), cy(model.cells);
        for (auto& v : cx) v = rng.normal();
        for (auto& v : cy) v = rng.normal();
        x_out.resize(m);
        y_out.resize(m);
        for (std::size_t g = 0; g < m; ++g) {
            x_out[g] = cx[piecewise_cell(pts[g], model.cells) - 1];
            y_out[g] = cy[piecewise_cell(pts[g], model.cells) - 1];
        }
        return;
    }
    std::vector<double> z1(m), z2(m);
    for (auto& v : z1) v = rng.normal();
    for (auto& v : z2) v = rng.normal();
    const double c1 = model.rho;
    const double c2 = std::sqrt(std::max(0.0, 1.0 - model.rho * model.rho));
    std::vector<double> mixed(m);
    for (std::size_t g = 0; g < m; ++g) mixed[g] = c1 * z1[g] + c2 * z2[g];
    x_out = apply_factor(fac, z1);
    y_out = apply_factor(fac, mixed);
}

} // namespace detail

/// Exact simulation at an arbitrary strictly increasing point set in (0,1].
inline PairedSample evaluate_model_at_points(const ProcessModel& model,
                                             const std::vector<double>& points,
                                             std::size_t n,
                                             std::uint64_t seed) {
    model.validate();
    double prev = 0.0;
    for (double p : points) {
        if (!(p > prev) || !(p <= 1.0))
            throw std::invalid_argument(
                "evaluate_model_at_points: points must be strictly increasing in (0,1]");
        prev = p;
    }

    auto grid = std::make_shared<Grid>();
    grid->points = points;
    grid->weights.assign(points.size(), points.empty() ? 0.0
                                                       : 1.0 / static_cast<double>(points.size()));

    PairedSample sample;
    sample.grid = grid;
    sample.x_paths.resize(n);
    sample.y_paths.resize(n);

    std::vector<double> fac;
    if (!points.empty() && model.kind != ModelKind::PiecewiseIidNormalPair)
        fac = detail::cholesky_factor(detail::covariance_matrix(model, points),
                                      points.size());

    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = rng_stream(seed, i);
        sample.x_paths[i].grid = grid;
        sample.y_paths[i].grid = grid;
        if (points.empty()) continue;
        detail::simulate_pair_at(model, points, fac, rng,
                                 sample.x_paths[i].values,
                                 sample.y_paths[i].values);
    }
    return sample;
}

/// n iid path pairs on a quadrature grid, exact finite-dimensional law.
/// Pure function of (model, n, grid, seed); replicate i draws from
/// stream (seed, i).
inline PairedSample simulate_pair_sample(const ProcessModel& model,
                                         std::size_t n,
                                         std::shared_ptr<const Grid> grid,
                                         std::uint64_t seed) {
    model.validate();
    grid->validate();
    if (n < 1)
        throw std::invalid_argument("simulate_pair_sample: n must be >= 1");

    PairedSample sample;
    sample.grid = grid;
    sample.x_paths.resize(n);
    sample.y_paths.resize(n);

    std::vector<double> fac;
    if (model.kind != ModelKind::PiecewiseIidNormalPair)
        fac = detail::cholesky_factor(detail::covariance_matrix(model, grid->points),
                                      grid->size());

    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = rng_stream(seed, i);
        sample.x_paths[i].grid = grid;
        sample.y_paths[i].grid = grid;
        detail::simulate_pair_at(model, grid->points, fac, rng,
                                 sample.x_paths[i].values,
                                 sample.y_paths[i].values);
    }
    return sample;
}

} // namespace procdcov
