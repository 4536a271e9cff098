#pragma once

// Grids, sampled paths and the paired-sample container shared by all
// estimators. Everything here is immutable after construction and safe to
// share across workers.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace procdcov {

/// Quadrature grid on (0,1]: strictly increasing abscissae plus positive
/// weights. The default equidistant grid with mesh 1/m has points i/m and
/// weight 1/m each (right-endpoint Riemann rule).
struct Grid {
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }

    void validate() const {
        if (points.size() != weights.size())
            throw std::invalid_argument("Grid: points/weights length mismatch");
        double prev = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i] > prev) || !(points[i] <= 1.0))
                throw std::invalid_argument(
                    "Grid: points must be strictly increasing in (0,1]");
            if (!(weights[i] > 0.0))
                throw std::invalid_argument("Grid: weights must be positive");
            prev = points[i];
        }
    }

    /// Kahan-compensated quadrature sum of one value per grid point.
    double quadrature(const std::vector<double>& values) const {
        if (values.size() != weights.size())
            throw std::invalid_argument("Grid::quadrature: length mismatch");
        double sum = 0.0, comp = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double term = weights[i] * values[i] - comp;
            const double t = sum + term;
            comp = (t - sum) - term;
            sum = t;
        }
        return sum;
    }

    double weight_sum() const {
        double sum = 0.0, comp = 0.0;
        for (double w : weights) {
            const double term = w - comp;
            const double t = sum + term;
            comp = (t - sum) - term;
            sum = t;
        }
        return sum;
    }
};

inline std::shared_ptr<const Grid> make_equidistant_grid(std::size_t m) {
    if (m == 0)
        throw std::invalid_argument("make_equidistant_grid: m must be positive");
    auto g = std::make_shared<Grid>();
    g->points.resize(m);
    g->weights.assign(m, 1.0 / static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i)
        g->points[i] = static_cast<double>(i + 1) / static_cast<double>(m);
    g->validate();
    return g;
}

/// One process observed at the grid points.
struct SampledPath {
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;

    void validate() const {
        if (!grid)
            throw std::invalid_argument("SampledPath: missing grid");
        if (values.size() != grid->size())
            throw std::invalid_argument("SampledPath: value count != grid size");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("SampledPath: non-finite value");
    }
};

/// n iid (X,Y) path pairs on one shared grid.
struct PairedSample {
    std::shared_ptr<const Grid> grid;
    std::vector<SampledPath> x_paths;
    std::vector<SampledPath> y_paths;

    std::size_t size() const { return x_paths.size(); }

    void validate() const {
        if (!grid)
            throw std::invalid_argument("PairedSample: missing grid");
        if (x_paths.size() != y_paths.size())
            throw std::invalid_argument("PairedSample: unequal path counts");
        for (const auto& p : x_paths) {
            if (p.grid.get() != grid.get())
                throw std::invalid_argument("PairedSample: x path on foreign grid");
            p.validate();
        }
        for (const auto& p : y_paths) {
            if (p.grid.get() != grid.get())
                throw std::invalid_argument("PairedSample: y path on foreign grid");
            p.validate();
        }
    }
};

/// A named statistic value with its provenance.
struct EstimateReport {
    std::string statistic_name;
    double value = 0.0;
    std::map<std::string, std::string> parameters;
    std::uint64_t seed = 0;
    std::uint64_t replication_index = 0;

    void validate() const {
        if (statistic_name.empty())
            throw std::invalid_argument("EstimateReport: empty statistic name");
        if (!std::isfinite(value))
            throw std::invalid_argument("EstimateReport: non-finite value");
    }
};

struct degenerate_sample_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct insufficient_sample_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numerical_degeneracy_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace procdcov
