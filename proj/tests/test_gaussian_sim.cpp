#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "procdcov/gaussian_sim.hpp"
#include "procdcov/grid.hpp"

using namespace procdcov;

namespace {

struct CovEstimate {
    double value;
    double se;
};

// Sample covariance with a Monte Carlo standard error for 4-sigma checks.
CovEstimate empirical_cov(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double cov = 0.0, var_prod = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (xs[i] - mx) * (ys[i] - my);
        cov += p;
        var_prod += p * p;
    }
    cov /= static_cast<double>(n);
    var_prod = var_prod / static_cast<double>(n) - cov * cov;
    return {cov, std::sqrt(var_prod / static_cast<double>(n))};
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic_vs_normal(std::vector<double> draws) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = standard_normal_cdf(draws[i]);
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return ks;
}

} // namespace

TEST_CASE("brownian cross-covariance") {
    CHECK(bm_cross_cov(0.2, 0.7, 0.5) == Catch::Approx(0.1).margin(1e-15));
    CHECK(bm_cross_cov(0.9, 0.1, 0.0) == 0.0);
    CHECK(bm_cross_cov(0.3, 0.3, 1.0) == Catch::Approx(0.3).margin(1e-15));
}

TEST_CASE("fbm cross-covariance") {
    // H = 1/2 reduces to rho*min(s,t)
    CHECK(fbm_cross_cov(0.3, 0.8, 1.0, 0.5) == Catch::Approx(0.3).margin(1e-12));
    CHECK(fbm_cross_cov(0.4, 0.4, 0.7, 0.3) ==
          Catch::Approx(0.7 * std::pow(0.4, 0.6)).margin(1e-12));
    const double expected =
        0.25 * (std::pow(0.25, 1.5) + std::pow(0.75, 1.5) - std::pow(0.5, 1.5));
    CHECK(fbm_cross_cov(0.25, 0.75, 0.5, 0.75) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("perfect correlation gives identical paths") {
    ProcessModel model;
    model.kind = ModelKind::BrownianPair;
    model.rho = 1.0;
    const auto sample = simulate_pair_sample(model, 5, make_equidistant_grid(20), 3);
    for (std::size_t i = 0; i < sample.size(); ++i)
        CHECK(sample.x_paths[i].values == sample.y_paths[i].values);
}

TEST_CASE("simulation is a pure function of (model, n, grid, seed)") {
    ProcessModel model;
    model.kind = ModelKind::FractionalBrownianPair;
    model.hurst = 0.25;
    model.rho = 0.5;
    const auto grid = make_equidistant_grid(10);
    const auto a = simulate_pair_sample(model, 4, grid, 17);
    const auto b = simulate_pair_sample(model, 4, grid, 17);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.x_paths[i].values == b.x_paths[i].values);
        CHECK(a.y_paths[i].values == b.y_paths[i].values);
    }
}

TEST_CASE("intra-process covariance matches the analytic law") {
    ProcessModel model;
    model.kind = ModelKind::FractionalBrownianPair;
    model.hurst = 0.5;
    model.rho = 0.0;
    const std::size_t draws = 10000;
    const auto sample =
        evaluate_model_at_points(model, {0.5, 1.0}, draws, 271);
    std::vector<double> a(draws), b(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        a[i] = sample.x_paths[i].values[0];
        b[i] = sample.x_paths[i].values[1];
    }
    const auto est = empirical_cov(a, b);
    CHECK(std::abs(est.value - 0.5) < 4.0 * est.se);
}

TEST_CASE("mixing construction reproduces the cross-covariance") {
    ProcessModel model;
    model.kind = ModelKind::FractionalBrownianPair;
    model.hurst = 0.75;
    model.rho = 0.5;
    const std::vector<double> pts{0.25, 0.5, 1.0};
    const std::size_t draws = 10000;
    const auto sample = evaluate_model_at_points(model, pts, draws, 515);
    for (std::size_t pi = 0; pi < pts.size(); ++pi)
        for (std::size_t pj = 0; pj < pts.size(); ++pj) {
            std::vector<double> xs(draws), ys(draws);
            for (std::size_t i = 0; i < draws; ++i) {
                xs[i] = sample.x_paths[i].values[pi];
                ys[i] = sample.y_paths[i].values[pj];
            }
            const auto est = empirical_cov(xs, ys);
            const double truth = fbm_cross_cov(pts[pi], pts[pj], model.rho, model.hurst);
            CHECK(std::abs(est.value - truth) < 4.0 * est.se);
        }
}

TEST_CASE("piecewise model takes one iid value per cell") {
    ProcessModel model;
    model.kind = ModelKind::PiecewiseIidNormalPair;
    model.cells = 50;
    const auto grid = make_equidistant_grid(50);
    const std::size_t draws = 2000;
    const auto sample = simulate_pair_sample(model, draws, grid, 88);

    // Each path takes exactly 50 distinct values on the mesh-1/50 grid.
    for (std::size_t i = 0; i < 5; ++i) {
        std::set<double> distinct(sample.x_paths[i].values.begin(),
                                  sample.x_paths[i].values.end());
        CHECK(distinct.size() == 50);
    }

    // X and Y are independent at a fixed grid point.
    std::vector<double> xs(draws), ys(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        xs[i] = sample.x_paths[i].values[10];
        ys[i] = sample.y_paths[i].values[10];
    }
    const auto est = empirical_cov(xs, ys);
    CHECK(std::abs(est.value) < 4.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("piecewise cells are right-closed") {
    ProcessModel model;
    model.kind = ModelKind::PiecewiseIidNormalPair;
    model.cells = 4;
    // 0.25 belongs to cell 1 = (0, 1/4]; 0.26 to cell 2.
    const auto sample = evaluate_model_at_points(model, {0.25, 0.26, 0.5}, 1, 5);
    CHECK(sample.x_paths[0].values[1] == sample.x_paths[0].values[2]);
    CHECK(sample.x_paths[0].values[0] != sample.x_paths[0].values[1]);
}

TEST_CASE("evaluation at arbitrary point sets") {
    ProcessModel model;
    model.kind = ModelKind::BrownianPair;
    model.rho = 0.0;

    SECTION("variance at a single point") {
        const std::size_t draws = 10000;
        const auto sample = evaluate_model_at_points(model, {0.5}, draws, 9);
        double sq = 0.0;
        for (std::size_t i = 0; i < draws; ++i)
            sq += sample.x_paths[i].values[0] * sample.x_paths[i].values[0];
        const double var = sq / static_cast<double>(draws);
        // var of chi2-type average: SE ~ sqrt(2)*sigma^2/sqrt(n)
        CHECK(std::abs(var - 0.5) < 4.0 * std::sqrt(2.0) * 0.5 / std::sqrt(10000.0));
    }

    SECTION("empty point set is valid") {
        const auto sample = evaluate_model_at_points(model, {}, 3, 9);
        REQUIRE(sample.size() == 3);
        CHECK(sample.x_paths[0].values.empty());
    }

    SECTION("duplicate points rejected") {
        CHECK_THROWS_AS(evaluate_model_at_points(model, {0.5, 0.5}, 1, 9),
                        std::invalid_argument);
        CHECK_THROWS_AS(evaluate_model_at_points(model, {0.5, 0.25}, 1, 9),
                        std::invalid_argument);
    }
}

TEST_CASE("H=1/2 fbm marginal at t=1 is standard normal") {
    ProcessModel model;
    model.kind = ModelKind::FractionalBrownianPair;
    model.hurst = 0.5;
    model.rho = 0.0;
    const std::size_t draws = 10000;
    const auto sample = evaluate_model_at_points(model, {1.0}, draws, 404);
    std::vector<double> marginal(draws);
    for (std::size_t i = 0; i < draws; ++i) marginal[i] = sample.x_paths[i].values[0];
    const double ks = ks_statistic_vs_normal(std::move(marginal));
    // 1% critical value for the KS distance is 1.628/sqrt(n).
    CHECK(ks < 1.628 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("model validation") {
    ProcessModel model;
    model.kind = ModelKind::FractionalBrownianPair;
    model.hurst = 1.0;
    CHECK_THROWS_AS(model.validate(), std::invalid_argument);
    model.hurst = 0.5;
    model.rho = 1.5;
    CHECK_THROWS_AS(model.validate(), std::invalid_argument);
}
