#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "procdcov/gaussian_sim.hpp"
#include "procdcov/grid.hpp"
#include "procdcov/kernels.hpp"

using namespace procdcov;

namespace {

SampledPath constant_path(std::shared_ptr<const Grid> grid, double level) {
    SampledPath p;
    p.grid = std::move(grid);
    p.values.assign(p.grid->size(), level);
    return p;
}

} // namespace

TEST_CASE("kernel values") {
    CHECK(kernel_value({1.0, 1.0}, 0.0) == 1.0);
    CHECK(kernel_value({2.0, 0.5}, 2.0) == Catch::Approx(std::exp(-2.0)).epsilon(1e-12));
    // evenness: g(s) = g(-s) carries over to the transform
    CHECK(kernel_value({1.0, 1.0}, -3.0) == kernel_value({1.0, 1.0}, 3.0));
    CHECK(kernel_value({1.0, 1.0}, -3.0) == Catch::Approx(std::exp(-3.0)).epsilon(1e-12));
}

TEST_CASE("kernel validation") {
    CHECK_THROWS_AS((WeightKernel{2.5, 1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((WeightKernel{1.0, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("single-path field is all ones") {
    const auto grid = make_equidistant_grid(5);
    const auto field = build_kernel_field({constant_path(grid, 3.0)}, {1.0, 1.0});
    REQUIRE(field.n == 1);
    for (double v : field.entries) CHECK(v == 1.0);
}

TEST_CASE("constant paths give constant off-diagonal entries") {
    const auto grid = make_equidistant_grid(4);
    const auto field = build_kernel_field(
        {constant_path(grid, 0.0), constant_path(grid, 1.0)}, {1.0, 1.0});
    for (std::size_t g = 0; g < field.g_count; ++g) {
        CHECK(field.pair(0, 1)[g] == Catch::Approx(std::exp(-1.0)).epsilon(1e-15));
        CHECK(field.pair(0, 0)[g] == 1.0);
        CHECK(field.pair(1, 1)[g] == 1.0);
    }
}

TEST_CASE("field invariants on random paths") {
    ProcessModel model;
    model.kind = ModelKind::BrownianPair;
    model.rho = 0.3;
    const auto sample = simulate_pair_sample(model, 8, make_equidistant_grid(11), 21);
    const auto field = build_kernel_field(sample.x_paths, gaussian_kernel());
    for (std::size_t i = 0; i < field.n; ++i)
        for (std::size_t j = 0; j < field.n; ++j)
            for (std::size_t g = 0; g < field.g_count; ++g) {
                const double v = field.pair(i, j)[g];
                CHECK(v > 0.0);
                CHECK(v <= 1.0);
                CHECK(v == field.pair(j, i)[g]);
                if (i == j) CHECK(v == 1.0);
            }
}

TEST_CASE("mismatched grids rejected") {
    const auto g1 = make_equidistant_grid(4);
    const auto g2 = make_equidistant_grid(4);
    CHECK_THROWS_AS(
        build_kernel_field({constant_path(g1, 0.0), constant_path(g2, 0.0)},
                           {1.0, 1.0}),
        std::invalid_argument);
}

TEST_CASE("integrated exponent quadrature") {
    SECTION("constant integrand integrates to the weight sum") {
        const auto grid = make_equidistant_grid(50);
        const auto field =
            build_kernel_field({constant_path(grid, 0.0)}, {1.0, 1.0});
        CHECK(integrated_exponent(field, field, 0, 0, 0, 0) ==
              Catch::Approx(1.0).margin(1e-14));
    }

    SECTION("single-point quadrature is a product") {
        const auto grid = make_equidistant_grid(1);
        const auto fa = build_kernel_field(
            {constant_path(grid, 0.0), constant_path(grid, 2.0)}, {1.0, 1.0});
        const auto fb = build_kernel_field(
            {constant_path(grid, 0.0), constant_path(grid, 0.5)}, {1.0, 1.0});
        const double a = std::exp(-2.0);
        const double b = std::exp(-0.5);
        CHECK(integrated_exponent(fa, fb, 0, 1, 0, 1) ==
              Catch::Approx(a * b).epsilon(1e-14));
    }

    SECTION("two-point hand quadrature") {
        // weights (0.5, 0.5), A entries (0.2, 0.4), B entries (1, 1) -> 0.3
        auto grid = std::make_shared<Grid>();
        grid->points = {0.5, 1.0};
        grid->weights = {0.5, 0.5};
        KernelField a, b;
        a.n = b.n = 1;
        a.g_count = b.g_count = 2;
        a.grid = b.grid = grid;
        a.entries = {0.2, 0.4};
        b.entries = {1.0, 1.0};
        CHECK(integrated_exponent(a, b, 0, 0, 0, 0) ==
              Catch::Approx(0.3).epsilon(1e-15));
    }
}

TEST_CASE("integrated exponent symmetry") {
    ProcessModel model;
    model.kind = ModelKind::BrownianPair;
    model.rho = 0.6;
    const auto sample = simulate_pair_sample(model, 5, make_equidistant_grid(7), 33);
    const auto a = build_kernel_field(sample.x_paths, gaussian_kernel());
    const auto b = build_kernel_field(sample.y_paths, gaussian_kernel());
    CHECK(integrated_exponent(a, b, 1, 3, 0, 2) == integrated_exponent(a, b, 3, 1, 0, 2));
    CHECK(integrated_exponent(a, b, 1, 3, 0, 2) == integrated_exponent(a, b, 1, 3, 2, 0));
}

TEST_CASE("quadrature differences shrink as the mesh is refined") {
    // Evaluate one smooth Gaussian path pair on nested grids (m = 20, 40, 80
    // share points) and compare the integrated exponent across refinements.
    ProcessModel model;
    model.kind = ModelKind::FractionalBrownianPair;
    model.hurst = 0.75;
    model.rho = 0.4;
    const auto fine_grid = make_equidistant_grid(80);
    const auto sample = simulate_pair_sample(model, 2, fine_grid, 77);

    auto value_at_mesh = [&](std::size_t m) {
        const auto grid = make_equidistant_grid(m);
        const std::size_t stride = 80 / m;
        std::vector<SampledPath> xs(2), ys(2);
        for (std::size_t i = 0; i < 2; ++i) {
            xs[i].grid = grid;
            ys[i].grid = grid;
            for (std::size_t g = 0; g < m; ++g) {
                xs[i].values.push_back(sample.x_paths[i].values[(g + 1) * stride - 1]);
                ys[i].values.push_back(sample.y_paths[i].values[(g + 1) * stride - 1]);
            }
        }
        const auto fa = build_kernel_field(xs, gaussian_kernel());
        const auto fb = build_kernel_field(ys, gaussian_kernel());
        return integrated_exponent(fa, fb, 0, 1, 0, 1);
    };

    const double v20 = value_at_mesh(20);
    const double v40 = value_at_mesh(40);
    const double v80 = value_at_mesh(80);
    CHECK(std::abs(v40 - v80) < std::abs(v20 - v80));
}
