#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "procdcov/experiments.hpp"

using namespace procdcov;

namespace {

ExperimentConfig tiny_config(const std::filesystem::path& out) {
    ExperimentConfig c;
    c.model.kind = ModelKind::BrownianPair;
    c.n = 12;
    c.mesh = 6;
    c.replications = 5;
    c.rho_list = {0.0, 0.8};
    c.statistics = {StatisticKind::Rn, StatisticKind::RnSz};
    c.seed = 77;
    c.output_dir = out.string();
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PairedSample bm_sample(std::size_t n, std::size_t m, double rho, std::uint64_t seed) {
    ProcessModel model;
    model.kind = ModelKind::BrownianPair;
    model.rho = rho;
    return simulate_pair_sample(model, n, make_equidistant_grid(m), seed);
}

} // namespace

TEST_CASE("config json round trip and hash") {
    auto c = tiny_config("unused");
    c.model.kind = ModelKind::FractionalBrownianPair;
    c.model.hurst = 0.25;
    c.statistics = {StatisticKind::Alpha, StatisticKind::Vstat};
    const auto j = experiment_config_to_json(c);
    const auto back = experiment_config_from_json(j);
    CHECK(experiment_config_to_json(back) == j);
    CHECK(experiment_config_hash(back) == experiment_config_hash(c));

    auto changed = c;
    changed.seed = c.seed + 1;
    CHECK(experiment_config_hash(changed) != experiment_config_hash(c));
}

TEST_CASE("single-replication run produces single-row tables") {
    auto c = tiny_config("unused");
    c.replications = 1;
    c.rho_list = {0.5};
    const auto result = run_experiment(c);
    REQUIRE(result.tables.size() == 2);
    for (const auto& t : result.tables) {
        CHECK(t.rho == 0.5);
        REQUIRE(t.values.size() == 1);
        CHECK(std::isfinite(t.values[0]));
    }
}

TEST_CASE("runs are deterministic and independent of the worker count") {
    auto c = tiny_config("unused");
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    c.workers = 4;
    const auto d = run_experiment(c);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t t = 0; t < a.tables.size(); ++t) {
        CHECK(a.tables[t].values == b.tables[t].values);
        CHECK(a.tables[t].values == d.tables[t].values);
    }
}

TEST_CASE("statistics for one replication share the simulated sample") {
    const auto result = run_experiment(tiny_config("unused"));
    // Group the records by (rho, replication): the hashes must agree across
    // statistics and differ across replications.
    std::set<std::uint64_t> distinct;
    for (const auto& r1 : result.records)
        for (const auto& r2 : result.records)
            if (r1.rho == r2.rho && r1.replication == r2.replication)
                CHECK(r1.sample_hash == r2.sample_hash);
    for (const auto& rec : result.records) distinct.insert(rec.sample_hash);
    CHECK(distinct.size() == 10); // 2 rhos x 5 replications
}

TEST_CASE("histogram csv format and round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "procdcov_hist_test";
    std::filesystem::remove_all(dir);

    HistogramTable table;
    table.statistic_name = "Rn";
    table.rho = 0.5;
    RngStream rng = rng_stream(3, 3);
    for (int i = 0; i < 40; ++i) table.values.push_back(rng.uniform());
    table.values[7] = std::numeric_limits<double>::quiet_NaN();

    const auto path = dir / "nested" / "table.csv"; // parent dirs auto-created
    emit_histogram_csv(table, path.string());

    const std::string text = slurp(path);
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 41); // header + 40 rows
    CHECK(text.rfind("statistic,rho,replication,value\n", 0) == 0);
    CHECK(text.find("Rn,0.5,1,") != std::string::npos);
    CHECK(text.find("Rn,0.5,8,\n") != std::string::npos); // NaN -> empty field

    const auto loaded = read_histogram_csv(path.string());
    CHECK(loaded.statistic_name == "Rn");
    CHECK(loaded.rho == 0.5);
    REQUIRE(loaded.values.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) {
        if (i == 7)
            CHECK(std::isnan(loaded.values[i]));
        else
            CHECK(loaded.values[i] == table.values[i]); // %.17g is lossless
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("persisted runs are byte-identical across reruns") {
    const auto base = std::filesystem::temp_directory_path() / "procdcov_run_test";
    std::filesystem::remove_all(base);
    auto c1 = tiny_config(base / "a");
    auto c2 = tiny_config(base / "b");
    run_experiment_to_dir(c1);
    run_experiment_to_dir(c2);

    const std::vector<std::string> names{"Rn_rho0.csv", "Rn_rho0.8.csv",
                                         "RnSz_rho0.csv", "RnSz_rho0.8.csv",
                                         "report.csv"};
    for (const auto& name : names) {
        INFO(name);
        REQUIRE(std::filesystem::exists(base / "a" / name));
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    }

    // The manifest carries the config hash (it differs only in output_dir).
    const auto manifest = nlohmann::json::parse(slurp(base / "a" / "run_manifest.json"));
    CHECK(manifest.at("config_hash").get<std::uint64_t>() == experiment_config_hash(c1));
    std::filesystem::remove_all(base);
}

TEST_CASE("experiment config validation") {
    auto c = tiny_config("unused");
    c.replications = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config("unused");
    c.statistics.clear();
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_config("unused");
    c.rho_list = {1.5};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("permutation test p-value bounds and extremes") {
    PermTestOptions opt;

    SECTION("B=1 gives p in {0.5, 1}") {
        const auto sample = bm_sample(10, 5, 0.3, 5);
        const auto res = permutation_test(sample, opt, 1, 9);
        CHECK((res.p_value == 0.5 || res.p_value == 1.0));
    }

    SECTION("perfect self-dependence gives p = 1/(B+1)") {
        auto sample = bm_sample(20, 8, 0.0, 6);
        sample.y_paths = sample.x_paths;
        const auto res = permutation_test(sample, opt, 99, 11);
        CHECK(res.p_value == Catch::Approx(0.01).margin(1e-15));
    }

    SECTION("argument validation") {
        const auto sample = bm_sample(4, 4, 0.0, 7);
        CHECK_THROWS_AS(permutation_test(sample, opt, 0, 1), std::invalid_argument);
        PairedSample one;
        one.grid = sample.grid;
        one.x_paths = {sample.x_paths[0]};
        one.y_paths = {sample.y_paths[0]};
        CHECK_THROWS_AS(permutation_test(one, opt, 5, 1), std::invalid_argument);
    }
}

TEST_CASE("permutation p-value matches the rank formula computed by hand") {
    // Recompute T_obs and every permuted statistic directly with vstat_dcov
    // and apply p = (1 + #{T_b >= T_obs}) / (B + 1) independently.
    const auto sample = bm_sample(5, 4, 0.6, 21);
    const std::size_t B = 23;
    const std::uint64_t seed = 13;
    PermTestOptions opt;
    opt.kind = StatisticKind::Vstat;
    const auto res = permutation_test(sample, opt, B, seed);

    const double t_obs = vstat_dcov(sample, opt.kernel_x, opt.kernel_y);
    std::size_t count = 0;
    for (std::size_t b = 1; b <= B; ++b) {
        RngStream rng = rng_stream(seed, b);
        const auto perm = detail::random_permutation(5, rng);
        PairedSample permuted = sample;
        for (std::size_t i = 0; i < 5; ++i)
            permuted.y_paths[i] = sample.y_paths[perm[i]];
        if (vstat_dcov(permuted, opt.kernel_x, opt.kernel_y) >= t_obs - 1e-12)
            ++count;
    }
    CHECK(res.t_obs == Catch::Approx(t_obs).epsilon(1e-10));
    CHECK(res.p_value ==
          Catch::Approx(static_cast<double>(1 + count) / (B + 1)).margin(1e-12));
}

TEST_CASE("cached and scratch permutation paths agree") {
    const auto sample = bm_sample(14, 6, 0.5, 33);
    PermTestOptions cached;
    PermTestOptions scratch;
    scratch.cache_limit = 0; // force recomputation from the paths
    for (StatisticKind kind : {StatisticKind::Rn, StatisticKind::Vstat}) {
        cached.kind = scratch.kind = kind;
        const auto a = permutation_test(sample, cached, 19, 3);
        const auto b = permutation_test(sample, scratch, 19, 3);
        CHECK(a.t_obs == Catch::Approx(b.t_obs).epsilon(1e-10));
        CHECK(a.p_value == b.p_value);
    }
}

TEST_CASE("permutation test works for the other statistics") {
    auto sample = bm_sample(16, 8, 0.0, 44);
    sample.y_paths = sample.x_paths;

    PermTestOptions opt;
    opt.kind = StatisticKind::RnSz;
    const auto sz = permutation_test(sample, opt, 49, 5);
    CHECK(sz.p_value == Catch::Approx(0.02).margin(1e-15));

    opt.kind = StatisticKind::Alpha;
    const auto al = permutation_test(sample, opt, 49, 5);
    CHECK(al.p_value <= 0.1); // self-dependence is overwhelmingly significant
}
