// Command-line front end: simulation of the built-in process models,
// distance covariance / correlation estimation, the Poisson alpha-distance
// estimator, the vector baseline, the simulation-study harness, the
// permutation independence test, and a selftest that checks the fast paths
// against the naive reference loops.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "procdcov/procdcov.hpp"

namespace {

using namespace procdcov;

ProcessModel model_from_flags(const std::string& kind, double rho, double hurst,
                              std::size_t cells) {
    ProcessModel model;
    if (kind == "bm") model.kind = ModelKind::BrownianPair;
    else if (kind == "fbm") model.kind = ModelKind::FractionalBrownianPair;
    else if (kind == "piecewise") model.kind = ModelKind::PiecewiseIidNormalPair;
    else throw CLI::ValidationError("--model", "expected bm, fbm or piecewise");
    model.rho = rho;
    model.hurst = hurst;
    model.cells = cells;
    model.validate();
    return model;
}

int run_selftest() {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name.c_str());
        if (!ok) ++failures;
    };

    // Blocked V-statistic against the naive quadruple loop.
    {
        bool ok = true;
        for (std::uint64_t trial = 0; trial < 10 && ok; ++trial) {
            RngStream rng = rng_stream(991, trial);
            const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform() * 8);
            const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 6);
            ProcessModel model;
            model.kind = ModelKind::BrownianPair;
            model.rho = rng.uniform();
            const auto sample =
                simulate_pair_sample(model, n, make_equidistant_grid(m), trial + 5);
            const WeightKernel k{1.0 + rng.uniform(), 0.25 + rng.uniform()};
            const double fast = vstat_dcov(sample, k, k);
            const double slow = reference::naive_vstat_dcov(sample, k, k);
            ok = std::abs(fast - slow) <= 1e-10 * std::max(1.0, std::abs(slow));
        }
        check("vstat blocked vs naive quadruple loop", ok);
    }

    // U-statistic against the naive distinct-index loops.
    {
        bool ok = true;
        for (std::uint64_t trial = 0; trial < 5 && ok; ++trial) {
            RngStream rng = rng_stream(992, trial);
            const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform() * 4);
            ProcessModel model;
            model.kind = ModelKind::BrownianPair;
            model.rho = 0.4;
            const auto sample =
                simulate_pair_sample(model, n, make_equidistant_grid(5), trial + 11);
            const WeightKernel k = gaussian_kernel();
            const double fast = ustat_dcov(sample, k, k);
            const double slow = reference::naive_ustat_dcov(sample, k, k);
            ok = std::abs(fast - slow) <= 1e-10 * std::max(1.0, std::abs(slow));
        }
        check("ustat inclusion-exclusion vs naive loops", ok);
    }

    // Szekely factorized terms against naive loops.
    {
        bool ok = true;
        for (std::uint64_t trial = 0; trial < 5 && ok; ++trial) {
            RngStream rng = rng_stream(993, trial);
            VectorSample vs;
            const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 9);
            for (std::size_t i = 0; i < n; ++i) {
                vs.x_vectors.push_back({rng.normal(), rng.normal()});
                vs.y_vectors.push_back({rng.normal(), rng.normal(), rng.normal()});
            }
            const double fast = szekely_dcov(vs);
            const double slow = reference::naive_szekely_dcov(vs);
            ok = std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow));
        }
        check("szekely factorized vs naive loops", ok);
    }

    // Kernel normalization identity at alpha = 1 (c_1 = 1/pi).
    {
        const double c1 = c_k_constant(1, 1.0);
        check("c_1(1) = 1/pi", std::abs(c1 - 1.0 / 3.14159265358979323846) < 1e-12);
    }

    // Hand-computed closed forms.
    {
        const double a = std::exp(-1.0);
        const double expected =
            (std::exp(1.0) + std::exp(a * a) - 2.0 * std::exp(a)) / 4.0;
        auto grid = make_equidistant_grid(1);
        PairedSample s;
        s.grid = grid;
        s.x_paths = {{grid, {0.0}}, {grid, {1.0}}};
        s.y_paths = {{grid, {0.0}}, {grid, {1.0}}};
        const WeightKernel k{1.0, 1.0};
        const double got = vstat_dcov(s, k, k);
        check("n=2 closed form T_2", std::abs(got - expected) < 1e-12);
    }

    std::printf("%s\n", failures == 0 ? "selftest OK" : "selftest FAILED");
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distance covariance and correlation for stochastic processes"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Simulate a paired sample");
    std::string sim_model = "bm", sim_out = "sample";
    double sim_rho = 0.0, sim_hurst = 0.5;
    std::size_t sim_cells = 50, sim_n = 100, sim_mesh = 50;
    std::uint64_t sim_seed = 1;
    sim->add_option("--model", sim_model, "bm | fbm | piecewise");
    sim->add_option("--rho", sim_rho, "cross-correlation in [0,1]");
    sim->add_option("--hurst", sim_hurst, "Hurst parameter (fbm)");
    sim->add_option("--cells", sim_cells, "cell count (piecewise)");
    sim->add_option("--n", sim_n, "number of path pairs");
    sim->add_option("--mesh", sim_mesh, "equidistant grid mesh 1/m");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output stem (writes <stem>.json/_x.csv/_y.csv)");

    // ---- estimate ----
    auto* est = app.add_subcommand("estimate", "Density-weight statistics");
    std::string est_input = "sample", est_stat = "dcor", est_variant = "V";
    std::string est_out = "report.csv";
    double est_alpha = 2.0, est_c = 0.5, est_alpha_y = -1.0, est_c_y = -1.0;
    unsigned est_workers = 1;
    std::uint64_t est_seed = 0;
    est->add_option("--input", est_input, "input sample stem");
    est->add_option("--statistic", est_stat, "dcov | dcor | gof");
    est->add_option("--variant", est_variant, "V | U");
    est->add_option("--alpha", est_alpha, "kernel alpha (X side)");
    est->add_option("--c", est_c, "kernel scale (X side)");
    est->add_option("--alpha-y", est_alpha_y, "kernel alpha (Y side; default X's)");
    est->add_option("--c-y", est_c_y, "kernel scale (Y side; default X's)");
    est->add_option("--workers", est_workers, "worker threads (0 = auto)");
    est->add_option("--seed", est_seed, "seed recorded in the report");
    est->add_option("--out", est_out, "report CSV (appended)");

    // ---- estimate-alpha ----
    auto* ealpha = app.add_subcommand("estimate-alpha",
                                      "Poisson-sampled alpha-distance statistic");
    std::string ea_input, ea_model = "bm", ea_out = "report.csv";
    double ea_alpha = 1.0, ea_rho = 0.0, ea_hurst = 0.5;
    std::size_t ea_l_n = 0, ea_n = 100, ea_cells = 50;
    std::uint64_t ea_seed = 1;
    ealpha->add_option("--input", ea_input, "input sample stem (nearest-grid lookup)");
    ealpha->add_option("--model", ea_model, "bm | fbm | piecewise (exact evaluation)");
    ealpha->add_option("--rho", ea_rho, "model correlation");
    ealpha->add_option("--hurst", ea_hurst, "Hurst parameter (fbm)");
    ealpha->add_option("--cells", ea_cells, "cell count (piecewise)");
    ealpha->add_option("--n", ea_n, "sample size (model route)");
    ealpha->add_option("--alpha", ea_alpha, "distance exponent in (0,2)");
    ealpha->add_option("--l-n", ea_l_n, "Poisson grid count (0 = ceil(sqrt(n)))");
    ealpha->add_option("--seed", ea_seed, "RNG seed");
    ealpha->add_option("--out", ea_out, "report CSV (appended)");

    // ---- estimate-szekely ----
    auto* esz = app.add_subcommand("estimate-szekely", "Vector baseline statistics");
    std::string esz_input = "sample", esz_stat = "dcor", esz_out = "report.csv";
    esz->add_option("--input", esz_input, "input sample stem");
    esz->add_option("--statistic", esz_stat, "dcov | dcor");
    esz->add_option("--out", esz_out, "report CSV (appended)");

    // ---- experiment ----
    auto* exp = app.add_subcommand("experiment", "Run the simulation study");
    std::string exp_config, exp_out;
    bool exp_desk = false;
    unsigned exp_workers = 1;
    std::uint64_t exp_seed = 0;
    bool exp_seed_set = false;
    exp->add_option("--config", exp_config, "experiment config JSON");
    exp->add_flag("--desk", exp_desk, "desk preset: n=50, mesh=25, 20 replications");
    exp->add_option("--out", exp_out, "output directory override");
    exp->add_option("--workers", exp_workers, "worker threads (0 = auto)");
    exp->add_option("--seed", exp_seed, "seed override")->each([&](const std::string&) {
        exp_seed_set = true;
    });

    // ---- permtest ----
    auto* perm = app.add_subcommand("permtest", "Permutation independence test");
    std::string pt_input = "sample", pt_stat = "Rn";
    std::size_t pt_b = 199, pt_l_n = 0;
    double pt_alpha = 2.0, pt_c = 0.5, pt_alpha_exp = 1.0;
    std::uint64_t pt_seed = 1;
    perm->add_option("--input", pt_input, "input sample stem");
    perm->add_option("--statistic", pt_stat, "Rn | RnSz | Tn | alpha");
    perm->add_option("--B", pt_b, "number of permutations");
    perm->add_option("--alpha", pt_alpha, "kernel alpha (Rn/Tn)");
    perm->add_option("--c", pt_c, "kernel scale (Rn/Tn)");
    perm->add_option("--alpha-exponent", pt_alpha_exp, "distance exponent (alpha statistic)");
    perm->add_option("--l-n", pt_l_n, "Poisson grid count (alpha statistic)");
    perm->add_option("--seed", pt_seed, "RNG seed");

    // ---- selftest ----
    app.add_subcommand("selftest", "Run the built-in consistency checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const ProcessModel model =
                model_from_flags(sim_model, sim_rho, sim_hurst, sim_cells);
            const auto grid = make_equidistant_grid(sim_mesh);
            const auto sample = simulate_pair_sample(model, sim_n, grid, sim_seed);
            nlohmann::json meta;
            meta["model"] = model_to_json(model);
            meta["seed"] = sim_seed;
            meta["mesh"] = sim_mesh;
            save_paired_sample(sim_out, sample, meta);
            std::cout << "wrote " << sim_out << ".json (n=" << sim_n << ", mesh="
                      << sim_mesh << ")\n";
        } else if (est->parsed()) {
            const PairedSample sample = load_paired_sample(est_input);
            const WeightKernel kx{est_alpha, est_c};
            const WeightKernel ky{est_alpha_y > 0 ? est_alpha_y : est_alpha,
                                  est_c_y > 0 ? est_c_y : est_c};
            EstimateReport report;
            report.seed = est_seed;
            report.parameters = {{"alpha", format_double(kx.alpha)},
                                 {"c", format_double(kx.scale)},
                                 {"variant", est_variant},
                                 {"input", est_input}};
            const DcovVariant variant =
                est_variant == "U" ? DcovVariant::U : DcovVariant::V;
            if (est_stat == "dcov") {
                report.statistic_name = variant == DcovVariant::U ? "Un" : "Tn";
                report.value = variant == DcovVariant::U
                                   ? ustat_dcov(sample, kx, ky, est_workers)
                                   : vstat_dcov(sample, kx, ky, est_workers);
            } else if (est_stat == "dcor") {
                report.statistic_name = "Rn";
                report.value =
                    distance_correlation(sample, kx, ky, variant, est_workers).r;
            } else if (est_stat == "gof") {
                report.statistic_name = "gof";
                report.value = gof_distance(sample.x_paths, sample.y_paths, kx);
            } else {
                throw CLI::ValidationError("--statistic", "expected dcov, dcor or gof");
            }
            append_report_csv(est_out, report);
            std::cout << report.statistic_name << " = " << format_double(report.value)
                      << "\n";
        } else if (ealpha->parsed()) {
            AlphaEstimate estmt;
            EstimateReport report;
            report.seed = ea_seed;
            if (!ea_input.empty()) {
                const PairedSample sample = load_paired_sample(ea_input);
                const std::size_t l_n =
                    ea_l_n > 0 ? ea_l_n : default_l_n(sample.size());
                estmt = poisson_alpha_dcov(sample, ea_alpha, l_n, ea_seed);
                report.parameters["input"] = ea_input;
            } else {
                const ProcessModel model =
                    model_from_flags(ea_model, ea_rho, ea_hurst, ea_cells);
                const std::size_t l_n = ea_l_n > 0 ? ea_l_n : default_l_n(ea_n);
                estmt = poisson_alpha_dcov(model, ea_n, ea_alpha, l_n, ea_seed);
                report.parameters["model"] = ea_model;
            }
            report.statistic_name = "alpha_dcov";
            report.value = estmt.value;
            report.parameters["alpha"] = format_double(estmt.alpha);
            report.parameters["l_n"] = std::to_string(estmt.l_n);
            append_report_csv(ea_out, report);
            std::cout << "alpha_dcov = " << format_double(estmt.value)
                      << " (I1=" << format_double(estmt.i1_hat)
                      << ", I2=" << format_double(estmt.i2_hat)
                      << ", I3=" << format_double(estmt.i3_hat) << ")\n";
        } else if (esz->parsed()) {
            const PairedSample sample = load_paired_sample(esz_input);
            const VectorSample vs = paths_to_vectors(sample);
            EstimateReport report;
            report.parameters = {{"input", esz_input}};
            if (esz_stat == "dcov") {
                report.statistic_name = "TnSz";
                report.value = szekely_dcov(vs);
            } else if (esz_stat == "dcor") {
                report.statistic_name = "RnSz";
                report.value = szekely_dcor(vs);
            } else {
                throw CLI::ValidationError("--statistic", "expected dcov or dcor");
            }
            append_report_csv(esz_out, report);
            std::cout << report.statistic_name << " = " << format_double(report.value)
                      << "\n";
        } else if (exp->parsed()) {
            ExperimentConfig config;
            if (!exp_config.empty()) {
                std::ifstream in(exp_config);
                if (!in) throw std::runtime_error("cannot open config: " + exp_config);
                nlohmann::json j;
                in >> j;
                config = experiment_config_from_json(j);
            }
            if (exp_desk) {
                config.n = 50;
                config.mesh = 25;
                config.replications = 20;
            }
            if (!exp_out.empty()) config.output_dir = exp_out;
            if (exp_seed_set) config.seed = exp_seed;
            config.workers = exp_workers;
            const auto result = run_experiment_to_dir(config);
            std::cout << "wrote " << result.tables.size() << " histogram tables to "
                      << config.output_dir << " (config hash "
                      << experiment_config_hash(config) << ")\n";
        } else if (perm->parsed()) {
            const PairedSample sample = load_paired_sample(pt_input);
            PermTestOptions options;
            options.kernel_x = {pt_alpha, pt_c};
            options.kernel_y = {pt_alpha, pt_c};
            options.alpha_exponent = pt_alpha_exp;
            options.l_n = pt_l_n;
            if (pt_stat == "Rn") options.kind = StatisticKind::Rn;
            else if (pt_stat == "RnSz") options.kind = StatisticKind::RnSz;
            else if (pt_stat == "Tn") options.kind = StatisticKind::Vstat;
            else if (pt_stat == "alpha") options.kind = StatisticKind::Alpha;
            else throw CLI::ValidationError("--statistic", "expected Rn, RnSz, Tn or alpha");
            const auto result = permutation_test(sample, options, pt_b, pt_seed);
            std::cout << "T_obs = " << format_double(result.t_obs)
                      << ", p = " << format_double(result.p_value) << " (B=" << pt_b
                      << ")\n";
        } else {
            return run_selftest();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
