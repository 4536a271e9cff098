#pragma once

// Experiment harness: simulate n path pairs per (rho, replication), compute
// every requested statistic on the same simulated sample, and collect one
// histogram table per (statistic, rho). Also the permutation independence
// test used for inference.
//
// Replications may run concurrently; each draws from its own stream keyed by
// (seed, rho index, replication), so output is independent of scheduling.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcov_alpha.hpp"
#include "dcov_density.hpp"
#include "gaussian_sim.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "szekely.hpp"

namespace procdcov {

enum class StatisticKind { Rn, RnSz, Alpha, Vstat };

inline std::string statistic_name(StatisticKind kind) {
    switch (kind) {
        case StatisticKind::Rn: return "Rn";
        case StatisticKind::RnSz: return "RnSz";
        case StatisticKind::Alpha: return "alpha";
        case StatisticKind::Vstat: return "Tn";
    }
    return "?";
}

struct ExperimentConfig {
    ProcessModel model;
    std::size_t n = 100;
    std::size_t mesh = 50;
    std::size_t replications = 40;
    std::vector<double> rho_list{0.0, 0.5, 0.8};
    std::vector<StatisticKind> statistics{StatisticKind::Rn, StatisticKind::RnSz};
    WeightKernel kernel = gaussian_kernel();
    double alpha_exponent = 1.0;
    std::size_t l_n = 0; // 0 = ceil(sqrt(n))
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    unsigned workers = 1;

    void validate() const {
        model.validate();
        kernel.validate();
        if (replications < 1 || mesh < 1 || n < 1)
            throw std::invalid_argument("ExperimentConfig: counts must be >= 1");
        for (double rho : rho_list)
            if (!(rho >= 0.0 && rho <= 1.0))
                throw std::invalid_argument("ExperimentConfig: rho must be in [0,1]");
        if (statistics.empty())
            throw std::invalid_argument("ExperimentConfig: no statistics requested");
    }
};

struct HistogramTable {
    std::string statistic_name;
    double rho = 0.0;
    std::vector<double> values; // NaN marks a failed replication
};

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["model"] = model_to_json(c.model);
    j["n"] = c.n;
    j["mesh"] = c.mesh;
    j["replications"] = c.replications;
    j["rho_list"] = c.rho_list;
    std::vector<std::string> stats;
    for (auto s : c.statistics) stats.push_back(statistic_name(s));
    j["statistics"] = stats;
    j["kernel"] = {{"alpha", c.kernel.alpha}, {"c", c.kernel.scale}};
    j["alpha_exponent"] = c.alpha_exponent;
    j["l_n"] = c.l_n;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    c.n = j.value("n", c.n);
    c.mesh = j.value("mesh", c.mesh);
    c.replications = j.value("replications", c.replications);
    if (j.contains("rho_list"))
        c.rho_list = j.at("rho_list").get<std::vector<double>>();
    if (j.contains("statistics")) {
        c.statistics.clear();
        for (const auto& s : j.at("statistics")) {
            const std::string name = s.get<std::string>();
            if (name == "Rn") c.statistics.push_back(StatisticKind::Rn);
            else if (name == "RnSz") c.statistics.push_back(StatisticKind::RnSz);
            else if (name == "alpha") c.statistics.push_back(StatisticKind::Alpha);
            else if (name == "Tn") c.statistics.push_back(StatisticKind::Vstat);
            else throw std::invalid_argument("unknown statistic: " + name);
        }
    }
    if (j.contains("kernel")) {
        c.kernel.alpha = j.at("kernel").value("alpha", 2.0);
        c.kernel.scale = j.at("kernel").value("c", 0.5);
    }
    c.alpha_exponent = j.value("alpha_exponent", c.alpha_exponent);
    c.l_n = j.value("l_n", c.l_n);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

/// FNV-1a over the canonical config dump.
inline std::uint64_t experiment_config_hash(const ExperimentConfig& c) {
    const std::string dump = experiment_config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t sample_hash(const PairedSample& sample) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const std::vector<SampledPath>& paths) {
        for (const auto& p : paths)
            for (double v : p.values) {
                std::uint64_t bits;
                static_assert(sizeof(bits) == sizeof(v));
                std::memcpy(&bits, &v, sizeof(bits));
                for (int b = 0; b < 8; ++b) {
                    h ^= (bits >> (8 * b)) & 0xff;
                    h *= 0x100000001b3ULL;
                }
            }
    };
    feed(sample.x_paths);
    feed(sample.y_paths);
    return h;
}

struct ReplicationRecord {
    std::string statistic;
    double rho = 0.0;
    std::size_t replication = 0;
    double value = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t sample_hash = 0;
};

struct ExperimentResult {
    std::vector<HistogramTable> tables;
    std::vector<ReplicationRecord> records;
};

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto grid = make_equidistant_grid(config.mesh);
    const std::size_t l_n = config.l_n > 0 ? config.l_n : default_l_n(config.n);

    ExperimentResult result;
    const std::size_t s_count = config.statistics.size();
    const std::size_t r_count = config.rho_list.size();
    result.tables.resize(s_count * r_count);
    for (std::size_t si = 0; si < s_count; ++si)
        for (std::size_t ri = 0; ri < r_count; ++ri) {
            auto& t = result.tables[si * r_count + ri];
            t.statistic_name = statistic_name(config.statistics[si]);
            t.rho = config.rho_list[ri];
            t.values.assign(config.replications,
                            std::numeric_limits<double>::quiet_NaN());
        }
    result.records.resize(s_count * r_count * config.replications);

    for (std::size_t ri = 0; ri < r_count; ++ri) {
        ProcessModel model = config.model;
        model.rho = config.rho_list[ri];

        for_each_block(config.replications, config.workers, [&](std::size_t r) {
            const std::uint64_t rep_seed = mix_stream_id(config.seed, ri, r);
            const PairedSample sample =
                simulate_pair_sample(model, config.n, grid, rep_seed);
            const std::uint64_t shash = sample_hash(sample);

            for (std::size_t si = 0; si < s_count; ++si) {
                double value = std::numeric_limits<double>::quiet_NaN();
                try {
                    switch (config.statistics[si]) {
                        case StatisticKind::Rn:
                            value = distance_correlation(sample, config.kernel,
                                                         config.kernel)
                                        .r;
                            break;
                        case StatisticKind::RnSz:
                            value = szekely_dcor(paths_to_vectors(sample));
                            break;
                        case StatisticKind::Alpha:
                            value = poisson_alpha_dcov(
                                        model, config.n, config.alpha_exponent,
                                        l_n, mix_stream_id(rep_seed, 0xa1f4ULL))
                                        .value;
                            break;
                        case StatisticKind::Vstat:
                            value = vstat_dcov(sample, config.kernel, config.kernel);
                            break;
                    }
                } catch (const degenerate_sample_error&) {
                    // recorded as missing, run continues
                }
                result.tables[si * r_count + ri].values[r] = value;
                auto& rec = result.records[(si * r_count + ri) * config.replications + r];
                rec.statistic = statistic_name(config.statistics[si]);
                rec.rho = config.rho_list[ri];
                rec.replication = r;
                rec.value = value;
                rec.sample_hash = shash;
            }
        });
    }
    return result;
}

/// CSV with header "statistic,rho,replication,value"; missing values are
/// emitted as empty fields. Parent directories are created.
inline void emit_histogram_csv(const HistogramTable& table, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << "statistic,rho,replication,value\n";
    for (std::size_t r = 0; r < table.values.size(); ++r) {
        out << table.statistic_name << "," << format_double(table.rho) << ","
            << (r + 1) << ",";
        if (std::isfinite(table.values[r])) out << format_double(table.values[r]);
        out << "\n";
    }
    if (!out)
        throw std::runtime_error("write failure: " + path);
}

inline HistogramTable read_histogram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    std::getline(in, line); // header
    HistogramTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string stat, rho, rep, value;
        std::getline(ss, stat, ',');
        std::getline(ss, rho, ',');
        std::getline(ss, rep, ',');
        std::getline(ss, value);
        table.statistic_name = stat;
        table.rho = std::strtod(rho.c_str(), nullptr);
        table.values.push_back(value.empty()
                                   ? std::numeric_limits<double>::quiet_NaN()
                                   : std::strtod(value.c_str(), nullptr));
    }
    return table;
}

/// Run and persist: one histogram CSV per (statistic, rho), a per-replication
/// report with the sample hash, and a manifest carrying the config hash.
inline ExperimentResult run_experiment_to_dir(const ExperimentConfig& config) {
    ExperimentResult result = run_experiment(config);
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);

    std::vector<std::string> files;
    for (std::size_t ti = 0; ti < result.tables.size(); ++ti) {
        const auto& t = result.tables[ti];
        std::ostringstream name;
        name << t.statistic_name << "_rho" << t.rho << ".csv";
        const std::string path = (dir / name.str()).string();
        emit_histogram_csv(t, path);
        files.push_back(name.str());
    }

    {
        std::ofstream out(dir / "report.csv");
        out << "statistic,rho,replication,value,sample_hash\n";
        for (const auto& rec : result.records) {
            out << rec.statistic << "," << format_double(rec.rho) << ","
                << (rec.replication + 1) << ",";
            if (std::isfinite(rec.value)) out << format_double(rec.value);
            out << "," << rec.sample_hash << "\n";
        }
    }

    nlohmann::json manifest;
    manifest["config"] = experiment_config_to_json(config);
    manifest["config_hash"] = experiment_config_hash(config);
    manifest["tables"] = files;
    std::ofstream out(dir / "run_manifest.json");
    out << manifest.dump(2) << "\n";
    return result;
}

// ---------------------------------------------------------------------------
// Permutation independence test

struct PermTestOptions {
    StatisticKind kind = StatisticKind::Rn;
    WeightKernel kernel_x = gaussian_kernel();
    WeightKernel kernel_y = gaussian_kernel();
    double alpha_exponent = 1.0;
    std::size_t l_n = 0;
    unsigned workers = 1;
    std::size_t cache_limit = 110; // largest n for the pairwise exp cache
};

struct PermTestResult {
    double p_value = 1.0;
    double t_obs = 0.0;
    std::size_t permutations = 0;
};

namespace detail {

inline std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
        if (j > i) j = i;
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

/// Cached exp(<A_p, w B_q>) over unordered pairs; usable when the matrix
/// fits in memory (~n <= 100 at 8 bytes per entry).
struct PairExpCache {
    std::size_t n = 0;
    std::size_t pair_count = 0;
    std::vector<double> e; // pair_count x pair_count
    double term2 = 0.0;    // 1/n^4 quartic term, permutation invariant

    std::size_t pidx(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return i * n - i * (i - 1) / 2 + (j - i);
    }

    double at(std::size_t pa, std::size_t pb) const {
        return e[pa * pair_count + pb];
    }

    /// T_n(X, Y_perm) for the pairing i -> perm[i].
    double vstat(const std::vector<std::size_t>& perm) const {
        const double nd = static_cast<double>(n);
        double t1 = 0.0, t3 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pi = perm[i];
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t pa = pidx(i, j);
                t1 += at(pa, pidx(pi, perm[j]));
                const double* row = e.data() + pa * pair_count;
                for (std::size_t l = 0; l < n; ++l)
                    t3 += row[pidx(pi, perm[l])];
            }
        }
        return t1 / (nd * nd) + term2 - 2.0 * t3 / (nd * nd * nd);
    }
};

inline PairExpCache build_pair_exp_cache(const KernelField& a, const KernelField& b) {
    PairExpCache cache;
    cache.n = a.n;
    cache.pair_count = a.n * (a.n + 1) / 2;
    const FlatPairs fa = flatten_pairs(a, false);
    const FlatPairs fwb = flatten_pairs(b, true);
    cache.e.resize(cache.pair_count * cache.pair_count);
    double quartic = 0.0;
    for (std::size_t p = 0; p < cache.pair_count; ++p) {
        const double* pa = fa.data.data() + p * fa.g;
        double row_acc = 0.0;
        for (std::size_t q = 0; q < cache.pair_count; ++q) {
            const double v = std::exp(dot(pa, fwb.data.data() + q * fwb.g, fa.g));
            cache.e[p * cache.pair_count + q] = v;
            row_acc += fwb.mult[q] * v;
        }
        quartic += fa.mult[p] * row_acc;
    }
    const double nd = static_cast<double>(a.n);
    cache.term2 = quartic / (nd * nd * nd * nd);
    return cache;
}

inline double szekely_perm_stat(const std::vector<double>& dx,
                                const std::vector<double>& dy, std::size_t n,
                                const std::vector<std::size_t>& perm) {
    const double nd = static_cast<double>(n);
    double t1 = 0.0, sx = 0.0, sy = 0.0, t3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pi = perm[i];
        double rx = 0.0, ry = 0.0, t1i = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            rx += dx[i * n + j];
            ry += dy[pi * n + perm[j]];
            t1i += dx[i * n + j] * dy[pi * n + perm[j]];
        }
        t1 += t1i;
        sx += rx;
        sy += ry;
        t3 += rx * ry;
    }
    return t1 / (nd * nd) + (sx / (nd * nd)) * (sy / (nd * nd)) -
           2.0 * t3 / (nd * nd * nd);
}

} // namespace detail

/// Permutation independence test: p = (1 + #{b : T_b >= T_obs}) / (B + 1),
/// where T_b recomputes the statistic after permuting the Y-side pairing
/// with stream (seed, b).
inline PermTestResult permutation_test(const PairedSample& sample,
                                       const PermTestOptions& options,
                                       std::size_t B, std::uint64_t seed) {
    if (B < 1)
        throw std::invalid_argument("permutation_test: B must be >= 1");
    const std::size_t n = sample.size();
    if (n < 2)
        throw std::invalid_argument("permutation_test: need n >= 2");

    std::vector<std::size_t> identity(n);
    for (std::size_t i = 0; i < n; ++i) identity[i] = i;

    std::function<double(const std::vector<std::size_t>&)> statistic;

    // Kept alive by the closures below.
    std::shared_ptr<detail::PairExpCache> cache;
    std::shared_ptr<std::vector<double>> dx, dy;
    std::shared_ptr<PairedSample> scratch;

    const bool cacheable = n <= options.cache_limit;
    switch (options.kind) {
        case StatisticKind::Rn:
        case StatisticKind::Vstat: {
            const KernelField a = build_kernel_field(sample.x_paths, options.kernel_x);
            const KernelField b = build_kernel_field(sample.y_paths, options.kernel_y);
            double denom = 1.0;
            if (options.kind == StatisticKind::Rn) {
                const double txx = vstat_dcov_fields(a, a, options.workers);
                const double tyy = vstat_dcov_fields(b, b, options.workers);
                if (!(txx > 1e-12) || !(tyy > 1e-12))
                    throw degenerate_sample_error("permutation_test: degenerate sample");
                denom = std::sqrt(txx * tyy);
            }
            if (cacheable) {
                cache = std::make_shared<detail::PairExpCache>(
                    detail::build_pair_exp_cache(a, b));
                statistic = [cache, denom](const std::vector<std::size_t>& perm) {
                    return cache->vstat(perm) / denom;
                };
            } else {
                scratch = std::make_shared<PairedSample>(sample);
                auto kx = options.kernel_x;
                auto ky = options.kernel_y;
                auto workers = options.workers;
                const PairedSample& base = sample;
                statistic = [scratch, &base, kx, ky, workers,
                             denom](const std::vector<std::size_t>& perm) {
                    for (std::size_t i = 0; i < perm.size(); ++i)
                        scratch->y_paths[i] = base.y_paths[perm[i]];
                    return vstat_dcov(*scratch, kx, ky, workers) / denom;
                };
            }
            break;
        }
        case StatisticKind::RnSz: {
            const VectorSample vs = paths_to_vectors(sample);
            dx = std::make_shared<std::vector<double>>(
                detail::distance_matrix(vs.x_vectors));
            dy = std::make_shared<std::vector<double>>(
                detail::distance_matrix(vs.y_vectors));
            const double txx = detail::szekely_from_matrices(*dx, *dx, n);
            const double tyy = detail::szekely_from_matrices(*dy, *dy, n);
            if (!(txx > 0.0) || !(tyy > 0.0))
                throw degenerate_sample_error("permutation_test: degenerate sample");
            const double denom = std::sqrt(txx * tyy);
            statistic = [dx, dy, n, denom](const std::vector<std::size_t>& perm) {
                return detail::szekely_perm_stat(*dx, *dy, n, perm) / denom;
            };
            break;
        }
        case StatisticKind::Alpha: {
            scratch = std::make_shared<PairedSample>(sample);
            const PairedSample& base = sample;
            const std::size_t l_n = options.l_n > 0 ? options.l_n : default_l_n(n);
            const double alpha = options.alpha_exponent;
            statistic = [scratch, &base, alpha, l_n,
                         seed](const std::vector<std::size_t>& perm) {
                for (std::size_t i = 0; i < perm.size(); ++i)
                    scratch->y_paths[i] = base.y_paths[perm[i]];
                // The same Poisson grids are reused for every permutation.
                return poisson_alpha_dcov(*scratch, alpha, l_n,
                                          mix_stream_id(seed, 0xa1f4ULL))
                    .value;
            };
            break;
        }
    }

    const double t_obs = statistic(identity);
    std::size_t count = 0;
    for (std::size_t b = 1; b <= B; ++b) {
        RngStream rng = rng_stream(seed, b);
        const auto perm = detail::random_permutation(n, rng);
        if (statistic(perm) >= t_obs) ++count;
    }

    PermTestResult result;
    result.t_obs = t_obs;
    result.permutations = B;
    result.p_value = static_cast<double>(1 + count) / static_cast<double>(B + 1);
    return result;
}

} // namespace procdcov
