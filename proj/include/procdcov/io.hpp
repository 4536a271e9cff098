#pragma once

// Persistence: a JSON manifest plus one CSV matrix per process
// (rows = grid points, columns = replicates, header "x,rep1,...,repn",
// 17 significant digits so round-trips are bit-identical), and the
// one-row-per-estimate report CSV.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaussian_sim.hpp"
#include "grid.hpp"

namespace procdcov {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline void write_process_csv(const std::string& path,
                              const Grid& grid,
                              const std::vector<SampledPath>& paths) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << "x";
    for (std::size_t i = 0; i < paths.size(); ++i) out << ",rep" << (i + 1);
    out << "\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out << format_double(grid.points[g]);
        for (const auto& p : paths) out << "," << format_double(p.values[g]);
        out << "\n";
    }
    if (!out)
        throw std::runtime_error("write failure: " + path);
}

inline std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                         std::size_t& rows) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty CSV: " + path);
    std::size_t cols = 1;
    for (char c : line)
        if (c == ',') ++cols;
    std::vector<std::vector<double>> columns(cols);
    rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= cols)
                throw std::runtime_error("ragged CSV row in " + path);
            columns[c++].push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (c != cols)
            throw std::runtime_error("ragged CSV row in " + path);
        ++rows;
    }
    return columns;
}

} // namespace detail

inline nlohmann::json model_to_json(const ProcessModel& model) {
    nlohmann::json j;
    switch (model.kind) {
        case ModelKind::BrownianPair: j["kind"] = "bm"; break;
        case ModelKind::FractionalBrownianPair: j["kind"] = "fbm"; break;
        case ModelKind::PiecewiseIidNormalPair: j["kind"] = "piecewise"; break;
    }
    j["rho"] = model.rho;
    if (model.kind == ModelKind::FractionalBrownianPair) j["hurst"] = model.hurst;
    if (model.kind == ModelKind::PiecewiseIidNormalPair) j["cells"] = model.cells;
    return j;
}

inline ProcessModel model_from_json(const nlohmann::json& j) {
    ProcessModel model;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bm") model.kind = ModelKind::BrownianPair;
    else if (kind == "fbm") model.kind = ModelKind::FractionalBrownianPair;
    else if (kind == "piecewise") model.kind = ModelKind::PiecewiseIidNormalPair;
    else throw std::invalid_argument("unknown model kind: " + kind);
    model.rho = j.value("rho", 0.0);
    model.hurst = j.value("hurst", 0.5);
    model.cells = j.value("cells", std::size_t{50});
    model.validate();
    return model;
}

/// Writes <stem>.json, <stem>_x.csv and <stem>_y.csv.
inline void save_paired_sample(const std::string& stem, const PairedSample& sample,
                               const nlohmann::json& metadata = {}) {
    sample.validate();
    const std::filesystem::path stem_path(stem);
    if (stem_path.has_parent_path())
        std::filesystem::create_directories(stem_path.parent_path());

    const std::string x_csv = stem + "_x.csv";
    const std::string y_csv = stem + "_y.csv";
    detail::write_process_csv(x_csv, *sample.grid, sample.x_paths);
    detail::write_process_csv(y_csv, *sample.grid, sample.y_paths);

    nlohmann::json manifest;
    manifest["n"] = sample.size();
    manifest["grid"] = {{"points", sample.grid->points},
                        {"weights", sample.grid->weights}};
    manifest["x_csv"] = std::filesystem::path(x_csv).filename().string();
    manifest["y_csv"] = std::filesystem::path(y_csv).filename().string();
    if (!metadata.is_null() && !metadata.empty()) manifest["meta"] = metadata;

    std::ofstream out(stem + ".json");
    if (!out)
        throw std::runtime_error("cannot open for writing: " + stem + ".json");
    out << manifest.dump(2) << "\n";
}

inline PairedSample load_paired_sample(const std::string& stem) {
    std::ifstream in(stem + ".json");
    if (!in)
        throw std::runtime_error("cannot open manifest: " + stem + ".json");
    nlohmann::json manifest;
    in >> manifest;

    auto grid = std::make_shared<Grid>();
    grid->points = manifest.at("grid").at("points").get<std::vector<double>>();
    grid->weights = manifest.at("grid").at("weights").get<std::vector<double>>();
    grid->validate();

    const std::filesystem::path dir = std::filesystem::path(stem).parent_path();
    auto resolve = [&](const std::string& name) {
        return (dir / name).string();
    };

    auto load_side = [&](const std::string& csv) {
        std::size_t rows = 0;
        auto cols = detail::read_csv_columns(resolve(csv), rows);
        if (rows != grid->size())
            throw std::runtime_error("CSV row count does not match grid: " + csv);
        std::vector<SampledPath> paths(cols.size() - 1);
        for (std::size_t i = 1; i < cols.size(); ++i) {
            paths[i - 1].grid = grid;
            paths[i - 1].values = std::move(cols[i]);
        }
        return paths;
    };

    PairedSample sample;
    sample.grid = grid;
    sample.x_paths = load_side(manifest.at("x_csv").get<std::string>());
    sample.y_paths = load_side(manifest.at("y_csv").get<std::string>());
    sample.validate();
    return sample;
}

/// Append one report row; a header is written when the file is created.
inline void append_report_csv(const std::string& path, const EstimateReport& report) {
    report.validate();
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    const bool fresh = !std::filesystem::exists(p);
    std::ofstream out(path, std::ios::app);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    if (fresh)
        out << "statistic_name,value,seed,replication_index,parameters\n";
    out << report.statistic_name << "," << format_double(report.value) << ","
        << report.seed << "," << report.replication_index << ",";
    bool first = true;
    for (const auto& [k, v] : report.parameters) {
        if (!first) out << ";";
        out << k << "=" << v;
        first = false;
    }
    out << "\n";
}

} // namespace procdcov
