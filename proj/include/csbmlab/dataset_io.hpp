#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "csbmlab/graph.hpp"

namespace csbmlab {

/// On-disk dataset: edges.csv + labels.csv + optional features.csv + meta.json.
struct Dataset {
    Graph graph;
    Labels labels;
    std::optional<Features> features;
    nlohmann::json meta;  // carries n/k/m_feat plus free-form provenance
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& file, std::size_t line,
                                    const std::string& what) {
    throw std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

inline std::vector<std::string_view> split_csv(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        parse_fail(file, line, "expected integer, got '" + std::string(tok) + "'");
    return value;
}

inline double parse_real(std::string_view tok, const std::string& file, std::size_t line) {
    // std::from_chars for doubles is available in libstdc++; keep strtod as
    // the tolerant fallback for exotic floats.
    std::string buf(tok);
    char* end = nullptr;
    const double value = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty())
        parse_fail(file, line, "expected real number, got '" + buf + "'");
    return value;
}

inline std::string trim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline std::string fmt_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_edges_csv(const std::filesystem::path& path, const Graph& g) {
    std::ofstream out(path);
    out << "src,dst\n";
    for (const auto& [u, v] : g.edges()) out << u << "," << v << "\n";
}

inline void write_labels_csv(const std::filesystem::path& path, const Labels& labels) {
    std::ofstream out(path);
    out << "node_id,class\n";
    for (int i = 0; i < labels.size(); ++i) out << i << "," << labels[i] << "\n";
}

inline void write_features_csv(const std::filesystem::path& path, const Features& x) {
    std::ofstream out(path);
    out << "node_id";
    for (int j = 0; j < x.cols(); ++j) out << ",f" << j;
    out << "\n";
    for (int i = 0; i < x.rows(); ++i) {
        out << i;
        for (int j = 0; j < x.cols(); ++j) out << "," << fmt_real(x(i, j));
        out << "\n";
    }
}

inline void write_meta_json(const std::filesystem::path& path, const Dataset& ds) {
    nlohmann::json meta = ds.meta;
    meta["n"] = ds.graph.num_nodes();
    meta["k"] = ds.labels.k;
    meta["m_feat"] = ds.features ? static_cast<int>(ds.features->cols()) : 0;
    std::ofstream out(path);
    out << meta.dump(2) << "\n";
}

}  // namespace detail

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    detail::write_edges_csv(dir / "edges.csv", ds.graph);
    detail::write_labels_csv(dir / "labels.csv", ds.labels);
    if (ds.features) detail::write_features_csv(dir / "features.csv", *ds.features);
    detail::write_meta_json(dir / "meta.json", ds);
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;

    nlohmann::json meta;
    {
        std::ifstream in(dir / "meta.json");
        if (!in) throw std::runtime_error((dir / "meta.json").string() + ": cannot open");
        in >> meta;
    }
    if (!meta.contains("n") || !meta.contains("k"))
        throw std::runtime_error((dir / "meta.json").string() + ": missing 'n' or 'k'");
    const int n = meta["n"].get<int>();
    const int k = meta["k"].get<int>();
    ds.meta = meta;

    {
        const std::string file = (dir / "edges.csv").string();
        std::ifstream in(file);
        if (!in) throw std::runtime_error(file + ": cannot open");
        std::string line;
        std::size_t lineno = 1;
        if (!std::getline(in, line) || detail::trim_cr(line) != "src,dst")
            detail::parse_fail(file, lineno, "expected header 'src,dst'");
        std::vector<Edge> edges;
        while (std::getline(in, line)) {
            ++lineno;
            line = detail::trim_cr(line);
            if (line.empty()) continue;
            const auto tok = detail::split_csv(line);
            if (tok.size() != 2) detail::parse_fail(file, lineno, "expected 2 fields");
            const long u = detail::parse_int(tok[0], file, lineno);
            const long v = detail::parse_int(tok[1], file, lineno);
            if (u >= v) detail::parse_fail(file, lineno, "edges must satisfy src < dst");
            if (u < 0 || v >= n) detail::parse_fail(file, lineno, "node id out of range");
            edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
        }
        ds.graph = Graph::from_edges(n, std::move(edges));
    }

    {
        const std::string file = (dir / "labels.csv").string();
        std::ifstream in(file);
        if (!in) throw std::runtime_error(file + ": cannot open");
        std::string line;
        std::size_t lineno = 1;
        if (!std::getline(in, line) || detail::trim_cr(line) != "node_id,class")
            detail::parse_fail(file, lineno, "expected header 'node_id,class'");
        std::vector<int> classes(static_cast<std::size_t>(n), -1);
        while (std::getline(in, line)) {
            ++lineno;
            line = detail::trim_cr(line);
            if (line.empty()) continue;
            const auto tok = detail::split_csv(line);
            if (tok.size() != 2) detail::parse_fail(file, lineno, "expected 2 fields");
            const long id = detail::parse_int(tok[0], file, lineno);
            const long cls = detail::parse_int(tok[1], file, lineno);
            if (id < 0 || id >= n) detail::parse_fail(file, lineno, "node id out of range");
            if (cls < 0 || cls >= k) detail::parse_fail(file, lineno, "class out of range");
            classes[static_cast<std::size_t>(id)] = static_cast<int>(cls);
        }
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] < 0)
                throw std::runtime_error(file + ": node " + std::to_string(i) + " has no label");
        ds.labels = Labels(std::move(classes), k);
    }

    if (std::filesystem::exists(dir / "features.csv")) {
        const std::string file = (dir / "features.csv").string();
        std::ifstream in(file);
        if (!in) throw std::runtime_error(file + ": cannot open");
        std::string line;
        std::size_t lineno = 1;
        if (!std::getline(in, line)) detail::parse_fail(file, lineno, "missing header");
        line = detail::trim_cr(line);
        const auto header = detail::split_csv(line);
        if (header.empty() || header[0] != "node_id")
            detail::parse_fail(file, lineno, "expected header 'node_id,f0,...'");
        const int m = static_cast<int>(header.size()) - 1;
        Features x = Features::Zero(n, m);
        std::vector<bool> seen(static_cast<std::size_t>(n), false);
        while (std::getline(in, line)) {
            ++lineno;
            line = detail::trim_cr(line);
            if (line.empty()) continue;
            const auto tok = detail::split_csv(line);
            if (static_cast<int>(tok.size()) != m + 1)
                detail::parse_fail(file, lineno,
                                   "expected " + std::to_string(m + 1) + " fields");
            const long id = detail::parse_int(tok[0], file, lineno);
            if (id < 0 || id >= n) detail::parse_fail(file, lineno, "node id out of range");
            for (int j = 0; j < m; ++j) {
                const double v = detail::parse_real(tok[static_cast<std::size_t>(j) + 1], file, lineno);
                if (!std::isfinite(v)) detail::parse_fail(file, lineno, "non-finite feature value");
                x(id, j) = v;
            }
            seen[static_cast<std::size_t>(id)] = true;
        }
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (!seen[i])
                throw std::runtime_error(file + ": node " + std::to_string(i) + " has no features");
        ds.features = std::move(x);
    }

    return ds;
}

}  // namespace csbmlab
