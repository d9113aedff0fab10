#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "csbmlab/dataset_io.hpp"
#include "csbmlab/graph.hpp"
#include "csbmlab/rng.hpp"

namespace csbmlab {

struct RewireConfig {
    double swaps_per_edge = 10.0;

    void validate() const {
        if (!(swaps_per_edge > 0)) throw std::invalid_argument("swaps_per_edge must be positive");
    }
};

/// MCMC double-edge swaps restricted to class-compatible pairings: both picked
/// edges must span the same class pair, so every accepted swap preserves the
/// degree sequence and the block edge counts exactly. Proposals that would
/// create a self-loop or duplicate edge are rejected and count as attempts.
inline Graph rewire_preserving_blocks(const Graph& g, const Labels& labels,
                                      const RewireConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (labels.size() != g.num_nodes()) throw std::invalid_argument("label count mismatch");
    const auto n = static_cast<int64_t>(g.num_nodes());
    std::vector<Edge> edges = g.edges();
    const auto num_edges = static_cast<uint64_t>(edges.size());
    if (num_edges < 2) return g;

    const auto key = [n](const Edge& e) {
        return static_cast<int64_t>(e.first) * n + e.second;
    };
    std::unordered_set<int64_t> present;
    present.reserve(edges.size() * 2);
    for (const auto& e : edges) present.insert(key(e));

    const auto canonical = [](int a, int b) {
        return a < b ? Edge{a, b} : Edge{b, a};
    };

    const auto attempts =
        static_cast<uint64_t>(std::ceil(cfg.swaps_per_edge * static_cast<double>(num_edges)));
    for (uint64_t attempt = 0; attempt < attempts; ++attempt) {
        const auto i1 = static_cast<std::size_t>(rng.uniform_below(num_edges));
        const auto i2 = static_cast<std::size_t>(rng.uniform_below(num_edges));
        if (i1 == i2) continue;
        const Edge e1 = edges[i1];
        const Edge e2 = edges[i2];
        const int ca1 = std::min(labels[e1.first], labels[e1.second]);
        const int cb1 = std::max(labels[e1.first], labels[e1.second]);
        const int ca2 = std::min(labels[e2.first], labels[e2.second]);
        const int cb2 = std::max(labels[e2.first], labels[e2.second]);
        if (ca1 != ca2 || cb1 != cb2) continue;

        Edge f1, f2;
        if (ca1 == cb1) {
            // Intra-class category: either pairing keeps all endpoints in the
            // class; choose one uniformly for a symmetric proposal.
            if (rng.bernoulli(0.5)) {
                f1 = canonical(e1.first, e2.first);
                f2 = canonical(e1.second, e2.second);
            } else {
                f1 = canonical(e1.first, e2.second);
                f2 = canonical(e1.second, e2.first);
            }
            if (f1.first == f1.second || f2.first == f2.second) continue;
        } else {
            // Cross-class category: exchange the class-cb endpoints so both
            // replacement edges still span (ca, cb).
            const int x1 = labels[e1.first] == ca1 ? e1.first : e1.second;
            const int y1 = labels[e1.first] == ca1 ? e1.second : e1.first;
            const int x2 = labels[e2.first] == ca1 ? e2.first : e2.second;
            const int y2 = labels[e2.first] == ca1 ? e2.second : e2.first;
            f1 = canonical(x1, y2);
            f2 = canonical(x2, y1);
        }
        if (present.count(key(f1)) || present.count(key(f2))) continue;

        present.erase(key(e1));
        present.erase(key(e2));
        present.insert(key(f1));
        present.insert(key(f2));
        edges[i1] = f1;
        edges[i2] = f2;
    }
    return Graph::from_edges(g.num_nodes(), std::move(edges));
}

/// Per-class, per-coordinate Gaussian resampling from the empirical mean and
/// sample standard deviation.
inline Features resample_features_per_class(const Features& x, const Labels& labels,
                                            RngStream& rng) {
    if (labels.size() != static_cast<int>(x.rows()))
        throw std::invalid_argument("label count mismatch");
    const int k = labels.k;
    const auto m = x.cols();
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < labels.size(); ++i) ++counts[static_cast<std::size_t>(labels[i])];
    for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] < 2)
            throw std::invalid_argument("class " + std::to_string(c) +
                                        " has fewer than 2 nodes; sample std undefined");

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(k, m);
    for (int i = 0; i < labels.size(); ++i) mean.row(labels[i]) += x.row(i);
    for (int c = 0; c < k; ++c) mean.row(c) /= counts[static_cast<std::size_t>(c)];
    Eigen::MatrixXd stddev = Eigen::MatrixXd::Zero(k, m);
    for (int i = 0; i < labels.size(); ++i)
        stddev.row(labels[i]) += (x.row(i) - mean.row(labels[i])).array().square().matrix();
    for (int c = 0; c < k; ++c)
        stddev.row(c) = (stddev.row(c) / (counts[static_cast<std::size_t>(c)] - 1.0))
                            .array()
                            .sqrt()
                            .matrix();

    Features out(x.rows(), m);
    for (int i = 0; i < labels.size(); ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            out(i, j) = mean(labels[i], j) + stddev(labels[i], j) * rng.normal();
    return out;
}

enum class NullifyMode { edges, features, both };

inline NullifyMode parse_nullify_mode(const std::string& s) {
    if (s == "edges") return NullifyMode::edges;
    if (s == "features") return NullifyMode::features;
    if (s == "both") return NullifyMode::both;
    throw std::invalid_argument("mode must be one of: edges, features, both");
}

/// Apply the selected structure-erasing transforms to a dataset directory.
/// Untouched component files are copied byte for byte; meta.json gains a
/// provenance record.
inline void nullify_dataset(const std::filesystem::path& dir_in,
                            const std::filesystem::path& dir_out, NullifyMode mode,
                            const RewireConfig& cfg, RngStream& rng) {
    Dataset ds = load_dataset(dir_in);
    const bool do_edges = mode != NullifyMode::features;
    const bool do_features = mode != NullifyMode::edges;
    if (do_features && !ds.features)
        throw std::runtime_error((dir_in / "features.csv").string() +
                                 ": missing, cannot resample features");

    std::filesystem::create_directories(dir_out);
    const auto copy_verbatim = [&](const char* name) {
        std::filesystem::copy_file(dir_in / name, dir_out / name,
                                   std::filesystem::copy_options::overwrite_existing);
    };

    copy_verbatim("labels.csv");
    if (do_edges) {
        RngStream edge_rng = rng.child(0);
        const Graph rewired = rewire_preserving_blocks(ds.graph, ds.labels, cfg, edge_rng);
        detail::write_edges_csv(dir_out / "edges.csv", rewired);
        ds.graph = rewired;
    } else {
        copy_verbatim("edges.csv");
    }
    if (do_features) {
        RngStream feat_rng = rng.child(1);
        const Features resampled = resample_features_per_class(*ds.features, ds.labels, feat_rng);
        detail::write_features_csv(dir_out / "features.csv", resampled);
        ds.features = resampled;
    } else if (std::filesystem::exists(dir_in / "features.csv")) {
        copy_verbatim("features.csv");
    }

    nlohmann::json prov;
    prov["mode"] = mode == NullifyMode::edges ? "edges"
                   : mode == NullifyMode::features ? "features"
                                                   : "both";
    prov["swaps_per_edge"] = cfg.swaps_per_edge;
    prov["source"] = dir_in.string();
    ds.meta["nullified"] = prov;
    detail::write_meta_json(dir_out / "meta.json", ds);
}

}  // namespace csbmlab
