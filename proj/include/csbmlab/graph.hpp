#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace csbmlab {

using Edge = std::pair<int, int>;

/// Immutable simple undirected graph.
///
/// Edges are stored once, canonically (u < v, lexicographically sorted),
/// alongside a CSR neighbor index with ascending neighbor lists. Building
/// from any permutation of the same edge set yields an identical object.
class Graph {
public:
    Graph() = default;

    /// Canonicalizes, sorts and deduplicates `edges`. Throws on self-loops
    /// or endpoints outside [0, n).
    static Graph from_edges(int n, std::vector<Edge> edges) {
        if (n < 0) throw std::invalid_argument("graph: negative node count");
        for (auto& [u, v] : edges) {
            if (u == v) throw std::invalid_argument("graph: self-loop rejected");
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw std::invalid_argument("graph: endpoint out of range");
            if (u > v) std::swap(u, v);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        Graph g;
        g.n_ = n;
        g.edges_ = std::move(edges);
        g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (const auto& [u, v] : g.edges_) {
            ++g.offsets_[static_cast<std::size_t>(u) + 1];
            ++g.offsets_[static_cast<std::size_t>(v) + 1];
        }
        for (std::size_t i = 1; i < g.offsets_.size(); ++i) g.offsets_[i] += g.offsets_[i - 1];
        g.neighbors_.resize(g.offsets_.back());
        std::vector<std::int64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
        for (const auto& [u, v] : g.edges_) {
            g.neighbors_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(u)]++)] = v;
            g.neighbors_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = u;
        }
        // Neighbor lists come out sorted because the edge list is sorted on
        // (u, v); the v->u back-entries arrive in ascending u as well.
        return g;
    }

    int num_nodes() const { return n_; }
    std::int64_t num_edges() const { return static_cast<std::int64_t>(edges_.size()); }

    int degree(int v) const {
        return static_cast<int>(offsets_[static_cast<std::size_t>(v) + 1] -
                                offsets_[static_cast<std::size_t>(v)]);
    }

    std::span<const int> neighbors(int v) const {
        return {neighbors_.data() + offsets_[static_cast<std::size_t>(v)],
                static_cast<std::size_t>(degree(v))};
    }

    /// Canonical edge list (u < v, sorted).
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_edge(int u, int v) const {
        if (u == v) return false;
        if (degree(u) > degree(v)) std::swap(u, v);
        auto nb = neighbors(u);
        return std::binary_search(nb.begin(), nb.end(), v);
    }

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::int64_t> offsets_;
    std::vector<int> neighbors_;
};

/// Per-node class assignment over k classes.
struct Labels {
    std::vector<int> classes;
    int k = 1;

    Labels() = default;
    Labels(std::vector<int> c, int num_classes) : classes(std::move(c)), k(num_classes) {
        if (k < 1) throw std::invalid_argument("labels: k must be >= 1");
        for (int x : classes)
            if (x < 0 || x >= k) throw std::invalid_argument("labels: class index out of range");
    }

    int size() const { return static_cast<int>(classes.size()); }
    int operator[](int i) const { return classes[static_cast<std::size_t>(i)]; }
};

/// Node feature matrix, one row per node.
using Features = Eigen::MatrixXd;

/// k x k symmetric tally of edges by endpoint-class pair.
using BlockCounts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

inline std::vector<int> degree_sequence(const Graph& g) {
    std::vector<int> deg(static_cast<std::size_t>(g.num_nodes()));
    for (int v = 0; v < g.num_nodes(); ++v) deg[static_cast<std::size_t>(v)] = g.degree(v);
    return deg;
}

inline BlockCounts block_edge_counts(const Graph& g, const Labels& l) {
    if (l.size() != g.num_nodes())
        throw std::invalid_argument("block_edge_counts: label count does not match node count");
    BlockCounts counts = BlockCounts::Zero(l.k, l.k);
    for (const auto& [u, v] : g.edges()) {
        const int a = l[u], b = l[v];
        counts(a, b) += 1;
        if (a != b) counts(b, a) += 1;
    }
    return counts;
}

struct GraphStats {
    double avg_degree = 0.0;
    int max_degree = 0;
    double edge_homophily = 0.0;  // intra-class fraction; 0 when edgeless
};

inline GraphStats graph_stats(const Graph& g, const Labels& l) {
    if (l.size() != g.num_nodes())
        throw std::invalid_argument("graph_stats: label count does not match node count");
    GraphStats s;
    if (g.num_nodes() > 0)
        s.avg_degree = 2.0 * static_cast<double>(g.num_edges()) / g.num_nodes();
    std::int64_t intra = 0;
    for (const auto& [u, v] : g.edges())
        if (l[u] == l[v]) ++intra;
    for (int v = 0; v < g.num_nodes(); ++v) s.max_degree = std::max(s.max_degree, g.degree(v));
    if (g.num_edges() > 0)
        s.edge_homophily = static_cast<double>(intra) / static_cast<double>(g.num_edges());
    return s;
}

/// Exact triangle count via sorted-adjacency intersection.
inline std::int64_t triangle_count(const Graph& g) {
    std::int64_t total = 0;
    for (const auto& [u, v] : g.edges()) {
        auto a = g.neighbors(u);
        auto b = g.neighbors(v);
        std::size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] == b[j]) {
                if (a[i] > v) ++total;  // count each triangle at its smallest edge
                ++i;
                ++j;
            } else if (a[i] < b[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }
    return total;
}

}  // namespace csbmlab
