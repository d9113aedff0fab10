#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "csbmlab/graph.hpp"
#include "csbmlab/rng.hpp"

namespace csbmlab {

/// Per-node degree-correction weights. Normalized per class to mean 1 so the
/// lambda parameterization keeps its meaning under correction.
struct DegreeWeightSpec {
    enum class Kind { power_law, explicit_weights };

    Kind kind = Kind::power_law;
    double exponent = 2.5;  // power_law: P(w) proportional to w^-exponent
    int w_min = 1;          // power_law: smallest admissible integer weight
    std::vector<double> weights;  // explicit_weights: one entry per node

    static DegreeWeightSpec power_law(double exponent = 2.5, int w_min = 1) {
        DegreeWeightSpec s;
        s.kind = Kind::power_law;
        s.exponent = exponent;
        s.w_min = w_min;
        return s;
    }
    static DegreeWeightSpec explicit_list(std::vector<double> w) {
        DegreeWeightSpec s;
        s.kind = Kind::explicit_weights;
        s.weights = std::move(w);
        return s;
    }
};

enum class MeanMode { orthogonal, diametric };

struct CsbmParams {
    int n = 1000;
    int k = 2;
    double d = 10.0;
    double lambda = 0.0;
    double mu = 0.0;
    int m_feat = 10;
    double sigma = 0.2;
    MeanMode mean_mode = MeanMode::diametric;
    std::optional<DegreeWeightSpec> degree_correction;

    void validate() const {
        if (n <= 0 || k <= 0) throw std::invalid_argument("n and k must be positive");
        if (n % k != 0) throw std::invalid_argument("n must be divisible by k");
        if (d <= 0) throw std::invalid_argument("d must be positive");
        if (std::abs(lambda) > std::sqrt(d))
            throw std::invalid_argument("|lambda| must not exceed sqrt(d)");
        if (mu < 0) throw std::invalid_argument("mu must be non-negative");
        if (sigma <= 0) throw std::invalid_argument("sigma must be positive");
        if (m_feat <= 0) throw std::invalid_argument("m_feat must be positive");
        if (mean_mode == MeanMode::diametric && k != 2)
            throw std::invalid_argument("diametric means require k = 2");
        if (mean_mode == MeanMode::orthogonal && m_feat < k)
            throw std::invalid_argument("orthogonal means require m_feat >= k");
    }
};

inline std::pair<double, double> lambda_to_probs(double d, double lambda, int n) {
    if (d <= 0 || n <= 0) throw std::invalid_argument("d and n must be positive");
    const double sd = std::sqrt(d);
    if (std::abs(lambda) > sd)
        throw std::invalid_argument("|lambda| must not exceed sqrt(d)");
    const double p_in = (d + lambda * sd) / n;
    const double p_out = (d - lambda * sd) / n;
    if (p_in > 1.0 || p_out > 1.0)
        throw std::invalid_argument("edge probability exceeds 1; increase n");
    return {p_in, p_out};
}

namespace detail {

/// Block layout for balanced classes: nodes [c*n/k, (c+1)*n/k) get class c.
inline Labels block_labels(int n, int k) {
    std::vector<int> classes(static_cast<std::size_t>(n));
    const int per = n / k;
    for (int i = 0; i < n; ++i) classes[static_cast<std::size_t>(i)] = i / per;
    return Labels(std::move(classes), k);
}

/// One Bernoulli draw per unordered pair, in fixed (i, j > i) order. Keeping
/// the draw count independent of the probabilities lets degenerate variants
/// of different generators reproduce each other bit for bit.
template <class ProbFn>
Graph sample_pairwise(int n, ProbFn&& prob, RngStream& rng) {
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.bernoulli(prob(i, j))) edges.emplace_back(i, j);
    return Graph::from_edges(n, std::move(edges));
}

/// Zipf sampler, Devroye's rejection method: P(X = x) proportional to x^-a on
/// integers x >= 1, a > 1.
inline long sample_zipf(double a, RngStream& rng) {
    const double am1 = a - 1.0;
    const double b = std::pow(2.0, am1);
    while (true) {
        const double u = rng.uniform01();
        const double v = rng.uniform01();
        const double x = std::floor(std::pow(u, -1.0 / am1));
        if (!(x >= 1.0) || x > 1e15) continue;
        const double t = std::pow(1.0 + 1.0 / x, am1);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<long>(x);
    }
}

inline std::vector<double> materialize_weights(const DegreeWeightSpec& spec,
                                               const Labels& labels, RngStream& rng) {
    const int n = labels.size();
    std::vector<double> w(static_cast<std::size_t>(n));
    if (spec.kind == DegreeWeightSpec::Kind::explicit_weights) {
        if (static_cast<int>(spec.weights.size()) != n)
            throw std::invalid_argument("explicit weight list length must equal n");
        for (double x : spec.weights)
            if (!(x > 0)) throw std::invalid_argument("weights must be positive");
        w = spec.weights;
    } else {
        if (spec.exponent <= 1.0)
            throw std::invalid_argument("power-law exponent must exceed 1");
        if (spec.w_min < 1) throw std::invalid_argument("w_min must be >= 1");
        for (auto& x : w) {
            long z;
            do {
                z = sample_zipf(spec.exponent, rng);
            } while (z < spec.w_min);
            x = static_cast<double>(z);
        }
    }
    // Normalize to mean 1 within each class.
    std::vector<double> sum(static_cast<std::size_t>(labels.k), 0.0);
    std::vector<int> count(static_cast<std::size_t>(labels.k), 0);
    for (int i = 0; i < n; ++i) {
        sum[static_cast<std::size_t>(labels[i])] += w[static_cast<std::size_t>(i)];
        ++count[static_cast<std::size_t>(labels[i])];
    }
    for (int i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        w[static_cast<std::size_t>(i)] /= sum[c] / count[c];
    }
    return w;
}

}  // namespace detail

inline std::pair<Graph, Labels> sample_sbm(const CsbmParams& params, RngStream& rng) {
    params.validate();
    const auto [p_in, p_out] = lambda_to_probs(params.d, params.lambda, params.n);
    Labels labels = detail::block_labels(params.n, params.k);
    Graph g = detail::sample_pairwise(
        params.n,
        [&](int i, int j) { return labels[i] == labels[j] ? p_in : p_out; }, rng);
    return {std::move(g), std::move(labels)};
}

inline std::pair<Graph, Labels> sample_dcsbm(const CsbmParams& params, RngStream& rng) {
    params.validate();
    if (!params.degree_correction)
        throw std::invalid_argument("sample_dcsbm requires degree_correction");
    const auto [p_in, p_out] = lambda_to_probs(params.d, params.lambda, params.n);
    Labels labels = detail::block_labels(params.n, params.k);
    const std::vector<double> w =
        detail::materialize_weights(*params.degree_correction, labels, rng);
    Graph g = detail::sample_pairwise(
        params.n,
        [&](int i, int j) {
            const double p = labels[i] == labels[j] ? p_in : p_out;
            return std::min(1.0, w[static_cast<std::size_t>(i)] *
                                     w[static_cast<std::size_t>(j)] * p);
        },
        rng);
    return {std::move(g), std::move(labels)};
}

/// Class mean directions as rows of a k x m_feat matrix. Orthogonal mode uses
/// the standard basis e_v; diametric mode (k = 2) uses +e_0 and -e_0.
inline Eigen::MatrixXd class_mean_directions(const CsbmParams& params) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(params.k, params.m_feat);
    if (params.mean_mode == MeanMode::orthogonal) {
        for (int v = 0; v < params.k; ++v) m(v, v) = 1.0;
    } else {
        if (params.k != 2) throw std::invalid_argument("diametric means require k = 2");
        m(0, 0) = 1.0;
        m(1, 0) = -1.0;
    }
    return m;
}

inline Features sample_features(const Labels& labels, const CsbmParams& params,
                                RngStream& rng) {
    params.validate();
    if (labels.k != params.k) throw std::invalid_argument("labels.k != params.k");
    const Eigen::MatrixXd means = params.mu * class_mean_directions(params);
    Features x(labels.size(), params.m_feat);
    for (int i = 0; i < labels.size(); ++i)
        for (int j = 0; j < params.m_feat; ++j)
            x(i, j) = means(labels[i], j) + params.sigma * rng.normal();
    return x;
}

/// Edge and feature sampling composed on fixed child streams (edges on
/// child(0), features on child(1)) so either half can be reproduced alone.
inline std::tuple<Graph, Labels, Features> sample_csbm(const CsbmParams& params,
                                                       RngStream& rng) {
    RngStream edge_rng = rng.child(0);
    RngStream feat_rng = rng.child(1);
    auto [g, labels] = params.degree_correction ? sample_dcsbm(params, edge_rng)
                                                : sample_sbm(params, edge_rng);
    Features x = sample_features(labels, params, feat_rng);
    return {std::move(g), std::move(labels), std::move(x)};
}

struct HsbmParams {
    int subclusters_per_class = 5;
    double p_sub = -1.0;   // < 0: default to 2 * p_in
    double mu_sub = -1.0;  // < 0: default to mu / 4
};

struct HsbmSample {
    Graph graph;
    Labels labels;  // top-level classes
    Features features;
    std::vector<int> subclusters;  // global sub-cluster id per node
};

inline HsbmSample sample_hsbm(const CsbmParams& params, const HsbmParams& h,
                              RngStream& rng) {
    params.validate();
    const int s = h.subclusters_per_class;
    if (s < 1) throw std::invalid_argument("subclusters_per_class must be >= 1");
    if (params.n % (params.k * s) != 0)
        throw std::invalid_argument("n must be divisible by k * subclusters_per_class");
    const auto [p_in, p_out] = lambda_to_probs(params.d, params.lambda, params.n);
    const double p_sub = h.p_sub < 0 ? std::min(1.0, 2.0 * p_in) : h.p_sub;
    const double mu_sub = h.mu_sub < 0 ? params.mu / 4.0 : h.mu_sub;
    if (p_sub < p_in || p_sub > 1.0)
        throw std::invalid_argument("p_sub must lie in [p_in, 1]");

    const int per_class = params.n / params.k;
    const int per_sub = per_class / s;
    Labels labels = detail::block_labels(params.n, params.k);
    std::vector<int> sub(static_cast<std::size_t>(params.n));
    for (int i = 0; i < params.n; ++i)
        sub[static_cast<std::size_t>(i)] = labels[i] * s + (i % per_class) / per_sub;

    RngStream edge_rng = rng.child(0);
    RngStream feat_rng = rng.child(1);
    RngStream offset_rng = rng.child(2);

    Graph g = detail::sample_pairwise(
        params.n,
        [&](int i, int j) {
            const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
            if (sub[a] == sub[b]) return p_sub;
            return labels[i] == labels[j] ? p_in : p_out;
        },
        edge_rng);

    Features x = sample_features(labels, params, feat_rng);

    // Sub-cluster offsets: random unit directions in the orthogonal complement
    // of the class means, scaled to norm mu_sub.
    const Eigen::MatrixXd dirs = class_mean_directions(params);
    const int span = params.mean_mode == MeanMode::orthogonal ? params.k : 1;
    if (mu_sub > 0 && params.m_feat <= span)
        throw std::invalid_argument(
            "mu_sub > 0 requires feature dimensions beyond the class means");
    Eigen::MatrixXd offsets(params.k * s, params.m_feat);
    for (int c = 0; c < params.k * s; ++c) {
        Eigen::VectorXd v(params.m_feat);
        double norm = 0.0;
        do {
            for (int j = 0; j < params.m_feat; ++j) v(j) = offset_rng.normal();
            for (int b = 0; b < span; ++b) v(b) = 0.0;  // complement of span(e_0..e_{span-1})
            norm = v.norm();
        } while (mu_sub > 0 && norm < 1e-12);
        if (norm > 0)
            offsets.row(c) = (mu_sub / norm) * v.transpose();
        else
            offsets.row(c).setZero();
    }
    for (int i = 0; i < params.n; ++i)
        x.row(i) += offsets.row(sub[static_cast<std::size_t>(i)]);

    return {std::move(g), std::move(labels), std::move(x), std::move(sub)};
}

struct EnnSample {
    Graph graph;
    Labels labels;
    Eigen::MatrixX2d positions;
};

/// Epsilon-nearest-neighbour SBM: points uniform in the unit square, balanced
/// random class assignment, edges by distance threshold per class pairing.
inline EnnSample sample_enn_sbm(int n, double eps_intra, double eps_inter,
                                RngStream& rng) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("n must be positive and even");
    if (eps_intra < 0 || eps_inter < 0)
        throw std::invalid_argument("thresholds must be non-negative");

    Eigen::MatrixX2d pos(n, 2);
    for (int i = 0; i < n; ++i) {
        pos(i, 0) = rng.uniform01();
        pos(i, 1) = rng.uniform01();
    }

    std::vector<int> classes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) classes[static_cast<std::size_t>(i)] = i < n / 2 ? 0 : 1;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_below(static_cast<uint64_t>(i) + 1));
        std::swap(classes[static_cast<std::size_t>(i)], classes[static_cast<std::size_t>(j)]);
    }
    Labels labels(std::move(classes), 2);

    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dist = (pos.row(i) - pos.row(j)).norm();
            const double eps = labels[i] == labels[j] ? eps_intra : eps_inter;
            if (dist <= eps) edges.emplace_back(i, j);
        }
    return {Graph::from_edges(n, std::move(edges)), std::move(labels), std::move(pos)};
}

/// Close a sampled fraction of the open wedges of g (single pass over the
/// input graph; added edges do not spawn new closure candidates). "Possible
/// triadic closures" are counted as distinct non-adjacent endpoint pairs.
inline Graph apply_triadic_closure(const Graph& g, double fraction, RngStream& rng) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("fraction must lie in [0, 1]");
    std::vector<Edge> candidates;
    for (int v = 0; v < g.num_nodes(); ++v) {
        const auto nb = g.neighbors(v);
        for (std::size_t a = 0; a < nb.size(); ++a)
            for (std::size_t b = a + 1; b < nb.size(); ++b)
                if (!g.has_edge(nb[a], nb[b])) candidates.emplace_back(nb[a], nb[b]);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const auto target =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(candidates.size())));
    for (std::size_t t = 0; t < target; ++t) {
        const std::size_t j = t + static_cast<std::size_t>(rng.uniform_below(
                                      static_cast<uint64_t>(candidates.size() - t)));
        std::swap(candidates[t], candidates[j]);
    }

    std::vector<Edge> edges = g.edges();
    edges.insert(edges.end(), candidates.begin(),
                 candidates.begin() + static_cast<std::ptrdiff_t>(target));
    return Graph::from_edges(g.num_nodes(), std::move(edges));
}

/// Random node relabeling (generators emit block-ordered labels; tests rely on
/// that, CLI users may want shuffled output).
inline std::tuple<Graph, Labels, std::optional<Features>> shuffle_nodes(
    const Graph& g, const Labels& labels, const std::optional<Features>& x,
    RngStream& rng) {
    const int n = g.num_nodes();
    if (labels.size() != n) throw std::invalid_argument("label count != node count");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_below(static_cast<uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(g.num_edges()));
    for (const auto& [u, v] : g.edges())
        edges.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
    std::vector<int> classes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        classes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = labels[i];
    std::optional<Features> xs;
    if (x) {
        Features m(n, x->cols());
        for (int i = 0; i < n; ++i) m.row(perm[static_cast<std::size_t>(i)]) = x->row(i);
        xs = std::move(m);
    }
    return {Graph::from_edges(n, std::move(edges)), Labels(std::move(classes), labels.k),
            std::move(xs)};
}

}  // namespace csbmlab
