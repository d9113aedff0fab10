#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "csbmlab/generators.hpp"
#include "csbmlab/graph.hpp"
#include "csbmlab/rng.hpp"

namespace csbmlab {

/// Spin encoding of binary classes: class 0 -> +1, class 1 -> -1.
inline std::vector<int> spins(const Labels& labels) {
    if (labels.k != 2) throw std::invalid_argument("spins need k = 2");
    std::vector<int> s(static_cast<std::size_t>(labels.size()));
    for (int i = 0; i < labels.size(); ++i)
        s[static_cast<std::size_t>(i)] = labels[i] == 0 ? +1 : -1;
    return s;
}

inline double accuracy_pm(const std::vector<int>& pred, const Labels& labels) {
    const std::vector<int> truth = spins(labels);
    if (pred.size() != truth.size()) throw std::invalid_argument("length mismatch");
    if (pred.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// Mean agreement, optionally maximized over class permutations (exhaustive,
/// so k is capped at 8).
inline double aligned_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                               int k, bool permutation_invariant) {
    if (pred.size() != truth.size()) throw std::invalid_argument("length mismatch");
    if (k < 1) throw std::invalid_argument("k must be positive");
    if (pred.empty()) return 0.0;
    if (!permutation_invariant) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == truth[i]) ++hits;
        return static_cast<double>(hits) / static_cast<double>(pred.size());
    }
    if (k > 8) throw std::invalid_argument("permutation alignment supports k <= 8");
    std::vector<std::vector<long>> conf(static_cast<std::size_t>(k),
                                        std::vector<long>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= k || truth[i] < 0 || truth[i] >= k)
            throw std::invalid_argument("label out of range");
        ++conf[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(truth[i])];
    }
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    long best = 0;
    do {
        long hits = 0;
        for (int a = 0; a < k; ++a)
            hits += conf[static_cast<std::size_t>(a)][static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(pred.size());
}

namespace detail {

/// Row i of the result is the sum of x over the neighbourhood of i, including
/// i itself when self_loops is set.
inline Eigen::MatrixXd aggregate_sum(const Graph& g, const Eigen::MatrixXd& x,
                                     bool self_loops) {
    if (x.rows() != g.num_nodes()) throw std::invalid_argument("row count != node count");
    Eigen::MatrixXd out =
        self_loops ? Eigen::MatrixXd(x) : Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (int v = 0; v < g.num_nodes(); ++v)
        for (int j : g.neighbors(v)) out.row(v) += x.row(j);
    return out;
}

inline std::vector<int> sign_predict(const Eigen::VectorXd& scores) {
    std::vector<int> pred(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        pred[static_cast<std::size_t>(i)] = scores(i) >= 0.0 ? +1 : -1;
    return pred;
}

}  // namespace detail

/// sign(A X W) with no self-loops; sign(0) resolves to +1.
inline std::vector<int> one_layer_predict(const Graph& g, const Features& x,
                                          const Eigen::VectorXd& w) {
    if (x.cols() != w.size()) throw std::invalid_argument("feature/weight dim mismatch");
    if (w.norm() == 0.0) throw std::invalid_argument("W must be nonzero");
    const Eigen::VectorXd scores = detail::aggregate_sum(g, x * w, false);
    return detail::sign_predict(scores);
}

/// Discriminative weight direction for the one-layer model, fitted as the
/// difference of class means of the aggregated features. Falls back to e_0
/// when the difference degenerates to zero (e.g. an empty graph).
inline Eigen::VectorXd fit_one_layer_weights(const Graph& g, const Features& x,
                                             const Labels& labels) {
    if (labels.k != 2) throw std::invalid_argument("one-layer fit needs k = 2");
    if (labels.size() != g.num_nodes()) throw std::invalid_argument("label count mismatch");
    const Eigen::MatrixXd agg = detail::aggregate_sum(g, x, false);
    Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(x.cols());
    Eigen::VectorXd mean1 = Eigen::VectorXd::Zero(x.cols());
    int c0 = 0, c1 = 0;
    for (int i = 0; i < g.num_nodes(); ++i) {
        if (labels[i] == 0) {
            mean0 += agg.row(i).transpose();
            ++c0;
        } else {
            mean1 += agg.row(i).transpose();
            ++c1;
        }
    }
    if (c0 > 0) mean0 /= c0;
    if (c1 > 0) mean1 /= c1;
    Eigen::VectorXd w = mean0 - mean1;
    if (w.norm() == 0.0) {
        w = Eigen::VectorXd::Zero(x.cols());
        w(0) = 1.0;
    }
    return w;
}

/// The optimal two-layer linear model: a two-hop sum of projections onto the
/// mean direction, with self-loops on both hops.
inline std::vector<int> two_layer_linear_predict(const Graph& g, const Features& x,
                                                 const Eigen::VectorXd& m, int sign_K) {
    if (x.cols() != m.size()) throw std::invalid_argument("feature/direction dim mismatch");
    if (m.norm() == 0.0) throw std::invalid_argument("m must be nonzero");
    if (sign_K != 1 && sign_K != -1) throw std::invalid_argument("sign_K must be +1 or -1");
    const Eigen::VectorXd t = x * m;
    const Eigen::VectorXd u = detail::aggregate_sum(g, t, true);
    const Eigen::VectorXd s = detail::aggregate_sum(g, u, true);
    return detail::sign_predict(static_cast<double>(sign_K) * s);
}

/// Generic two-layer graph convolution y(x) = sum_{j in N(x)} relu(sum_{k in
/// N(j)} X(k) W) . c used by the linearization experiments.
struct TwoLayerGcn {
    Eigen::MatrixXd W;  // m_feat x p
    Eigen::VectorXd c;  // p
    bool with_self_loops = true;
};

inline Eigen::VectorXd gcn_forward(const Graph& g, const Features& x,
                                   const TwoLayerGcn& model) {
    if (x.cols() != model.W.rows()) throw std::invalid_argument("feature/W dim mismatch");
    if (model.W.cols() != model.c.size()) throw std::invalid_argument("W/c dim mismatch");
    const Eigen::MatrixXd h = detail::aggregate_sum(g, x * model.W, model.with_self_loops);
    return detail::aggregate_sum(g, h.cwiseMax(0.0), model.with_self_loops) * model.c;
}

/// L[y]: the model with its nonlinearity removed, halved.
inline Eigen::VectorXd linearize(const Graph& g, const Features& x,
                                 const TwoLayerGcn& model) {
    if (x.cols() != model.W.rows()) throw std::invalid_argument("feature/W dim mismatch");
    if (model.W.cols() != model.c.size()) throw std::invalid_argument("W/c dim mismatch");
    const Eigen::MatrixXd h = detail::aggregate_sum(g, x * model.W, model.with_self_loops);
    return 0.5 * (detail::aggregate_sum(g, h, model.with_self_loops) * model.c);
}

/// P_S[L[y]]: the linearization with every feature row replaced by its
/// projection onto the mean direction m (normalized internally).
inline Eigen::VectorXd project_linear(const Graph& g, const Features& x,
                                      const TwoLayerGcn& model, const Eigen::VectorXd& m) {
    if (x.cols() != m.size()) throw std::invalid_argument("feature/direction dim mismatch");
    const double norm = m.norm();
    if (norm == 0.0) throw std::invalid_argument("m must be nonzero");
    const Eigen::VectorXd unit = m / norm;
    const Features projected = (x * unit) * unit.transpose();
    return linearize(g, projected, model);
}

/// Reflection of the feature rows across span(m): R_S(X) = 2 (X m) m^T - X.
inline Features reflect_features(const Features& x, const Eigen::VectorXd& m) {
    if (x.cols() != m.size()) throw std::invalid_argument("feature/direction dim mismatch");
    const double norm = m.norm();
    if (norm == 0.0) throw std::invalid_argument("m must be nonzero");
    const Eigen::VectorXd unit = m / norm;
    return 2.0 * (x * unit) * unit.transpose() - x;
}

/// Mean logistic cost E[log(1 + exp(-v . score))], overflow-safe.
inline double logistic_cost(const Eigen::VectorXd& scores, const std::vector<int>& labels_pm) {
    if (static_cast<std::size_t>(scores.size()) != labels_pm.size())
        throw std::invalid_argument("length mismatch");
    if (labels_pm.empty()) throw std::invalid_argument("empty inputs");
    double total = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        const double z = -static_cast<double>(labels_pm[static_cast<std::size_t>(i)]) * scores(i);
        total += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    return total / static_cast<double>(scores.size());
}

/// Monte Carlo estimates of the three costs in the linearization chain, with
/// node-level standard errors. The paired-difference errors are the ones to
/// use for inequality tests; per-cost errors are reported for context.
struct CostTrial {
    double c_y, c_ly, c_psly;
    double se_y, se_ly, se_psly;
    double se_diff_ly_y;     // SE of mean(cost_Ly - cost_y)
    double se_diff_psly_ly;  // SE of mean(cost_PSLy - cost_Ly)
    long nodes_sampled;
};

namespace detail {

inline std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace detail

inline CostTrial cost_inequality_trial(const CsbmParams& params, const TwoLayerGcn& model,
                                       long n_nodes_sampled, RngStream& rng) {
    params.validate();
    if (params.k != 2 || params.mean_mode != MeanMode::diametric)
        throw std::invalid_argument("cost trials need the class-symmetric setup: "
                                    "k = 2 with diametric means");
    if (n_nodes_sampled < 2) throw std::invalid_argument("need at least 2 sampled nodes");

    Eigen::VectorXd m = Eigen::VectorXd::Zero(params.m_feat);
    m(0) = 1.0;

    std::vector<double> cy, cly, cps;
    for (uint64_t graph_idx = 0; static_cast<long>(cy.size()) < n_nodes_sampled; ++graph_idx) {
        RngStream gr = rng.child(graph_idx);
        auto [g, labels, x] = sample_csbm(params, gr);
        const std::vector<int> v = spins(labels);
        const Eigen::VectorXd y = gcn_forward(g, x, model);
        const Eigen::VectorXd ly = linearize(g, x, model);
        const Eigen::VectorXd ps = project_linear(g, x, model, m);
        for (int i = 0; i < g.num_nodes(); ++i) {
            const auto cost = [&](double s) {
                const double z = -static_cast<double>(v[static_cast<std::size_t>(i)]) * s;
                return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            };
            cy.push_back(cost(y(i)));
            cly.push_back(cost(ly(i)));
            cps.push_back(cost(ps(i)));
        }
    }

    CostTrial out;
    std::tie(out.c_y, out.se_y) = detail::mean_and_se(cy);
    std::tie(out.c_ly, out.se_ly) = detail::mean_and_se(cly);
    std::tie(out.c_psly, out.se_psly) = detail::mean_and_se(cps);
    std::vector<double> diff1(cy.size()), diff2(cy.size());
    for (std::size_t i = 0; i < cy.size(); ++i) {
        diff1[i] = cly[i] - cy[i];
        diff2[i] = cps[i] - cly[i];
    }
    out.se_diff_ly_y = detail::mean_and_se(diff1).second;
    out.se_diff_psly_ly = detail::mean_and_se(diff2).second;
    out.nodes_sampled = static_cast<long>(cy.size());
    return out;
}

}  // namespace csbmlab
