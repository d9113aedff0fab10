#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csbmlab/graph.hpp"
#include "csbmlab/rng.hpp"

namespace csbmlab {

namespace detail {

/// Lloyd's algorithm with k-means++ seeding. Deterministic given the stream:
/// ties break toward the lowest index, empty clusters are re-seeded with the
/// point farthest from its assigned center.
inline std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, RngStream& rng,
                               int restarts, int max_iters) {
    const auto n = static_cast<int>(points.rows());
    std::vector<int> best_assign(static_cast<std::size_t>(n), 0);
    double best_inertia = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < restarts; ++restart) {
        Eigen::MatrixXd centers(k, points.cols());
        Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
        centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_below(static_cast<uint64_t>(n))));
        for (int c = 1; c < k; ++c) {
            for (int i = 0; i < n; ++i)
                d2(i) = std::min(d2(i), (points.row(i) - centers.row(c - 1)).squaredNorm());
            const double total = d2.sum();
            int pick = 0;
            if (total > 0.0) {
                const double u = rng.uniform01() * total;
                double cum = 0.0;
                pick = n - 1;
                for (int i = 0; i < n; ++i) {
                    cum += d2(i);
                    if (cum >= u) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<int>(rng.uniform_below(static_cast<uint64_t>(n)));
            }
            centers.row(c) = points.row(pick);
        }

        std::vector<int> assign(static_cast<std::size_t>(n), -1);
        Eigen::VectorXd dist(n);
        for (int iter = 0; iter < max_iters; ++iter) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double best = (points.row(i) - centers.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    const double cand = (points.row(i) - centers.row(c)).squaredNorm();
                    if (cand < best) {
                        best = cand;
                        arg = c;
                    }
                }
                dist(i) = best;
                if (assign[static_cast<std::size_t>(i)] != arg) {
                    assign[static_cast<std::size_t>(i)] = arg;
                    changed = true;
                }
            }
            if (!changed && iter > 0) break;

            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (int i = 0; i < n; ++i) {
                sums.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
                ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
                } else {
                    int far = 0;
                    for (int i = 1; i < n; ++i)
                        if (dist(i) > dist(far)) far = i;
                    centers.row(c) = points.row(far);
                    dist(far) = 0.0;
                }
            }
        }

        double inertia = 0.0;
        for (int i = 0; i < n; ++i)
            inertia += (points.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_assign = assign;
        }
    }
    return best_assign;
}

}  // namespace detail

/// Normalized spectral clustering: bottom-k eigenvectors of the symmetric
/// Laplacian, row-normalized, clustered with seeded k-means. Output labels are
/// arbitrary up to permutation; score with aligned_accuracy.
inline std::vector<int> spectral_cluster(const Graph& g, int k, RngStream& rng) {
    const int n = g.num_nodes();
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (k > n) throw std::invalid_argument("k must not exceed the node count");

    Eigen::VectorXd inv_sqrt(n);
    for (int i = 0; i < n; ++i) {
        const int deg = g.degree(i);
        inv_sqrt(i) = deg > 0 ? 1.0 / std::sqrt(static_cast<double>(deg)) : 0.0;
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : g.neighbors(i)) lap(i, j) -= inv_sqrt(i) * inv_sqrt(j);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");
    Eigen::MatrixXd embed = solver.eigenvectors().leftCols(k);
    for (int i = 0; i < n; ++i) {
        const double norm = embed.row(i).norm();
        if (norm > 0.0) embed.row(i) /= norm;
    }
    return detail::kmeans(embed, k, rng, 10, 300);
}

}  // namespace csbmlab
