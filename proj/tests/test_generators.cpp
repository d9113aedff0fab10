#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "csbmlab/generators.hpp"

using namespace csbmlab;

namespace {

CsbmParams base_params(int n, double lambda, double mu) {
    CsbmParams p;
    p.n = n;
    p.lambda = lambda;
    p.mu = mu;
    return p;
}

}  // namespace

TEST_CASE("lambda_to_probs frozen arithmetic", "[generators]") {
    // (10 +/- 3*sqrt(10))/1000 at 40-digit precision, rounded to double.
    // p_out loses a digit to cancellation, so allow a few ulp there.
    const auto [p_in, p_out] = lambda_to_probs(10.0, 3.0, 1000);
    REQUIRE(p_in == 0.019486832980505138);
    REQUIRE_THAT(p_out, Catch::Matchers::WithinULP(0.000513167019494862, 4));

    const auto [q_in, q_out] = lambda_to_probs(10.0, 0.0, 1000);
    REQUIRE(q_in == q_out);
    REQUIRE(q_in == 0.01);

    REQUIRE_THROWS_AS(lambda_to_probs(10.0, 4.0, 1000), std::invalid_argument);
    REQUIRE_THROWS_AS(lambda_to_probs(10.0, -4.0, 1000), std::invalid_argument);
}

TEST_CASE("params validation", "[generators]") {
    CsbmParams p;
    p.n = 999;  // not divisible by k=2
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = CsbmParams{};
    p.sigma = 0.0;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = CsbmParams{};
    p.k = 3;
    p.n = 900;  // diametric means need k=2
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p.mean_mode = MeanMode::orthogonal;
    REQUIRE_NOTHROW(p.validate());
    p.m_feat = 2;  // orthogonal means need m_feat >= k
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("sbm is deterministic in the seed", "[generators]") {
    const CsbmParams p = base_params(400, 1.5, 0.0);
    RngStream a(11), b(11), c(12);
    const auto [g1, l1] = sample_sbm(p, a);
    const auto [g2, l2] = sample_sbm(p, b);
    const auto [g3, l3] = sample_sbm(p, c);
    REQUIRE(g1.edges() == g2.edges());
    REQUIRE(l1.classes == l2.classes);
    REQUIRE(g1.edges() != g3.edges());
}

TEST_CASE("sbm labels are contiguous balanced blocks", "[generators]") {
    CsbmParams p = base_params(300, 0.0, 0.0);
    p.k = 3;
    p.mean_mode = MeanMode::orthogonal;
    RngStream rng(1);
    const auto [g, l] = sample_sbm(p, rng);
    REQUIRE(l.k == 3);
    for (int i = 0; i < 300; ++i) REQUIRE(l[i] == i / 100);
}

TEST_CASE("sbm homophily tracks lambda", "[generators]") {
    // Expected intra fraction (1 + lambda/sqrt(d))/2; at d=10:
    //   lambda=2  -> 0.8162277660168379
    //   lambda=0  -> 0.5
    //   lambda=-2 -> 0.1837722339831621
    // With ~20000 edges the empirical value sits within ~6 binomial SE of 0.02.
    struct Row {
        double lambda, expect;
    };
    for (const Row r : {Row{2.0, 0.8162277660168379}, Row{0.0, 0.5},
                        Row{-2.0, 0.1837722339831621}}) {
        const CsbmParams p = base_params(4000, r.lambda, 0.0);
        RngStream rng(7);
        const auto [g, l] = sample_sbm(p, rng);
        const GraphStats s = graph_stats(g, l);
        INFO("lambda " << r.lambda);
        REQUIRE(std::abs(s.avg_degree - 10.0) < 0.5);
        REQUIRE(std::abs(s.edge_homophily - r.expect) < 0.02);
    }
}

TEST_CASE("dcsbm with unit weights reproduces the sbm draw for draw", "[generators]") {
    CsbmParams p = base_params(500, 1.0, 0.0);
    RngStream a(3), b(3);
    const auto [g_plain, l_plain] = sample_sbm(p, a);
    p.degree_correction = DegreeWeightSpec::explicit_list(std::vector<double>(500, 1.0));
    const auto [g_dc, l_dc] = sample_dcsbm(p, b);
    REQUIRE(g_plain.edges() == g_dc.edges());
    REQUIRE(l_plain.classes == l_dc.classes);
}

TEST_CASE("dcsbm power-law weights fatten the degree tail", "[generators]") {
    // Binomial(d=10) max degrees sit near 25; hub nodes under the default
    // exponent-2.5 weight law run 5x the average or more in essentially every
    // seed, while min(1, w_i w_j p) capping costs only a little density.
    int hub_seeds = 0;
    double avg_sum = 0.0;
    for (int s = 0; s < 20; ++s) {
        CsbmParams p = base_params(1000, 0.0, 0.0);
        p.degree_correction = DegreeWeightSpec::power_law(2.5);
        RngStream rng(100 + s);
        const auto [g, l] = sample_dcsbm(p, rng);
        const GraphStats st = graph_stats(g, l);
        avg_sum += st.avg_degree;
        hub_seeds += st.max_degree >= 5.0 * st.avg_degree;
    }
    REQUIRE(hub_seeds >= 18);
    REQUIRE(avg_sum / 20 > 8.5);
    REQUIRE(avg_sum / 20 < 10.5);

    CsbmParams p = base_params(1000, 0.0, 0.0);
    RngStream rng(3);
    const auto [g_plain, l_plain] = sample_sbm(p, rng);
    REQUIRE(graph_stats(g_plain, l_plain).max_degree < 40);
}

TEST_CASE("dcsbm normalizes weights within classes", "[generators]") {
    // Per-class mean-1 normalization keeps expected density per block equal to
    // the plain SBM one even with wildly asymmetric raw weights.
    CsbmParams p = base_params(2000, 0.0, 0.0);
    std::vector<double> w(2000, 1.0);
    for (int i = 0; i < 1000; ++i) w[static_cast<std::size_t>(i)] = 5.0;  // class 0 scaled up
    p.degree_correction = DegreeWeightSpec::explicit_list(w);
    RngStream rng(5);
    const auto [g, l] = sample_dcsbm(p, rng);
    REQUIRE(std::abs(graph_stats(g, l).avg_degree - 10.0) < 1.0);
}

TEST_CASE("zipf exponent must exceed one", "[generators]") {
    CsbmParams p = base_params(100, 0.0, 0.0);
    p.degree_correction = DegreeWeightSpec::power_law(1.0);
    RngStream rng(0);
    REQUIRE_THROWS_AS(sample_dcsbm(p, rng), std::invalid_argument);
}

TEST_CASE("diametric feature means sit at +/- mu e0", "[generators]") {
    CsbmParams p = base_params(4000, 0.0, 1.5);
    p.sigma = 0.3;
    RngStream rng(17);
    const Labels l = Labels(std::vector<int>(2000, 0), 2);
    Labels both({}, 2);
    {
        std::vector<int> c(4000);
        for (int i = 0; i < 4000; ++i) c[static_cast<std::size_t>(i)] = i / 2000;
        both = Labels(c, 2);
    }
    const Features x = sample_features(both, p, rng);
    REQUIRE(x.rows() == 4000);
    REQUIRE(x.cols() == 10);

    const Eigen::RowVectorXd mean0 = x.topRows(2000).colwise().mean();
    const Eigen::RowVectorXd mean1 = x.bottomRows(2000).colwise().mean();
    // SE per coordinate = 0.3/sqrt(2000) ~ 0.0067; 0.04 is ~6 sigma.
    REQUIRE(std::abs(mean0(0) - 1.5) < 0.04);
    REQUIRE(std::abs(mean1(0) + 1.5) < 0.04);
    for (int j = 1; j < 10; ++j) {
        REQUIRE(std::abs(mean0(j)) < 0.04);
        REQUIRE(std::abs(mean1(j)) < 0.04);
    }

    // residual noise scale
    const double sd = std::sqrt((x.topRows(2000).col(3).array() -
                                 x.topRows(2000).col(3).mean()).square().mean());
    REQUIRE(std::abs(sd - 0.3) < 0.03);
}

TEST_CASE("orthogonal feature means use one axis per class", "[generators]") {
    CsbmParams p = base_params(3000, 0.0, 2.0);
    p.k = 3;
    p.mean_mode = MeanMode::orthogonal;
    std::vector<int> c(3000);
    for (int i = 0; i < 3000; ++i) c[static_cast<std::size_t>(i)] = i / 1000;
    RngStream rng(23);
    const Features x = sample_features(Labels(c, 3), p, rng);
    for (int cls = 0; cls < 3; ++cls) {
        const Eigen::RowVectorXd m =
            x.middleRows(cls * 1000, 1000).colwise().mean();
        for (int j = 0; j < 10; ++j) {
            const double want = j == cls ? 2.0 : 0.0;
            REQUIRE(std::abs(m(j) - want) < 0.05);
        }
    }
}

TEST_CASE("csbm couples graph and feature streams deterministically", "[generators]") {
    const CsbmParams p = base_params(200, 2.0, 1.0);
    RngStream a(99), b(99);
    const auto [g1, l1, x1] = sample_csbm(p, a);
    const auto [g2, l2, x2] = sample_csbm(p, b);
    REQUIRE(g1.edges() == g2.edges());
    REQUIRE(x1 == x2);
}

TEST_CASE("degenerate hsbm reproduces csbm bit for bit", "[generators]") {
    const CsbmParams p = base_params(400, 1.0, 0.8);
    const auto [p_in, p_out] = lambda_to_probs(p.d, p.lambda, p.n);

    HsbmParams h;
    h.subclusters_per_class = 1;
    h.p_sub = p_in;   // same-subcluster probability collapses to p_in
    h.mu_sub = 0.0;   // no sub-cluster offsets
    RngStream a(31), b(31);
    const HsbmSample s = sample_hsbm(p, h, a);
    const auto [g, l, x] = sample_csbm(p, b);
    REQUIRE(s.graph.edges() == g.edges());
    REQUIRE(s.labels.classes == l.classes);
    REQUIRE(s.features == x);
    for (int i = 0; i < p.n; ++i)
        REQUIRE(s.subclusters[static_cast<std::size_t>(i)] == l[i]);
}

TEST_CASE("hsbm densifies sub-clusters and offsets stay orthogonal to means", "[generators]") {
    CsbmParams p = base_params(1000, 1.0, 1.0);
    HsbmParams h;  // defaults: 5 sub-clusters, p_sub = 2 p_in, mu_sub = mu/4
    RngStream rng(13);
    const HsbmSample s = sample_hsbm(p, h, rng);

    // Edge density inside sub-clusters should clearly exceed the density
    // between different sub-clusters of the same class.
    std::int64_t same_sub = 0, same_class_only = 0;
    for (const auto& [u, v] : s.graph.edges()) {
        if (s.labels[u] != s.labels[v]) continue;
        if (s.subclusters[static_cast<std::size_t>(u)] ==
            s.subclusters[static_cast<std::size_t>(v)])
            ++same_sub;
        else
            ++same_class_only;
    }
    // 100 nodes per sub-cluster: same-sub pairs = 10*C(100,2), same-class
    // cross-sub pairs = 2*C(5,2)*100*100; densities p_sub vs p_in differ 2x.
    const double dens_sub = static_cast<double>(same_sub) / (10.0 * 4950.0);
    const double dens_cross = static_cast<double>(same_class_only) / (20.0 * 10000.0);
    REQUIRE(dens_sub > 1.5 * dens_cross);

    // Sub-cluster offsets live in the complement of the class-mean axis, so
    // per-sub-cluster means keep coordinate 0 at +/- mu while spreading the rest.
    for (int subc = 0; subc < 10; ++subc) {
        Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(p.m_feat);
        int count = 0;
        for (int i = 0; i < p.n; ++i) {
            if (s.subclusters[static_cast<std::size_t>(i)] != subc) continue;
            m += s.features.row(i);
            ++count;
        }
        REQUIRE(count == 100);
        m /= count;
        const double want0 = subc < 5 ? 1.0 : -1.0;
        REQUIRE(std::abs(m(0) - want0) < 0.1);  // 5 sigma at sigma=0.2/sqrt(100)
        // remaining coordinates carry an offset of norm mu/4
        const double rest = std::sqrt(m.tail(p.m_feat - 1).squaredNorm());
        REQUIRE(std::abs(rest - 0.25) < 0.1);
    }
}

TEST_CASE("enn graph contains exactly the threshold pairs", "[generators]") {
    RngStream rng(41);
    const EnnSample s = sample_enn_sbm(300, 0.12, 0.06, rng);
    REQUIRE(s.graph.num_nodes() == 300);
    REQUIRE(s.positions.rows() == 300);

    int class0 = 0;
    for (int i = 0; i < 300; ++i) class0 += s.labels[i] == 0;
    REQUIRE(class0 == 150);

    std::set<Edge> expect;
    for (int i = 0; i < 300; ++i) {
        for (int j = i + 1; j < 300; ++j) {
            const double dist = (s.positions.row(i) - s.positions.row(j)).norm();
            const double eps = s.labels[i] == s.labels[j] ? 0.12 : 0.06;
            if (dist < eps) expect.insert({i, j});
        }
    }
    const std::set<Edge> got(s.graph.edges().begin(), s.graph.edges().end());
    REQUIRE(got == expect);
}

TEST_CASE("triadic closure adds exactly the requested wedge fraction", "[generators]") {
    CsbmParams p = base_params(600, 1.5, 0.0);
    RngStream rng(8);
    const auto [g, l] = sample_sbm(p, rng);

    // Independent wedge census: unordered non-adjacent pairs with a common
    // neighbor.
    std::set<Edge> wedges;
    for (int v = 0; v < g.num_nodes(); ++v) {
        const auto nb = g.neighbors(v);
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                const int a = nb[i], b = nb[j];
                if (!g.has_edge(a, b)) wedges.insert({std::min(a, b), std::max(a, b)});
            }
    }

    const double fraction = 0.3;
    RngStream closure_rng(80);
    const Graph closed = apply_triadic_closure(g, fraction, closure_rng);

    const std::set<Edge> before(g.edges().begin(), g.edges().end());
    const std::set<Edge> after(closed.edges().begin(), closed.edges().end());
    std::vector<Edge> added;
    for (const Edge& e : after)
        if (!before.count(e)) added.push_back(e);

    REQUIRE(std::includes(after.begin(), after.end(), before.begin(), before.end()));
    REQUIRE(added.size() ==
            static_cast<std::size_t>(fraction * static_cast<double>(wedges.size())));
    for (const Edge& e : added) REQUIRE(wedges.count(e) == 1);
    REQUIRE(triangle_count(closed) > triangle_count(g));
}

TEST_CASE("triadic closure validates the fraction", "[generators]") {
    const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}});
    RngStream rng(0);
    REQUIRE_THROWS_AS(apply_triadic_closure(g, -0.1, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_triadic_closure(g, 1.1, rng), std::invalid_argument);
}

TEST_CASE("shuffle_nodes relabels without changing the structure", "[generators]") {
    CsbmParams p = base_params(500, 2.0, 1.0);
    RngStream rng(55);
    const auto [g, l, x] = sample_csbm(p, rng);
    RngStream shuffle_rng(56);
    const auto [g2, l2, x2] = shuffle_nodes(g, l, x, shuffle_rng);

    REQUIRE(g2.num_edges() == g.num_edges());
    REQUIRE(triangle_count(g2) == triangle_count(g));

    auto deg_label = [](const Graph& gg, const Labels& ll) {
        std::vector<std::pair<int, int>> v;
        for (int i = 0; i < gg.num_nodes(); ++i) v.push_back({gg.degree(i), ll[i]});
        std::sort(v.begin(), v.end());
        return v;
    };
    REQUIRE(deg_label(g2, l2) == deg_label(g, l));

    REQUIRE(graph_stats(g2, l2).edge_homophily == graph_stats(g, l).edge_homophily);

    // feature rows travel with their nodes
    REQUIRE(x2.has_value());
    std::vector<std::vector<double>> rows_a, rows_b;
    for (int i = 0; i < 500; ++i) {
        rows_a.push_back({x(i, 0), x(i, 1), static_cast<double>(l[i])});
        rows_b.push_back({(*x2)(i, 0), (*x2)(i, 1), static_cast<double>(l2[i])});
    }
    std::sort(rows_a.begin(), rows_a.end());
    std::sort(rows_b.begin(), rows_b.end());
    REQUIRE(rows_a == rows_b);

    // and the permutation is genuinely non-trivial for this seed
    REQUIRE(l2.classes != l.classes);
}
