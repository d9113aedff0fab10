#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "csbmlab/dataset_io.hpp"
#include "csbmlab/graph.hpp"
#include "csbmlab/rng.hpp"
#include "testutil.hpp"

using namespace csbmlab;

TEST_CASE("splitmix64 finalizer matches the published sequence", "[rng]") {
    // Reference outputs of splitmix64 seeded with 0; mix(k * gamma) is the
    // (k+1)-th output of that generator, gamma = 0x9e3779b97f4a7c15.
    REQUIRE(RngStream::mix(0) == 0xe220a8397b1dcdafULL);
    REQUIRE(RngStream::mix(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
    REQUIRE(RngStream::mix(0x3c6ef372fe94f82aULL) == 0x06c45d188009454fULL);
}

TEST_CASE("equal seeds replay identical sequences", "[rng]") {
    RngStream a(987654321), b(987654321);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform01() == b.uniform01());
    for (int i = 0; i < 100; ++i) REQUIRE(a.normal() == b.normal());
}

TEST_CASE("child derivation is pure and collision-averse", "[rng]") {
    RngStream root(5);
    const std::uint64_t before = root.child(3).seed();
    root.next_u64();
    root.normal();
    REQUIRE(root.child(3).seed() == before);  // children ignore parent draws

    REQUIRE(root.child(0).seed() != root.child(1).seed());
    REQUIRE(root.child(0).child(1).seed() != root.child(1).child(0).seed());
    REQUIRE(root.child(7).seed() != RngStream(7).seed());
}

TEST_CASE("bernoulli consumes exactly one uniform draw", "[rng]") {
    RngStream a(77), b(77);
    a.bernoulli(0.0);
    a.bernoulli(1.0);
    a.bernoulli(0.5);
    b.uniform01();
    b.uniform01();
    b.uniform01();
    REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform01 is in range with sane moments", "[rng]") {
    RngStream rng(2024);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE(std::abs(sum / n - 0.5) < 0.01);  // 5 sigma at n=20000
}

TEST_CASE("uniform_below covers all residues within bounds", "[rng]") {
    RngStream rng(9);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 2000; ++i) {
        const auto x = rng.uniform_below(7);
        REQUIRE(x < 7);
        ++hits[static_cast<std::size_t>(x)];
    }
    for (int h : hits) REQUIRE(h > 0);
}

TEST_CASE("normal has standard moments", "[rng]") {
    RngStream rng(31337);
    double sum = 0.0, sumsq = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.02);
    REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("edge lists canonicalize to one representation", "[graph]") {
    const Graph a = Graph::from_edges(5, {{3, 1}, {0, 2}, {2, 0}, {1, 3}, {4, 0}});
    const Graph b = Graph::from_edges(5, {{0, 4}, {1, 3}, {0, 2}});
    REQUIRE(a.edges() == b.edges());
    REQUIRE(a.num_edges() == 3);
    for (int v = 0; v < 5; ++v) {
        const auto nb = a.neighbors(v);
        REQUIRE(std::is_sorted(nb.begin(), nb.end()));
    }
}

TEST_CASE("invalid edges are rejected", "[graph]") {
    REQUIRE_THROWS_AS(Graph::from_edges(3, {{1, 1}}), std::invalid_argument);
    REQUIRE_THROWS_AS(Graph::from_edges(3, {{0, 3}}), std::invalid_argument);
    REQUIRE_THROWS_AS(Graph::from_edges(3, {{-1, 2}}), std::invalid_argument);
}

TEST_CASE("adjacency queries on a hand graph", "[graph]") {
    // 0-1, 0-2, 1-2, 2-3 (triangle plus a tail), node 4 isolated
    const Graph g = Graph::from_edges(5, {{0, 1}, {0, 2}, {1, 2}, {2, 3}});
    REQUIRE(g.degree(0) == 2);
    REQUIRE(g.degree(2) == 3);
    REQUIRE(g.degree(4) == 0);
    REQUIRE(g.has_edge(1, 0));
    REQUIRE(g.has_edge(0, 1));
    REQUIRE_FALSE(g.has_edge(0, 3));
    REQUIRE_FALSE(g.has_edge(4, 4));
    REQUIRE(degree_sequence(g) == std::vector<int>{2, 2, 3, 1, 0});
}

TEST_CASE("triangle counts on known graphs", "[graph]") {
    const Graph k4 = Graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    REQUIRE(triangle_count(k4) == 4);

    const Graph path = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    REQUIRE(triangle_count(path) == 0);

    std::vector<Edge> k5;
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) k5.push_back({i, j});
    REQUIRE(triangle_count(Graph::from_edges(5, k5)) == 10);

    // bowtie: two triangles sharing node 2
    const Graph bow = Graph::from_edges(5, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {2, 4}, {3, 4}});
    REQUIRE(triangle_count(bow) == 2);
}

TEST_CASE("block counts and stats on a labeled hand graph", "[graph]") {
    const Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    const Labels l({0, 0, 1, 1}, 2);
    const BlockCounts c = block_edge_counts(g, l);
    REQUIRE(c(0, 0) == 1);  // 0-1
    REQUIRE(c(1, 1) == 1);  // 2-3
    REQUIRE(c(0, 1) == 2);  // 1-2, 0-3
    REQUIRE(c(1, 0) == 2);

    const GraphStats s = graph_stats(g, l);
    REQUIRE(s.avg_degree == 2.0);
    REQUIRE(s.max_degree == 2);
    REQUIRE(s.edge_homophily == 0.5);
}

TEST_CASE("labels validate class range", "[graph]") {
    REQUIRE_THROWS_AS(Labels({0, 2}, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(Labels({0, -1}, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(Labels({}, 0), std::invalid_argument);
}

TEST_CASE("dataset round trip preserves everything", "[io]") {
    testutil::TempDir tmp;
    Dataset ds;
    ds.graph = Graph::from_edges(4, {{0, 1}, {1, 2}, {0, 3}});
    ds.labels = Labels({0, 1, 1, 0}, 2);
    Features x(4, 3);
    x << 0.125, -1.5, 3.0000000000000004,
         1e-300, 2e17, -0.1,
         0.1, 0.2, 0.3,
         -7.25, 0.0, 5.5;
    ds.features = x;
    ds.meta["model"] = "hand";
    ds.meta["lambda"] = 1.25;
    save_dataset(tmp.path, ds);

    const Dataset back = load_dataset(tmp.path);
    REQUIRE(back.graph.edges() == ds.graph.edges());
    REQUIRE(back.labels.classes == ds.labels.classes);
    REQUIRE(back.labels.k == 2);
    REQUIRE(back.features.has_value());
    REQUIRE(back.features->rows() == 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) REQUIRE((*back.features)(i, j) == x(i, j));
    REQUIRE(back.meta.at("model") == "hand");
    REQUIRE(back.meta.at("lambda") == 1.25);
}

TEST_CASE("dataset round trip without features", "[io]") {
    testutil::TempDir tmp;
    Dataset ds;
    ds.graph = Graph::from_edges(3, {{0, 1}});
    ds.labels = Labels({0, 1, 2}, 3);
    save_dataset(tmp.path, ds);
    REQUIRE_FALSE(std::filesystem::exists(tmp / "features.csv"));

    const Dataset back = load_dataset(tmp.path);
    REQUIRE_FALSE(back.features.has_value());
    REQUIRE(back.labels.k == 3);
    REQUIRE(back.graph.num_edges() == 1);
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

void write_minimal(const testutil::TempDir& tmp) {
    write_file(tmp / "edges.csv", "src,dst\n0,1\n");
    write_file(tmp / "labels.csv", "node_id,class\n0,0\n1,1\n");
    write_file(tmp / "meta.json", "{\"n\": 2, \"k\": 2}\n");
}

}  // namespace

TEST_CASE("loader rejects malformed inputs with file and line", "[io]") {
    SECTION("bad edge header") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "edges.csv", "source,target\n0,1\n");
        REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                            Catch::Matchers::ContainsSubstring("edges.csv:1"));
    }
    SECTION("non-canonical edge order") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "edges.csv", "src,dst\n1,0\n");
        REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                            Catch::Matchers::ContainsSubstring("edges.csv:2"));
    }
    SECTION("endpoint out of range") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "edges.csv", "src,dst\n0,5\n");
        REQUIRE_THROWS(load_dataset(tmp.path));
    }
    SECTION("node without a label") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "labels.csv", "node_id,class\n0,0\n");
        REQUIRE_THROWS(load_dataset(tmp.path));
    }
    SECTION("meta missing n") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "meta.json", "{\"k\": 2}\n");
        REQUIRE_THROWS(load_dataset(tmp.path));
    }
    SECTION("feature row with wrong arity") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "features.csv", "node_id,f0,f1\n0,1.0\n1,1.0,2.0\n");
        REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                            Catch::Matchers::ContainsSubstring("features.csv:2"));
    }
    SECTION("non-numeric feature") {
        testutil::TempDir tmp;
        write_minimal(tmp);
        write_file(tmp / "features.csv", "node_id,f0\n0,abc\n1,2.0\n");
        REQUIRE_THROWS(load_dataset(tmp.path));
    }
}
