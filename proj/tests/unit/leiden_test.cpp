#include <algorithm>
#include <gtest/gtest.h>

#include <random>
#include <set>

#include <stlabel/leiden.hpp>

#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace stlabel;

namespace {

NeighborGraph make_graph(int64_t n, std::vector<std::pair<int64_t, int64_t>> pairs) {
    NeighborGraph g;
    g.n_nodes = n;
    std::sort(pairs.begin(), pairs.end());
    for (auto [u, v] : pairs) {
        g.edges.push_back(Edge{u, v, 1.0});
    }
    g.validate();
    return g;
}

std::vector<std::pair<int64_t, int64_t>> clique_edges(int64_t lo, int64_t hi) {
    std::vector<std::pair<int64_t, int64_t>> e;
    for (int64_t u = lo; u < hi; ++u) {
        for (int64_t v = u + 1; v < hi; ++v) {
            e.push_back({u, v});
        }
    }
    return e;
}

NeighborGraph two_cliques() {
    auto edges = clique_edges(0, 4);
    auto more = clique_edges(4, 8);
    edges.insert(edges.end(), more.begin(), more.end());
    return make_graph(8, std::move(edges));
}

}  // namespace

TEST(LeidenQuality, SingleCommunityTriangleIsZero) {
    // for any graph placed in one community, sum_ij k_i k_j = (2m)^2, so
    // at resolution 1 the quality is exactly 1 - 1 = 0
    auto g = make_graph(3, {{0, 1}, {0, 2}, {1, 2}});
    std::vector<int64_t> one_cluster = {0, 0, 0};
    EXPECT_DOUBLE_EQ(quality(g, one_cluster, 1.0), 0.0);
    EXPECT_NEAR(testsupport::naive_quality(g, one_cluster, 1.0), 0.0, 1e-12);
}

TEST(LeidenQuality, MatchesPairwiseOracle) {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 30; ++trial) {
        int64_t n = 3 + static_cast<int64_t>(rng() % 8);
        std::set<std::pair<int64_t, int64_t>> chosen;
        int64_t want = std::min(2 + static_cast<int64_t>(rng() % (n * 2)), n * (n - 1) / 2);
        while (static_cast<int64_t>(chosen.size()) < want) {
            int64_t u = static_cast<int64_t>(rng() % n);
            int64_t v = static_cast<int64_t>(rng() % n);
            if (u == v) {
                continue;
            }
            chosen.insert({std::min(u, v), std::max(u, v)});
        }
        auto g = make_graph(n, {chosen.begin(), chosen.end()});
        std::vector<int64_t> labels(n);
        for (auto& l : labels) {
            l = static_cast<int64_t>(rng() % 3);
        }
        for (double gamma : {0.5, 1.0, 4.0}) {
            EXPECT_NEAR(quality(g, labels, gamma),
                        testsupport::naive_quality(g, labels, gamma), 1e-12);
        }
    }
}

TEST(LeidenQuality, EdgelessGraphIsZero) {
    NeighborGraph g;
    g.n_nodes = 5;
    std::vector<int64_t> labels = {0, 1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quality(g, labels, 4.0), 0.0);
}

TEST(Leiden, TwoCliquesSeparate) {
    auto g = two_cliques();
    auto result = leiden(g, 1.0, 0);
    EXPECT_EQ(result.n_clusters, 2);
    // labels renumbered by first occurrence: node 0's cluster is 0
    EXPECT_EQ(result.labels[0], 0);
    EXPECT_EQ(result.labels[4], 1);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(result.labels[i], 0);
        EXPECT_EQ(result.labels[4 + i], 1);
    }
    EXPECT_GT(result.quality, 0.0);
    EXPECT_EQ(result.objective, "rb_potts_modularity");
}

TEST(Leiden, CompleteGraphStaysTogetherAtLowResolution) {
    auto g = make_graph(6, clique_edges(0, 6));
    auto result = leiden(g, 0.5, 0);
    EXPECT_EQ(result.n_clusters, 1);
    for (auto l : result.labels) {
        EXPECT_EQ(l, 0);
    }
}

TEST(Leiden, HighResolutionFragmentsCompleteGraph) {
    // at very high resolution each node prefers isolation
    auto g = make_graph(6, clique_edges(0, 6));
    auto low = leiden(g, 0.5, 0);
    auto high = leiden(g, 50.0, 0);
    EXPECT_GT(high.n_clusters, low.n_clusters);
}

TEST(Leiden, MatchesExhaustiveOptimumOnSmallGraphs) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        int64_t n = 4 + static_cast<int64_t>(rng() % 4);  // 4..7 nodes
        std::set<std::pair<int64_t, int64_t>> chosen;
        for (int64_t u = 0; u < n; ++u) {
            for (int64_t v = u + 1; v < n; ++v) {
                if (rng() % 100 < 45) {
                    chosen.insert({u, v});
                }
            }
        }
        if (chosen.empty()) {
            chosen.insert({0, 1});
        }
        auto g = make_graph(n, {chosen.begin(), chosen.end()});
        for (double gamma : {1.0, 4.0}) {
            auto result = leiden(g, gamma, 0);
            double best = testsupport::exhaustive_best_quality(g, gamma);
            EXPECT_NEAR(result.quality, best, 1e-9)
                << "trial " << trial << " gamma " << gamma << " n " << n;
        }
    }
}

TEST(Leiden, DeterministicForFixedSeed) {
    std::mt19937_64 rng(77);
    std::set<std::pair<int64_t, int64_t>> chosen;
    const int64_t n = 40;
    while (chosen.size() < 160) {
        int64_t u = static_cast<int64_t>(rng() % n);
        int64_t v = static_cast<int64_t>(rng() % n);
        if (u != v) {
            chosen.insert({std::min(u, v), std::max(u, v)});
        }
    }
    auto g = make_graph(n, {chosen.begin(), chosen.end()});
    auto a = leiden(g, 4.0, 123);
    auto b = leiden(g, 4.0, 123);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.n_clusters, b.n_clusters);
    EXPECT_DOUBLE_EQ(a.quality, b.quality);
}

TEST(Leiden, LabelsAreDenseAndFirstOccurrenceOrdered) {
    auto g = two_cliques();
    auto result = leiden(g, 1.0, 9);
    std::vector<int64_t> seen;
    for (auto l : result.labels) {
        ASSERT_GE(l, 0);
        ASSERT_LT(l, result.n_clusters);
        if (std::find(seen.begin(), seen.end(), l) == seen.end()) {
            seen.push_back(l);
        }
    }
    // first occurrences must appear in increasing order 0, 1, ...
    for (size_t i = 0; i < seen.size(); ++i) {
        EXPECT_EQ(seen[i], static_cast<int64_t>(i));
    }
    EXPECT_EQ(static_cast<int64_t>(seen.size()), result.n_clusters);
}

TEST(Leiden, PartitionIsSingleMoveOptimal) {
    // no single node can move to a neighboring community (or isolate)
    // with a positive quality gain
    std::mt19937_64 rng(31);
    std::set<std::pair<int64_t, int64_t>> chosen;
    const int64_t n = 60;
    while (chosen.size() < 240) {
        int64_t u = static_cast<int64_t>(rng() % n);
        int64_t v = static_cast<int64_t>(rng() % n);
        if (u != v) {
            chosen.insert({std::min(u, v), std::max(u, v)});
        }
    }
    auto g = make_graph(n, {chosen.begin(), chosen.end()});
    const double gamma = 4.0;
    auto result = leiden(g, gamma, 5);
    double base = quality(g, result.labels, gamma);
    for (int64_t node = 0; node < n; ++node) {
        std::set<int64_t> targets;
        for (const auto& e : g.edges) {
            if (e.u == node) {
                targets.insert(result.labels[e.v]);
            }
            if (e.v == node) {
                targets.insert(result.labels[e.u]);
            }
        }
        targets.insert(result.n_clusters);  // fresh singleton community
        for (auto target : targets) {
            if (target == result.labels[node]) {
                continue;
            }
            auto moved = result.labels;
            moved[static_cast<size_t>(node)] = target;
            EXPECT_LE(quality(g, moved, gamma), base + 1e-9)
                << "node " << node << " -> community " << target;
        }
    }
}

TEST(Leiden, AutomorphicCliquesGetSymmetricTreatment) {
    // both 4-cliques are interchangeable; sizes must match
    auto g = two_cliques();
    for (uint64_t seed : {0ull, 1ull, 42ull}) {
        auto result = leiden(g, 1.0, seed);
        ASSERT_EQ(result.n_clusters, 2);
        int64_t size0 = std::count(result.labels.begin(), result.labels.end(), 0);
        EXPECT_EQ(size0, 4);
    }
}

TEST(Leiden, WriteAssignmentFormat) {
    testsupport::TempDir tmp;
    auto g = make_graph(2, {{0, 1}});
    auto result = leiden(g, 1.0, 0);
    auto path = tmp.sub("clusters.tsv");
    write_cluster_assignment(result, {"cellA", "cellB"}, path);
    auto text = read_text_file(path);
    EXPECT_EQ(text, "cellA\t0\ncellB\t0\n");
    EXPECT_THROW(write_cluster_assignment(result, {"only_one"}, path), ValidationError);
}
