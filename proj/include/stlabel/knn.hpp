#ifndef STLABEL_KNN_HPP
#define STLABEL_KNN_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "pca.hpp"
#include "util.hpp"

namespace stlabel {

struct Edge {
    int64_t u = 0;  // u < v
    int64_t v = 0;
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/**
 * Simple undirected weighted graph. Edges are stored once with u < v,
 * sorted by (u, v); no self-loops.
 */
struct NeighborGraph {
    int64_t n_nodes = 0;
    std::vector<Edge> edges;

    void validate() const {
        const Edge* prev = nullptr;
        for (const auto& e : edges) {
            if (e.u < 0 || e.v >= n_nodes || e.u >= e.v) {
                throw ValidationError("graph edge violates 0 <= u < v < n_nodes");
            }
            if (!(e.weight > 0.0)) {
                throw ValidationError("graph edge weight must be positive");
            }
            if (prev && !(prev->u < e.u || (prev->u == e.u && prev->v < e.v))) {
                throw ValidationError("graph edges not strictly sorted");
            }
            prev = &e;
        }
    }
};

/**
 * Exact k-nearest-neighbor graph under Euclidean distance, symmetrized by
 * edge union with unit weights. Distance ties break toward the smaller
 * node index, which makes the result deterministic for duplicate points.
 */
inline NeighborGraph knn_graph(const Embedding& embedding, int64_t k, int threads = 1) {
    const int64_t n = embedding.n_cells;
    if (n < 2) {
        throw ValidationError("knn_graph: need at least 2 cells");
    }
    if (k < 1 || k >= n) {
        throw ValidationError("knn_graph: require 1 <= k < n_cells");
    }

    const auto& coords = embedding.coordinates;
    // Each node's k neighbor pairs land in a dedicated slot, so the result
    // is independent of the thread count.
    std::vector<std::pair<int64_t, int64_t>> pairs(static_cast<size_t>(n) * k);
    parallel_for(static_cast<size_t>(n), threads, [&](size_t begin, size_t end) {
        std::vector<std::pair<double, int64_t>> dist;
        dist.reserve(n - 1);
        for (size_t i = begin; i < end; ++i) {
            dist.clear();
            for (int64_t j = 0; j < n; ++j) {
                if (static_cast<int64_t>(i) == j) {
                    continue;
                }
                double d2 = (coords.row(static_cast<int64_t>(i)) - coords.row(j)).squaredNorm();
                dist.push_back({d2, j});
            }
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            for (int64_t m = 0; m < k; ++m) {
                int64_t j = dist[static_cast<size_t>(m)].second;
                int64_t a = std::min<int64_t>(static_cast<int64_t>(i), j);
                int64_t b = std::max<int64_t>(static_cast<int64_t>(i), j);
                pairs[i * k + m] = {a, b};
            }
        }
    });

    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    NeighborGraph graph;
    graph.n_nodes = n;
    graph.edges.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        graph.edges.push_back(Edge{a, b, 1.0});
    }
    graph.validate();
    return graph;
}

/// Edge list dump, TSV `u<TAB>v<TAB>weight`.
inline void write_edge_list(const NeighborGraph& graph, const std::string& path) {
    std::string body;
    for (const auto& e : graph.edges) {
        body += std::to_string(e.u) + "\t" + std::to_string(e.v) + "\t" + format_double(e.weight) + "\n";
    }
    write_text_file(path, body);
}

inline NeighborGraph read_edge_list(const std::string& path, int64_t n_nodes) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    NeighborGraph graph;
    graph.n_nodes = n_nodes;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split(line, '\t');
        Edge e;
        if (fields.size() != 3 || !parse_int64(fields[0], e.u) || !parse_int64(fields[1], e.v)
            || !parse_double(fields[2], e.weight)) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed edge line");
        }
        graph.edges.push_back(e);
    }
    graph.validate();
    return graph;
}

/// Embedding dump: raw little-endian float64, row-major, with a JSON sidecar
/// `{rows, cols}` written by the caller.
inline void write_embedding_bin(const Embedding& embedding, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    for (int64_t r = 0; r < embedding.coordinates.rows(); ++r) {
        for (int64_t c = 0; c < embedding.coordinates.cols(); ++c) {
            double v = embedding.coordinates(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
    }
    if (!out) {
        throw IoError("write failed for " + path);
    }
}

}

#endif
