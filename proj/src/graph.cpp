#include "gatlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "gatlab/error.hpp"
#include "gatlab/rng.hpp"

namespace gatlab {

namespace {

std::uint64_t edge_key(int src, int dst, int num_nodes) {
    return static_cast<std::uint64_t>(src) * static_cast<std::uint64_t>(num_nodes) +
           static_cast<std::uint64_t>(dst);
}

}  // namespace

Graph build_graph(int num_nodes, const std::vector<Edge>& edges) {
    if (num_nodes < 0) {
        throw ContractError("build_graph: negative node count");
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges.size() * 2);
    for (const auto& [src, dst] : edges) {
        if (src < 0 || src >= num_nodes || dst < 0 || dst >= num_nodes) {
            throw DimensionError("build_graph: edge (" + std::to_string(src) + "," +
                                 std::to_string(dst) + ") out of range for " +
                                 std::to_string(num_nodes) + " nodes");
        }
        if (!seen.insert(edge_key(src, dst, num_nodes)).second) {
            throw DataError("build_graph: duplicate edge (" + std::to_string(src) + "," +
                            std::to_string(dst) + ")");
        }
    }

    Graph g;
    g.num_nodes_ = num_nodes;
    g.edges_ = edges;
    g.csr_offsets_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
    for (const auto& [src, dst] : edges) {
        ++g.csr_offsets_[static_cast<std::size_t>(dst) + 1];
    }
    for (int i = 0; i < num_nodes; ++i) {
        g.csr_offsets_[static_cast<std::size_t>(i) + 1] +=
            g.csr_offsets_[static_cast<std::size_t>(i)];
    }
    g.csr_targets_.resize(edges.size());
    std::vector<int> cursor(g.csr_offsets_.begin(), g.csr_offsets_.end() - 1);
    for (const auto& [src, dst] : edges) {
        g.csr_targets_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(dst)]++)] =
            src;
    }
    for (int i = 0; i < num_nodes; ++i) {
        auto begin = g.csr_targets_.begin() + g.csr_offsets_[static_cast<std::size_t>(i)];
        auto end = g.csr_targets_.begin() + g.csr_offsets_[static_cast<std::size_t>(i) + 1];
        std::sort(begin, end);
    }
    return g;
}

Graph inject_noise(const Graph& g, const NoiseSpec& spec) {
    if (spec.p < 0.0 || spec.p > 1.0) {
        throw ContractError("inject_noise: p must be in [0,1], got " +
                            std::to_string(spec.p));
    }
    const int n = g.num_nodes();
    const auto num_new =
        static_cast<std::int64_t>(std::floor(static_cast<double>(g.num_edges()) * spec.p));
    if (num_new == 0) return g;

    const std::int64_t capacity = static_cast<std::int64_t>(n) * n - n - g.num_edges();
    if (capacity < num_new) {
        throw CapacityError("inject_noise: need " + std::to_string(num_new) +
                            " non-edges but only " + std::to_string(capacity) +
                            " are available");
    }

    std::unordered_set<std::uint64_t> taken;
    taken.reserve(g.edges().size() * 2 + static_cast<std::size_t>(num_new) * 2);
    for (const auto& [src, dst] : g.edges()) taken.insert(edge_key(src, dst, n));

    Rng rng(spec.seed);
    std::vector<Edge> augmented = g.edges();
    augmented.reserve(augmented.size() + static_cast<std::size_t>(num_new));
    // Rejection sampling; desk-scale densities keep the hit rate high.
    for (std::int64_t added = 0; added < num_new;) {
        const int src = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        const int dst = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        if (src == dst) continue;
        if (!taken.insert(edge_key(src, dst, n)).second) continue;
        augmented.emplace_back(src, dst);
        ++added;
    }
    return build_graph(n, augmented);
}

Graph bipartite_complete(int k) {
    if (k < 1) {
        throw ContractError("bipartite_complete: k must be >= 1, got " + std::to_string(k));
    }
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(k) * static_cast<std::size_t>(k) * 2);
    for (int q = 0; q < k; ++q) {
        for (int key = k; key < 2 * k; ++key) {
            edges.emplace_back(q, key);
            edges.emplace_back(key, q);
        }
    }
    return build_graph(2 * k, edges);
}

}  // namespace gatlab
