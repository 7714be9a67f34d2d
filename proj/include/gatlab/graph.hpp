#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gatlab {

using Edge = std::pair<int, int>;  // (src, dst): src -> dst

// Immutable directed graph with a compressed in-neighbor index.
// in_neighbors(i) enumerates N_i = { j | (j,i) in E } in ascending order.
class Graph {
public:
    Graph() = default;

    int num_nodes() const { return num_nodes_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }

    std::span<const int> in_neighbors(int node) const {
        return {csr_targets_.data() + csr_offsets_[static_cast<std::size_t>(node)],
                csr_targets_.data() + csr_offsets_[static_cast<std::size_t>(node) + 1]};
    }
    int in_degree(int node) const {
        return csr_offsets_[static_cast<std::size_t>(node) + 1] -
               csr_offsets_[static_cast<std::size_t>(node)];
    }
    const std::vector<int>& csr_offsets() const { return csr_offsets_; }
    const std::vector<int>& csr_targets() const { return csr_targets_; }

private:
    friend Graph build_graph(int num_nodes, const std::vector<Edge>& edges);

    int num_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<int> csr_offsets_;  // size num_nodes+1
    std::vector<int> csr_targets_;  // in-neighbor sources, ascending per node
};

struct NoiseSpec {
    double p = 0.0;  // ratio of |E| to add as sampled non-edges
    std::uint64_t seed = 0;
};

// Validates endpoints, rejects duplicates, builds the CSR in-neighbor index.
Graph build_graph(int num_nodes, const std::vector<Edge>& edges);

// Adds floor(|E|*p) uniformly sampled non-existing edges (no self-loops),
// reproducible from spec.seed. Never removes an edge.
Graph inject_noise(const Graph& g, const NoiseSpec& spec);

// Complete bipartite graph over 2k nodes: queries 0..k-1, keys k..2k-1,
// with both edge directions between every query/key pair.
Graph bipartite_complete(int k);

}  // namespace gatlab
