#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace homnet {

/// Undirected simple graph over nodes 0..n-1, immutable after construction.
/// Adjacency is CSR with per-node sorted neighbor lists.
class SocialGraph {
 public:
  SocialGraph() = default;

  /// Builds from unordered pairs. Self-loops and duplicate pairs are rejected
  /// (loaders are expected to have cleaned them already).
  static SocialGraph from_edges(int64_t n_nodes, std::span<const std::pair<int64_t, int64_t>> edges);

  int64_t n_nodes() const { return n_nodes_; }
  int64_t m_edges() const { return int64_t(edges_.size()); }

  std::span<const int64_t> neighbors(int64_t v) const {
    return std::span<const int64_t>(adj_.data() + offsets_[size_t(v)],
                                    adj_.data() + offsets_[size_t(v) + 1]);
  }
  int64_t degree(int64_t v) const { return offsets_[size_t(v) + 1] - offsets_[size_t(v)]; }
  bool has_edge(int64_t u, int64_t v) const;

  /// Edges as (min,max) pairs, sorted ascending.
  const std::vector<std::pair<int64_t, int64_t>>& edges() const { return edges_; }

  /// 2m / (n(n-1)). Requires n >= 2.
  double density() const;

 private:
  int64_t n_nodes_ = 0;
  std::vector<int64_t> offsets_{0};
  std::vector<int64_t> adj_;
  std::vector<std::pair<int64_t, int64_t>> edges_;
};

/// Numeric assortativity: Pearson correlation over the multiset of directed
/// edge endpoint pairs (each undirected edge contributes both orientations).
/// Returns nullopt when endpoint values have zero variance.
std::optional<double> numeric_assortativity(const SocialGraph& g, std::span<const double> values);

int64_t common_neighbors(const SocialGraph& g, int64_t u, int64_t v);
double jaccard(const SocialGraph& g, int64_t u, int64_t v);
/// Adamic-Adar; common neighbors of degree <= 1 are skipped (cannot occur in
/// a simple graph, guards corrupted inputs).
double adamic_adar(const SocialGraph& g, int64_t u, int64_t v);

}  // namespace homnet
