#include "homnet/graph.hpp"

#include <algorithm>
#include <cmath>

#include "homnet/errors.hpp"

namespace homnet {

SocialGraph SocialGraph::from_edges(int64_t n_nodes, std::span<const std::pair<int64_t, int64_t>> edges) {
  SocialGraph g;
  g.n_nodes_ = n_nodes;
  g.edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a == b) throw DataError("self-loop in edge list: " + std::to_string(a));
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes)
      throw DataError("edge endpoint out of range: (" + std::to_string(a) + "," + std::to_string(b) + ")");
    g.edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  if (std::adjacent_find(g.edges_.begin(), g.edges_.end()) != g.edges_.end())
    throw DataError("duplicate edge in edge list");

  std::vector<int64_t> deg(size_t(n_nodes), 0);
  for (auto [a, b] : g.edges_) {
    ++deg[size_t(a)];
    ++deg[size_t(b)];
  }
  g.offsets_.assign(size_t(n_nodes) + 1, 0);
  for (int64_t v = 0; v < n_nodes; ++v) g.offsets_[size_t(v) + 1] = g.offsets_[size_t(v)] + deg[size_t(v)];
  g.adj_.resize(size_t(g.offsets_.back()));
  std::vector<int64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [a, b] : g.edges_) {
    g.adj_[size_t(cursor[size_t(a)]++)] = b;
    g.adj_[size_t(cursor[size_t(b)]++)] = a;
  }
  for (int64_t v = 0; v < n_nodes; ++v) {
    auto begin = g.adj_.begin() + g.offsets_[size_t(v)];
    auto end = g.adj_.begin() + g.offsets_[size_t(v) + 1];
    std::sort(begin, end);
  }
  return g;
}

bool SocialGraph::has_edge(int64_t u, int64_t v) const {
  auto nu = neighbors(u);
  return std::binary_search(nu.begin(), nu.end(), v);
}

double SocialGraph::density() const {
  if (n_nodes_ < 2) throw InfeasibleError("density undefined for n < 2");
  return 2.0 * double(m_edges()) / (double(n_nodes_) * double(n_nodes_ - 1));
}

std::optional<double> numeric_assortativity(const SocialGraph& g, std::span<const double> values) {
  if (g.m_edges() < 1) throw InfeasibleError("assortativity requires at least one edge");
  if (int64_t(values.size()) != g.n_nodes()) throw DataError("value vector size mismatch");

  // Two-pass Pearson over stub pairs. Both orientations of an edge appear,
  // so the x and y marginals coincide: degree-weighted node values.
  const double n_pairs = 2.0 * double(g.m_edges());
  double mean = 0.0;
  for (int64_t v = 0; v < g.n_nodes(); ++v) mean += double(g.degree(v)) * values[size_t(v)];
  mean /= n_pairs;

  double var = 0.0;
  for (int64_t v = 0; v < g.n_nodes(); ++v) {
    const double c = values[size_t(v)] - mean;
    var += double(g.degree(v)) * c * c;
  }
  var /= n_pairs;

  double cov = 0.0;
  for (auto [a, b] : g.edges()) {
    // (a,b) and (b,a) contribute the same product.
    cov += 2.0 * (values[size_t(a)] - mean) * (values[size_t(b)] - mean);
  }
  cov /= n_pairs;

  if (var <= 0.0) return std::nullopt;
  return cov / var;
}

namespace {

/// Applies fn to each element of the sorted-range intersection.
template <typename Fn>
void for_common(std::span<const int64_t> a, std::span<const int64_t> b, Fn&& fn) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      fn(a[i]);
      ++i;
      ++j;
    }
  }
}

}  // namespace

int64_t common_neighbors(const SocialGraph& g, int64_t u, int64_t v) {
  int64_t count = 0;
  for_common(g.neighbors(u), g.neighbors(v), [&](int64_t) { ++count; });
  return count;
}

double jaccard(const SocialGraph& g, int64_t u, int64_t v) {
  const int64_t cn = common_neighbors(g, u, v);
  const int64_t uni = g.degree(u) + g.degree(v) - cn;
  return uni == 0 ? 0.0 : double(cn) / double(uni);
}

double adamic_adar(const SocialGraph& g, int64_t u, int64_t v) {
  double sum = 0.0;
  for_common(g.neighbors(u), g.neighbors(v), [&](int64_t w) {
    const int64_t d = g.degree(w);
    if (d > 1) sum += 1.0 / std::log(double(d));
  });
  return sum;
}

}  // namespace homnet
