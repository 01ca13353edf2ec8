#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "homnet/features.hpp"
#include "homnet/graph.hpp"

namespace homnet {

/// Group membership of one user under the three representative features
/// (global mainstreaminess, 6-month novelty, weighted-average diversity).
struct GroupTriple {
  Group m = Group::low;
  Group n = Group::low;
  Group d = Group::low;

  int code() const { return int(m) * 9 + int(n) * 3 + int(d); }
  friend bool operator==(const GroupTriple&, const GroupTriple&) = default;
};

/// Pulls the M_G / N_6m / D_wavg group columns out of a feature table.
std::vector<GroupTriple> representative_triples(const UserFeatureTable& table);

struct RewireReport {
  size_t strata = 0;           // nonempty strata processed
  size_t fallback_strata = 0;  // strata kept verbatim after exhausting retries
  size_t fallback_edges = 0;
  int max_retries = 100;
};

/// Degree- and stratum-preserving null model: stubs are reshuffled within
/// each stratum (unordered pair of endpoint GroupTriples). Every node keeps
/// its exact degree and every stratum its exact edge count. A stratum that
/// cannot be simply rewired within `max_retries` shuffles keeps its original
/// edges (counted in the report).
SocialGraph rewire_preserving(const SocialGraph& g, const std::vector<GroupTriple>& triples,
                              uint64_t seed, RewireReport* report = nullptr,
                              int max_retries = 100);

/// Observed and expected edge counts between feature groups. Expected counts
/// come in two flavors: the reference formulas p^2*d and 2*p*q*d over group
/// node counts, and the exact simple-graph expectations p*(p-1)/2*d and
/// p*q*d. Ratios are undefined (nullopt) where the expectation is zero.
struct OEMatrix {
  std::array<std::array<double, 3>, 3> observed{};
  std::array<std::array<double, 3>, 3> expected_ref{};
  std::array<std::array<double, 3>, 3> expected_exact{};
  std::array<int64_t, 3> group_sizes{};

  std::optional<double> ratio_ref(int a, int b) const;
  std::optional<double> ratio_exact(int a, int b) const;
};

OEMatrix oe_matrix(const SocialGraph& g, const std::vector<Group>& groups);

/// Mean profile dot product over each group-pair's edges, as a ratio to the
/// mean over all edges. Cells without edges are undefined.
struct GroupSimilarity {
  std::array<std::array<double, 3>, 3> mean{};
  std::array<std::array<int64_t, 3>, 3> edges{};
  double mean_all = 0.0;

  std::optional<double> ratio(int a, int b) const;
};

GroupSimilarity group_similarity_matrix(const SocialGraph& g, const Eigen::MatrixXd& w,
                                        const std::vector<Group>& groups);

struct MwuResult {
  double u = 0.0;      // U statistic of the first sample, midrank ties
  double p = 1.0;      // two-sided
  bool exact = false;  // exact enumeration (used when n1 + n2 <= 20)
};

MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<int64_t> counts;
};

Histogram histogram(std::span<const double> values, int bins, double lo, double hi);

/// Per-edge profile similarity of a graph against a null graph over the same
/// nodes, with means, a Mann-Whitney comparison, and shared-range histograms.
struct SimilarityComparison {
  std::vector<double> observed;
  std::vector<double> null_values;
  double mean_observed = 0.0;
  double mean_null = 0.0;
  MwuResult mwu;
  Histogram observed_hist;
  Histogram null_hist;
};

SimilarityComparison edge_similarity_distributions(const SocialGraph& g,
                                                   const SocialGraph& g_null,
                                                   const Eigen::MatrixXd& w, int bins = 50);

}  // namespace homnet
