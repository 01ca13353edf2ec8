#include "homnet/homophily.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "homnet/errors.hpp"
#include "homnet/profiles.hpp"
#include "homnet/rng.hpp"

namespace homnet {

std::vector<GroupTriple> representative_triples(const UserFeatureTable& table) {
  const int fm = feature_index("M_G");
  const int fn = feature_index("N_6m");
  const int fd = feature_index("D_wavg");
  std::vector<GroupTriple> out(size_t(table.n_users));
  for (int64_t u = 0; u < table.n_users; ++u)
    out[size_t(u)] = GroupTriple{table.group(fm, u), table.group(fn, u), table.group(fd, u)};
  return out;
}

namespace {

using Edge = std::pair<int64_t, int64_t>;

Edge ordered(int64_t a, int64_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

bool simple(std::vector<Edge>& candidate) {
  for (const auto& [a, b] : candidate)
    if (a == b) return false;
  std::sort(candidate.begin(), candidate.end());
  return std::adjacent_find(candidate.begin(), candidate.end()) == candidate.end();
}

}  // namespace

SocialGraph rewire_preserving(const SocialGraph& g, const std::vector<GroupTriple>& triples,
                              uint64_t seed, RewireReport* report, int max_retries) {
  if (int64_t(triples.size()) != g.n_nodes())
    throw DataError("rewire_preserving: triples must cover all nodes");
  RewireReport local;
  RewireReport& rep = report ? *report : local;
  rep = RewireReport{};
  rep.max_retries = max_retries;

  // An edge's stratum is the unordered pair of its endpoint triples, so
  // rewired edges can never collide with edges from another stratum.
  std::map<std::pair<int, int>, std::vector<Edge>> strata;
  for (const auto& [u, v] : g.edges()) {
    const int cu = triples[size_t(u)].code(), cv = triples[size_t(v)].code();
    strata[{std::min(cu, cv), std::max(cu, cv)}].push_back({u, v});
  }

  Rng rng(seed);
  std::vector<Edge> result;
  result.reserve(size_t(g.m_edges()));
  std::vector<Edge> candidate;
  for (auto& [key, edges] : strata) {
    ++rep.strata;
    bool done = false;
    if (key.first == key.second) {
      std::vector<int64_t> stubs;
      stubs.reserve(edges.size() * 2);
      for (const auto& [u, v] : edges) {
        stubs.push_back(u);
        stubs.push_back(v);
      }
      for (int attempt = 0; attempt <= max_retries && !done; ++attempt) {
        rng.shuffle(stubs);
        candidate.clear();
        for (size_t i = 0; i + 1 < stubs.size(); i += 2)
          candidate.push_back(ordered(stubs[i], stubs[i + 1]));
        done = simple(candidate);
      }
    } else {
      std::vector<int64_t> left, right;
      left.reserve(edges.size());
      right.reserve(edges.size());
      for (const auto& [u, v] : edges) {
        if (triples[size_t(u)].code() == key.first) {
          left.push_back(u);
          right.push_back(v);
        } else {
          left.push_back(v);
          right.push_back(u);
        }
      }
      for (int attempt = 0; attempt <= max_retries && !done; ++attempt) {
        rng.shuffle(right);
        candidate.clear();
        for (size_t i = 0; i < left.size(); ++i) candidate.push_back(ordered(left[i], right[i]));
        done = simple(candidate);
      }
    }
    if (done) {
      result.insert(result.end(), candidate.begin(), candidate.end());
    } else {
      ++rep.fallback_strata;
      rep.fallback_edges += edges.size();
      result.insert(result.end(), edges.begin(), edges.end());
    }
  }
  return SocialGraph::from_edges(g.n_nodes(), result);
}

std::optional<double> OEMatrix::ratio_ref(int a, int b) const {
  const double e = expected_ref[size_t(a)][size_t(b)];
  if (e <= 0.0) return std::nullopt;
  return observed[size_t(a)][size_t(b)] / e;
}

std::optional<double> OEMatrix::ratio_exact(int a, int b) const {
  const double e = expected_exact[size_t(a)][size_t(b)];
  if (e <= 0.0) return std::nullopt;
  return observed[size_t(a)][size_t(b)] / e;
}

OEMatrix oe_matrix(const SocialGraph& g, const std::vector<Group>& groups) {
  if (int64_t(groups.size()) != g.n_nodes())
    throw DataError("oe_matrix: groups must cover all nodes");
  OEMatrix m;
  for (Group gr : groups) ++m.group_sizes[size_t(gr)];
  const double d = g.density();

  for (const auto& [u, v] : g.edges()) {
    const int a = int(groups[size_t(u)]), b = int(groups[size_t(v)]);
    m.observed[size_t(a)][size_t(b)] += 1.0;
    if (a != b) m.observed[size_t(b)][size_t(a)] += 1.0;
  }
  for (int a = 0; a < 3; ++a) {
    const double p = double(m.group_sizes[size_t(a)]);
    m.expected_ref[size_t(a)][size_t(a)] = p * p * d;
    m.expected_exact[size_t(a)][size_t(a)] = p * (p - 1.0) / 2.0 * d;
    for (int b = a + 1; b < 3; ++b) {
      const double q = double(m.group_sizes[size_t(b)]);
      m.expected_ref[size_t(a)][size_t(b)] = m.expected_ref[size_t(b)][size_t(a)] = 2.0 * p * q * d;
      m.expected_exact[size_t(a)][size_t(b)] = m.expected_exact[size_t(b)][size_t(a)] = p * q * d;
    }
  }
  return m;
}

std::optional<double> GroupSimilarity::ratio(int a, int b) const {
  if (edges[size_t(a)][size_t(b)] == 0 || mean_all == 0.0) return std::nullopt;
  return mean[size_t(a)][size_t(b)] / mean_all;
}

GroupSimilarity group_similarity_matrix(const SocialGraph& g, const Eigen::MatrixXd& w,
                                        const std::vector<Group>& groups) {
  if (int64_t(groups.size()) != g.n_nodes())
    throw DataError("group_similarity_matrix: groups must cover all nodes");
  if (w.rows() != g.n_nodes())
    throw DataError("group_similarity_matrix: factor rows must cover all nodes");

  GroupSimilarity s;
  double total = 0.0;
  for (const auto& [u, v] : g.edges()) {
    const double dot = profile_dot(w, u, v);
    const int a = int(groups[size_t(u)]), b = int(groups[size_t(v)]);
    s.mean[size_t(a)][size_t(b)] += dot;
    ++s.edges[size_t(a)][size_t(b)];
    if (a != b) {
      s.mean[size_t(b)][size_t(a)] += dot;
      ++s.edges[size_t(b)][size_t(a)];
    }
    total += dot;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (s.edges[size_t(a)][size_t(b)] > 0)
        s.mean[size_t(a)][size_t(b)] /= double(s.edges[size_t(a)][size_t(b)]);
  if (g.m_edges() > 0) s.mean_all = total / double(g.m_edges());
  return s;
}

namespace {

/// Sums `count_le` subsets whose U is <= u_lo and `count_ge` whose U is
/// >= u_hi over all size-n1 subsets of the pooled midranks.
void enumerate_u(const std::vector<double>& ranks, size_t next, size_t remaining, double rank_sum,
                 double base, double u_lo, double u_hi, int64_t& count_le, int64_t& count_ge) {
  if (remaining == 0) {
    const double u = rank_sum - base;
    if (u <= u_lo + 1e-9) ++count_le;
    if (u >= u_hi - 1e-9) ++count_ge;
    return;
  }
  if (ranks.size() - next < remaining) return;
  enumerate_u(ranks, next + 1, remaining - 1, rank_sum + ranks[next], base, u_lo, u_hi, count_le,
              count_ge);
  enumerate_u(ranks, next + 1, remaining, rank_sum, base, u_lo, u_hi, count_le, count_ge);
}

double normal_sf_two_sided(double z_abs) { return std::erfc(z_abs / std::sqrt(2.0)); }

}  // namespace

MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("mann_whitney_u: empty sample");
  const size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, 0);
  for (double v : b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<double> ranks(n);
  double tie_term = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double r = double(i + 1 + j) / 2.0;  // midrank of positions i+1 .. j
    for (size_t k = i; k < j; ++k) ranks[k] = r;
    const double t = double(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  double r1 = 0.0;
  for (size_t k = 0; k < n; ++k)
    if (pooled[k].second == 0) r1 += ranks[k];
  const double u1 = r1 - double(n1) * double(n1 + 1) / 2.0;
  const double u2 = double(n1) * double(n2) - u1;

  MwuResult res;
  res.u = u1;
  if (n <= 20) {
    res.exact = true;
    // Sum of both tails of U1's permutation distribution: with midranked
    // ties the distribution need not be symmetric, so count each side.
    const double u_lo = std::min(u1, u2), u_hi = std::max(u1, u2);
    const double base = double(n1) * double(n1 + 1) / 2.0;
    int64_t count_le = 0, count_ge = 0;
    enumerate_u(ranks, 0, n1, 0.0, base, u_lo, u_hi, count_le, count_ge);
    double total = 1.0;
    for (size_t k = 1; k <= n1; ++k) total = total * double(n2 + k) / double(k);
    res.p = std::min(1.0, double(count_le + count_ge) / total);
    return res;
  }

  const double mu = double(n1) * double(n2) / 2.0;
  const double nn = double(n);
  const double var =
      double(n1) * double(n2) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;
    return res;
  }
  double z = u1 - mu;
  if (z > 0.5)
    z -= 0.5;
  else if (z < -0.5)
    z += 0.5;
  else
    z = 0.0;
  z /= std::sqrt(var);
  res.p = std::min(1.0, normal_sf_two_sided(std::abs(z)));
  return res;
}

Histogram histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (hi < lo) throw ConfigError("histogram range is inverted");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(size_t(bins), 0);
  const double width = hi - lo;
  for (double v : values) {
    int idx = width > 0.0 ? int((v - lo) / width * double(bins)) : 0;
    idx = std::clamp(idx, 0, bins - 1);
    ++h.counts[size_t(idx)];
  }
  return h;
}

SimilarityComparison edge_similarity_distributions(const SocialGraph& g,
                                                   const SocialGraph& g_null,
                                                   const Eigen::MatrixXd& w, int bins) {
  if (g.n_nodes() != g_null.n_nodes())
    throw DataError("edge_similarity_distributions: node sets differ");
  SimilarityComparison sc;
  sc.observed.reserve(size_t(g.m_edges()));
  for (const auto& [u, v] : g.edges()) sc.observed.push_back(profile_dot(w, u, v));
  sc.null_values.reserve(size_t(g_null.m_edges()));
  for (const auto& [u, v] : g_null.edges()) sc.null_values.push_back(profile_dot(w, u, v));

  sc.mwu = mann_whitney_u(sc.observed, sc.null_values);
  sc.mean_observed =
      std::accumulate(sc.observed.begin(), sc.observed.end(), 0.0) / double(sc.observed.size());
  sc.mean_null = std::accumulate(sc.null_values.begin(), sc.null_values.end(), 0.0) /
                 double(sc.null_values.size());

  double lo = std::min(*std::min_element(sc.observed.begin(), sc.observed.end()),
                       *std::min_element(sc.null_values.begin(), sc.null_values.end()));
  double hi = std::max(*std::max_element(sc.observed.begin(), sc.observed.end()),
                       *std::max_element(sc.null_values.begin(), sc.null_values.end()));
  sc.observed_hist = histogram(sc.observed, bins, lo, hi);
  sc.null_hist = histogram(sc.null_values, bins, lo, hi);
  return sc;
}

}  // namespace homnet
