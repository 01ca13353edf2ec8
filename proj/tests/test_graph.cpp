#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "homnet/errors.hpp"
#include "homnet/graph.hpp"
#include "homnet/rng.hpp"

using namespace homnet;

namespace {

using Edges = std::vector<std::pair<int64_t, int64_t>>;

/// Plain Pearson over the directed stub pairs, written independently of the
/// library (two-pass means, explicit covariance accumulation).
double stub_pearson(int64_t n, const Edges& edges, const std::vector<double>& x) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& [u, v] : edges) {
    pairs.emplace_back(x[size_t(u)], x[size_t(v)]);
    pairs.emplace_back(x[size_t(v)], x[size_t(u)]);
  }
  double ma = 0.0, mb = 0.0;
  for (const auto& [a, b] : pairs) {
    ma += a;
    mb += b;
  }
  ma /= double(pairs.size());
  mb /= double(pairs.size());
  double cab = 0.0, caa = 0.0, cbb = 0.0;
  for (const auto& [a, b] : pairs) {
    cab += (a - ma) * (b - mb);
    caa += (a - ma) * (a - ma);
    cbb += (b - mb) * (b - mb);
  }
  (void)n;
  return cab / std::sqrt(caa * cbb);
}

}  // namespace

TEST_CASE("from_edges builds sorted symmetric adjacency") {
  const Edges edges = {{0, 2}, {0, 1}, {2, 3}};
  const SocialGraph g = SocialGraph::from_edges(4, edges);
  CHECK(g.n_nodes() == 4);
  CHECK(g.m_edges() == 3);
  REQUIRE(g.degree(0) == 2);
  CHECK(g.neighbors(0)[0] == 1);
  CHECK(g.neighbors(0)[1] == 2);
  CHECK(g.degree(3) == 1);
  CHECK(g.has_edge(2, 0));
  CHECK(g.has_edge(0, 2));
  CHECK_FALSE(g.has_edge(1, 3));
  int64_t degree_sum = 0;
  for (int64_t v = 0; v < 4; ++v) degree_sum += g.degree(v);
  CHECK(degree_sum == 2 * g.m_edges());
}

TEST_CASE("from_edges rejects self-loops, duplicates, and range errors") {
  CHECK_THROWS_AS(SocialGraph::from_edges(3, Edges{{1, 1}}), DataError);
  CHECK_THROWS_AS(SocialGraph::from_edges(3, Edges{{0, 1}, {1, 0}}), DataError);
  CHECK_THROWS_AS(SocialGraph::from_edges(2, Edges{{0, 5}}), DataError);
}

TEST_CASE("density") {
  CHECK(SocialGraph::from_edges(3, Edges{{0, 1}, {1, 2}, {0, 2}}).density() == 1.0);
  CHECK(SocialGraph::from_edges(4, Edges{}).density() == 0.0);
  CHECK(SocialGraph::from_edges(4, Edges{{0, 1}, {1, 2}, {2, 3}}).density() == 0.5);
  CHECK_THROWS_AS(SocialGraph::from_edges(1, Edges{}).density(), InfeasibleError);
}

TEST_CASE("assortativity of hand graphs") {
  SUBCASE("edges only between equal values gives 1") {
    const SocialGraph g = SocialGraph::from_edges(4, Edges{{0, 1}, {2, 3}});
    const auto r = numeric_assortativity(g, std::vector<double>{0, 0, 1, 1});
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("perfect bipartite mixing gives -1") {
    const SocialGraph g =
        SocialGraph::from_edges(4, Edges{{0, 2}, {0, 3}, {1, 2}, {1, 3}});
    const auto r = numeric_assortativity(g, std::vector<double>{0, 0, 1, 1});
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("a 3-path with values 1,2,3 has zero stub covariance") {
    const SocialGraph g = SocialGraph::from_edges(3, Edges{{0, 1}, {1, 2}});
    const auto r = numeric_assortativity(g, std::vector<double>{1, 2, 3});
    REQUIRE(r.has_value());
    CHECK(std::abs(*r) <= 1e-12);
  }
  SUBCASE("constant values have no defined correlation") {
    const SocialGraph g = SocialGraph::from_edges(3, Edges{{0, 1}, {1, 2}});
    CHECK_FALSE(numeric_assortativity(g, std::vector<double>{2, 2, 2}).has_value());
  }
  SUBCASE("an edgeless graph is infeasible") {
    const SocialGraph g = SocialGraph::from_edges(3, Edges{});
    CHECK_THROWS_AS(numeric_assortativity(g, std::vector<double>{1, 2, 3}), InfeasibleError);
  }
}

TEST_CASE("assortativity matches the brute-force stub Pearson oracle") {
  Rng rng(41);
  int tested = 0;
  while (tested < 30) {
    const int64_t n = 3 + int64_t(rng.uniform_int(48));
    const auto edges = test::random_edges(n, n + int64_t(rng.uniform_int(uint64_t(2 * n))), rng);
    if (edges.empty()) continue;
    std::vector<double> x(static_cast<size_t>(n));
    for (auto& v : x) v = rng.uniform() * 10.0 - 5.0;
    const SocialGraph g = SocialGraph::from_edges(n, edges);
    const auto r = numeric_assortativity(g, x);
    REQUIRE(r.has_value());
    CHECK(std::abs(*r - stub_pearson(n, edges, x)) < 1e-12);
    ++tested;
  }
}

TEST_CASE("assortativity is invariant under affine rescaling of the values") {
  // Both endpoints of every edge pair see the same transform, so the Pearson
  // coefficient is unchanged for any nonzero slope, negative ones included.
  Rng rng(43);
  const int64_t n = 25;
  const auto edges = test::random_edges(n, 60, rng);
  const SocialGraph g = SocialGraph::from_edges(n, edges);
  std::vector<double> x(static_cast<size_t>(n));
  for (auto& v : x) v = rng.uniform();
  const double base = *numeric_assortativity(g, x);
  std::vector<double> scaled = x, flipped = x;
  for (auto& v : scaled) v = 3.5 * v + 11.0;
  for (auto& v : flipped) v = -2.0 * v + 1.0;
  CHECK(std::abs(*numeric_assortativity(g, scaled) - base) < 1e-12);
  CHECK(std::abs(*numeric_assortativity(g, flipped) - base) < 1e-12);
}

TEST_CASE("topological indices on hand graphs") {
  SUBCASE("one shared neighbor of degree two") {
    const SocialGraph g = SocialGraph::from_edges(3, Edges{{0, 2}, {1, 2}});
    CHECK(common_neighbors(g, 0, 1) == 1);
    CHECK(jaccard(g, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(adamic_adar(g, 0, 1) == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("isolated endpoints score zero everywhere") {
    const SocialGraph g = SocialGraph::from_edges(4, Edges{{2, 3}});
    CHECK(common_neighbors(g, 0, 1) == 0);
    CHECK(jaccard(g, 0, 1) == 0.0);
    CHECK(adamic_adar(g, 0, 1) == 0.0);
  }
  SUBCASE("identical neighborhoods have Jaccard 1") {
    const SocialGraph g = SocialGraph::from_edges(4, Edges{{0, 2}, {0, 3}, {1, 2}, {1, 3}});
    CHECK(jaccard(g, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(common_neighbors(g, 0, 1) == 2);
  }
}

TEST_CASE("topological indices are symmetric and bounded") {
  Rng rng(47);
  const int64_t n = 30;
  const SocialGraph g = SocialGraph::from_edges(n, test::random_edges(n, 90, rng));
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t u = int64_t(rng.uniform_int(uint64_t(n)));
    const int64_t v = int64_t(rng.uniform_int(uint64_t(n)));
    CHECK(common_neighbors(g, u, v) == common_neighbors(g, v, u));
    const double j = jaccard(g, u, v);
    CHECK(j == jaccard(g, v, u));
    CHECK(j >= 0.0);
    CHECK(j <= 1.0);
    const double aa = adamic_adar(g, u, v);
    CHECK(aa == adamic_adar(g, v, u));
    CHECK(aa >= 0.0);
  }
}
