// Microbenchmarks for the hot paths: histogram training, assortativity,
// factorization updates, and stratified rewiring.

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "homnet/features.hpp"
#include "homnet/gbdt.hpp"
#include "homnet/graph.hpp"
#include "homnet/homophily.hpp"
#include "homnet/ingest.hpp"
#include "homnet/profiles.hpp"
#include "homnet/rng.hpp"

namespace {

using namespace homnet;

std::vector<std::pair<int64_t, int64_t>> random_edges(int64_t n, int64_t want, Rng& rng) {
  std::set<std::pair<int64_t, int64_t>> out;
  while (int64_t(out.size()) < want) {
    const int64_t u = int64_t(rng.uniform_int(uint64_t(n)));
    const int64_t v = int64_t(rng.uniform_int(uint64_t(n)));
    if (u != v) out.emplace(std::min(u, v), std::max(u, v));
  }
  return {out.begin(), out.end()};
}

SocialGraph make_graph(int64_t n, int64_t m, uint64_t seed) {
  Rng rng(seed);
  return SocialGraph::from_edges(n, random_edges(n, m, rng));
}

void bm_assortativity(benchmark::State& state) {
  const int64_t n = state.range(0);
  const SocialGraph g = make_graph(n, 8 * n, 1);
  Rng rng(2);
  std::vector<double> x(static_cast<size_t>(n));
  for (auto& v : x) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(numeric_assortativity(g, x));
  state.SetItemsProcessed(state.iterations() * g.m_edges());
}
BENCHMARK(bm_assortativity)->Arg(1000)->Arg(10000);

void bm_rewire(benchmark::State& state) {
  const int64_t n = state.range(0);
  const SocialGraph g = make_graph(n, 8 * n, 3);
  Rng rng(4);
  std::vector<GroupTriple> triples(static_cast<size_t>(n));
  for (auto& t : triples) {
    t.m = Group(rng.uniform_int(3));
    t.n = Group(rng.uniform_int(3));
    t.d = Group(rng.uniform_int(3));
  }
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rewire_preserving(g, triples, seed++));
  state.SetItemsProcessed(state.iterations() * g.m_edges());
}
BENCHMARK(bm_rewire)->Arg(1000)->Arg(5000);

void bm_histogram(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> values(size_t(state.range(0)));
  for (auto& v : values) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(histogram(values, 50, 0.0, 1.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_histogram)->Arg(10000)->Arg(100000);

void bm_nmf_iteration(benchmark::State& state) {
  SyntheticConfig sc;
  sc.n_users = 500;
  sc.n_artists = 2000;
  sc.n_genres = 50;
  sc.n_events = 50000;
  sc.seed = 6;
  const SyntheticData data = generate_synthetic(sc);
  const ProfileMatrix pm = l2_normalize_rows(build_artist_matrix(data.events));
  NmfParams params;
  params.rank = int(state.range(0));
  params.max_iters = 10;
  params.tol = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(nmf(pm, params));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(bm_nmf_iteration)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void bm_gbdt_round(benchmark::State& state) {
  Rng rng(7);
  const int64_t rows = state.range(0);
  const int cols = 30;
  std::vector<double> x(size_t(rows) * size_t(cols));
  std::vector<double> y(static_cast<size_t>(rows));
  for (int64_t i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) x[size_t(c) * size_t(rows) + size_t(i)] = rng.uniform();
    y[size_t(i)] = x[size_t(i)] > 0.5 ? 1.0 : 0.0;
  }
  const GbdtParams params{.n_rounds = 10, .max_depth = 4, .max_bins = 64};
  for (auto _ : state) benchmark::DoNotOptimize(train_gbdt(x, rows, cols, y, params));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(bm_gbdt_round)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
