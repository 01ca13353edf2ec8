#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "helpers.hpp"
#include "homnet/errors.hpp"
#include "homnet/gbdt.hpp"
#include "homnet/linkpred.hpp"
#include "homnet/profiles.hpp"
#include "homnet/rng.hpp"

using namespace homnet;

namespace {

using Edges = std::vector<std::pair<int64_t, int64_t>>;

int column_index(const FeatureSchema& schema, const std::string& name) {
  for (int c = 0; c < schema.n_columns(); ++c)
    if (schema.columns[size_t(c)].name == name) return c;
  REQUIRE_MESSAGE(false, "schema has no column ", name);
  return -1;
}

/// Feature table with two identical users, every feature valued `v` in group
/// `g` — the degenerate case where all pair deltas vanish.
UserFeatureTable twin_table(double v, Group g) {
  UserFeatureTable t;
  t.n_users = 2;
  for (int f = 0; f < kNumFeatures; ++f) {
    t.values[size_t(f)] = {v, v};
    t.groups[size_t(f)] = {g, g};
  }
  return t;
}

std::vector<uint8_t> hard_predictions(const GbdtModel& model, std::span<const double> x,
                                      int64_t n_rows) {
  const std::vector<double> margins = predict_margin(model, x, n_rows);
  std::vector<uint8_t> out(margins.size());
  for (size_t i = 0; i < margins.size(); ++i) out[i] = margins[i] > 0.0 ? 1 : 0;
  return out;
}

}  // namespace

TEST_CASE("family sets parse and print") {
  CHECK(parse_family_set("MNDF") == FamilySet{.mndf = true});
  CHECK(parse_family_set("APF+GF") == FamilySet{.apf = true, .gf = true});
  CHECK(parse_family_set("MNDF+APF+GF") == FamilySet{.mndf = true, .apf = true, .gf = true});
  CHECK_THROWS_AS(parse_family_set("mndf"), ConfigError);
  CHECK_THROWS_AS(parse_family_set("MNDF+MNDF"), ConfigError);
  CHECK_THROWS_AS(parse_family_set(""), ConfigError);

  const auto combos = default_combos();
  REQUIRE(combos.size() == 7);
  std::set<std::string> names;
  for (const auto& c : combos) {
    CHECK(parse_family_set(c.name()) == c);
    names.insert(c.name());
  }
  CHECK(names.size() == 7);
  CHECK(names.contains("MNDF+APF+GF"));
}

TEST_CASE("schema column counts per family") {
  CHECK(build_schema(0, FamilySet{.mndf = true}).n_columns() == 120);
  CHECK(build_schema(20, FamilySet{.apf = true}).n_columns() == 41);
  CHECK(build_schema(0, FamilySet{.gf = true}).n_columns() == 3);
  CHECK(build_schema(20, FamilySet{.mndf = true, .apf = true}).n_columns() == 161);
  const FamilySet all{.mndf = true, .apf = true, .gf = true};
  const FeatureSchema s = build_schema(20, all);
  CHECK(s.n_columns() == 164);
  CHECK(s.rank == 20);
  // 12 features x 2 endpoints, each a low/mid/high triple
  CHECK(s.onehot_blocks.size() == 24);
  for (const auto& [first, size] : s.onehot_blocks) {
    CHECK(size == 3);
    for (int c = first; c < first + 3; ++c)
      CHECK(s.columns[size_t(c)].kind == SchemaColumn::Kind::onehot);
  }
  CHECK(s.family_columns(FamilySet{.mndf = true}).size() == 120);
  CHECK(s.family_columns(FamilySet{.apf = true}).size() == 41);
  CHECK(s.family_columns(FamilySet{.gf = true}).size() == 3);
  CHECK(s.family_columns(all).size() == 164);

  CHECK_THROWS_AS(build_schema(0, FamilySet{.apf = true}), ConfigError);
  CHECK_THROWS_AS(build_schema(5, FamilySet{}), ConfigError);
}

TEST_CASE("negative sampling") {
  SUBCASE("a complete graph has no room") {
    const SocialGraph k4 =
        SocialGraph::from_edges(4, Edges{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    CHECK_THROWS_AS(sample_negatives(k4, 1, 1), InfeasibleError);
    CHECK(sample_negatives(k4, 0, 1).edges.empty());
  }
  SUBCASE("asking for every non-edge returns exactly the complement") {
    const SocialGraph g = SocialGraph::from_edges(4, Edges{{0, 1}});
    const EdgeList neg = sample_negatives(g, 5, 99);
    const std::set<std::pair<int64_t, int64_t>> got(neg.edges.begin(), neg.edges.end());
    const std::set<std::pair<int64_t, int64_t>> want = {
        {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    CHECK(got == want);
  }
  SUBCASE("samples are normalized, disjoint from the graph, and seeded") {
    Rng rng(73);
    const int64_t n = 30;
    const SocialGraph g = SocialGraph::from_edges(n, test::random_edges(n, 80, rng));
    const EdgeList neg = sample_negatives(g, 50, 7);
    CHECK(neg.edges.size() == 50);
    std::set<std::pair<int64_t, int64_t>> seen;
    for (const auto& [u, v] : neg.edges) {
      CHECK(u < v);
      CHECK(u >= 0);
      CHECK(v < n);
      CHECK_FALSE(g.has_edge(u, v));
      seen.emplace(u, v);
    }
    CHECK(seen.size() == 50);
    CHECK(sample_negatives(g, 50, 7).edges == neg.edges);
  }
  SUBCASE("negative counts are rejected") {
    const SocialGraph g = SocialGraph::from_edges(3, Edges{{0, 1}});
    CHECK_THROWS_AS(sample_negatives(g, -1, 0), ConfigError);
  }
}

TEST_CASE("relative difference") {
  CHECK(relative_difference(2.0, 2.0) == 0.0);
  CHECK(relative_difference(0.0, 0.0) == 0.0);
  CHECK(relative_difference(3.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(relative_difference(1.0, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(relative_difference(0.0, 4.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(relative_difference(-1.0, 2.0), DataError);
}

TEST_CASE("assembled features for identical users") {
  const UserFeatureTable t = twin_table(0.25, Group::mid);
  Eigen::MatrixXd w(2, 4);
  w.row(0) << 0.5, 0.5, 0.0, 0.0;
  w.row(1) << 0.5, 0.5, 0.0, 0.0;
  const FamilySet fams{.mndf = true, .apf = true};
  const FeatureSchema schema = build_schema(4, fams);
  const auto row = assemble_features(0, 1, t, w, nullptr, fams);
  REQUIRE(int(row.size()) == schema.n_columns());
  for (int f = 0; f < kNumFeatures; ++f) {
    const std::string base = kFeatureNames[size_t(f)];
    CHECK(row[size_t(column_index(schema, base + "_u"))] == 0.25);
    CHECK(row[size_t(column_index(schema, base + "_v"))] == 0.25);
    CHECK(row[size_t(column_index(schema, base + "_reldiff"))] == 0.0);
    CHECK(row[size_t(column_index(schema, base + "_same_group"))] == 1.0);
    CHECK(row[size_t(column_index(schema, base + "_u_mid"))] == 1.0);
    CHECK(row[size_t(column_index(schema, base + "_u_low"))] == 0.0);
    CHECK(row[size_t(column_index(schema, base + "_v_high"))] == 0.0);
  }
  CHECK(row[size_t(column_index(schema, "w0_u"))] == 0.5);
  CHECK(row[size_t(column_index(schema, "w_cosine"))] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("assembled graph features match the standalone indices") {
  const SocialGraph g = SocialGraph::from_edges(3, Edges{{0, 2}, {1, 2}});
  const UserFeatureTable t;  // unused by GF-only assembly
  const Eigen::MatrixXd w;
  const auto row = assemble_features(0, 1, t, w, &g, FamilySet{.gf = true});
  REQUIRE(row.size() == 3);
  CHECK(row[0] == 1.0);
  CHECK(row[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(row[2] == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(assemble_features(0, 1, t, w, nullptr, FamilySet{.gf = true}), DataError);
}

TEST_CASE("bulk assembly agrees with per-pair assembly") {
  Rng rng(79);
  const int64_t n = 12;
  const SocialGraph g = SocialGraph::from_edges(n, test::random_edges(n, 20, rng));
  UserFeatureTable t;
  t.n_users = n;
  for (int f = 0; f < kNumFeatures; ++f) {
    t.values[size_t(f)].resize(size_t(n));
    t.groups[size_t(f)].resize(size_t(n));
    for (int64_t u = 0; u < n; ++u) {
      t.values[size_t(f)][size_t(u)] = rng.uniform();
      t.groups[size_t(f)][size_t(u)] = Group(rng.uniform_int(3));
    }
  }
  Eigen::MatrixXd w(n, 5);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < 5; ++j) w(i, j) = rng.uniform();

  const FamilySet fams{.mndf = true, .apf = true, .gf = true};
  const FeatureSchema schema = build_schema(5, fams);
  std::vector<LabeledPair> pairs;
  for (int trial = 0; trial < 15; ++trial) {
    const int64_t u = int64_t(rng.uniform_int(uint64_t(n)));
    int64_t v = int64_t(rng.uniform_int(uint64_t(n)));
    if (v == u) v = (v + 1) % n;
    pairs.push_back({u, v, uint8_t(trial % 2)});
  }

  const int64_t rows = int64_t(pairs.size());
  std::vector<double> x(size_t(rows) * size_t(schema.n_columns()), 0.0);
  assemble_static_columns(pairs, t, w, schema, x);
  fill_gf_columns(pairs, g, schema, x);

  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto want = assemble_features(pairs[i].u, pairs[i].v, t, w, &g, fams);
    for (int c = 0; c < schema.n_columns(); ++c)
      CHECK(x[size_t(c) * size_t(rows) + i] == doctest::Approx(want[size_t(c)]).epsilon(1e-12));
  }
}

TEST_CASE("f1 score") {
  const std::vector<uint8_t> labels = {1, 1, 0};
  CHECK(f1(labels, labels) == 1.0);
  CHECK(f1(labels, std::vector<uint8_t>{1, 0, 1}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f1(labels, std::vector<uint8_t>{0, 0, 0}) == 0.0);
  CHECK(f1(std::vector<uint8_t>{0, 0}, std::vector<uint8_t>{0, 0}) == 0.0);
  CHECK_THROWS_AS(f1(labels, std::vector<uint8_t>{1, 1}), DataError);
}

TEST_CASE("stratified random baseline") {
  SUBCASE("matches the training positive rate") {
    std::vector<uint8_t> train(10000);
    for (size_t i = 0; i < train.size(); i += 2) train[i] = 1;
    const auto out = stratified_random(train, 10000, 5);
    const double rate =
        double(std::count(out.begin(), out.end(), uint8_t(1))) / double(out.size());
    CHECK(rate > 0.47);
    CHECK(rate < 0.53);
    CHECK(stratified_random(train, 10000, 5) == out);
  }
  SUBCASE("degenerate rates are reproduced exactly") {
    const std::vector<uint8_t> ones(50, 1), zeros(50, 0);
    const auto all_pos = stratified_random(ones, 20, 3);
    CHECK(std::count(all_pos.begin(), all_pos.end(), uint8_t(1)) == 20);
    const auto all_neg = stratified_random(zeros, 20, 3);
    CHECK(std::count(all_neg.begin(), all_neg.end(), uint8_t(1)) == 0);
  }
  SUBCASE("empty training labels are rejected") {
    CHECK_THROWS_AS(stratified_random({}, 5, 0), DataError);
  }
}

TEST_CASE("boosted trees separate a clean threshold") {
  const int64_t rows = 200;
  std::vector<double> x(static_cast<size_t>(rows));
  std::vector<double> y(static_cast<size_t>(rows));
  std::vector<uint8_t> labels(static_cast<size_t>(rows));
  Rng rng(83);
  for (int64_t i = 0; i < rows; ++i) {
    // Grid values keep the distinct count under max_bins, so the binner puts a
    // cut exactly at the label threshold and the data is perfectly separable.
    x[size_t(i)] = double(rng.uniform_int(40)) / 40.0;
    labels[size_t(i)] = x[size_t(i)] > 0.5 ? 1 : 0;
    y[size_t(i)] = double(labels[size_t(i)]);
  }
  const GbdtParams params{.n_rounds = 20, .max_depth = 3, .max_bins = 64};
  const GbdtModel model = train_gbdt(x, rows, 1, y, params);
  CHECK(model.n_columns == 1);
  CHECK(f1(labels, hard_predictions(model, x, rows)) == 1.0);

  REQUIRE(model.train_loss.size() == 20);
  for (size_t r = 1; r < model.train_loss.size(); ++r)
    CHECK(model.train_loss[r] <= model.train_loss[r - 1] + 1e-12);

  const double margin = model.predict_margin(std::vector<double>{0.9});
  CHECK(model.predict_proba(std::vector<double>{0.9}) ==
        doctest::Approx(sigmoid(margin)).epsilon(1e-12));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(40.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("boosted trees reject single-class training data") {
  const std::vector<double> x = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(train_gbdt(x, 3, 1, std::vector<double>{1, 1, 1}), DataError);
  CHECK_THROWS_AS(train_gbdt(x, 3, 1, std::vector<double>{0, 0, 0}), DataError);
}

TEST_CASE("boosted trees are deterministic and match the binned path") {
  Rng rng(89);
  const int64_t rows = 300;
  const int cols = 5;
  std::vector<double> x(size_t(rows) * size_t(cols));
  std::vector<double> y(static_cast<size_t>(rows));
  for (int64_t i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) x[size_t(c) * size_t(rows) + size_t(i)] = rng.uniform();
    y[size_t(i)] = x[size_t(i)] + 0.3 * rng.uniform() > 0.6 ? 1.0 : 0.0;
  }
  const GbdtParams params{.n_rounds = 12, .max_depth = 3, .max_bins = 32};
  const GbdtModel a = train_gbdt(x, rows, cols, y, params);
  const GbdtModel b = train_gbdt(x, rows, cols, y, params);
  const auto pa = predict_margin(a, x, rows), pb = predict_margin(b, x, rows);
  CHECK(pa == pb);

  const BinnedDataset binned = bin_dataset(x, rows, cols, params.max_bins);
  std::vector<int> phys(size_t(binned.cols.size()));
  std::iota(phys.begin(), phys.end(), 0);
  std::vector<uint32_t> all_rows(static_cast<size_t>(rows));
  std::iota(all_rows.begin(), all_rows.end(), uint32_t(0));
  const GbdtModel c = train_on_binned(binned, phys, all_rows, y, params);
  CHECK(predict_margin(c, x, rows) == pa);
}

TEST_CASE("feature importance concentrates on the informative column") {
  Rng rng(97);
  const int64_t rows = 400;
  const int cols = 4;
  std::vector<double> x(size_t(rows) * size_t(cols));
  std::vector<double> y(static_cast<size_t>(rows));
  for (int64_t i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) x[size_t(c) * size_t(rows) + size_t(i)] = rng.uniform();
    y[size_t(i)] = x[size_t(i)] > 0.5 ? 1.0 : 0.0;  // only column 0 matters
  }
  const GbdtModel model =
      train_gbdt(x, rows, cols, y, GbdtParams{.n_rounds = 15, .max_depth = 3, .max_bins = 64});
  const auto imp = feature_importance(model);
  REQUIRE(imp.size() == 4);
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(imp[0] > 0.9);
}

TEST_CASE("one-hot blocks collapse into one categorical column") {
  const int64_t rows = 9;
  const int cols = 4;  // one numeric + a 3-wide one-hot block
  std::vector<double> x(size_t(rows) * size_t(cols), 0.0);
  for (int64_t i = 0; i < rows; ++i) {
    x[size_t(i)] = double(i);
    x[size_t(1 + i % 3) * size_t(rows) + size_t(i)] = 1.0;
  }
  const std::vector<std::pair<int, int>> blocks = {{1, 3}};
  const BinnedDataset binned = bin_dataset(x, rows, cols, 16, blocks);
  CHECK(binned.n_logical == 4);
  REQUIRE(binned.cols.size() == 2);
  CHECK_FALSE(binned.cols[0].onehot);
  CHECK(binned.cols[1].onehot);
  CHECK(binned.cols[1].n_bins == 3);
  CHECK(binned.phys_of_logical[1] == 1);
  CHECK(binned.phys_of_logical[3] == 1);
  for (int64_t i = 0; i < rows; ++i)
    CHECK(binned.codes[size_t(binned.n_rows) + size_t(i)] == uint8_t(i % 3));
}

TEST_CASE("rebinning a column tracks new values") {
  const int64_t rows = 10;
  std::vector<double> x(static_cast<size_t>(rows));
  std::iota(x.begin(), x.end(), 0.0);
  BinnedDataset binned = bin_dataset(x, rows, 1, 4);
  std::vector<double> reversed(x.rbegin(), x.rend());
  rebin_column(binned, 0, reversed, 4);
  for (int64_t i = 1; i < rows; ++i)
    CHECK(binned.codes[size_t(i)] <= binned.codes[size_t(i - 1)]);
}

TEST_CASE("experiment grid shape, determinism, and parallel equivalence") {
  SyntheticConfig sc;
  sc.n_users = 100;
  sc.n_artists = 400;
  sc.n_genres = 30;
  sc.n_events = 6000;
  sc.seed = 12;
  const SyntheticData data = generate_synthetic(sc);
  const SocialGraph g = SocialGraph::from_edges(sc.n_users, data.edges.edges);
  const UserFeatureTable table = compute_features(data.events, data.genres);
  ProfileMatrix pm = l2_normalize_rows(build_artist_matrix(data.events));
  const FactorPair fp = nmf(pm, NmfParams{.rank = 4, .max_iters = 60, .seed = 12});

  ExperimentConfig cfg;
  cfg.n_datasets = 2;
  cfg.n_splits = 2;
  cfg.master_seed = 7;
  cfg.gbdt = GbdtParams{.n_rounds = 8, .max_depth = 3, .max_bins = 32};
  cfg.combos = {FamilySet{.mndf = true}, FamilySet{.gf = true}};

  const ExperimentReport rep = run_experiment(g, table, fp.w, cfg);
  REQUIRE(rep.combo_names.size() == 2);
  CHECK(rep.combo_names[0] == "MNDF");
  CHECK(rep.combo_names[1] == "GF");
  // 2 combos x 2 datasets x 2 splits, plus the baseline grid
  REQUIRE(rep.runs.size() == 12);
  int baseline_runs = 0;
  for (const auto& r : rep.runs) {
    CHECK(r.f1 >= 0.0);
    CHECK(r.f1 <= 1.0);
    CHECK(r.dataset >= 0);
    CHECK(r.dataset < 2);
    CHECK(r.split >= 0);
    CHECK(r.split < 2);
    baseline_runs += r.combo == -1;
  }
  CHECK(baseline_runs == 4);
  REQUIRE(rep.mean_f1.size() == 2);
  REQUIRE(rep.group_f1.size() == 9);
  for (const auto& cell : rep.group_f1) {
    CHECK(cell.mean_per_combo.size() == 2);
    CHECK(cell.runs_per_combo.size() == 2);
  }
  CHECK_FALSE(rep.importance.empty());

  const ExperimentReport again = run_experiment(g, table, fp.w, cfg);
  REQUIRE(again.runs.size() == rep.runs.size());
  for (size_t i = 0; i < rep.runs.size(); ++i) {
    CHECK(again.runs[i].combo == rep.runs[i].combo);
    CHECK(again.runs[i].f1 == rep.runs[i].f1);
  }

  ExperimentConfig par = cfg;
  par.jobs = 2;
  const ExperimentReport parallel = run_experiment(g, table, fp.w, par);
  REQUIRE(parallel.runs.size() == rep.runs.size());
  for (size_t i = 0; i < rep.runs.size(); ++i)
    CHECK(parallel.runs[i].f1 == rep.runs[i].f1);

  ExperimentConfig bad = cfg;
  bad.combos.clear();
  CHECK_THROWS_AS(run_experiment(g, table, fp.w, bad), ConfigError);
}
