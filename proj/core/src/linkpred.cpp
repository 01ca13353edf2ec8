#include "homnet/linkpred.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>

#include "homnet/errors.hpp"
#include "homnet/rng.hpp"
#include "homnet/tsv.hpp"

namespace homnet {

namespace {

constexpr std::array<Family, 3> kFamilyOrder = {Family::mndf, Family::apf, Family::gf};

// One feature per behaviour, used for the per-group test-set breakdown:
// global mainstreaminess, six-month novelty, weighted average diversity.
constexpr std::array<int, 3> kRepFeatures = {3, 5, 11};

const char* family_tag(Family f) {
  switch (f) {
    case Family::mndf: return "MNDF";
    case Family::apf: return "APF";
    case Family::gf: return "GF";
  }
  return "";
}

// Reporting prefix of a per-user feature: M for mainstreaminess columns,
// N for novelty, D for diversity.
char behaviour_letter(int f) { return f < 4 ? 'M' : f < 7 ? 'N' : 'D'; }

std::string behaviour_block(int f, const char* suffix) {
  return std::string(1, behaviour_letter(f)) + suffix;
}

uint64_t pair_key(int64_t n, int64_t u, int64_t v) {
  if (u > v) std::swap(u, v);
  return uint64_t(u) * uint64_t(n) + uint64_t(v);
}

// Writes the MNDF and APF columns of one pair in schema order. out[0] is the
// pair's first column; consecutive columns are `stride` apart, so the same
// code fills a single row (stride 1) or a column-major matrix (stride n_rows).
void fill_static_row(int64_t u, int64_t v, const UserFeatureTable& table,
                     const Eigen::MatrixXd& w, const FamilySet& families, double* out,
                     ptrdiff_t stride) {
  ptrdiff_t c = 0;
  auto put = [&](double value) {
    out[c * stride] = value;
    ++c;
  };
  if (families.mndf) {
    for (int64_t node : {u, v})
      for (int f = 0; f < kNumFeatures; ++f) put(table.value(f, node));
    for (int f = 0; f < kNumFeatures; ++f)
      for (int64_t node : {u, v}) {
        const int level = int(table.group(f, node));
        for (int l = 0; l < 3; ++l) put(l == level ? 1.0 : 0.0);
      }
    for (int f = 0; f < kNumFeatures; ++f)
      put(relative_difference(table.value(f, u), table.value(f, v)));
    for (int f = 0; f < kNumFeatures; ++f)
      put(table.group(f, u) == table.group(f, v) ? 1.0 : 0.0);
  }
  if (families.apf) {
    const int rank = int(w.cols());
    for (int64_t node : {u, v})
      for (int k = 0; k < rank; ++k) put(w(node, k));
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (int k = 0; k < rank; ++k) {
      dot += w(u, k) * w(v, k);
      nu += w(u, k) * w(u, k);
      nv += w(v, k) * w(v, k);
    }
    put(nu > 0.0 && nv > 0.0 ? dot / std::sqrt(nu * nv) : 0.0);
  }
}

void check_node(int64_t node, int64_t bound, const char* what) {
  if (node < 0 || node >= bound)
    throw DataError(std::string("feature assembly: node ") + std::to_string(node) +
                    " outside " + what + " range");
}

}  // namespace

bool FamilySet::has(Family f) const {
  switch (f) {
    case Family::mndf: return mndf;
    case Family::apf: return apf;
    case Family::gf: return gf;
  }
  return false;
}

std::string FamilySet::name() const {
  std::string out;
  for (Family f : kFamilyOrder) {
    if (!has(f)) continue;
    if (!out.empty()) out += '+';
    out += family_tag(f);
  }
  return out.empty() ? std::string("none") : out;
}

std::vector<FamilySet> default_combos() {
  return {
      {.mndf = true},
      {.apf = true},
      {.gf = true},
      {.mndf = true, .apf = true},
      {.mndf = true, .gf = true},
      {.apf = true, .gf = true},
      {.mndf = true, .apf = true, .gf = true},
  };
}

FamilySet parse_family_set(const std::string& name) {
  FamilySet out;
  size_t pos = 0;
  while (pos <= name.size()) {
    const size_t next = name.find('+', pos);
    const std::string part =
        name.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    bool dup = false;
    if (part == "MNDF") {
      dup = out.mndf;
      out.mndf = true;
    } else if (part == "APF") {
      dup = out.apf;
      out.apf = true;
    } else if (part == "GF") {
      dup = out.gf;
      out.gf = true;
    } else {
      throw ConfigError("unknown feature family '" + part + "' in '" + name + "'");
    }
    if (dup) throw ConfigError("feature family repeated in '" + name + "'");
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<int> FeatureSchema::family_columns(const FamilySet& families) const {
  std::vector<int> out;
  for (int c = 0; c < n_columns(); ++c)
    if (families.has(columns[size_t(c)].family)) out.push_back(c);
  return out;
}

FeatureSchema build_schema(int rank, const FamilySet& families) {
  if (families.apf && rank < 1) throw ConfigError("schema: factor rank must be >= 1");
  if (!families.mndf && !families.apf && !families.gf)
    throw ConfigError("schema: empty feature family set");
  FeatureSchema s;
  s.rank = families.apf ? rank : 0;
  auto add = [&](std::string name, Family fam, SchemaColumn::Kind kind, std::string block) {
    s.columns.push_back({std::move(name), fam, kind, std::move(block)});
  };
  if (families.mndf) {
    for (const char* side : {"u", "v"})
      for (int f = 0; f < kNumFeatures; ++f)
        add(std::string(kFeatureNames[size_t(f)]) + "_" + side, Family::mndf,
            SchemaColumn::Kind::numeric, behaviour_block(f, "_values"));
    for (int f = 0; f < kNumFeatures; ++f)
      for (const char* side : {"u", "v"}) {
        s.onehot_blocks.emplace_back(int(s.columns.size()), 3);
        for (int l = 0; l < 3; ++l)
          add(std::string(kFeatureNames[size_t(f)]) + "_" + side + "_" + group_name(Group(l)),
              Family::mndf, SchemaColumn::Kind::onehot, behaviour_block(f, "_groups"));
      }
    for (int f = 0; f < kNumFeatures; ++f)
      add(std::string(kFeatureNames[size_t(f)]) + "_reldiff", Family::mndf,
          SchemaColumn::Kind::numeric, behaviour_block(f, "_reldiff"));
    for (int f = 0; f < kNumFeatures; ++f)
      add(std::string(kFeatureNames[size_t(f)]) + "_same_group", Family::mndf,
          SchemaColumn::Kind::binary, behaviour_block(f, "_same_group"));
  }
  if (families.apf) {
    for (const char* side : {"u", "v"})
      for (int k = 0; k < rank; ++k)
        add("w" + std::to_string(k) + "_" + side, Family::apf, SchemaColumn::Kind::numeric,
            "W_rows");
    add("w_cosine", Family::apf, SchemaColumn::Kind::numeric, "W_similarity");
  }
  if (families.gf) {
    for (const char* name : {"common_neighbors", "jaccard", "adamic_adar"})
      add(name, Family::gf, SchemaColumn::Kind::numeric, name);
  }
  return s;
}

EdgeList sample_negatives(const SocialGraph& g, int64_t count, uint64_t seed) {
  if (count < 0) throw ConfigError("sample_negatives: negative count");
  const int64_t n = g.n_nodes();
  const int64_t capacity = n * (n - 1) / 2 - g.m_edges();
  if (count > capacity)
    throw InfeasibleError("sample_negatives: requested " + std::to_string(count) +
                          " non-edges but the graph only has " + std::to_string(capacity));
  EdgeList out;
  out.edges.reserve(size_t(count));
  Rng rng(seed);
  if (count * 4 > capacity) {
    // Dense regime where rejection would thrash: enumerate every non-edge and
    // take a random prefix.
    std::vector<std::pair<int64_t, int64_t>> pool;
    pool.reserve(size_t(capacity));
    for (int64_t u = 0; u < n; ++u) {
      const auto nb = g.neighbors(u);
      size_t i = 0;
      for (int64_t v = u + 1; v < n; ++v) {
        while (i < nb.size() && nb[i] < v) ++i;
        if (i < nb.size() && nb[i] == v) continue;
        pool.emplace_back(u, v);
      }
    }
    for (int64_t k = 0; k < count; ++k) {
      const size_t j = size_t(k) + size_t(rng.uniform_int(uint64_t(pool.size() - size_t(k))));
      std::swap(pool[size_t(k)], pool[j]);
      out.edges.push_back(pool[size_t(k)]);
    }
  } else {
    std::unordered_set<uint64_t> seen;
    seen.reserve(size_t(count) * 2);
    while (int64_t(out.edges.size()) < count) {
      int64_t u = int64_t(rng.uniform_int(uint64_t(n)));
      int64_t v = int64_t(rng.uniform_int(uint64_t(n)));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (g.has_edge(u, v)) continue;
      if (!seen.insert(pair_key(n, u, v)).second) continue;
      out.edges.emplace_back(u, v);
    }
  }
  return out;
}

double relative_difference(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0))
    throw DataError("relative_difference: inputs must be nonnegative");
  if (a == b) return 0.0;
  return std::abs(a - b) / ((a + b) / 2.0);
}

std::vector<double> assemble_features(int64_t u, int64_t v, const UserFeatureTable& table,
                                      const Eigen::MatrixXd& w, const SocialGraph* g_train,
                                      const FamilySet& families) {
  const FeatureSchema schema = build_schema(families.apf ? int(w.cols()) : 0, families);
  if (families.mndf)
    for (int64_t node : {u, v}) check_node(node, table.n_users, "feature table");
  if (families.apf)
    for (int64_t node : {u, v}) check_node(node, w.rows(), "factor matrix");
  std::vector<double> row(size_t(schema.n_columns()), 0.0);
  fill_static_row(u, v, table, w, families, row.data(), 1);
  if (families.gf) {
    if (g_train == nullptr)
      throw DataError("feature assembly: graph features requested without a graph");
    for (int64_t node : {u, v}) check_node(node, g_train->n_nodes(), "graph");
    const size_t base = row.size() - 3;
    row[base] = double(common_neighbors(*g_train, u, v));
    row[base + 1] = jaccard(*g_train, u, v);
    row[base + 2] = adamic_adar(*g_train, u, v);
  }
  return row;
}

void assemble_static_columns(std::span<const LabeledPair> pairs, const UserFeatureTable& table,
                             const Eigen::MatrixXd& w, const FeatureSchema& schema,
                             std::span<double> x) {
  const int64_t n_rows = int64_t(pairs.size());
  if (int64_t(x.size()) != n_rows * int64_t(schema.n_columns()))
    throw DataError("feature assembly: matrix size mismatch");
  FamilySet fams;
  for (const auto& col : schema.columns) {
    if (col.family == Family::mndf) fams.mndf = true;
    if (col.family == Family::apf) fams.apf = true;
    if (col.family == Family::gf) fams.gf = true;
  }
  for (const auto& p : pairs) {
    if (fams.mndf)
      for (int64_t node : {p.u, p.v}) check_node(node, table.n_users, "feature table");
    if (fams.apf)
      for (int64_t node : {p.u, p.v}) check_node(node, w.rows(), "factor matrix");
  }
  fams.gf = false;  // graph columns are split-dependent; left zeroed here
  std::fill(x.begin(), x.end(), 0.0);
  for (int64_t r = 0; r < n_rows; ++r)
    fill_static_row(pairs[size_t(r)].u, pairs[size_t(r)].v, table, w, fams, x.data() + r,
                    n_rows);
}

void fill_gf_columns(std::span<const LabeledPair> pairs, const SocialGraph& g_train,
                     const FeatureSchema& schema, std::span<double> x) {
  const int64_t n_rows = int64_t(pairs.size());
  if (int64_t(x.size()) != n_rows * int64_t(schema.n_columns()))
    throw DataError("feature assembly: matrix size mismatch");
  std::vector<int> gf_cols;
  for (int c = 0; c < schema.n_columns(); ++c)
    if (schema.columns[size_t(c)].family == Family::gf) gf_cols.push_back(c);
  if (gf_cols.size() != 3) throw ConfigError("feature assembly: schema has no graph columns");
  double* cn = x.data() + size_t(gf_cols[0]) * size_t(n_rows);
  double* jc = x.data() + size_t(gf_cols[1]) * size_t(n_rows);
  double* aa = x.data() + size_t(gf_cols[2]) * size_t(n_rows);
  for (int64_t r = 0; r < n_rows; ++r) {
    const auto& p = pairs[size_t(r)];
    for (int64_t node : {p.u, p.v}) check_node(node, g_train.n_nodes(), "graph");
    cn[r] = double(common_neighbors(g_train, p.u, p.v));
    jc[r] = jaccard(g_train, p.u, p.v);
    aa[r] = adamic_adar(g_train, p.u, p.v);
  }
}

double f1(std::span<const uint8_t> labels, std::span<const uint8_t> predictions) {
  if (labels.size() != predictions.size()) throw DataError("f1: size mismatch");
  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const bool l = labels[i] != 0, p = predictions[i] != 0;
    tp += l && p;
    fp += !l && p;
    fn += l && !p;
  }
  const int64_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * double(tp) / double(denom);
}

std::vector<uint8_t> stratified_random(std::span<const uint8_t> train_labels, size_t n_out,
                                       uint64_t seed) {
  if (train_labels.empty()) throw DataError("stratified_random: empty training labels");
  int64_t n_pos = 0;
  for (uint8_t l : train_labels) n_pos += l != 0;
  const double rate = double(n_pos) / double(train_labels.size());
  Rng rng(seed);
  std::vector<uint8_t> out(n_out);
  for (auto& o : out) o = rng.uniform() < rate ? 1 : 0;
  return out;
}

ExperimentReport run_experiment(const SocialGraph& g, const UserFeatureTable& table,
                                const Eigen::MatrixXd& w, const ExperimentConfig& config) {
  if (config.n_datasets < 1 || config.n_splits < 1)
    throw ConfigError("experiment: dataset and split counts must be >= 1");
  if (!(config.train_fraction > 0.0) || !(config.train_fraction < 1.0))
    throw ConfigError("experiment: train fraction must be in (0,1)");
  if (config.combos.empty()) throw ConfigError("experiment: no feature sets to evaluate");
  if (config.jobs < 1) throw ConfigError("experiment: jobs must be >= 1");
  if (g.n_nodes() != table.n_users)
    throw DataError("experiment: feature table does not match the graph");
  FamilySet used;
  for (const auto& c : config.combos) {
    if (!c.mndf && !c.apf && !c.gf) throw ConfigError("experiment: empty feature set");
    used.mndf = used.mndf || c.mndf;
    used.apf = used.apf || c.apf;
    used.gf = used.gf || c.gf;
  }
  if (used.apf && (w.rows() != g.n_nodes() || w.cols() < 1))
    throw DataError("experiment: factor matrix does not match the graph");

  const int64_t m = g.m_edges();
  const int64_t n_pairs = 2 * m;
  const int64_t n_train = llround(config.train_fraction * double(n_pairs));
  if (n_train < 2 || n_train > n_pairs - 1)
    throw InfeasibleError("experiment: train/test split would leave a side empty");

  const FeatureSchema schema = build_schema(used.apf ? int(w.cols()) : 0, used);
  const int n_cols = schema.n_columns();
  const int n_combos = int(config.combos.size());
  const int nd = config.n_datasets;
  const int ns = config.n_splits;

  std::vector<int> gf_cols;
  for (int c = 0; c < n_cols; ++c)
    if (schema.columns[size_t(c)].family == Family::gf) gf_cols.push_back(c);

  // Every result lands in a slot addressed by (combo, dataset, split), so the
  // report is identical no matter how dataset jobs interleave across threads.
  auto slot = [nd, ns](int ci, int di, int si) { return (size_t(ci) * size_t(nd) + size_t(di)) * size_t(ns) + size_t(si); };
  std::vector<double> f1_slots(size_t(n_combos) * size_t(nd) * size_t(ns), 0.0);
  std::vector<double> baseline_slots(size_t(nd) * size_t(ns), 0.0);
  std::vector<double> group_vals(f1_slots.size() * 9, 0.0);
  std::vector<uint8_t> group_present(f1_slots.size() * 9, 0);
  std::vector<double> imp_slots(size_t(n_combos) * size_t(nd) * size_t(n_cols), 0.0);

  auto run_dataset = [&](int di) {
    const EdgeList negatives =
        sample_negatives(g, m, derive_seed(config.master_seed, {1, uint64_t(di)}));
    std::vector<LabeledPair> pairs;
    pairs.reserve(size_t(n_pairs));
    for (const auto& e : g.edges()) pairs.push_back({e.first, e.second, 1});
    for (const auto& e : negatives.edges) pairs.push_back({e.first, e.second, 0});

    std::vector<double> x(size_t(n_pairs) * size_t(n_cols));
    assemble_static_columns(pairs, table, w, schema, x);
    BinnedDataset data =
        bin_dataset(x, n_pairs, n_cols, config.gbdt.max_bins, schema.onehot_blocks);
    if (used.gf && config.gf_full_graph) {
      fill_gf_columns(pairs, g, schema, x);
      for (int col : gf_cols)
        rebin_column(data, data.phys_of_logical[size_t(col)],
                     std::span<const double>(x.data() + size_t(col) * size_t(n_pairs),
                                             size_t(n_pairs)),
                     config.gbdt.max_bins);
    }

    std::vector<std::vector<int>> combo_phys(static_cast<size_t>(n_combos));
    for (int ci = 0; ci < n_combos; ++ci)
      for (int col : schema.family_columns(config.combos[size_t(ci)])) {
        const int p = data.phys_of_logical[size_t(col)];
        if (combo_phys[size_t(ci)].empty() || combo_phys[size_t(ci)].back() != p)
          combo_phys[size_t(ci)].push_back(p);
      }

    std::vector<uint32_t> perm(static_cast<size_t>(n_pairs));
    for (int si = 0; si < ns; ++si) {
      std::iota(perm.begin(), perm.end(), 0u);
      Rng srng(derive_seed(config.master_seed, {2, uint64_t(di), uint64_t(si)}));
      srng.shuffle(perm);
      std::vector<uint32_t> train(perm.begin(), perm.begin() + n_train);
      std::vector<uint32_t> test(perm.begin() + n_train, perm.end());
      std::sort(train.begin(), train.end());
      std::sort(test.begin(), test.end());

      if (used.gf && !config.gf_full_graph) {
        // Test positives must not leak into the graph the topology features
        // are computed from.
        std::unordered_set<uint64_t> drop;
        for (uint32_t r : test)
          if (pairs[r].label != 0) drop.insert(pair_key(g.n_nodes(), pairs[r].u, pairs[r].v));
        std::vector<std::pair<int64_t, int64_t>> kept;
        kept.reserve(g.edges().size() - drop.size());
        for (const auto& e : g.edges())
          if (!drop.contains(pair_key(g.n_nodes(), e.first, e.second))) kept.push_back(e);
        const SocialGraph g_split = SocialGraph::from_edges(g.n_nodes(), kept);
        fill_gf_columns(pairs, g_split, schema, x);
        for (int col : gf_cols)
          rebin_column(data, data.phys_of_logical[size_t(col)],
                       std::span<const double>(x.data() + size_t(col) * size_t(n_pairs),
                                               size_t(n_pairs)),
                       config.gbdt.max_bins);
      }

      std::vector<double> y_train(train.size());
      std::vector<uint8_t> train_labels(train.size());
      for (size_t k = 0; k < train.size(); ++k) {
        y_train[k] = double(pairs[train[k]].label);
        train_labels[k] = pairs[train[k]].label;
      }
      std::vector<uint8_t> test_labels(test.size());
      for (size_t k = 0; k < test.size(); ++k) test_labels[k] = pairs[test[k]].label;

      for (int ci = 0; ci < n_combos; ++ci) {
        const GbdtModel model =
            train_on_binned(data, combo_phys[size_t(ci)], train, y_train, config.gbdt);
        const std::vector<double> margins = predict_margin(model, x, n_pairs, test);
        std::vector<uint8_t> preds(test.size());
        for (size_t k = 0; k < test.size(); ++k) preds[k] = margins[k] > 0.0 ? 1 : 0;
        f1_slots[slot(ci, di, si)] = f1(test_labels, preds);

        for (int rf = 0; rf < 3; ++rf) {
          const int f = kRepFeatures[size_t(rf)];
          for (int gi = 0; gi < 3; ++gi) {
            const Group target = Group(gi);
            std::vector<uint8_t> sub_labels, sub_preds;
            for (size_t k = 0; k < test.size(); ++k) {
              const auto& p = pairs[test[k]];
              const bool u_in = table.group(f, p.u) == target;
              const bool v_in = table.group(f, p.v) == target;
              if (config.group_rule_both ? (u_in && v_in) : (u_in || v_in)) {
                sub_labels.push_back(test_labels[k]);
                sub_preds.push_back(preds[k]);
              }
            }
            const size_t gs = slot(ci, di, si) * 9 + size_t(rf) * 3 + size_t(gi);
            if (!sub_labels.empty()) {
              group_vals[gs] = f1(sub_labels, sub_preds);
              group_present[gs] = 1;
            }
          }
        }

        const std::vector<double> imp = feature_importance(model);
        double* acc = imp_slots.data() + (size_t(ci) * size_t(nd) + size_t(di)) * size_t(n_cols);
        for (int c = 0; c < n_cols; ++c) acc[c] += imp[size_t(c)];
      }

      const std::vector<uint8_t> bl = stratified_random(
          train_labels, test.size(),
          derive_seed(config.master_seed, {3, uint64_t(di), uint64_t(si)}));
      baseline_slots[size_t(di) * size_t(ns) + size_t(si)] = f1(test_labels, bl);
    }
  };

  std::atomic<int> next_dataset{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&]() {
    for (;;) {
      const int di = next_dataset.fetch_add(1);
      if (di >= nd) return;
      try {
        run_dataset(di);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next_dataset.store(nd);
        return;
      }
    }
  };
  const int n_threads = std::min(config.jobs, nd);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(size_t(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (err) std::rethrow_exception(err);

  ExperimentReport rep;
  rep.schema = schema;
  for (const auto& c : config.combos) rep.combo_names.push_back(c.name());

  const int n_runs = nd * ns;
  auto mean_std = [](std::span<const double> vals) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= double(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = vals.size() > 1 ? std::sqrt(ss / double(vals.size() - 1)) : 0.0;
    return std::pair<double, double>(mean, sd);
  };

  for (int ci = 0; ci < n_combos; ++ci) {
    for (int di = 0; di < nd; ++di)
      for (int si = 0; si < ns; ++si)
        rep.runs.push_back({ci, di, si, f1_slots[slot(ci, di, si)]});
    const auto [mean, sd] = mean_std(
        std::span<const double>(f1_slots.data() + slot(ci, 0, 0), size_t(n_runs)));
    rep.mean_f1.push_back(mean);
    rep.std_f1.push_back(sd);
  }
  for (int di = 0; di < nd; ++di)
    for (int si = 0; si < ns; ++si)
      rep.runs.push_back({-1, di, si, baseline_slots[size_t(di) * size_t(ns) + size_t(si)]});
  std::tie(rep.baseline_mean, rep.baseline_std) = mean_std(baseline_slots);

  for (int rf = 0; rf < 3; ++rf)
    for (int gi = 0; gi < 3; ++gi) {
      GroupF1Cell cell;
      cell.feature = kFeatureNames[size_t(kRepFeatures[size_t(rf)])];
      cell.group = Group(gi);
      for (int ci = 0; ci < n_combos; ++ci) {
        double sum = 0.0;
        int count = 0;
        for (int di = 0; di < nd; ++di)
          for (int si = 0; si < ns; ++si) {
            const size_t gs = slot(ci, di, si) * 9 + size_t(rf) * 3 + size_t(gi);
            if (group_present[gs]) {
              sum += group_vals[gs];
              ++count;
            }
          }
        cell.mean_per_combo.push_back(count > 0 ? sum / double(count) : 0.0);
        cell.runs_per_combo.push_back(count);
      }
      rep.group_f1.push_back(std::move(cell));
    }

  for (int ci = 0; ci < n_combos; ++ci) {
    std::vector<double> mean_imp(size_t(n_cols), 0.0);
    for (int di = 0; di < nd; ++di) {
      const double* acc = imp_slots.data() + (size_t(ci) * size_t(nd) + size_t(di)) * size_t(n_cols);
      for (int c = 0; c < n_cols; ++c) mean_imp[size_t(c)] += acc[c];
    }
    for (double& v : mean_imp) v /= double(n_runs);

    std::vector<std::pair<std::string, double>> blocks;
    double fam_sum[3] = {0.0, 0.0, 0.0};
    double letter_sum[3] = {0.0, 0.0, 0.0};  // M, N, D
    for (int col : schema.family_columns(config.combos[size_t(ci)])) {
      const SchemaColumn& sc = schema.columns[size_t(col)];
      auto it = std::find_if(blocks.begin(), blocks.end(),
                             [&](const auto& b) { return b.first == sc.block; });
      if (it == blocks.end())
        blocks.emplace_back(sc.block, mean_imp[size_t(col)]);
      else
        it->second += mean_imp[size_t(col)];
      fam_sum[size_t(sc.family)] += mean_imp[size_t(col)];
      if (sc.family == Family::mndf) {
        const char b = sc.block[0];
        letter_sum[b == 'M' ? 0 : b == 'N' ? 1 : 2] += mean_imp[size_t(col)];
      }
    }
    const std::string combo_name = rep.combo_names[size_t(ci)];
    for (const auto& [name, score] : blocks)
      rep.importance.push_back({combo_name, "block", name, score});
    for (Family f : kFamilyOrder)
      if (config.combos[size_t(ci)].has(f))
        rep.importance.push_back({combo_name, "family", family_tag(f), fam_sum[size_t(f)]});
    if (config.combos[size_t(ci)].mndf) {
      rep.importance.push_back({combo_name, "family", "M", letter_sum[0]});
      rep.importance.push_back({combo_name, "family", "N", letter_sum[1]});
      rep.importance.push_back({combo_name, "family", "D", letter_sum[2]});
    }
  }
  return rep;
}

void save_experiment_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto combo_name = [&](int ci) {
    return ci < 0 ? std::string("baseline") : report.combo_names[size_t(ci)];
  };
  {
    tsv::Writer out(out_dir / "results.tsv");
    out.field("feature_set");
    out.field("dataset");
    out.field("split");
    out.field("f1");
    out.end_row();
    for (const auto& r : report.runs) {
      out.field(combo_name(r.combo));
      out.field(int64_t(r.dataset));
      out.field(int64_t(r.split));
      out.field(r.f1);
      out.end_row();
    }
    out.close();
  }
  {
    tsv::Writer out(out_dir / "summary.tsv");
    out.field("feature_set");
    out.field("n_runs");
    out.field("mean_f1");
    out.field("std_f1");
    out.end_row();
    const size_t n_runs = report.combo_names.empty()
                              ? 0
                              : report.runs.size() / (report.combo_names.size() + 1);
    for (size_t ci = 0; ci < report.combo_names.size(); ++ci) {
      out.field(report.combo_names[ci]);
      out.field(uint64_t(n_runs));
      out.field(report.mean_f1[ci]);
      out.field(report.std_f1[ci]);
      out.end_row();
    }
    out.field("baseline");
    out.field(uint64_t(n_runs));
    out.field(report.baseline_mean);
    out.field(report.baseline_std);
    out.end_row();
    out.close();
  }
  {
    tsv::Writer out(out_dir / "groups.tsv");
    out.field("feature");
    out.field("group");
    out.field("feature_set");
    out.field("n_runs");
    out.field("mean_f1");
    out.end_row();
    for (const auto& cell : report.group_f1)
      for (size_t ci = 0; ci < cell.mean_per_combo.size(); ++ci) {
        out.field(cell.feature);
        out.field(group_name(cell.group));
        out.field(report.combo_names[ci]);
        out.field(int64_t(cell.runs_per_combo[ci]));
        out.field(cell.mean_per_combo[ci]);
        out.end_row();
      }
    out.close();
  }
  {
    tsv::Writer out(out_dir / "importance.tsv");
    out.field("feature_set");
    out.field("scope");
    out.field("name");
    out.field("score");
    out.end_row();
    for (const auto& e : report.importance) {
      out.field(e.combo);
      out.field(e.scope);
      out.field(e.name);
      out.field(e.score);
      out.end_row();
    }
    out.close();
  }
}

}  // namespace homnet
