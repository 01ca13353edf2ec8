#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homnet/features.hpp"
#include "homnet/gbdt.hpp"
#include "homnet/graph.hpp"
#include "homnet/ingest.hpp"

namespace homnet {

enum class Family : uint8_t { mndf = 0, apf = 1, gf = 2 };

struct FamilySet {
  bool mndf = false;
  bool apf = false;
  bool gf = false;

  bool has(Family f) const;
  std::string name() const;  // "MNDF+APF" style
  friend bool operator==(const FamilySet&, const FamilySet&) = default;
};

/// The seven evaluated sets: MNDF, APF, GF, MNDF+APF, MNDF+GF, APF+GF,
/// MNDF+APF+GF.
std::vector<FamilySet> default_combos();
FamilySet parse_family_set(const std::string& name);

struct SchemaColumn {
  enum class Kind : uint8_t { numeric, onehot, binary };

  std::string name;
  Family family = Family::mndf;
  Kind kind = Kind::numeric;
  std::string block;  // reporting group used when aggregating importances
};

struct FeatureSchema {
  int rank = 0;  // profile-factor columns per user (0 when APF absent)
  std::vector<SchemaColumn> columns;
  std::vector<std::pair<int, int>> onehot_blocks;

  int n_columns() const { return int(columns.size()); }
  std::vector<int> family_columns(const FamilySet& families) const;
};

/// Column layout per family:
///   MNDF: 12 per-user values x2, per-feature low/mid/high one-hots x2,
///         12 relative differences, 12 same-group flags (120 columns).
///   APF:  factor row x2 plus their cosine (2*rank + 1 columns).
///   GF:   common neighbors, Jaccard, Adamic-Adar (3 columns).
FeatureSchema build_schema(int rank, const FamilySet& families);

/// Uniformly random non-edges: no self-loops, no duplicates, disjoint from
/// the graph's edges. count above capacity is infeasible.
EdgeList sample_negatives(const SocialGraph& g, int64_t count, uint64_t seed);

/// |(a-b) / ((a+b)/2)|, with 0 when a == b (covers 0/0).
double relative_difference(double a, double b);

struct LabeledPair {
  int64_t u = 0;
  int64_t v = 0;
  uint8_t label = 0;
};

/// One pair's feature vector in schema order. `g_train` is only read for GF
/// columns and may be null otherwise.
std::vector<double> assemble_features(int64_t u, int64_t v, const UserFeatureTable& table,
                                      const Eigen::MatrixXd& w, const SocialGraph* g_train,
                                      const FamilySet& families);

/// Fills a column-major matrix (pairs.size() rows, schema.n_columns() cols)
/// for every column except GF ones, which are split-dependent.
void assemble_static_columns(std::span<const LabeledPair> pairs, const UserFeatureTable& table,
                             const Eigen::MatrixXd& w, const FeatureSchema& schema,
                             std::span<double> x);

/// Fills the GF columns from the given training graph.
void fill_gf_columns(std::span<const LabeledPair> pairs, const SocialGraph& g_train,
                     const FeatureSchema& schema, std::span<double> x);

/// F1 of class 1; 0 when precision + recall is 0.
double f1(std::span<const uint8_t> labels, std::span<const uint8_t> predictions);

/// Baseline: predicts 1 with probability equal to the training positive
/// rate, independently per output instance.
std::vector<uint8_t> stratified_random(std::span<const uint8_t> train_labels, size_t n_out,
                                       uint64_t seed);

struct ExperimentConfig {
  int n_datasets = 10;
  int n_splits = 10;
  double train_fraction = 0.8;
  uint64_t master_seed = 0;
  GbdtParams gbdt{.n_rounds = 60, .max_depth = 5, .max_bins = 64};
  bool gf_full_graph = false;   // keep test positives in the GF graph
  bool group_rule_both = false; // per-group F1 needs both endpoints in group
  std::vector<FamilySet> combos = default_combos();
  int jobs = 1;
};

struct RunResult {
  int combo = 0;  // index into combos; -1 marks the stratified baseline
  int dataset = 0;
  int split = 0;
  double f1 = 0.0;
};

struct GroupF1Cell {
  std::string feature;  // M_G, N_6m, or D_wavg
  Group group = Group::low;
  std::vector<double> mean_per_combo;
  std::vector<int> runs_per_combo;  // runs whose filtered test set was nonempty
};

struct ImportanceEntry {
  std::string combo;
  std::string scope;  // "block" or "family"
  std::string name;
  double score = 0.0;
};

struct ExperimentReport {
  FeatureSchema schema;
  std::vector<std::string> combo_names;
  std::vector<RunResult> runs;  // combo-major, then the baseline runs
  std::vector<double> mean_f1;  // per combo
  std::vector<double> std_f1;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  std::vector<GroupF1Cell> group_f1;  // 3 representative features x 3 groups
  std::vector<ImportanceEntry> importance;
};

/// The full grid: per combo, n_datasets negative-sample datasets x n_splits
/// 80/20 splits, graph features recomputed per split on the training graph.
ExperimentReport run_experiment(const SocialGraph& g, const UserFeatureTable& table,
                                const Eigen::MatrixXd& w, const ExperimentConfig& config);

/// Writes results.tsv, summary.tsv, groups.tsv, and importance.tsv.
void save_experiment_report(const ExperimentReport& report,
                            const std::filesystem::path& out_dir);

}  // namespace homnet
