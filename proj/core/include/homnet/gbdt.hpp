#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace homnet {

struct GbdtParams {
  int n_rounds = 100;
  int max_depth = 6;
  double learning_rate = 0.3;
  double l2 = 1.0;              // leaf penalty lambda
  double min_child_weight = 1.0;
  int max_bins = 256;           // histogram resolution per numeric column
};

struct TreeNode {
  int32_t col = -1;        // column tested; -1 marks a leaf
  int32_t left = -1;
  int32_t right = -1;
  double threshold = 0.0;  // x[col] <= threshold goes left
  double value = 0.0;      // leaf contribution, learning rate included
};

struct GbdtModel {
  double base_margin = 0.0;
  int n_columns = 0;
  std::vector<std::vector<TreeNode>> trees;
  std::vector<double> train_loss;  // mean logistic loss after each round
  std::vector<double> split_gain;  // per column, summed over executed splits

  double predict_margin(std::span<const double> x) const;  // one row
  double predict_proba(std::span<const double> x) const;
};

/// Histogram-binned copy of a column-major matrix. One-hot blocks (given as
/// (first_column, size) with exactly one nonzero 0/1 entry per row) collapse
/// into a single categorical column whose candidate splits isolate one
/// level — the same split space the separate 0/1 columns would offer.
struct BinnedDataset {
  struct PhysCol {
    bool onehot = false;
    int logical = 0;            // first backing column
    int n_bins = 0;
    std::vector<double> cuts;   // numeric: bin b <= t  <=>  raw <= cuts[t]
  };

  int64_t n_rows = 0;
  int n_logical = 0;
  std::vector<PhysCol> cols;
  std::vector<uint8_t> codes;   // codes[phys * n_rows + row]
  std::vector<int> phys_of_logical;
};

BinnedDataset bin_dataset(std::span<const double> x, int64_t n_rows, int n_cols,
                          int max_bins, std::span<const std::pair<int, int>> onehot_blocks = {});

/// Recomputes one numeric physical column's cuts and codes in place, for
/// columns whose values change between training runs.
void rebin_column(BinnedDataset& data, int phys, std::span<const double> values, int max_bins);

/// Boosted trees on logistic loss over a row subset and physical-column
/// subset of a prebinned dataset. Deterministic; rejects single-class labels.
GbdtModel train_on_binned(const BinnedDataset& data, std::span<const int> phys_cols,
                          std::span<const uint32_t> rows, std::span<const double> y,
                          const GbdtParams& params);

/// Convenience path: bins `x` (column-major, x[col * n_rows + row]) and
/// trains on every row and column.
GbdtModel train_gbdt(std::span<const double> x, int64_t n_rows, int n_cols,
                     std::span<const double> y, const GbdtParams& params = {},
                     std::span<const std::pair<int, int>> onehot_blocks = {});

/// Margins for each row of a column-major matrix with the training schema.
std::vector<double> predict_margin(const GbdtModel& model, std::span<const double> x,
                                   int64_t n_rows);

/// Margins for a row subset of a column-major matrix.
std::vector<double> predict_margin(const GbdtModel& model, std::span<const double> x,
                                   int64_t n_rows, std::span<const uint32_t> rows);

/// Per-column split gains normalized to sum 1 (all zeros if nothing split).
std::vector<double> feature_importance(const GbdtModel& model);

double sigmoid(double margin);

}  // namespace homnet
