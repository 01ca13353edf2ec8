#include "homnet/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "homnet/errors.hpp"

namespace homnet {

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

namespace {

double midpoint(double a, double b) { return a + (b - a) / 2.0; }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

constexpr double kMinGain = 1e-12;

std::vector<double> numeric_cuts(const std::vector<double>& sorted, int max_bins) {
  std::vector<double> distinct;
  for (double v : sorted)
    if (distinct.empty() || v != distinct.back()) distinct.push_back(v);

  std::vector<double> cuts;
  if (int64_t(distinct.size()) <= int64_t(max_bins)) {
    for (size_t i = 0; i + 1 < distinct.size(); ++i)
      cuts.push_back(midpoint(distinct[i], distinct[i + 1]));
    return cuts;
  }
  // Quantile cuts over the value distribution, deduplicated.
  const size_t n = sorted.size();
  for (int b = 1; b < max_bins; ++b) {
    size_t pos = size_t(int64_t(b) * int64_t(n) / max_bins);
    pos = std::clamp(pos, size_t{1}, n - 1);
    if (sorted[pos - 1] < sorted[pos]) {
      const double cut = midpoint(sorted[pos - 1], sorted[pos]);
      if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
    }
  }
  if (cuts.empty()) {
    // Heavy ties swallowed every quantile boundary; cut between distinct
    // values instead.
    for (int b = 1; b < max_bins; ++b) {
      const size_t i = size_t(int64_t(b) * int64_t(distinct.size()) / max_bins);
      if (i < 1 || i >= distinct.size()) continue;
      const double cut = midpoint(distinct[i - 1], distinct[i]);
      if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
    }
  }
  return cuts;
}

}  // namespace

BinnedDataset bin_dataset(std::span<const double> x, int64_t n_rows, int n_cols, int max_bins,
                          std::span<const std::pair<int, int>> onehot_blocks) {
  if (n_rows < 1 || n_cols < 1) throw DataError("bin_dataset: empty matrix");
  if (int64_t(x.size()) != n_rows * int64_t(n_cols)) throw DataError("bin_dataset: size mismatch");
  if (max_bins < 2 || max_bins > 256) throw ConfigError("max_bins must be in [2, 256]");

  BinnedDataset d;
  d.n_rows = n_rows;
  d.n_logical = n_cols;
  d.phys_of_logical.assign(size_t(n_cols), -1);

  std::vector<int> block_of(size_t(n_cols), -1);
  for (size_t bi = 0; bi < onehot_blocks.size(); ++bi) {
    const auto [start, size] = onehot_blocks[bi];
    if (start < 0 || size < 2 || size > 255 || start + size > n_cols)
      throw ConfigError("invalid one-hot block");
    for (int c = start; c < start + size; ++c) {
      if (block_of[size_t(c)] != -1) throw ConfigError("overlapping one-hot blocks");
      block_of[size_t(c)] = int(bi);
    }
  }

  std::vector<double> sorted;
  for (int c = 0; c < n_cols; ++c) {
    if (block_of[size_t(c)] != -1) {
      const auto [start, size] = onehot_blocks[size_t(block_of[size_t(c)])];
      if (c != start) continue;  // whole block handled at its first column
      BinnedDataset::PhysCol pc;
      pc.onehot = true;
      pc.logical = start;
      pc.n_bins = size;
      const int phys = int(d.cols.size());
      for (int l = 0; l < size; ++l) d.phys_of_logical[size_t(start + l)] = phys;
      d.cols.push_back(std::move(pc));
      d.codes.resize(d.codes.size() + size_t(n_rows));
      uint8_t* code = d.codes.data() + size_t(phys) * size_t(n_rows);
      for (int64_t r = 0; r < n_rows; ++r) {
        int level = -1;
        for (int l = 0; l < size; ++l) {
          const double v = x[size_t(start + l) * size_t(n_rows) + size_t(r)];
          if (v == 0.0) continue;
          if (v != 1.0 || level != -1) throw DataError("one-hot block row is not one-hot");
          level = l;
        }
        if (level == -1) throw DataError("one-hot block row is not one-hot");
        code[size_t(r)] = uint8_t(level);
      }
      continue;
    }

    const double* col = x.data() + size_t(c) * size_t(n_rows);
    for (int64_t r = 0; r < n_rows; ++r)
      if (!std::isfinite(col[r])) throw DataError("non-finite feature value");
    sorted.assign(col, col + n_rows);
    std::sort(sorted.begin(), sorted.end());

    BinnedDataset::PhysCol pc;
    pc.logical = c;
    pc.cuts = numeric_cuts(sorted, max_bins);
    pc.n_bins = int(pc.cuts.size()) + 1;
    const int phys = int(d.cols.size());
    d.phys_of_logical[size_t(c)] = phys;
    d.codes.resize(d.codes.size() + size_t(n_rows));
    uint8_t* code = d.codes.data() + size_t(phys) * size_t(n_rows);
    for (int64_t r = 0; r < n_rows; ++r)
      code[size_t(r)] =
          uint8_t(std::lower_bound(pc.cuts.begin(), pc.cuts.end(), col[r]) - pc.cuts.begin());
    d.cols.push_back(std::move(pc));
  }
  return d;
}

void rebin_column(BinnedDataset& data, int phys, std::span<const double> values, int max_bins) {
  if (phys < 0 || size_t(phys) >= data.cols.size()) throw ConfigError("rebin_column: bad column");
  if (int64_t(values.size()) != data.n_rows) throw DataError("rebin_column: size mismatch");
  if (max_bins < 2 || max_bins > 256) throw ConfigError("max_bins must be in [2, 256]");
  BinnedDataset::PhysCol& pc = data.cols[size_t(phys)];
  if (pc.onehot) throw ConfigError("rebin_column: column is categorical");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("non-finite feature value");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  pc.cuts = numeric_cuts(sorted, max_bins);
  pc.n_bins = int(pc.cuts.size()) + 1;
  uint8_t* code = data.codes.data() + size_t(phys) * size_t(data.n_rows);
  for (int64_t r = 0; r < data.n_rows; ++r)
    code[size_t(r)] = uint8_t(std::lower_bound(pc.cuts.begin(), pc.cuts.end(), values[size_t(r)]) -
                              pc.cuts.begin());
}

namespace {

struct NodeState {
  uint32_t begin = 0;
  uint32_t end = 0;
  double g = 0.0;
  double h = 0.0;
  int depth = 0;
  int tree_index = 0;
  int hist = -1;  // -1: this node is already known to be a leaf
};

struct SplitChoice {
  double gain = kMinGain;
  int pi = -1;   // index into the physical column subset
  int bin = -1;  // numeric: last bin going left; onehot: isolated (right) level
  double gl = 0.0;
  double hl = 0.0;
};

}  // namespace

GbdtModel train_on_binned(const BinnedDataset& data, std::span<const int> phys_cols,
                          std::span<const uint32_t> rows, std::span<const double> y,
                          const GbdtParams& params) {
  const size_t n = rows.size();
  if (n < 2) throw DataError("train_gbdt: need at least 2 instances");
  if (y.size() != n) throw DataError("train_gbdt: labels/rows size mismatch");
  if (params.n_rounds < 1 || params.max_depth < 1 || params.learning_rate <= 0.0 ||
      params.l2 < 0.0 || params.min_child_weight < 0.0)
    throw ConfigError("train_gbdt: invalid parameters");
  double n_pos = 0.0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw DataError("train_gbdt: labels must be 0 or 1");
    n_pos += v;
  }
  if (n_pos == 0.0 || n_pos == double(n)) throw DataError("train_gbdt: single-class dataset");
  for (int p : phys_cols)
    if (p < 0 || size_t(p) >= data.cols.size()) throw ConfigError("train_gbdt: bad column index");
  for (uint32_t r : rows)
    if (int64_t(r) >= data.n_rows) throw DataError("train_gbdt: row index out of range");

  // Gather the training rows' codes once so the hot loop sees a dense local
  // matrix indexed by training position.
  const size_t n_phys = phys_cols.size();
  std::vector<uint8_t> lcodes(n_phys * n);
  std::vector<size_t> hist_off(n_phys);
  size_t total_bins = 0;
  for (size_t pi = 0; pi < n_phys; ++pi) {
    hist_off[pi] = total_bins;
    total_bins += size_t(data.cols[size_t(phys_cols[pi])].n_bins);
    const uint8_t* src = data.codes.data() + size_t(phys_cols[pi]) * size_t(data.n_rows);
    uint8_t* dst = lcodes.data() + pi * n;
    for (size_t k = 0; k < n; ++k) dst[k] = src[rows[k]];
  }

  GbdtModel model;
  model.n_columns = data.n_logical;
  model.split_gain.assign(size_t(data.n_logical), 0.0);
  const double p0 = std::clamp(n_pos / double(n), 1e-12, 1.0 - 1e-12);
  model.base_margin = std::log(p0 / (1.0 - p0));
  model.trees.reserve(size_t(params.n_rounds));
  model.train_loss.reserve(size_t(params.n_rounds));

  const double lambda = params.l2;
  const double mcw = params.min_child_weight;
  const double lr = params.learning_rate;

  std::vector<double> margin(n, model.base_margin);
  std::vector<float> gh(2 * n);
  std::vector<uint32_t> order(n), scratch(n);

  std::vector<std::vector<double>> pool;
  std::vector<int> free_hists;
  auto alloc_hist = [&]() {
    if (!free_hists.empty()) {
      const int id = free_hists.back();
      free_hists.pop_back();
      std::fill(pool[size_t(id)].begin(), pool[size_t(id)].end(), 0.0);
      return id;
    }
    pool.emplace_back(2 * total_bins, 0.0);
    return int(pool.size()) - 1;
  };

  auto accumulate = [&](const NodeState& node, double* hist) {
    const uint32_t* ord = order.data();
    for (size_t pi = 0; pi < n_phys; ++pi) {
      const uint8_t* code = lcodes.data() + pi * n;
      double* hp = hist + 2 * hist_off[pi];
      for (uint32_t k = node.begin; k < node.end; ++k) {
        const uint32_t idx = ord[k];
        const unsigned b = code[idx];
        hp[2 * b] += double(gh[2 * idx]);
        hp[2 * b + 1] += double(gh[2 * idx + 1]);
      }
    }
  };

  auto find_best = [&](const NodeState& node) {
    SplitChoice best;
    const double* hist = pool[size_t(node.hist)].data();
    const double parent_score = node.g * node.g / (node.h + lambda);
    for (size_t pi = 0; pi < n_phys; ++pi) {
      const auto& pc = data.cols[size_t(phys_cols[pi])];
      const int nb = pc.n_bins;
      if (nb < 2) continue;
      const double* hp = hist + 2 * hist_off[pi];
      if (pc.onehot) {
        for (int l = 0; l < nb; ++l) {
          const double gr = hp[2 * l], hr = hp[2 * l + 1];
          const double gl = node.g - gr, hl = node.h - hr;
          if (hr < mcw || hl < mcw) continue;
          const double gain =
              0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score);
          if (gain > best.gain) best = SplitChoice{gain, int(pi), l, gl, hl};
        }
      } else {
        double gl = 0.0, hl = 0.0;
        for (int t = 0; t < nb - 1; ++t) {
          gl += hp[2 * t];
          hl += hp[2 * t + 1];
          if (hl < mcw) continue;
          const double gr = node.g - gl, hr = node.h - hl;
          if (hr < mcw) break;  // hr only shrinks from here on
          const double gain =
              0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score);
          if (gain > best.gain) best = SplitChoice{gain, int(pi), t, gl, hl};
        }
      }
    }
    return best;
  };

  for (int round = 0; round < params.n_rounds; ++round) {
    double g_total = 0.0, h_total = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double p = sigmoid(margin[k]);
      const double g = p - y[k];
      const double h = std::max(p * (1.0 - p), 1e-16);
      gh[2 * k] = float(g);
      gh[2 * k + 1] = float(h);
      g_total += double(float(g));
      h_total += double(float(h));
    }
    std::iota(order.begin(), order.end(), uint32_t{0});

    std::vector<TreeNode> tree(1);
    NodeState root;
    root.begin = 0;
    root.end = uint32_t(n);
    root.g = g_total;
    root.h = h_total;
    if (params.max_depth > 0 && n >= 2 && root.h >= 2.0 * mcw) {
      root.hist = alloc_hist();
      accumulate(root, pool[size_t(root.hist)].data());
    }

    std::vector<NodeState> level{root}, next;
    while (!level.empty()) {
      next.clear();
      for (NodeState& node : level) {
        SplitChoice best;
        if (node.hist >= 0) best = find_best(node);
        if (node.hist < 0 || best.pi < 0) {
          TreeNode& leaf = tree[size_t(node.tree_index)];
          leaf.col = -1;
          leaf.value = -node.g / (node.h + lambda) * lr;
          for (uint32_t k = node.begin; k < node.end; ++k) margin[order[k]] += leaf.value;
          if (node.hist >= 0) free_hists.push_back(node.hist);
          continue;
        }

        const auto& pc = data.cols[size_t(phys_cols[size_t(best.pi)])];
        const int32_t left_index = int32_t(tree.size());
        const int32_t right_index = left_index + 1;
        {
          TreeNode& tn = tree[size_t(node.tree_index)];
          if (pc.onehot) {
            tn.col = pc.logical + best.bin;  // x[col] <= 0.5 keeps the other levels left
            tn.threshold = 0.5;
          } else {
            tn.col = pc.logical;
            tn.threshold = pc.cuts[size_t(best.bin)];
          }
          tn.left = left_index;
          tn.right = right_index;
          model.split_gain[size_t(tn.col)] += best.gain;
        }
        tree.emplace_back();  // invalidates references into the tree
        tree.emplace_back();

        // Stable partition of the node's row segment.
        const uint8_t* code = lcodes.data() + size_t(best.pi) * n;
        uint32_t li = node.begin;
        size_t ri = 0;
        if (pc.onehot) {
          const uint8_t lvl = uint8_t(best.bin);
          for (uint32_t k = node.begin; k < node.end; ++k) {
            const uint32_t idx = order[k];
            if (code[idx] != lvl)
              order[li++] = idx;
            else
              scratch[ri++] = idx;
          }
        } else {
          const uint8_t t = uint8_t(best.bin);
          for (uint32_t k = node.begin; k < node.end; ++k) {
            const uint32_t idx = order[k];
            if (code[idx] <= t)
              order[li++] = idx;
            else
              scratch[ri++] = idx;
          }
        }
        std::copy(scratch.begin(), scratch.begin() + long(ri), order.begin() + li);

        NodeState l, r;
        l.begin = node.begin;
        l.end = li;
        l.g = best.gl;
        l.h = best.hl;
        l.depth = node.depth + 1;
        l.tree_index = left_index;
        r.begin = li;
        r.end = node.end;
        r.g = node.g - best.gl;
        r.h = node.h - best.hl;
        r.depth = node.depth + 1;
        r.tree_index = right_index;

        auto may_split = [&](const NodeState& c) {
          return c.depth < params.max_depth && c.end - c.begin >= 2 && c.h >= 2.0 * mcw;
        };
        const bool need_l = may_split(l), need_r = may_split(r);
        if (need_l || need_r) {
          NodeState& small = (l.end - l.begin) <= (r.end - r.begin) ? l : r;
          NodeState& big = (l.end - l.begin) <= (r.end - r.begin) ? r : l;
          const bool need_small = &small == &l ? need_l : need_r;
          const bool need_big = &big == &l ? need_l : need_r;
          small.hist = alloc_hist();
          accumulate(small, pool[size_t(small.hist)].data());
          if (need_big) {
            double* ph = pool[size_t(node.hist)].data();
            const double* sh = pool[size_t(small.hist)].data();
            for (size_t i = 0; i < 2 * total_bins; ++i) ph[i] -= sh[i];
            big.hist = node.hist;
          } else {
            free_hists.push_back(node.hist);
          }
          if (!need_small) {
            free_hists.push_back(small.hist);
            small.hist = -1;
          }
        } else {
          free_hists.push_back(node.hist);
        }
        next.push_back(l);
        next.push_back(r);
      }
      level.swap(next);
    }

    double loss = 0.0;
    for (size_t k = 0; k < n; ++k)
      loss += y[k] != 0.0 ? softplus(-margin[k]) : softplus(margin[k]);
    model.train_loss.push_back(loss / double(n));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

GbdtModel train_gbdt(std::span<const double> x, int64_t n_rows, int n_cols,
                     std::span<const double> y, const GbdtParams& params,
                     std::span<const std::pair<int, int>> onehot_blocks) {
  const BinnedDataset d = bin_dataset(x, n_rows, n_cols, params.max_bins, onehot_blocks);
  std::vector<int> phys(d.cols.size());
  std::iota(phys.begin(), phys.end(), 0);
  std::vector<uint32_t> rows(static_cast<size_t>(n_rows));
  std::iota(rows.begin(), rows.end(), uint32_t{0});
  return train_on_binned(d, phys, rows, y, params);
}

double GbdtModel::predict_margin(std::span<const double> x) const {
  if (int(x.size()) != n_columns) throw DataError("predict: feature count mismatch");
  double m = base_margin;
  for (const auto& tree : trees) {
    int32_t i = 0;
    while (tree[size_t(i)].col >= 0) {
      const TreeNode& tn = tree[size_t(i)];
      i = x[size_t(tn.col)] <= tn.threshold ? tn.left : tn.right;
    }
    m += tree[size_t(i)].value;
  }
  return m;
}

double GbdtModel::predict_proba(std::span<const double> x) const {
  return sigmoid(predict_margin(x));
}

std::vector<double> predict_margin(const GbdtModel& model, std::span<const double> x,
                                   int64_t n_rows) {
  if (int64_t(x.size()) != n_rows * int64_t(model.n_columns))
    throw DataError("predict: matrix size mismatch");
  std::vector<double> out(size_t(n_rows), model.base_margin);
  for (const auto& tree : model.trees) {
    for (int64_t r = 0; r < n_rows; ++r) {
      int32_t i = 0;
      while (tree[size_t(i)].col >= 0) {
        const TreeNode& tn = tree[size_t(i)];
        i = x[size_t(tn.col) * size_t(n_rows) + size_t(r)] <= tn.threshold ? tn.left : tn.right;
      }
      out[size_t(r)] += tree[size_t(i)].value;
    }
  }
  return out;
}

std::vector<double> predict_margin(const GbdtModel& model, std::span<const double> x,
                                   int64_t n_rows, std::span<const uint32_t> rows) {
  if (int64_t(x.size()) != n_rows * int64_t(model.n_columns))
    throw DataError("predict: matrix size mismatch");
  std::vector<double> out(rows.size(), model.base_margin);
  for (const auto& tree : model.trees) {
    for (size_t k = 0; k < rows.size(); ++k) {
      const size_t r = rows[k];
      int32_t i = 0;
      while (tree[size_t(i)].col >= 0) {
        const TreeNode& tn = tree[size_t(i)];
        i = x[size_t(tn.col) * size_t(n_rows) + r] <= tn.threshold ? tn.left : tn.right;
      }
      out[k] += tree[size_t(i)].value;
    }
  }
  return out;
}

std::vector<double> feature_importance(const GbdtModel& model) {
  std::vector<double> imp = model.split_gain;
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

}  // namespace homnet
