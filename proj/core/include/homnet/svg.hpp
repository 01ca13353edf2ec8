#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace homnet::svg {

// Hand-rolled, dependency-free SVG emitters. Every plot the pipeline writes
// also has a TSV twin, so these only need to be good enough to eyeball.
// Output is deterministic: fixed layout, fixed number formatting.

/// Grid of shaded cells with per-cell value labels.
std::string heatmap(const std::vector<std::vector<double>>& values,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title);

/// Two overlaid histograms sharing a binned range (counts normalized).
std::string histogram_pair(const std::vector<int64_t>& counts_a,
                           const std::vector<int64_t>& counts_b, double lo, double hi,
                           const std::string& label_a, const std::string& label_b,
                           const std::string& title);

/// Horizontal bars around a zero axis; labels on the left, values on bars.
std::string bar_chart(const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::string& title);

void write_file(const std::string& content, const std::filesystem::path& path);

}  // namespace homnet::svg
