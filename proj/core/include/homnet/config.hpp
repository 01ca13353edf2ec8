#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homnet/ingest.hpp"
#include "homnet/linkpred.hpp"
#include "homnet/profiles.hpp"

namespace homnet {

inline constexpr const char* kVersion = "0.1.0";

/// Sectioned key=value text: `[section]` headers, `key = value` lines, `#`
/// comments. Entries are addressed as "section.key" and kept sorted so a
/// round-trip through text is deterministic.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse_file(const std::filesystem::path& path);
  static KvConfig parse_string(std::string_view text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  /// Renders `[section]` blocks with sorted keys; parse_string round-trips.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Everything a pipeline run needs, with the defaults the CLI advertises.
struct PipelineConfig {
  std::filesystem::path events_path;
  std::filesystem::path genres_path;
  std::filesystem::path edges_path;
  std::filesystem::path out_dir = "out";
  bool header = false;
  int64_t n_genres = 0;  // 0 = observed max + 1

  NmfParams nmf;
  bool normalize_before_nmf = true;

  int rewire_max_retries = 100;
  int hist_bins = 50;

  ExperimentConfig linkpred;
  SyntheticConfig synth;

  uint64_t master_seed = 0;
  int jobs = 0;  // 0 = all available cores
};

/// Applies every recognized "section.key" entry over the defaults. Unknown
/// keys are an error except in the manifest-owned [inputs]/[manifest]
/// sections, so a manifest can be fed back in as a config.
PipelineConfig pipeline_from_kv(const KvConfig& kv);

/// Full effective-value snapshot (every key emitted).
KvConfig pipeline_to_kv(const PipelineConfig& cfg);

/// Writes the run manifest: the config snapshot plus a [manifest] section
/// (command, version) and an [inputs] section with per-file checksums.
/// Contains no timestamps, so reruns are byte-identical.
void write_manifest(const std::filesystem::path& path, const PipelineConfig& cfg,
                    const std::string& command,
                    const std::vector<std::pair<std::string, std::filesystem::path>>& inputs);

}  // namespace homnet
