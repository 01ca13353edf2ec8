#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "homnet/graph.hpp"
#include "homnet/rng.hpp"

namespace homnet::test {

/// Self-cleaning scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static uint64_t counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("homnet_" + tag + "_" + std::to_string(++counter) + "_" +
            std::to_string(uint64_t(::getpid())));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
};

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Random simple graph on n nodes with roughly `want` edges (exact when the
/// complete graph allows), as unordered (min,max) pairs.
inline std::vector<std::pair<int64_t, int64_t>> random_edges(int64_t n, int64_t want, Rng& rng) {
  std::set<std::pair<int64_t, int64_t>> picked;
  const int64_t cap = n * (n - 1) / 2;
  const int64_t target = std::min(want, cap);
  int64_t guard = 50 * target + 100;
  while (int64_t(picked.size()) < target && guard-- > 0) {
    const int64_t u = int64_t(rng.uniform_int(uint64_t(n)));
    const int64_t v = int64_t(rng.uniform_int(uint64_t(n)));
    if (u == v) continue;
    picked.insert({std::min(u, v), std::max(u, v)});
  }
  return {picked.begin(), picked.end()};
}

}  // namespace homnet::test
