#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace homnet::tsv {

/// Shortest decimal form that round-trips the exact double. Locale-free.
std::string format_double(double v);

std::optional<int64_t> parse_int(std::string_view field);
std::optional<double> parse_double(std::string_view field);

/// Splits a line on single tabs. Empty fields are preserved.
std::vector<std::string_view> split(std::string_view line);

/// Line reader that strips one trailing '\r' and tracks line numbers.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  bool next(std::string& line);
  size_t line_number() const { return line_number_; }
  bool ok() const { return in_.is_open(); }

 private:
  std::ifstream in_;
  size_t line_number_ = 0;
};

/// Buffered TSV writer; rows end in '\n', fields joined by '\t'.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  ~Writer();

  void field(std::string_view s);
  void field(int64_t v);
  void field(uint64_t v);
  void field(double v);
  void end_row();
  void row(std::span<const std::string> fields);
  void close();

 private:
  std::ofstream out_;
  std::string line_;
  std::filesystem::path path_;
};

uint64_t fnv1a64_file(const std::filesystem::path& path);

}  // namespace homnet::tsv
