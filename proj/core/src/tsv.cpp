#include "homnet/tsv.hpp"

#include <charconv>
#include <cstdio>

#include "homnet/errors.hpp"

namespace homnet::tsv {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<int64_t> parse_int(std::string_view field) {
  int64_t v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view field) {
  double v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  for (;;) {
    size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

LineReader::LineReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {}

bool LineReader::next(std::string& line) {
  if (!std::getline(in_, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_number_;
  return true;
}

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw DataError("cannot open for writing: " + path.string());
}

Writer::~Writer() { close(); }

void Writer::field(std::string_view s) {
  if (!line_.empty()) line_ += '\t';
  line_ += s;
}

void Writer::field(int64_t v) { field(std::string_view(std::to_string(v))); }
void Writer::field(uint64_t v) { field(std::string_view(std::to_string(v))); }
void Writer::field(double v) { field(std::string_view(format_double(v))); }

void Writer::end_row() {
  line_ += '\n';
  out_ << line_;
  line_.clear();
}

void Writer::row(std::span<const std::string> fields) {
  for (const auto& f : fields) field(std::string_view(f));
  end_row();
}

void Writer::close() {
  if (out_.is_open()) {
    out_.flush();
    if (!out_) throw DataError("write failed: " + path_.string());
    out_.close();
  }
}

uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for checksum: " + path.string());
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= uint8_t(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace homnet::tsv
