#include "homnet/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "homnet/errors.hpp"
#include "homnet/tsv.hpp"

namespace homnet {

namespace {

void note_error(LoadReport* report, size_t line_no, std::string_view line, std::string_view why) {
  if (!report) return;
  if (report->first_errors.size() < 5) {
    report->first_errors.push_back("line " + std::to_string(line_no) + ": " + std::string(why) +
                                   ": " + std::string(line.substr(0, 120)));
  }
}

tsv::LineReader open_or_throw(const std::filesystem::path& path) {
  tsv::LineReader reader(path);
  if (!reader.ok()) throw DataError("cannot open file: " + path.string());
  return reader;
}

}  // namespace

int64_t EventLog::n_users() const {
  int64_t m = -1;
  for (const auto& e : events) m = std::max(m, e.user);
  return m + 1;
}

int64_t EventLog::n_artists() const {
  int64_t m = -1;
  for (const auto& e : events) m = std::max(m, e.artist);
  return m + 1;
}

int64_t EdgeList::n_nodes() const {
  int64_t m = -1;
  for (auto [a, b] : edges) m = std::max(m, std::max(a, b));
  return m + 1;
}

EventLog load_events(const std::filesystem::path& path, bool header, LoadReport* report) {
  auto reader = open_or_throw(path);
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = LoadReport{};

  EventLog log;
  std::string line;
  bool skip_header = header;
  while (reader.next(line)) {
    if (skip_header) {
      skip_header = false;
      continue;
    }
    if (line.empty()) continue;
    ++rep.rows_total;
    auto fields = tsv::split(line);
    if (fields.size() != 4) {
      ++rep.rows_malformed;
      note_error(report, reader.line_number(), line, "expected 4 fields");
      continue;
    }
    auto u = tsv::parse_int(fields[0]);
    auto a = tsv::parse_int(fields[1]);
    auto t = tsv::parse_int(fields[2]);
    auto ts = tsv::parse_int(fields[3]);
    if (!u || !a || !t || !ts || *u < 0 || *a < 0 || *t < 0 || *ts < 0) {
      ++rep.rows_malformed;
      note_error(report, reader.line_number(), line, "non-numeric or negative field");
      continue;
    }
    log.events.push_back(Event{*u, *a, *t, *ts});
    ++rep.rows_loaded;
  }

  // The percentage guard needs a meaningful denominator; tiny files always
  // load with a report instead of aborting.
  if (rep.rows_total >= 10 && 10 * rep.rows_malformed > rep.rows_total) {
    std::string msg = "more than 10% malformed rows in " + path.string() + " (" +
                      std::to_string(rep.rows_malformed) + "/" + std::to_string(rep.rows_total) + ")";
    for (const auto& e : rep.first_errors) msg += "\n  " + e;
    throw DataError(msg);
  }

  std::stable_sort(log.events.begin(), log.events.end(), [](const Event& x, const Event& y) {
    if (x.user != y.user) return x.user < y.user;
    return x.timestamp < y.timestamp;
  });
  return log;
}

GenreMap load_genre_map(const std::filesystem::path& path, bool header,
                        std::optional<int64_t> n_genres_override, LoadReport* report) {
  auto reader = open_or_throw(path);
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = LoadReport{};

  GenreMap gm;
  int64_t max_genre = -1;
  std::string line;
  bool skip_header = header;
  while (reader.next(line)) {
    if (skip_header) {
      skip_header = false;
      continue;
    }
    if (line.empty()) continue;
    ++rep.rows_total;
    auto fields = tsv::split(line);
    if (fields.size() != 3) {
      ++rep.rows_malformed;
      note_error(report, reader.line_number(), line, "expected 3 fields");
      continue;
    }
    auto a = tsv::parse_int(fields[0]);
    auto g = tsv::parse_int(fields[1]);
    auto w = tsv::parse_double(fields[2]);
    if (!a || !g || !w || *a < 0 || *g < 0 || !std::isfinite(*w)) {
      ++rep.rows_malformed;
      note_error(report, reader.line_number(), line, "non-numeric field");
      continue;
    }
    if (*w < 0) {
      ++rep.rows_rejected;
      note_error(report, reader.line_number(), line, "negative weight");
      continue;
    }
    gm.weights[*a].emplace_back(*g, *w);
    max_genre = std::max(max_genre, *g);
    ++rep.rows_loaded;
  }

  gm.n_genres = n_genres_override.value_or(max_genre + 1);
  if (gm.n_genres < max_genre + 1)
    throw DataError("n_genres override " + std::to_string(gm.n_genres) +
                    " smaller than max genre id " + std::to_string(max_genre));
  for (auto& [artist, list] : gm.weights) std::sort(list.begin(), list.end());
  return gm;
}

EdgeList load_edges(const std::filesystem::path& path, bool header, LoadReport* report) {
  auto reader = open_or_throw(path);
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  rep = LoadReport{};

  EdgeList el;
  std::string line;
  bool skip_header = header;
  while (reader.next(line)) {
    if (skip_header) {
      skip_header = false;
      continue;
    }
    if (line.empty()) continue;
    ++rep.rows_total;
    auto fields = tsv::split(line);
    if (fields.size() != 2) {
      ++rep.rows_malformed;
      note_error(report, reader.line_number(), line, "expected 2 fields");
      continue;
    }
    auto a = tsv::parse_int(fields[0]);
    auto b = tsv::parse_int(fields[1]);
    if (!a || !b || *a < 0 || *b < 0) {
      ++rep.rows_malformed;
      note_error(report, reader.line_number(), line, "non-numeric or negative field");
      continue;
    }
    if (*a == *b) {
      ++rep.rows_rejected;
      note_error(report, reader.line_number(), line, "self-loop");
      continue;
    }
    el.edges.emplace_back(std::min(*a, *b), std::max(*a, *b));
    ++rep.rows_loaded;
  }

  std::sort(el.edges.begin(), el.edges.end());
  auto last = std::unique(el.edges.begin(), el.edges.end());
  rep.duplicates = size_t(el.edges.end() - last);
  rep.rows_loaded -= rep.duplicates;
  el.edges.erase(last, el.edges.end());
  return el;
}

void save_events(const EventLog& log, const std::filesystem::path& path) {
  tsv::Writer w(path);
  for (const auto& e : log.events) {
    w.field(e.user);
    w.field(e.artist);
    w.field(e.track);
    w.field(e.timestamp);
    w.end_row();
  }
  w.close();
}

void save_genre_map(const GenreMap& gm, const std::filesystem::path& path) {
  std::vector<int64_t> artists;
  artists.reserve(gm.weights.size());
  for (const auto& [a, _] : gm.weights) artists.push_back(a);
  std::sort(artists.begin(), artists.end());

  tsv::Writer w(path);
  for (int64_t a : artists) {
    for (const auto& [g, weight] : gm.weights.at(a)) {
      w.field(a);
      w.field(g);
      w.field(weight);
      w.end_row();
    }
  }
  w.close();
}

void save_edges(const EdgeList& el, const std::filesystem::path& path) {
  tsv::Writer w(path);
  for (auto [a, b] : el.edges) {
    w.field(a);
    w.field(b);
    w.end_row();
  }
  w.close();
}

}  // namespace homnet
