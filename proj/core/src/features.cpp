#include "homnet/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "homnet/errors.hpp"
#include "homnet/profiles.hpp"
#include "homnet/tsv.hpp"

namespace homnet {

const char* group_name(Group g) {
  switch (g) {
    case Group::low: return "low";
    case Group::mid: return "mid";
    case Group::high: return "high";
  }
  return "low";
}

Group parse_group(const std::string& s) {
  if (s == "low") return Group::low;
  if (s == "mid") return Group::mid;
  if (s == "high") return Group::high;
  throw DataError("unknown group label '" + s + "'");
}

int64_t window_seconds(Window w) {
  switch (w) {
    case Window::m1: return 30ll * 86400;
    case Window::m6: return 180ll * 86400;
    case Window::m12: return 365ll * 86400;
    case Window::global: break;
  }
  throw ConfigError("the global window has no length");
}

int feature_index(const std::string& name) {
  for (int i = 0; i < kNumFeatures; ++i)
    if (name == kFeatureNames[size_t(i)]) return i;
  throw ConfigError("unknown feature '" + name + "'");
}

namespace {

int64_t earliest_timestamp(const EventLog& log) {
  int64_t t0 = std::numeric_limits<int64_t>::max();
  for (const auto& e : log.events) t0 = std::min(t0, e.timestamp);
  return t0;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

/// Calls fn(user, events) for each user that has events. Events arrive
/// sorted by (user, timestamp), so each user's slice is time-ordered.
template <class Fn>
void for_each_user(const EventLog& log, Fn&& fn) {
  size_t i = 0;
  while (i < log.events.size()) {
    size_t j = i;
    const int64_t u = log.events[i].user;
    while (j < log.events.size() && log.events[j].user == u) ++j;
    fn(u, std::span<const Event>(log.events.data() + i, j - i));
    i = j;
  }
}

}  // namespace

std::vector<double> mainstreaminess(const EventLog& log, Window window) {
  if (log.events.empty()) throw DataError("mainstreaminess: empty event log");
  std::vector<double> out(size_t(log.n_users()), 0.0);

  if (window == Window::global) {
    std::unordered_map<int64_t, double> agg;
    for (const auto& e : log.events) agg[e.artist] += 1.0;
    double agg_sq = 0.0;
    for (const auto& [a, c] : agg) agg_sq += c * c;
    for_each_user(log, [&](int64_t u, std::span<const Event> ev) {
      std::unordered_map<int64_t, double> cnt;
      for (const auto& e : ev) cnt[e.artist] += 1.0;
      double dot = 0.0, sq = 0.0;
      for (const auto& [a, c] : cnt) {
        dot += c * agg.at(a);
        sq += c * c;
      }
      if (sq > 0.0 && agg_sq > 0.0) out[size_t(u)] = clamp01(dot / std::sqrt(sq * agg_sq));
    });
    return out;
  }

  const int64_t len = window_seconds(window);
  const int64_t t0 = earliest_timestamp(log);
  int64_t n_windows = 0;
  for (const auto& e : log.events)
    n_windows = std::max(n_windows, (e.timestamp - t0) / len + 1);

  std::vector<std::unordered_map<int64_t, double>> agg(static_cast<size_t>(n_windows));
  for (const auto& e : log.events) agg[size_t((e.timestamp - t0) / len)][e.artist] += 1.0;
  std::vector<double> agg_sq(size_t(n_windows), 0.0);
  for (size_t w = 0; w < agg.size(); ++w)
    for (const auto& [a, c] : agg[w]) agg_sq[w] += c * c;

  for_each_user(log, [&](int64_t u, std::span<const Event> ev) {
    std::unordered_map<int64_t, double> cnt;
    double sum = 0.0;
    int active = 0;
    size_t i = 0;
    while (i < ev.size()) {
      const int64_t w = (ev[i].timestamp - t0) / len;
      cnt.clear();
      for (; i < ev.size() && (ev[i].timestamp - t0) / len == w; ++i) cnt[ev[i].artist] += 1.0;
      double dot = 0.0, sq = 0.0;
      const auto& aw = agg[size_t(w)];
      for (const auto& [a, c] : cnt) {
        dot += c * aw.at(a);
        sq += c * c;
      }
      if (sq > 0.0 && agg_sq[size_t(w)] > 0.0)
        sum += clamp01(dot / std::sqrt(sq * agg_sq[size_t(w)]));
      ++active;
    }
    if (active > 0) out[size_t(u)] = sum / active;
  });
  return out;
}

std::vector<double> novelty(const EventLog& log, Window window) {
  if (window == Window::global) throw ConfigError("novelty needs a finite window");
  if (log.events.empty()) throw DataError("novelty: empty event log");
  const int64_t len = window_seconds(window);
  const int64_t t0 = earliest_timestamp(log);
  std::vector<double> out(size_t(log.n_users()), 0.0);

  for_each_user(log, [&](int64_t u, std::span<const Event> ev) {
    std::unordered_set<int64_t> seen, in_window;
    double sum = 0.0;
    int active = 0;
    size_t i = 0;
    while (i < ev.size()) {
      const int64_t w = (ev[i].timestamp - t0) / len;
      in_window.clear();
      for (; i < ev.size() && (ev[i].timestamp - t0) / len == w; ++i)
        in_window.insert(ev[i].artist);
      size_t fresh = 0;
      for (int64_t a : in_window) fresh += seen.count(a) ? 0u : 1u;
      sum += double(fresh) / double(in_window.size());
      ++active;
      seen.insert(in_window.begin(), in_window.end());
    }
    if (active > 0) out[size_t(u)] = sum / active;
  });
  return out;
}

DiversityCounts diversity_counts(const EventLog& log) {
  if (log.events.empty()) throw DataError("diversity_counts: empty event log");
  const size_t n = size_t(log.n_users());
  DiversityCounts dc;
  dc.tracks.assign(n, 0.0);
  dc.artists.assign(n, 0.0);
  for_each_user(log, [&](int64_t u, std::span<const Event> ev) {
    std::unordered_set<int64_t> tracks, artists;
    for (const auto& e : ev) {
      tracks.insert(e.track);
      artists.insert(e.artist);
    }
    dc.tracks[size_t(u)] = std::log1p(double(tracks.size()));
    dc.artists[size_t(u)] = std::log1p(double(artists.size()));
  });
  const double mt = *std::max_element(dc.tracks.begin(), dc.tracks.end());
  const double ma = *std::max_element(dc.artists.begin(), dc.artists.end());
  if (mt > 0.0)
    for (auto& v : dc.tracks) v /= mt;
  if (ma > 0.0)
    for (auto& v : dc.artists) v /= ma;
  return dc;
}

double genre_coverage(std::span<const double> genre_row, int64_t n_genres) {
  if (n_genres < 1) throw ConfigError("n_genres must be >= 1");
  if (int64_t(genre_row.size()) != n_genres)
    throw DataError("genre row length does not match n_genres");
  int64_t nnz = 0;
  for (double v : genre_row) nnz += v != 0.0 ? 1 : 0;
  return double(nnz) / double(n_genres);
}

double genre_entropy(std::span<const double> genre_row) {
  double sum = 0.0;
  for (double v : genre_row) {
    if (v < 0.0) throw DataError("genre weights must be nonnegative");
    sum += v;
  }
  if (sum <= 0.0) return 0.0;
  double h = 0.0;
  for (double v : genre_row)
    if (v > 0.0) {
      const double p = v / sum;
      h -= p * std::log2(p);
    }
  return std::max(h, 0.0);
}

double weighted_avg_diversity(std::span<const double> genre_row, int64_t n_genres) {
  if (n_genres < 1) throw ConfigError("n_genres must be >= 1");
  if (int64_t(genre_row.size()) != n_genres)
    throw DataError("genre row length does not match n_genres");
  double mx = 0.0, sum = 0.0;
  for (double v : genre_row) {
    if (v < 0.0) throw DataError("genre weights must be nonnegative");
    mx = std::max(mx, v);
    sum += v;
  }
  if (mx <= 0.0) return 0.0;
  return sum / mx / double(n_genres);
}

GroupAssignment assign_groups(const std::vector<double>& values,
                              const std::string& feature_name) {
  if (values.empty()) throw DataError("assign_groups: no users");
  double total = 0.0;
  for (double v : values) {
    if (v < 0.0) throw DataError("assign_groups: negative feature value");
    total += v;
  }
  const std::string label = feature_name.empty() ? std::string("values") : feature_name;
  if (total <= 0.0) throw InfeasibleError("assign_groups: " + label + " are all zero");

  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return values[a] != values[b] ? values[a] < values[b] : a < b;
  });

  GroupAssignment ga;
  ga.feature = feature_name;
  ga.groups.assign(values.size(), Group::high);
  const double t1 = total / 3.0, t2 = 2.0 * total / 3.0;
  double cum = 0.0;
  size_t mid_members = 0;
  Group current = Group::low;
  for (size_t idx : order) {
    cum += values[idx];
    ga.groups[idx] = current;
    if (current == Group::low) {
      ga.low_cut = values[idx];
      if (cum >= t1) current = Group::mid;
    } else if (current == Group::mid) {
      ga.mid_cut = values[idx];
      ++mid_members;
      if (cum >= t2) current = Group::high;
    }
  }
  if (mid_members == 0) ga.mid_cut = ga.low_cut;
  return ga;
}

UserFeatureTable compute_features(const EventLog& log, const GenreMap& gm) {
  if (log.events.empty()) throw DataError("compute_features: empty event log");
  UserFeatureTable t;
  t.n_users = log.n_users();

  t.values[0] = mainstreaminess(log, Window::m1);
  t.values[1] = mainstreaminess(log, Window::m6);
  t.values[2] = mainstreaminess(log, Window::m12);
  t.values[3] = mainstreaminess(log, Window::global);
  t.values[4] = novelty(log, Window::m1);
  t.values[5] = novelty(log, Window::m6);
  t.values[6] = novelty(log, Window::m12);
  auto dc = diversity_counts(log);
  t.values[7] = std::move(dc.tracks);
  t.values[8] = std::move(dc.artists);

  const ProfileMatrix genre = build_genre_matrix(log, gm);
  for (int f = 9; f < kNumFeatures; ++f) t.values[size_t(f)].assign(size_t(t.n_users), 0.0);
  std::vector<double> row(size_t(gm.n_genres), 0.0);
  for (int64_t u = 0; u < t.n_users; ++u) {
    std::fill(row.begin(), row.end(), 0.0);
    using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
    for (SpMat::InnerIterator it(genre.m, int(u)); it; ++it) row[size_t(it.col())] = it.value();
    t.values[9][size_t(u)] = genre_coverage(row, gm.n_genres);
    t.values[10][size_t(u)] = genre_entropy(row);
    t.values[11][size_t(u)] = weighted_avg_diversity(row, gm.n_genres);
  }

  std::vector<uint8_t> active(size_t(t.n_users), 0);
  for (const auto& e : log.events) active[size_t(e.user)] = 1;
  t.inactive_users = size_t(std::count(active.begin(), active.end(), uint8_t{0}));

  for (int f = 0; f < kNumFeatures; ++f)
    t.groups[size_t(f)] = assign_groups(t.values[size_t(f)], kFeatureNames[size_t(f)]).groups;
  return t;
}

void save_features(const UserFeatureTable& t, const std::filesystem::path& path) {
  tsv::Writer w(path);
  w.field("user");
  for (const char* name : kFeatureNames) w.field(name);
  for (const char* name : kFeatureNames) w.field(std::string(name) + "_group");
  w.end_row();
  for (int64_t u = 0; u < t.n_users; ++u) {
    w.field(u);
    for (int f = 0; f < kNumFeatures; ++f) w.field(t.value(f, u));
    for (int f = 0; f < kNumFeatures; ++f) w.field(group_name(t.group(f, u)));
    w.end_row();
  }
  w.close();
}

UserFeatureTable load_features(const std::filesystem::path& path) {
  tsv::LineReader reader(path);
  if (!reader.ok()) throw DataError("cannot open " + path.string());
  std::string line;
  if (!reader.next(line)) throw DataError("empty feature table " + path.string());
  const auto header = tsv::split(line);
  if (header.size() != 1 + 2 * kNumFeatures || header[0] != "user")
    throw DataError("unexpected feature table header in " + path.string());
  for (int f = 0; f < kNumFeatures; ++f) {
    if (header[size_t(1 + f)] != kFeatureNames[size_t(f)] ||
        header[size_t(1 + kNumFeatures + f)] != std::string(kFeatureNames[size_t(f)]) + "_group")
      throw DataError("unexpected feature table header in " + path.string());
  }

  UserFeatureTable t;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = tsv::split(line);
    if (fields.size() != header.size())
      throw DataError("bad feature row at line " + std::to_string(reader.line_number()));
    const auto user = tsv::parse_int(fields[0]);
    if (!user || *user != t.n_users)
      throw DataError("feature table user ids must be consecutive from 0");
    for (int f = 0; f < kNumFeatures; ++f) {
      const auto v = tsv::parse_double(fields[size_t(1 + f)]);
      if (!v) throw DataError("bad feature value at line " + std::to_string(reader.line_number()));
      t.values[size_t(f)].push_back(*v);
      t.groups[size_t(f)].push_back(parse_group(std::string(fields[size_t(1 + kNumFeatures + f)])));
    }
    ++t.n_users;
  }
  if (t.n_users == 0) throw DataError("feature table has no rows: " + path.string());
  return t;
}

}  // namespace homnet
