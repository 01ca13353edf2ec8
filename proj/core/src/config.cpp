#include "homnet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "homnet/errors.hpp"
#include "homnet/tsv.hpp"

namespace homnet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos
                                                               : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

int to_int_checked(const std::string& key, int64_t v, int64_t lo, int64_t hi) {
  if (v < lo || v > hi)
    throw ConfigError("config: " + key + " = " + std::to_string(v) + " out of range [" +
                      std::to_string(lo) + "," + std::to_string(hi) + "]");
  return int(v);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "paths.events",          "paths.genres",          "paths.edges",
      "paths.out",             "data.header",           "data.n_genres",
      "nmf.rank",              "nmf.max_iters",         "nmf.tol",
      "nmf.normalize",         "homophily.max_retries", "homophily.hist_bins",
      "linkpred.datasets",     "linkpred.splits",       "linkpred.train_fraction",
      "linkpred.combos",       "linkpred.gf_full_graph", "linkpred.group_rule",
      "gbdt.rounds",           "gbdt.depth",            "gbdt.learning_rate",
      "gbdt.l2",               "gbdt.min_child_weight", "gbdt.bins",
      "synth.users",           "synth.artists",         "synth.genres",
      "synth.events",          "synth.edges",           "synth.strength",
      "synth.weight_m",        "synth.weight_n",        "synth.weight_d",
      "run.seed",              "run.jobs",
  };
  return keys;
}

}  // namespace

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.generic_string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.generic_string());
}

KvConfig KvConfig::parse_string(std::string_view text, const std::string& origin) {
  KvConfig kv;
  std::string section;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.size() < 3 || line.back() != ']')
        throw ConfigError(where + ": malformed section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name.empty() || name.find('.') != std::string_view::npos)
        throw ConfigError(where + ": bad section name '" + std::string(name) + "'");
      section = std::string(name);
    } else {
      const size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(where + ": expected 'key = value'");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ConfigError(where + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (!kv.entries_.emplace(full, value).second)
        throw ConfigError(where + ": duplicate key '" + full + "'");
    }
  }
  return kv;
}

bool KvConfig::has(const std::string& key) const { return entries_.contains(key); }

void KvConfig::set(const std::string& key, std::string value) {
  entries_[key] = std::move(value);
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const auto v = tsv::parse_int(it->second);
  if (!v) throw ConfigError("config: " + key + " = '" + it->second + "' is not an integer");
  return *v;
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& s = it->second;
  uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config: " + key + " = '" + s + "' is not an unsigned integer");
  return v;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const auto v = tsv::parse_double(it->second);
  if (!v) throw ConfigError("config: " + key + " = '" + it->second + "' is not a number");
  return *v;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& s = it->second;
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: " + key + " = '" + s + "' is not a boolean");
}

std::string KvConfig::to_text() const {
  // Group by section so sectionless keys cannot be swallowed by a section
  // that sorts before them.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  for (const auto& [full, value] : entries_) {
    const size_t dot = full.find('.');
    if (dot == std::string::npos)
      by_section[""].emplace_back(full, value);
    else
      by_section[full.substr(0, dot)].emplace_back(full.substr(dot + 1), value);
  }
  std::string out;
  bool first = true;
  for (const auto& [section, kvs] : by_section) {
    if (!first) out += '\n';
    first = false;
    if (!section.empty()) out += "[" + section + "]\n";
    for (const auto& [key, value] : kvs) out += key + " = " + value + "\n";
  }
  return out;
}

PipelineConfig pipeline_from_kv(const KvConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key.starts_with("inputs.") || key.starts_with("manifest.")) continue;
    if (!known_keys().contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  PipelineConfig c;
  c.events_path = kv.get_string("paths.events", "");
  c.genres_path = kv.get_string("paths.genres", "");
  c.edges_path = kv.get_string("paths.edges", "");
  c.out_dir = kv.get_string("paths.out", c.out_dir.generic_string());
  c.header = kv.get_bool("data.header", c.header);
  c.n_genres = kv.get_int("data.n_genres", c.n_genres);
  if (c.n_genres < 0) throw ConfigError("config: data.n_genres must be >= 0");

  c.nmf.rank = to_int_checked("nmf.rank", kv.get_int("nmf.rank", c.nmf.rank), 1, 1 << 20);
  c.nmf.max_iters =
      to_int_checked("nmf.max_iters", kv.get_int("nmf.max_iters", c.nmf.max_iters), 1, 1 << 30);
  c.nmf.tol = kv.get_double("nmf.tol", c.nmf.tol);
  if (!(c.nmf.tol >= 0.0)) throw ConfigError("config: nmf.tol must be >= 0");
  c.normalize_before_nmf = kv.get_bool("nmf.normalize", c.normalize_before_nmf);

  c.rewire_max_retries = to_int_checked(
      "homophily.max_retries", kv.get_int("homophily.max_retries", c.rewire_max_retries), 0,
      1 << 30);
  c.hist_bins =
      to_int_checked("homophily.hist_bins", kv.get_int("homophily.hist_bins", c.hist_bins), 1,
                     1 << 20);

  c.linkpred.n_datasets = to_int_checked(
      "linkpred.datasets", kv.get_int("linkpred.datasets", c.linkpred.n_datasets), 1, 1 << 20);
  c.linkpred.n_splits = to_int_checked(
      "linkpred.splits", kv.get_int("linkpred.splits", c.linkpred.n_splits), 1, 1 << 20);
  c.linkpred.train_fraction =
      kv.get_double("linkpred.train_fraction", c.linkpred.train_fraction);
  c.linkpred.gf_full_graph = kv.get_bool("linkpred.gf_full_graph", c.linkpred.gf_full_graph);
  const std::string rule =
      kv.get_string("linkpred.group_rule", c.linkpred.group_rule_both ? "both" : "either");
  if (rule == "both")
    c.linkpred.group_rule_both = true;
  else if (rule == "either")
    c.linkpred.group_rule_both = false;
  else
    throw ConfigError("config: linkpred.group_rule must be 'either' or 'both'");
  const std::string combos = kv.get_string("linkpred.combos", "");
  if (!combos.empty()) {
    c.linkpred.combos.clear();
    for (const auto token : split_list(combos, ','))
      c.linkpred.combos.push_back(parse_family_set(std::string(trim(token))));
  }

  c.linkpred.gbdt.n_rounds = to_int_checked(
      "gbdt.rounds", kv.get_int("gbdt.rounds", c.linkpred.gbdt.n_rounds), 1, 1 << 20);
  c.linkpred.gbdt.max_depth = to_int_checked(
      "gbdt.depth", kv.get_int("gbdt.depth", c.linkpred.gbdt.max_depth), 1, 60);
  c.linkpred.gbdt.learning_rate =
      kv.get_double("gbdt.learning_rate", c.linkpred.gbdt.learning_rate);
  c.linkpred.gbdt.l2 = kv.get_double("gbdt.l2", c.linkpred.gbdt.l2);
  c.linkpred.gbdt.min_child_weight =
      kv.get_double("gbdt.min_child_weight", c.linkpred.gbdt.min_child_weight);
  c.linkpred.gbdt.max_bins =
      to_int_checked("gbdt.bins", kv.get_int("gbdt.bins", c.linkpred.gbdt.max_bins), 2, 256);

  c.synth.n_users = kv.get_int("synth.users", c.synth.n_users);
  c.synth.n_artists = kv.get_int("synth.artists", c.synth.n_artists);
  c.synth.n_genres = kv.get_int("synth.genres", c.synth.n_genres);
  c.synth.n_events = kv.get_int("synth.events", c.synth.n_events);
  c.synth.n_edges = kv.get_int("synth.edges", c.synth.n_edges);
  c.synth.homophily_strength = kv.get_double("synth.strength", c.synth.homophily_strength);
  c.synth.mnd_edge_weights[0] = kv.get_double("synth.weight_m", c.synth.mnd_edge_weights[0]);
  c.synth.mnd_edge_weights[1] = kv.get_double("synth.weight_n", c.synth.mnd_edge_weights[1]);
  c.synth.mnd_edge_weights[2] = kv.get_double("synth.weight_d", c.synth.mnd_edge_weights[2]);

  c.master_seed = kv.get_u64("run.seed", c.master_seed);
  c.jobs = to_int_checked("run.jobs", kv.get_int("run.jobs", c.jobs), 0, 4096);
  return c;
}

KvConfig pipeline_to_kv(const PipelineConfig& c) {
  KvConfig kv;
  kv.set("paths.events", c.events_path.generic_string());
  kv.set("paths.genres", c.genres_path.generic_string());
  kv.set("paths.edges", c.edges_path.generic_string());
  kv.set("paths.out", c.out_dir.generic_string());
  kv.set("data.header", c.header ? "true" : "false");
  kv.set("data.n_genres", std::to_string(c.n_genres));

  kv.set("nmf.rank", std::to_string(c.nmf.rank));
  kv.set("nmf.max_iters", std::to_string(c.nmf.max_iters));
  kv.set("nmf.tol", tsv::format_double(c.nmf.tol));
  kv.set("nmf.normalize", c.normalize_before_nmf ? "true" : "false");

  kv.set("homophily.max_retries", std::to_string(c.rewire_max_retries));
  kv.set("homophily.hist_bins", std::to_string(c.hist_bins));

  kv.set("linkpred.datasets", std::to_string(c.linkpred.n_datasets));
  kv.set("linkpred.splits", std::to_string(c.linkpred.n_splits));
  kv.set("linkpred.train_fraction", tsv::format_double(c.linkpred.train_fraction));
  kv.set("linkpred.gf_full_graph", c.linkpred.gf_full_graph ? "true" : "false");
  kv.set("linkpred.group_rule", c.linkpred.group_rule_both ? "both" : "either");
  std::string combos;
  for (const auto& fs : c.linkpred.combos) {
    if (!combos.empty()) combos += ',';
    combos += fs.name();
  }
  kv.set("linkpred.combos", combos);

  kv.set("gbdt.rounds", std::to_string(c.linkpred.gbdt.n_rounds));
  kv.set("gbdt.depth", std::to_string(c.linkpred.gbdt.max_depth));
  kv.set("gbdt.learning_rate", tsv::format_double(c.linkpred.gbdt.learning_rate));
  kv.set("gbdt.l2", tsv::format_double(c.linkpred.gbdt.l2));
  kv.set("gbdt.min_child_weight", tsv::format_double(c.linkpred.gbdt.min_child_weight));
  kv.set("gbdt.bins", std::to_string(c.linkpred.gbdt.max_bins));

  kv.set("synth.users", std::to_string(c.synth.n_users));
  kv.set("synth.artists", std::to_string(c.synth.n_artists));
  kv.set("synth.genres", std::to_string(c.synth.n_genres));
  kv.set("synth.events", std::to_string(c.synth.n_events));
  kv.set("synth.edges", std::to_string(c.synth.n_edges));
  kv.set("synth.strength", tsv::format_double(c.synth.homophily_strength));
  kv.set("synth.weight_m", tsv::format_double(c.synth.mnd_edge_weights[0]));
  kv.set("synth.weight_n", tsv::format_double(c.synth.mnd_edge_weights[1]));
  kv.set("synth.weight_d", tsv::format_double(c.synth.mnd_edge_weights[2]));

  kv.set("run.seed", std::to_string(c.master_seed));
  kv.set("run.jobs", std::to_string(c.jobs));
  return kv;
}

void write_manifest(const std::filesystem::path& path, const PipelineConfig& cfg,
                    const std::string& command,
                    const std::vector<std::pair<std::string, std::filesystem::path>>& inputs) {
  KvConfig kv = pipeline_to_kv(cfg);
  kv.set("manifest.command", command);
  kv.set("manifest.version", kVersion);
  for (const auto& [label, in_path] : inputs) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  (unsigned long long)tsv::fnv1a64_file(in_path));
    kv.set("inputs." + label + "_path", in_path.generic_string());
    kv.set("inputs." + label + "_fnv1a64", hex);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.generic_string());
  out << kv.to_text();
  out.flush();
  if (!out) throw DataError("failed writing manifest " + path.generic_string());
}

}  // namespace homnet
