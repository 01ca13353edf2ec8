// homnet: command-line pipeline for homophily analysis and link prediction
// on music-listening networks.
//
// Subcommands:
//   synth      generate a synthetic dataset (events, genres, edges, truth)
//   ingest     validate inputs and write a load report
//   features   compute the twelve per-user behaviour features
//   profiles   build listening profiles and factorize the artist matrix
//   homophily  assortativity, observed/expected group mixing, null comparison
//   linkpred   the feature-set comparison experiment
//   all        features + profiles + homophily + linkpred into one directory
//
// Exit codes: 0 ok, 2 bad configuration/usage, 3 bad input data,
// 4 infeasible analysis, 1 anything unexpected.

#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "homnet/config.hpp"
#include "homnet/errors.hpp"
#include "homnet/features.hpp"
#include "homnet/graph.hpp"
#include "homnet/homophily.hpp"
#include "homnet/ingest.hpp"
#include "homnet/linkpred.hpp"
#include "homnet/profiles.hpp"
#include "homnet/rng.hpp"
#include "homnet/svg.hpp"
#include "homnet/tsv.hpp"

namespace fs = std::filesystem;

namespace {

using namespace homnet;

// Seed stream tags used by the CLI (the experiment itself owns tags 1..3).
constexpr uint64_t kNmfStream = 10;
constexpr uint64_t kRewireStream = 11;

// ---------------------------------------------------------------------------
// Output directory handling: files are registered before they are written and
// removed again if the command does not reach commit(), so a failing run does
// not leave partial outputs behind.

class OutputGuard {
 public:
  explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw DataError("cannot create output directory " + dir_.string());
  }

  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;

  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : tracked_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  /// Registers `name` for cleanup-on-error and returns its full path.
  fs::path path(const std::string& name) {
    fs::path p = dir_ / name;
    tracked_.push_back(p);
    return p;
  }

  /// path() for a matrix file that gets a `.meta` sidecar next to it.
  fs::path matrix(const std::string& name) {
    path(name + ".meta");
    return path(name);
  }

  const fs::path& dir() const { return dir_; }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> tracked_;
  bool committed_ = false;
};

int effective_jobs(int jobs) {
  if (jobs > 0) return jobs;
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

void note_load(const std::string& label, const LoadReport& rep) {
  if (rep.rows_malformed == 0 && rep.rows_rejected == 0 && rep.duplicates == 0) return;
  std::cerr << label << ": kept " << rep.rows_loaded << "/" << rep.rows_total << " rows ("
            << rep.rows_malformed << " malformed, " << rep.rows_rejected << " rejected, "
            << rep.duplicates << " duplicate)\n";
  for (const auto& e : rep.first_errors) std::cerr << "  " << e << "\n";
}

std::vector<std::pair<std::string, fs::path>> input_list(const PipelineConfig& cfg, bool events,
                                                         bool genres, bool edges) {
  std::vector<std::pair<std::string, fs::path>> v;
  if (events && !cfg.events_path.empty()) v.emplace_back("events", cfg.events_path);
  if (genres && !cfg.genres_path.empty()) v.emplace_back("genres", cfg.genres_path);
  if (edges && !cfg.edges_path.empty()) v.emplace_back("edges", cfg.edges_path);
  return v;
}

PipelineConfig with_out_dir(PipelineConfig cfg, fs::path out) {
  cfg.out_dir = std::move(out);
  return cfg;
}

// ---------------------------------------------------------------------------
// Shared lazily-computed state so `all` loads and factorizes only once.

class Stage {
 public:
  explicit Stage(const PipelineConfig& cfg) : cfg_(cfg) {}

  const PipelineConfig& cfg() const { return cfg_; }

  const EventLog& events() {
    if (!log_) {
      require_path(cfg_.events_path, "--events");
      LoadReport rep;
      log_ = load_events(cfg_.events_path, cfg_.header, &rep);
      note_load("events", rep);
    }
    return *log_;
  }

  const GenreMap& genres() {
    if (!genres_) {
      require_path(cfg_.genres_path, "--genres");
      LoadReport rep;
      std::optional<int64_t> id_space;
      if (cfg_.n_genres > 0) id_space = cfg_.n_genres;
      genres_ = load_genre_map(cfg_.genres_path, cfg_.header, id_space, &rep);
      note_load("genres", rep);
    }
    return *genres_;
  }

  const UserFeatureTable& features() {
    if (!table_) {
      table_ = compute_features(events(), genres());
      if (table_->inactive_users > 0)
        std::cerr << "features: " << table_->inactive_users
                  << " user ids in range have no events\n";
    }
    return *table_;
  }

  /// Friendship graph over the feature table's user id range.
  const SocialGraph& graph() {
    if (!graph_) {
      require_path(cfg_.edges_path, "--edges");
      LoadReport rep;
      EdgeList el = load_edges(cfg_.edges_path, cfg_.header, &rep);
      note_load("edges", rep);
      const int64_t n_users = features().n_users;
      if (el.n_nodes() > n_users)
        throw DataError("edge endpoints exceed the user id range of the events (" +
                        std::to_string(el.n_nodes() - 1) + " vs " +
                        std::to_string(n_users - 1) + ")");
      graph_ = SocialGraph::from_edges(n_users, el.edges);
    }
    return *graph_;
  }

  /// Artist-play profile matrix, row-normalized when the config says so.
  const ProfileMatrix& artist_matrix() {
    if (!artist_) {
      ProfileMatrix m = build_artist_matrix(events());
      if (cfg_.normalize_before_nmf) m = l2_normalize_rows(std::move(m));
      artist_ = std::move(m);
    }
    return *artist_;
  }

  const FactorPair& factors() {
    if (!factors_) {
      NmfParams params = cfg_.nmf;
      params.seed = derive_seed(cfg_.master_seed, {kNmfStream});
      factors_ = nmf(artist_matrix(), params);
    }
    return *factors_;
  }

  const Eigen::MatrixXd& factor_w() { return factors().w; }

 private:
  static void require_path(const fs::path& p, const char* flag) {
    if (p.empty()) throw ConfigError(std::string("missing required input ") + flag);
  }

  const PipelineConfig& cfg_;
  std::optional<EventLog> log_;
  std::optional<GenreMap> genres_;
  std::optional<UserFeatureTable> table_;
  std::optional<SocialGraph> graph_;
  std::optional<ProfileMatrix> artist_;
  std::optional<FactorPair> factors_;
};

// ---------------------------------------------------------------------------
// synth

void run_synth(const PipelineConfig& cfg) {
  SyntheticConfig sc = cfg.synth;
  sc.seed = cfg.master_seed;
  const SyntheticData data = generate_synthetic(sc);

  OutputGuard out(cfg.out_dir);
  save_events(data.events, out.path("events.tsv"));
  save_genre_map(data.genres, out.path("genres.tsv"));
  save_edges(data.edges, out.path("edges.tsv"));
  save_truth(data.truth, out.path("truth.tsv"));
  write_manifest(out.path("manifest.ini"), cfg, "synth", {});
  out.commit();

  std::cerr << "synth: " << data.events.events.size() << " events, " << data.edges.edges.size()
            << " edges, " << sc.n_users << " users -> " << out.dir().string() << "\n";
}

// ---------------------------------------------------------------------------
// ingest

void run_ingest(const PipelineConfig& cfg) {
  if (cfg.events_path.empty() && cfg.genres_path.empty() && cfg.edges_path.empty())
    throw ConfigError("ingest: give at least one of --events, --genres, --edges");

  OutputGuard out(cfg.out_dir);
  tsv::Writer w(out.path("ingest_report.tsv"));
  w.field("input");
  w.field("metric");
  w.field("value");
  w.end_row();
  auto row = [&w](const char* input, const char* metric, int64_t value) {
    w.field(input);
    w.field(metric);
    w.field(value);
    w.end_row();
  };
  auto counts = [&row](const char* input, const LoadReport& rep) {
    row(input, "rows_total", int64_t(rep.rows_total));
    row(input, "rows_loaded", int64_t(rep.rows_loaded));
    row(input, "rows_malformed", int64_t(rep.rows_malformed));
    row(input, "rows_rejected", int64_t(rep.rows_rejected));
  };

  if (!cfg.events_path.empty()) {
    LoadReport rep;
    EventLog log = load_events(cfg.events_path, cfg.header, &rep);
    note_load("events", rep);
    counts("events", rep);
    row("events", "n_events", int64_t(log.events.size()));
    row("events", "n_users", log.n_users());
    row("events", "n_artists", log.n_artists());
  }
  if (!cfg.genres_path.empty()) {
    LoadReport rep;
    std::optional<int64_t> id_space;
    if (cfg.n_genres > 0) id_space = cfg.n_genres;
    GenreMap gm = load_genre_map(cfg.genres_path, cfg.header, id_space, &rep);
    note_load("genres", rep);
    counts("genres", rep);
    row("genres", "n_genres", gm.n_genres);
    row("genres", "artists_mapped", int64_t(gm.weights.size()));
  }
  if (!cfg.edges_path.empty()) {
    LoadReport rep;
    EdgeList el = load_edges(cfg.edges_path, cfg.header, &rep);
    note_load("edges", rep);
    counts("edges", rep);
    row("edges", "duplicates", int64_t(rep.duplicates));
    row("edges", "n_edges", int64_t(el.edges.size()));
    row("edges", "n_nodes", el.n_nodes());
  }
  w.close();

  write_manifest(out.path("manifest.ini"), cfg, "ingest", input_list(cfg, true, true, true));
  out.commit();
}

// ---------------------------------------------------------------------------
// features

void run_features(Stage& s, const fs::path& out_dir) {
  const UserFeatureTable& table = s.features();

  OutputGuard out(out_dir);
  save_features(table, out.path("features.tsv"));
  write_manifest(out.path("manifest.ini"), with_out_dir(s.cfg(), out_dir), "features",
                 input_list(s.cfg(), true, true, false));
  out.commit();
  std::cerr << "features: " << table.n_users << " users x " << kNumFeatures << " features\n";
}

// ---------------------------------------------------------------------------
// profiles

void run_profiles(Stage& s, const fs::path& out_dir) {
  const ProfileMatrix& artist = s.artist_matrix();

  OutputGuard out(out_dir);
  save_profile_matrix(artist, out.matrix("artist_profiles.tsv"));

  if (!s.cfg().genres_path.empty()) {
    GenreBuildReport rep;
    ProfileMatrix genre = build_genre_matrix(s.events(), s.genres(), &rep);
    if (rep.uncovered_artists > 0)
      std::cerr << "profiles: " << rep.uncovered_artists << " artists (" << rep.uncovered_events
                << " events) have no genre mapping\n";
    if (s.cfg().normalize_before_nmf) genre = l2_normalize_rows(std::move(genre));
    save_profile_matrix(genre, out.matrix("genre_profiles.tsv"));
  }

  const FactorPair& f = s.factors();
  const std::vector<std::pair<std::string, std::string>> meta = {
      {"rank", std::to_string(f.rank)},
      {"objective", tsv::format_double(f.final_objective)},
  };
  save_dense_matrix(f.w, out.matrix("factors_w.tsv"), meta);
  save_dense_matrix(f.h, out.matrix("factors_h.tsv"), meta);

  {
    tsv::Writer w(out.path("nmf_history.tsv"));
    w.field("iteration");
    w.field("objective");
    w.end_row();
    for (size_t i = 0; i < f.objective_history.size(); ++i) {
      w.field(int64_t(i));
      w.field(f.objective_history[i]);
      w.end_row();
    }
    w.close();
  }

  write_manifest(out.path("manifest.ini"), with_out_dir(s.cfg(), out_dir), "profiles",
                 input_list(s.cfg(), true, true, false));
  out.commit();
  std::cerr << "profiles: " << artist.rows() << "x" << artist.cols() << " artist matrix (density "
            << artist.density() << "), rank-" << f.rank << " factors in "
            << f.objective_history.size() << " iterations\n";
}

// ---------------------------------------------------------------------------
// homophily

const char* group_label(int g) { return group_name(Group(g)); }

void write_heatmap(OutputGuard& out, const std::string& name,
                   const std::array<std::array<double, 3>, 3>& cells, const std::string& title) {
  std::vector<std::vector<double>> grid(3, std::vector<double>(3));
  std::vector<std::string> labels = {"low", "mid", "high"};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) grid[size_t(a)][size_t(b)] = cells[size_t(a)][size_t(b)];
  svg::write_file(svg::heatmap(grid, labels, labels, title), out.path(name));
}

void run_homophily(Stage& s, const fs::path& out_dir) {
  const UserFeatureTable& table = s.features();
  const SocialGraph& g = s.graph();
  const Eigen::MatrixXd& w = s.factor_w();
  const PipelineConfig& cfg = s.cfg();

  OutputGuard out(out_dir);

  // Numeric assortativity of every feature over the friendship edges.
  {
    tsv::Writer wtr(out.path("assortativity.tsv"));
    wtr.field("feature");
    wtr.field("assortativity");
    wtr.end_row();
    std::vector<std::string> labels;
    std::vector<double> values;
    for (int f = 0; f < kNumFeatures; ++f) {
      const auto r = numeric_assortativity(g, table.values[size_t(f)]);
      const double v = r.value_or(std::numeric_limits<double>::quiet_NaN());
      wtr.field(kFeatureNames[size_t(f)]);
      wtr.field(v);
      wtr.end_row();
      labels.emplace_back(kFeatureNames[size_t(f)]);
      values.push_back(v);
    }
    wtr.close();
    svg::write_file(svg::bar_chart(labels, values, "edge assortativity by feature"),
                    out.path("assortativity.svg"));
  }

  // Observed vs expected edge counts between the groups of each feature.
  {
    tsv::Writer wtr(out.path("oe_ratios.tsv"));
    for (const char* col : {"feature", "group_a", "group_b", "observed", "expected_ref",
                            "ratio_ref", "expected_exact", "ratio_exact"})
      wtr.field(col);
    wtr.end_row();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int f = 0; f < kNumFeatures; ++f) {
      const OEMatrix oe = oe_matrix(g, table.groups[size_t(f)]);
      std::array<std::array<double, 3>, 3> ratios{};
      for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
          wtr.field(kFeatureNames[size_t(f)]);
          wtr.field(group_label(a));
          wtr.field(group_label(b));
          wtr.field(oe.observed[size_t(a)][size_t(b)]);
          wtr.field(oe.expected_ref[size_t(a)][size_t(b)]);
          wtr.field(oe.ratio_ref(a, b).value_or(nan));
          wtr.field(oe.expected_exact[size_t(a)][size_t(b)]);
          wtr.field(oe.ratio_exact(a, b).value_or(nan));
          wtr.end_row();
          ratios[size_t(a)][size_t(b)] = ratios[size_t(b)][size_t(a)] =
              oe.ratio_ref(a, b).value_or(nan);
        }
      }
      write_heatmap(out, std::string("oe_") + kFeatureNames[size_t(f)] + ".svg", ratios,
                    std::string("O/E edge ratios: ") + kFeatureNames[size_t(f)]);
    }
    wtr.close();
  }

  // Mean profile similarity over edges, per group pair of each feature.
  {
    tsv::Writer wtr(out.path("group_similarity.tsv"));
    for (const char* col : {"feature", "group_a", "group_b", "edges", "mean", "ratio", "mean_all"})
      wtr.field(col);
    wtr.end_row();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int f = 0; f < kNumFeatures; ++f) {
      const GroupSimilarity gs = group_similarity_matrix(g, w, table.groups[size_t(f)]);
      std::array<std::array<double, 3>, 3> ratios{};
      for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
          wtr.field(kFeatureNames[size_t(f)]);
          wtr.field(group_label(a));
          wtr.field(group_label(b));
          wtr.field(gs.edges[size_t(a)][size_t(b)]);
          wtr.field(gs.mean[size_t(a)][size_t(b)]);
          wtr.field(gs.ratio(a, b).value_or(nan));
          wtr.field(gs.mean_all);
          wtr.end_row();
          ratios[size_t(a)][size_t(b)] = ratios[size_t(b)][size_t(a)] = gs.ratio(a, b).value_or(nan);
        }
      }
      write_heatmap(out, std::string("similarity_") + kFeatureNames[size_t(f)] + ".svg", ratios,
                    std::string("edge similarity ratios: ") + kFeatureNames[size_t(f)]);
    }
    wtr.close();
  }

  // Null comparison: profile similarity on real edges vs a degree- and
  // group-preserving rewired graph.
  {
    const std::vector<GroupTriple> triples = representative_triples(table);
    RewireReport rep;
    const SocialGraph g_null =
        rewire_preserving(g, triples, derive_seed(cfg.master_seed, {kRewireStream}), &rep,
                          cfg.rewire_max_retries);
    const SimilarityComparison cmp = edge_similarity_distributions(g, g_null, w, cfg.hist_bins);

    tsv::Writer wtr(out.path("null_comparison.tsv"));
    wtr.field("metric");
    wtr.field("value");
    wtr.end_row();
    auto metric = [&wtr](const char* name, double v) {
      wtr.field(name);
      wtr.field(v);
      wtr.end_row();
    };
    metric("mean_observed", cmp.mean_observed);
    metric("mean_null", cmp.mean_null);
    metric("mwu_u", cmp.mwu.u);
    metric("mwu_p", cmp.mwu.p);
    metric("mwu_exact", cmp.mwu.exact ? 1.0 : 0.0);
    metric("n_edges", double(cmp.observed.size()));
    metric("rewire_strata", double(rep.strata));
    metric("rewire_fallback_strata", double(rep.fallback_strata));
    metric("rewire_fallback_edges", double(rep.fallback_edges));
    wtr.close();

    tsv::Writer hw(out.path("similarity_hist.tsv"));
    for (const char* col : {"bin_lo", "bin_hi", "observed", "rewired"}) hw.field(col);
    hw.end_row();
    const size_t bins = cmp.observed_hist.counts.size();
    const double span = cmp.observed_hist.hi - cmp.observed_hist.lo;
    for (size_t b = 0; b < bins; ++b) {
      hw.field(cmp.observed_hist.lo + span * double(b) / double(bins));
      hw.field(cmp.observed_hist.lo + span * double(b + 1) / double(bins));
      hw.field(cmp.observed_hist.counts[b]);
      hw.field(cmp.null_hist.counts[b]);
      hw.end_row();
    }
    hw.close();

    svg::write_file(
        svg::histogram_pair(cmp.observed_hist.counts, cmp.null_hist.counts, cmp.observed_hist.lo,
                            cmp.observed_hist.hi, "observed", "rewired",
                            "edge profile similarity: observed vs rewired"),
        out.path("similarity_hist.svg"));

    std::cerr << "homophily: similarity mean " << cmp.mean_observed << " observed vs "
              << cmp.mean_null << " rewired (p = " << cmp.mwu.p << ")\n";
    if (rep.fallback_edges > 0)
      std::cerr << "homophily: " << rep.fallback_edges << " edges in " << rep.fallback_strata
                << " strata kept verbatim after " << rep.max_retries << " retries\n";
  }

  write_manifest(out.path("manifest.ini"), with_out_dir(cfg, out_dir), "homophily",
                 input_list(cfg, true, true, true));
  out.commit();
}

// ---------------------------------------------------------------------------
// linkpred

void run_linkpred(Stage& s, const fs::path& out_dir) {
  const PipelineConfig& cfg = s.cfg();
  ExperimentConfig ec = cfg.linkpred;
  ec.master_seed = cfg.master_seed;
  ec.jobs = effective_jobs(cfg.jobs);

  const ExperimentReport report = run_experiment(s.graph(), s.features(), s.factor_w(), ec);

  OutputGuard out(out_dir);
  out.path("results.tsv");
  out.path("summary.tsv");
  out.path("groups.tsv");
  out.path("importance.tsv");
  save_experiment_report(report, out.dir());

  std::vector<std::string> labels = report.combo_names;
  std::vector<double> values = report.mean_f1;
  labels.emplace_back("baseline");
  values.push_back(report.baseline_mean);
  svg::write_file(svg::bar_chart(labels, values, "mean F1 by feature set"),
                  out.path("f1_summary.svg"));

  write_manifest(out.path("manifest.ini"), with_out_dir(cfg, out_dir), "linkpred",
                 input_list(cfg, true, true, true));
  out.commit();

  for (size_t c = 0; c < report.combo_names.size(); ++c)
    std::cerr << "linkpred: " << report.combo_names[c] << " F1 = " << report.mean_f1[c] << " +- "
              << report.std_f1[c] << "\n";
  std::cerr << "linkpred: baseline F1 = " << report.baseline_mean << " +- "
            << report.baseline_std << "\n";
}

// ---------------------------------------------------------------------------
// all

void run_all(const PipelineConfig& cfg) {
  Stage s(cfg);
  run_features(s, cfg.out_dir / "features");
  run_profiles(s, cfg.out_dir / "profiles");
  run_homophily(s, cfg.out_dir / "homophily");
  run_linkpred(s, cfg.out_dir / "linkpred");

  OutputGuard out(cfg.out_dir);
  write_manifest(out.path("manifest.ini"), cfg, "all", input_list(cfg, true, true, true));
  out.commit();
}

// ---------------------------------------------------------------------------
// flag plumbing

struct Flags {
  std::string config;
  std::string out;
  std::string events, genres, edges;
  bool header = false;
  int64_t n_genres = 0;
  uint64_t seed = 0;
  int jobs = 0;

  // profiles / homophily / linkpred
  int rank = 0;
  int nmf_iters = 0;
  double nmf_tol = 0.0;
  bool no_normalize = false;
  int max_retries = 0;
  int hist_bins = 0;

  // linkpred
  int datasets = 0;
  int splits = 0;
  double train_fraction = 0.0;
  std::string combos;
  bool gf_full_graph = false;
  std::string group_rule;
  int gbdt_rounds = 0;
  int gbdt_depth = 0;
  double gbdt_rate = 0.0;
  double gbdt_l2 = 0.0;
  int gbdt_bins = 0;

  // synth
  int64_t users = 0, artists = 0, synth_genres = 0;
  int64_t synth_events = 0, synth_edges = 0;
  double strength = 0.0;
  double weight_m = 0.0, weight_n = 0.0, weight_d = 0.0;
};

void add_run_options(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "key=value config file (flags win over it)");
  sub->add_option("-o,--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "master seed (overrides HOMNET_SEED and the config)");
  sub->add_option("--jobs", f.jobs, "worker threads, 0 = all cores");
}

void add_input_options(CLI::App* sub, Flags& f, bool edges) {
  sub->add_option("--events", f.events, "events TSV: user, artist, track, timestamp");
  sub->add_option("--genres", f.genres, "genre map TSV: artist, genre, weight");
  if (edges) sub->add_option("--edges", f.edges, "friendship TSV: user_a, user_b");
  sub->add_flag("--header", f.header, "skip the first row of every input");
  sub->add_option("--n-genres", f.n_genres, "genre id space size, 0 = observed");
}

void add_nmf_options(CLI::App* sub, Flags& f) {
  sub->add_option("--rank", f.rank, "factorization rank");
  sub->add_option("--nmf-iters", f.nmf_iters, "factorization iteration cap");
  sub->add_option("--nmf-tol", f.nmf_tol, "relative objective-decrease tolerance");
  sub->add_flag("--no-normalize", f.no_normalize, "skip row normalization before factorizing");
}

void add_homophily_options(CLI::App* sub, Flags& f) {
  sub->add_option("--max-retries", f.max_retries, "rewiring retries per stratum");
  sub->add_option("--hist-bins", f.hist_bins, "similarity histogram bins");
}

void add_linkpred_options(CLI::App* sub, Flags& f) {
  sub->add_option("--datasets", f.datasets, "negative-sample datasets");
  sub->add_option("--splits", f.splits, "train/test splits per dataset");
  sub->add_option("--train-fraction", f.train_fraction, "training share of each split");
  sub->add_option("--combos", f.combos, "comma list of feature sets, e.g. MNDF+APF,GF");
  sub->add_flag("--gf-full-graph", f.gf_full_graph, "keep test edges in the graph features");
  sub->add_option("--group-rule", f.group_rule, "per-group F1 membership: either|both");
  sub->add_option("--gbdt-rounds", f.gbdt_rounds, "boosting rounds");
  sub->add_option("--gbdt-depth", f.gbdt_depth, "tree depth cap");
  sub->add_option("--gbdt-rate", f.gbdt_rate, "learning rate");
  sub->add_option("--gbdt-l2", f.gbdt_l2, "leaf L2 regularization");
  sub->add_option("--gbdt-bins", f.gbdt_bins, "histogram bins per column");
}

void add_synth_options(CLI::App* sub, Flags& f) {
  sub->add_option("--users", f.users, "user count");
  sub->add_option("--artists", f.artists, "artist count");
  sub->add_option("--genres", f.synth_genres, "genre count");
  sub->add_option("--events", f.synth_events, "listening event count");
  sub->add_option("--edges", f.synth_edges, "friendship count, 0 = mean degree 15");
  sub->add_option("--strength", f.strength, "behaviour homophily strength in [0,1]");
  sub->add_option("--weight-m", f.weight_m, "mainstreaminess weight in the edge model");
  sub->add_option("--weight-n", f.weight_n, "novelty weight in the edge model");
  sub->add_option("--weight-d", f.weight_d, "diversity weight in the edge model");
}

uint64_t parse_env_seed(const char* text) {
  uint64_t v = 0;
  const char* end = text + std::string_view(text).size();
  auto [p, ec] = std::from_chars(text, end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError(std::string("HOMNET_SEED is not an unsigned integer: ") + text);
  return v;
}

/// Flag precedence: built-in defaults < config file < HOMNET_SEED < flags.
PipelineConfig build_config(const CLI::App& sub, const Flags& f, bool synth_counts) {
  PipelineConfig cfg;
  if (!f.config.empty()) cfg = pipeline_from_kv(KvConfig::parse_file(f.config));
  if (const char* env = std::getenv("HOMNET_SEED")) cfg.master_seed = parse_env_seed(env);

  auto used = [&sub](const char* name) {
    const CLI::Option* o = sub.get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };

  if (used("--out")) cfg.out_dir = f.out;
  if (used("--seed")) cfg.master_seed = f.seed;
  if (used("--jobs")) cfg.jobs = f.jobs;

  if (synth_counts) {
    if (used("--users")) cfg.synth.n_users = f.users;
    if (used("--artists")) cfg.synth.n_artists = f.artists;
    if (used("--genres")) cfg.synth.n_genres = f.synth_genres;
    if (used("--events")) cfg.synth.n_events = f.synth_events;
    if (used("--edges")) cfg.synth.n_edges = f.synth_edges;
    if (used("--strength")) cfg.synth.homophily_strength = f.strength;
    if (used("--weight-m")) cfg.synth.mnd_edge_weights[0] = f.weight_m;
    if (used("--weight-n")) cfg.synth.mnd_edge_weights[1] = f.weight_n;
    if (used("--weight-d")) cfg.synth.mnd_edge_weights[2] = f.weight_d;
    return cfg;
  }

  if (used("--events")) cfg.events_path = f.events;
  if (used("--genres")) cfg.genres_path = f.genres;
  if (used("--edges")) cfg.edges_path = f.edges;
  if (used("--header")) cfg.header = f.header;
  if (used("--n-genres")) cfg.n_genres = f.n_genres;

  if (used("--rank")) cfg.nmf.rank = f.rank;
  if (used("--nmf-iters")) cfg.nmf.max_iters = f.nmf_iters;
  if (used("--nmf-tol")) cfg.nmf.tol = f.nmf_tol;
  if (used("--no-normalize")) cfg.normalize_before_nmf = false;

  if (used("--max-retries")) cfg.rewire_max_retries = f.max_retries;
  if (used("--hist-bins")) cfg.hist_bins = f.hist_bins;

  if (used("--datasets")) cfg.linkpred.n_datasets = f.datasets;
  if (used("--splits")) cfg.linkpred.n_splits = f.splits;
  if (used("--train-fraction")) cfg.linkpred.train_fraction = f.train_fraction;
  if (used("--combos")) {
    std::vector<FamilySet> combos;
    std::string_view rest = f.combos;
    while (!rest.empty()) {
      const size_t comma = rest.find(',');
      combos.push_back(parse_family_set(std::string(rest.substr(0, comma))));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (combos.empty()) throw ConfigError("--combos lists no feature sets");
    cfg.linkpred.combos = std::move(combos);
  }
  if (used("--gf-full-graph")) cfg.linkpred.gf_full_graph = f.gf_full_graph;
  if (used("--group-rule")) {
    if (f.group_rule != "either" && f.group_rule != "both")
      throw ConfigError("--group-rule must be either or both");
    cfg.linkpred.group_rule_both = f.group_rule == "both";
  }
  if (used("--gbdt-rounds")) cfg.linkpred.gbdt.n_rounds = f.gbdt_rounds;
  if (used("--gbdt-depth")) cfg.linkpred.gbdt.max_depth = f.gbdt_depth;
  if (used("--gbdt-rate")) cfg.linkpred.gbdt.learning_rate = f.gbdt_rate;
  if (used("--gbdt-l2")) cfg.linkpred.gbdt.l2 = f.gbdt_l2;
  if (used("--gbdt-bins")) cfg.linkpred.gbdt.max_bins = f.gbdt_bins;

  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homophily and link prediction on music-listening networks"};
  app.set_version_flag("--version", homnet::kVersion);
  app.require_subcommand(1);

  Flags f;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_run_options(synth, f);
  add_synth_options(synth, f);

  CLI::App* ingest = app.add_subcommand("ingest", "validate inputs, write a load report");
  add_run_options(ingest, f);
  add_input_options(ingest, f, true);

  CLI::App* features = app.add_subcommand("features", "per-user behaviour features and groups");
  add_run_options(features, f);
  add_input_options(features, f, false);

  CLI::App* profiles = app.add_subcommand("profiles", "listening profiles and factorization");
  add_run_options(profiles, f);
  add_input_options(profiles, f, false);
  add_nmf_options(profiles, f);

  CLI::App* homophily = app.add_subcommand("homophily", "group mixing and null comparison");
  add_run_options(homophily, f);
  add_input_options(homophily, f, true);
  add_nmf_options(homophily, f);
  add_homophily_options(homophily, f);

  CLI::App* linkpred = app.add_subcommand("linkpred", "feature-set comparison experiment");
  add_run_options(linkpred, f);
  add_input_options(linkpred, f, true);
  add_nmf_options(linkpred, f);
  add_linkpred_options(linkpred, f);

  CLI::App* all = app.add_subcommand("all", "every analysis stage into one directory");
  add_run_options(all, f);
  add_input_options(all, f, true);
  add_nmf_options(all, f);
  add_homophily_options(all, f);
  add_linkpred_options(all, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      run_synth(build_config(*synth, f, true));
    } else if (ingest->parsed()) {
      run_ingest(build_config(*ingest, f, false));
    } else if (features->parsed()) {
      const PipelineConfig cfg = build_config(*features, f, false);
      Stage s(cfg);
      run_features(s, cfg.out_dir);
    } else if (profiles->parsed()) {
      const PipelineConfig cfg = build_config(*profiles, f, false);
      Stage s(cfg);
      run_profiles(s, cfg.out_dir);
    } else if (homophily->parsed()) {
      const PipelineConfig cfg = build_config(*homophily, f, false);
      Stage s(cfg);
      run_homophily(s, cfg.out_dir);
    } else if (linkpred->parsed()) {
      const PipelineConfig cfg = build_config(*linkpred, f, false);
      Stage s(cfg);
      run_linkpred(s, cfg.out_dir);
    } else if (all->parsed()) {
      run_all(build_config(*all, f, false));
    }
    return 0;
  } catch (const homnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const homnet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const homnet::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
