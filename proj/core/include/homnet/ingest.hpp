#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace homnet {

struct Event {
  int64_t user = 0;
  int64_t artist = 0;
  int64_t track = 0;
  int64_t timestamp = 0;  // seconds since epoch

  friend bool operator==(const Event&, const Event&) = default;
};

/// Listening events, sorted by (user, timestamp).
struct EventLog {
  std::vector<Event> events;

  int64_t n_users() const;    // 1 + max user id, 0 if empty
  int64_t n_artists() const;  // 1 + max artist id, 0 if empty
};

/// Sparse artist -> weighted genre list. Genre weights are nonnegative.
struct GenreMap {
  int64_t n_genres = 0;
  std::unordered_map<int64_t, std::vector<std::pair<int64_t, double>>> weights;
};

/// Deduplicated (min,max) friendship pairs, no self-loops.
struct EdgeList {
  std::vector<std::pair<int64_t, int64_t>> edges;

  int64_t n_nodes() const;  // 1 + max endpoint, 0 if empty
};

struct LoadReport {
  size_t rows_total = 0;       // data rows seen (header excluded)
  size_t rows_loaded = 0;
  size_t rows_malformed = 0;   // wrong arity / non-numeric / negative ids
  size_t rows_rejected = 0;    // semantically invalid (negative weight, self-loop)
  size_t duplicates = 0;       // edge loader only
  std::vector<std::string> first_errors;  // up to 5 annotated samples
};

/// Loads TSV rows `user \t artist \t track \t timestamp`, sorted on return.
/// Malformed rows are skipped and counted; more than 10% malformed aborts.
EventLog load_events(const std::filesystem::path& path, bool header = false,
                     LoadReport* report = nullptr);

/// Loads TSV rows `artist \t genre \t weight`. Rows with negative weight are
/// rejected and counted. n_genres defaults to 1 + max genre id seen.
GenreMap load_genre_map(const std::filesystem::path& path, bool header = false,
                        std::optional<int64_t> n_genres_override = std::nullopt,
                        LoadReport* report = nullptr);

/// Loads TSV rows `user_a \t user_b`; dedupes unordered pairs, skips self-loops.
EdgeList load_edges(const std::filesystem::path& path, bool header = false,
                    LoadReport* report = nullptr);

void save_events(const EventLog& log, const std::filesystem::path& path);
void save_genre_map(const GenreMap& gm, const std::filesystem::path& path);
void save_edges(const EdgeList& el, const std::filesystem::path& path);

struct SyntheticConfig {
  int64_t n_users = 2000;
  int64_t n_artists = 8000;
  int64_t n_genres = 200;
  int64_t n_events = 800000;
  int64_t n_edges = 0;  // 0 picks a mean degree of 15
  double homophily_strength = 0.8;
  std::array<double, 3> mnd_edge_weights = {1.0, 1.0, 1.0};
  uint64_t seed = 0;
};

/// The planted per-user propensities behind a synthetic dataset, plus the
/// calibrated edge-model coefficients (log-odds alpha + beta * similarity).
struct PlantedTruth {
  std::vector<double> m;  // mainstream listening propensity, in [0,1]
  std::vector<double> n;  // exploration propensity
  std::vector<double> d;  // taste-breadth propensity
  std::vector<std::array<double, 2>> taste;  // latent taste location
  double alpha = 0.0;
  double beta = 0.0;
};

struct SyntheticData {
  EventLog events;
  GenreMap genres;
  EdgeList edges;
  PlantedTruth truth;
};

/// Generates a listening dataset with planted behavioural homophily: users
/// draw latent propensities, events are sampled so the computed features
/// track those latents, and each candidate edge appears with probability
/// sigmoid(alpha + beta * latent_similarity) where beta scales with
/// homophily_strength and alpha is bisected to hit the target edge count.
/// Deterministic given the config. Quadratic in n_users (capped at 10,000).
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

void save_truth(const PlantedTruth& truth, const std::filesystem::path& path);

}  // namespace homnet
