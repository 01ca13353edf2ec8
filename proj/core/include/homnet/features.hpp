#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "homnet/ingest.hpp"

namespace homnet {

enum class Group : uint8_t { low = 0, mid = 1, high = 2 };

const char* group_name(Group g);
Group parse_group(const std::string& s);

enum class Window : uint8_t { m1 = 0, m6 = 1, m12 = 2, global = 3 };

/// Fixed-length listening window in seconds (1m = 30d, 6m = 180d, 12m = 365d),
/// anchored at the dataset's earliest timestamp.
int64_t window_seconds(Window w);

inline constexpr int kNumFeatures = 12;

/// Column order used everywhere a feature table is serialized or indexed.
inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "M_1m", "M_6m", "M_12m", "M_G",  "N_1m", "N_6m",
    "N_12m", "D_tracks", "D_artists", "D_GC", "D_GE", "D_wavg"};

int feature_index(const std::string& name);  // throws ConfigError if unknown

struct GroupAssignment {
  std::string feature;
  std::vector<Group> groups;  // one per user
  double low_cut = 0.0;       // largest value assigned to low
  double mid_cut = 0.0;       // largest value assigned to mid (== low_cut if mid empty)
};

struct UserFeatureTable {
  int64_t n_users = 0;
  std::array<std::vector<double>, kNumFeatures> values;  // values[f][user]
  std::array<std::vector<Group>, kNumFeatures> groups;   // groups[f][user]
  size_t inactive_users = 0;  // users in id range with no events

  double value(int f, int64_t user) const { return values[size_t(f)][size_t(user)]; }
  Group group(int f, int64_t user) const { return groups[size_t(f)][size_t(user)]; }
};

/// Cosine overlap between the user's artist-playcount vector and the
/// all-users aggregate. Windowed variants average the per-window cosine over
/// the user's active windows. Users without events score 0.
std::vector<double> mainstreaminess(const EventLog& log, Window window);

/// Fraction of artists first heard in each active window, averaged over the
/// user's active windows; the first window counts every artist as new.
/// `window` must not be `global`.
std::vector<double> novelty(const EventLog& log, Window window);

struct DiversityCounts {
  std::vector<double> tracks;   // log(1+c)/max_v log(1+c)
  std::vector<double> artists;
};

DiversityCounts diversity_counts(const EventLog& log);

/// Fraction of genres with nonzero weight.
double genre_coverage(std::span<const double> genre_row, int64_t n_genres);

/// Shannon entropy (base 2) of the row normalized to sum 1; zero row -> 0.
double genre_entropy(std::span<const double> genre_row);

/// Mean of L_i / max(L) over all genre slots; zero row -> 0.
double weighted_avg_diversity(std::span<const double> genre_row, int64_t n_genres);

/// Sorts users ascending by (value, id), accumulates, and closes the low
/// (resp. mid) group with the user whose running sum first reaches 1/3
/// (resp. 2/3) of the total. Values must be nonnegative with at least one
/// positive entry.
GroupAssignment assign_groups(const std::vector<double>& values,
                              const std::string& feature_name = "");

/// Computes all 12 features plus their group assignments for every user id
/// in the log's range.
UserFeatureTable compute_features(const EventLog& log, const GenreMap& gm);

void save_features(const UserFeatureTable& table, const std::filesystem::path& path);
UserFeatureTable load_features(const std::filesystem::path& path);

}  // namespace homnet
