#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "homnet/ingest.hpp"

namespace homnet {

enum class ProfileFlavor : uint8_t { artist, genre };

/// Sparse user x item listening-profile matrix, entries >= 0.
struct ProfileMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> m;
  ProfileFlavor flavor = ProfileFlavor::artist;
  bool normalized = false;

  int64_t rows() const { return m.rows(); }
  int64_t cols() const { return m.cols(); }
  int64_t nnz() const { return m.nonZeros(); }
  /// nnz / (rows * cols); 0 for an empty shape.
  double density() const;
};

struct GenreBuildReport {
  size_t uncovered_artists = 0;  // artists with playcounts but no genre entry
  size_t uncovered_events = 0;   // events attributed to those artists
};

/// Entry (u,i) = playcount of user u for artist i.
ProfileMatrix build_artist_matrix(const EventLog& log);

/// Entry (u,j) = sum over artists of playcount(u,a) * weight(a,j).
ProfileMatrix build_genre_matrix(const EventLog& log, const GenreMap& gm,
                                 GenreBuildReport* report = nullptr);

/// Scales every nonzero row to unit Euclidean norm; zero rows stay zero.
ProfileMatrix l2_normalize_rows(ProfileMatrix m);

struct NmfParams {
  int rank = 20;
  int max_iters = 500;
  double tol = 1e-5;  // relative objective decrease per iteration
  uint64_t seed = 0;
};

struct FactorPair {
  Eigen::MatrixXd w;  // n_rows x rank
  Eigen::MatrixXd h;  // rank x n_cols
  int rank = 0;
  double final_objective = 0.0;             // 0.5 * ||M - WH||_F^2
  std::vector<double> objective_history;    // one entry per completed iteration
};

/// Frobenius NMF by multiplicative updates. The objective is non-increasing;
/// iteration stops when the relative decrease drops below tol. Init is
/// |N(0,1)| * sqrt(mean(M)/rank), seeded.
FactorPair nmf(const ProfileMatrix& m, const NmfParams& params);

/// Dot product of factor rows u and v.
double profile_dot(const Eigen::MatrixXd& w, int64_t u, int64_t v);

/// Cosine similarity of factor rows; 0 if either row is zero.
double cosine_rows(const Eigen::MatrixXd& w, int64_t u, int64_t v);

/// TSV persistence: sparse matrices as `row \t col \t value` triplets, dense
/// matrices row-major; a `.meta` sidecar records shape and flags.
void save_profile_matrix(const ProfileMatrix& m, const std::filesystem::path& path);
ProfileMatrix load_profile_matrix(const std::filesystem::path& path);
void save_dense_matrix(
    const Eigen::MatrixXd& m, const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& extra_meta = {});
Eigen::MatrixXd load_dense_matrix(const std::filesystem::path& path);

}  // namespace homnet
