#include "homnet/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "homnet/errors.hpp"
#include "homnet/rng.hpp"
#include "homnet/tsv.hpp"

namespace homnet {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

}  // namespace

double ProfileMatrix::density() const {
  if (rows() == 0 || cols() == 0) return 0.0;
  return double(nnz()) / (double(rows()) * double(cols()));
}

ProfileMatrix build_artist_matrix(const EventLog& log) {
  ProfileMatrix pm;
  pm.flavor = ProfileFlavor::artist;
  const int64_t n_users = log.n_users();
  const int64_t n_artists = log.n_artists();
  if (n_users == 0) return pm;

  // Events are sorted by user; count (user, artist) pairs per user.
  std::vector<Eigen::Triplet<double>> triplets;
  std::map<int64_t, int64_t> counts;
  size_t i = 0;
  while (i < log.events.size()) {
    const int64_t u = log.events[i].user;
    counts.clear();
    for (; i < log.events.size() && log.events[i].user == u; ++i) ++counts[log.events[i].artist];
    for (const auto& [a, c] : counts) triplets.emplace_back(int(u), int(a), double(c));
  }
  pm.m = SpMat(n_users, n_artists);
  pm.m.setFromTriplets(triplets.begin(), triplets.end());
  pm.m.makeCompressed();
  return pm;
}

ProfileMatrix build_genre_matrix(const EventLog& log, const GenreMap& gm, GenreBuildReport* report) {
  ProfileMatrix pm;
  pm.flavor = ProfileFlavor::genre;
  const int64_t n_users = log.n_users();
  if (n_users == 0) return pm;

  GenreBuildReport local;
  GenreBuildReport& rep = report ? *report : local;
  rep = GenreBuildReport{};

  std::vector<Eigen::Triplet<double>> triplets;
  std::map<int64_t, int64_t> artist_counts;
  std::map<int64_t, double> genre_row;
  std::vector<int64_t> uncovered;
  size_t i = 0;
  while (i < log.events.size()) {
    const int64_t u = log.events[i].user;
    artist_counts.clear();
    genre_row.clear();
    for (; i < log.events.size() && log.events[i].user == u; ++i) ++artist_counts[log.events[i].artist];
    for (const auto& [a, c] : artist_counts) {
      auto it = gm.weights.find(a);
      if (it == gm.weights.end()) {
        uncovered.push_back(a);
        rep.uncovered_events += size_t(c);
        continue;
      }
      for (const auto& [g, w] : it->second) genre_row[g] += double(c) * w;
    }
    for (const auto& [g, w] : genre_row)
      if (w != 0.0) triplets.emplace_back(int(u), int(g), w);
  }
  std::sort(uncovered.begin(), uncovered.end());
  rep.uncovered_artists = size_t(std::unique(uncovered.begin(), uncovered.end()) - uncovered.begin());

  pm.m = SpMat(n_users, gm.n_genres);
  pm.m.setFromTriplets(triplets.begin(), triplets.end());
  pm.m.makeCompressed();
  return pm;
}

ProfileMatrix l2_normalize_rows(ProfileMatrix pm) {
  for (int64_t r = 0; r < pm.rows(); ++r) {
    double sq = 0.0;
    for (SpMat::InnerIterator it(pm.m, int(r)); it; ++it) sq += it.value() * it.value();
    if (sq <= 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (SpMat::InnerIterator it(pm.m, int(r)); it; ++it) it.valueRef() *= inv;
  }
  pm.normalized = true;
  return pm;
}

namespace {

double nmf_objective(const SpMat& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h,
                     double m_sq_norm) {
  // 0.5 ||M - WH||^2 = 0.5 ||M||^2 - <M, WH> + 0.5 tr((W'W)(HH')).
  double inner = 0.0;
  for (int r = 0; r < m.outerSize(); ++r)
    for (SpMat::InnerIterator it(m, r); it; ++it)
      inner += it.value() * w.row(it.row()).dot(h.col(it.col()));
  const Eigen::MatrixXd wtw = w.transpose() * w;
  const Eigen::MatrixXd hht = h * h.transpose();
  return 0.5 * m_sq_norm - inner + 0.5 * (wtw.array() * hht.array()).sum();
}

}  // namespace

FactorPair nmf(const ProfileMatrix& pm, const NmfParams& params) {
  const SpMat& m = pm.m;
  const int64_t n = m.rows(), k = m.cols();
  if (params.rank < 1) throw ConfigError("nmf rank must be >= 1");
  if (params.rank > std::min(n, k))
    throw ConfigError("nmf rank " + std::to_string(params.rank) + " exceeds matrix dims " +
                      std::to_string(n) + "x" + std::to_string(k));

  const int r = params.rank;
  const double m_sq_norm = m.squaredNorm();
  const double mean = n * k > 0 ? m.sum() / (double(n) * double(k)) : 0.0;
  const double scale = std::sqrt(std::max(mean, 1e-12) / double(r));

  Rng rng(params.seed);
  FactorPair f;
  f.rank = r;
  f.w.resize(n, r);
  f.h.resize(r, k);
  for (int64_t i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j) f.w(i, j) = std::abs(rng.normal()) * scale;
  for (int i = 0; i < r; ++i)
    for (int64_t j = 0; j < k; ++j) f.h(i, j) = std::abs(rng.normal()) * scale;

  constexpr double kDenomFloor = 1e-300;
  double prev = nmf_objective(m, f.w, f.h, m_sq_norm);
  f.objective_history.push_back(prev);

  for (int it = 0; it < params.max_iters; ++it) {
    // H <- H .* (W'M) ./ (W'W H)
    {
      const Eigen::MatrixXd num = (m.transpose() * f.w).transpose();  // r x k
      const Eigen::MatrixXd den = (f.w.transpose() * f.w) * f.h;
      f.h = f.h.cwiseProduct(num.cwiseQuotient(den.cwiseMax(kDenomFloor)));
    }
    // W <- W .* (M H') ./ (W H H')
    {
      const Eigen::MatrixXd num = m * f.h.transpose();  // n x r
      const Eigen::MatrixXd den = f.w * (f.h * f.h.transpose());
      f.w = f.w.cwiseProduct(num.cwiseQuotient(den.cwiseMax(kDenomFloor)));
    }
    const double obj = nmf_objective(m, f.w, f.h, m_sq_norm);
    f.objective_history.push_back(obj);
    const bool converged = prev > 0.0 && (prev - obj) < params.tol * prev;
    prev = obj;
    if (converged) break;
  }
  f.final_objective = prev;
  return f;
}

double profile_dot(const Eigen::MatrixXd& w, int64_t u, int64_t v) {
  if (u < 0 || v < 0 || u >= w.rows() || v >= w.rows())
    throw DataError("profile_dot: user index out of range");
  return w.row(u).dot(w.row(v));
}

double cosine_rows(const Eigen::MatrixXd& w, int64_t u, int64_t v) {
  if (u < 0 || v < 0 || u >= w.rows() || v >= w.rows())
    throw DataError("cosine_rows: user index out of range");
  const double nu = w.row(u).norm(), nv = w.row(v).norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return w.row(u).dot(w.row(v)) / (nu * nv);
}

namespace {

std::filesystem::path meta_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".meta";
  return p;
}

void write_meta(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(meta_path(path), std::ios::binary);
  if (!out) throw DataError("cannot write " + meta_path(path).string());
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& path) {
  std::ifstream in(meta_path(path), std::ios::binary);
  if (!in) throw DataError("missing sidecar " + meta_path(path).string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

void save_profile_matrix(const ProfileMatrix& pm, const std::filesystem::path& path) {
  tsv::Writer w(path);
  for (int r = 0; r < pm.m.outerSize(); ++r) {
    for (SpMat::InnerIterator it(pm.m, r); it; ++it) {
      w.field(int64_t(it.row()));
      w.field(int64_t(it.col()));
      w.field(it.value());
      w.end_row();
    }
  }
  w.close();
  write_meta(path, {{"rows", std::to_string(pm.rows())},
                    {"cols", std::to_string(pm.cols())},
                    {"flavor", pm.flavor == ProfileFlavor::artist ? "artist" : "genre"},
                    {"normalized", pm.normalized ? "1" : "0"}});
}

ProfileMatrix load_profile_matrix(const std::filesystem::path& path) {
  auto kv = read_meta(path);
  ProfileMatrix pm;
  pm.flavor = kv.at("flavor") == "genre" ? ProfileFlavor::genre : ProfileFlavor::artist;
  pm.normalized = kv.at("normalized") == "1";
  const int64_t rows = std::stoll(kv.at("rows"));
  const int64_t cols = std::stoll(kv.at("cols"));

  std::vector<Eigen::Triplet<double>> triplets;
  tsv::LineReader reader(path);
  if (!reader.ok()) throw DataError("cannot open " + path.string());
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = tsv::split(line);
    if (fields.size() != 3) throw DataError("bad triplet row in " + path.string());
    auto r = tsv::parse_int(fields[0]);
    auto c = tsv::parse_int(fields[1]);
    auto v = tsv::parse_double(fields[2]);
    if (!r || !c || !v) throw DataError("bad triplet row in " + path.string());
    triplets.emplace_back(int(*r), int(*c), *v);
  }
  pm.m = SpMat(rows, cols);
  pm.m.setFromTriplets(triplets.begin(), triplets.end());
  pm.m.makeCompressed();
  return pm;
}

void save_dense_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& extra_meta) {
  tsv::Writer w(path);
  for (int64_t r = 0; r < m.rows(); ++r) {
    for (int64_t c = 0; c < m.cols(); ++c) w.field(m(r, c));
    w.end_row();
  }
  w.close();
  std::vector<std::pair<std::string, std::string>> kv = {
      {"rows", std::to_string(m.rows())}, {"cols", std::to_string(m.cols())}};
  kv.insert(kv.end(), extra_meta.begin(), extra_meta.end());
  write_meta(path, kv);
}

Eigen::MatrixXd load_dense_matrix(const std::filesystem::path& path) {
  auto kv = read_meta(path);
  const int64_t rows = std::stoll(kv.at("rows"));
  const int64_t cols = std::stoll(kv.at("cols"));
  Eigen::MatrixXd m(rows, cols);
  tsv::LineReader reader(path);
  if (!reader.ok()) throw DataError("cannot open " + path.string());
  std::string line;
  int64_t r = 0;
  while (reader.next(line)) {
    if (line.empty()) continue;
    auto fields = tsv::split(line);
    if (r >= rows || int64_t(fields.size()) != cols) throw DataError("shape mismatch in " + path.string());
    for (int64_t c = 0; c < cols; ++c) {
      auto v = tsv::parse_double(fields[size_t(c)]);
      if (!v) throw DataError("bad value in " + path.string());
      m(r, c) = *v;
    }
    ++r;
  }
  if (r != rows) throw DataError("shape mismatch in " + path.string());
  return m;
}

}  // namespace homnet
