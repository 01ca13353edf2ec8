#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <utility>
#include <vector>

#include "homnet/errors.hpp"
#include "homnet/ingest.hpp"
#include "homnet/rng.hpp"
#include "homnet/tsv.hpp"

namespace homnet {

namespace {

constexpr double kBetaMax = 12.0;      // edge-model slope at homophily_strength 1
constexpr double kTasteScale = 0.12;   // kernel length in latent taste space
constexpr double kTasteWeight = 2.0;   // taste term vs the mean behaviour weight
constexpr double kClosureFrac = 0.5;   // share of ties made by closing wedges
constexpr double kZipfExponent = 0.8;  // global artist popularity decay
constexpr double kGenreZipf = 0.7;     // genre size decay (charts live in few genres)
// Repertoire breadth in genres: base + slope * d, at least kRepertoireMin.
constexpr double kRepertoireBase = 0.07;
constexpr double kRepertoireSlope = 0.18;
constexpr int64_t kRepertoireMin = 6;
constexpr int64_t kTimeOrigin = 1000000000;
constexpr int64_t kHorizon = 94608000;  // three years of listening
constexpr size_t kCalibSamples = 400000;
constexpr int64_t kMaxUsers = 10000;  // the edge model is quadratic in users
constexpr int64_t kTracksPerArtist = 16;

double sigmoid_at(double z) { return 1.0 / (1.0 + std::exp(-z)); }

size_t sample_cum(const std::vector<double>& cum, Rng& rng) {
  const double r = rng.uniform() * cum.back();
  const size_t i = size_t(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
  return std::min(i, cum.size() - 1);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_artists < 1 || cfg.n_genres < 1 || cfg.n_events < 1)
    throw ConfigError("synthetic: counts must be positive");
  if (!(cfg.homophily_strength >= 0.0 && cfg.homophily_strength <= 1.0))
    throw ConfigError("synthetic: homophily_strength must be in [0,1]");
  const double wm = cfg.mnd_edge_weights[0];
  const double wn = cfg.mnd_edge_weights[1];
  const double wd = cfg.mnd_edge_weights[2];
  if (!(wm >= 0.0) || !(wn >= 0.0) || !(wd >= 0.0) || wm + wn + wd <= 0.0)
    throw ConfigError("synthetic: mnd_edge_weights must be nonnegative with a positive sum");
  if (cfg.n_edges < 0) throw ConfigError("synthetic: n_edges must be >= 0");
  if (cfg.n_events < cfg.n_users)
    throw InfeasibleError("synthetic: need at least one event per user");
  if (cfg.n_users > kMaxUsers)
    throw InfeasibleError("synthetic: user count capped at " + std::to_string(kMaxUsers));

  const int64_t n_users = cfg.n_users;
  const int64_t n_pairs = n_users * (n_users - 1) / 2;
  const int64_t target_edges =
      cfg.n_edges > 0 ? cfg.n_edges
                      : std::min(n_pairs, int64_t(llround(7.5 * double(n_users))));
  if (target_edges > n_pairs)
    throw InfeasibleError("synthetic: n_edges exceeds the number of user pairs");

  Rng rng(cfg.seed);

  // Genre geography and artist catalogue. Genres have Zipf-decaying sizes
  // (charts concentrate in a few genres); each artist has one home genre and
  // sometimes a second, plus a long-tailed global popularity weight.
  std::vector<std::array<double, 2>> genre_pos(size_t(cfg.n_genres));
  for (auto& q : genre_pos) q = {rng.uniform(), rng.uniform()};
  std::vector<double> genre_size_cum(size_t(cfg.n_genres));
  {
    double c = 0.0;
    for (int64_t g = 0; g < cfg.n_genres; ++g) {
      c += std::pow(double(g + 1), -kGenreZipf);
      genre_size_cum[size_t(g)] = c;
    }
  }

  GenreMap gm;
  gm.n_genres = cfg.n_genres;
  std::vector<std::vector<int64_t>> genre_artists(size_t(cfg.n_genres));
  std::vector<double> global_cum(size_t(cfg.n_artists));
  double acc = 0.0;
  for (int64_t a = 0; a < cfg.n_artists; ++a) {
    const int64_t g1 = int64_t(sample_cum(genre_size_cum, rng));
    genre_artists[size_t(g1)].push_back(a);
    std::vector<std::pair<int64_t, double>> ws{{g1, 1.0}};
    if (rng.uniform() < 0.4) {
      const int64_t g2 = int64_t(sample_cum(genre_size_cum, rng));
      if (g2 == g1)
        ws[0].second += 0.5;
      else
        ws.emplace_back(g2, 0.5);
    }
    std::sort(ws.begin(), ws.end());
    gm.weights.emplace(a, std::move(ws));
    acc += std::pow(double(a + 1), -kZipfExponent);
    global_cum[size_t(a)] = acc;
  }
  // Popularity inside a genre is shuffled so a genre's local chart is not the
  // global chart; niche listeners then overlap the aggregate less than chart
  // listeners regardless of how much they explore.
  std::vector<std::vector<double>> genre_cum(size_t(cfg.n_genres));
  for (int64_t g = 0; g < cfg.n_genres; ++g) {
    auto& members = genre_artists[size_t(g)];
    rng.shuffle(members);
    double c = 0.0;
    genre_cum[size_t(g)].reserve(members.size());
    for (size_t i = 0; i < members.size(); ++i) {
      c += std::pow(double(i + 1), -kZipfExponent);
      genre_cum[size_t(g)].push_back(c);
    }
  }

  // Latent user propensities: who listens to the charts (m), who explores
  // new artists (n), how broad the taste is (d), and where it sits.
  PlantedTruth truth;
  truth.m.resize(size_t(n_users));
  truth.n.resize(size_t(n_users));
  truth.d.resize(size_t(n_users));
  truth.taste.resize(size_t(n_users));
  for (int64_t u = 0; u < n_users; ++u) {
    // Chart affinity is left-skewed so the measured overlap distribution
    // (concave in m) splits into roughly even value-mass thirds.
    truth.m[size_t(u)] = std::pow(rng.uniform(), 0.7);
    truth.n[size_t(u)] = rng.uniform();
    truth.d[size_t(u)] = rng.uniform();
    truth.taste[size_t(u)] = {rng.uniform(), rng.uniform()};
  }

  // A user's repertoire is the d-scaled number of genres nearest their taste.
  std::vector<std::vector<int64_t>> repertoire(static_cast<size_t>(n_users));
  {
    std::vector<std::pair<double, int64_t>> order(size_t(cfg.n_genres));
    for (int64_t u = 0; u < n_users; ++u) {
      const int64_t k = std::clamp<int64_t>(
          int64_t(llround((kRepertoireBase + kRepertoireSlope * truth.d[size_t(u)]) *
                          double(cfg.n_genres))),
          std::min(kRepertoireMin, cfg.n_genres), cfg.n_genres);
      for (int64_t g = 0; g < cfg.n_genres; ++g) {
        const double dx = genre_pos[size_t(g)][0] - truth.taste[size_t(u)][0];
        const double dy = genre_pos[size_t(g)][1] - truth.taste[size_t(u)][1];
        order[size_t(g)] = {dx * dx + dy * dy, g};
      }
      std::sort(order.begin(), order.end());
      repertoire[size_t(u)].reserve(size_t(k));
      for (int64_t i = 0; i < k; ++i) repertoire[size_t(u)].push_back(order[size_t(i)].second);
    }
  }

  // Events: each pick is either a revisit of a known artist or an
  // exploration (rate set by n); explorations draw from the charts (rate set
  // by m) or from the user's repertoire genres.
  EventLog log;
  log.events.reserve(size_t(cfg.n_events));
  const int64_t base_events = cfg.n_events / n_users;
  const int64_t extra_events = cfg.n_events % n_users;
  std::vector<int64_t> known;
  std::unordered_set<int64_t> known_set;
  for (int64_t u = 0; u < n_users; ++u) {
    known.clear();
    known_set.clear();
    const int64_t n_ev = base_events + (u < extra_events ? 1 : 0);
    const double p_new = 0.45 + 0.3 * truth.n[size_t(u)];
    const double p_main = 0.05 + 0.85 * truth.m[size_t(u)];
    const auto& rep = repertoire[size_t(u)];
    for (int64_t e = 0; e < n_ev; ++e) {
      const int64_t ts = kTimeOrigin + int64_t(rng.uniform_int(uint64_t(kHorizon)));
      int64_t artist = -1;
      if (known.empty() || rng.uniform() < p_new) {
        for (int tries = 0; tries < 16; ++tries) {
          int64_t cand;
          if (rng.uniform() < p_main) {
            cand = int64_t(sample_cum(global_cum, rng));
          } else {
            const int64_t g = rep[size_t(rng.uniform_int(rep.size()))];
            cand = genre_artists[size_t(g)].empty()
                       ? int64_t(sample_cum(global_cum, rng))
                       : genre_artists[size_t(g)][sample_cum(genre_cum[size_t(g)], rng)];
          }
          artist = cand;
          if (!known_set.contains(cand)) break;
        }
        if (!known_set.contains(artist)) {
          known_set.insert(artist);
          known.push_back(artist);
        }
      } else {
        artist = known[size_t(rng.uniform_int(known.size()))];
      }
      const int64_t track =
          artist * kTracksPerArtist + int64_t(rng.uniform_int(uint64_t(kTracksPerArtist)));
      log.events.push_back({u, artist, track, ts});
    }
  }
  std::stable_sort(log.events.begin(), log.events.end(), [](const Event& a, const Event& b) {
    return a.user != b.user ? a.user < b.user : a.timestamp < b.timestamp;
  });

  // Edges: logistic in latent similarity. The intercept is bisected so the
  // expected edge count hits the target whatever the strength.
  const double wt = kTasteWeight * (wm + wn + wd) / 3.0;
  const double denom = wm + wn + wd + wt;
  auto similarity = [&](int64_t u, int64_t v) {
    const double sm = 1.0 - std::abs(truth.m[size_t(u)] - truth.m[size_t(v)]);
    const double sn = 1.0 - std::abs(truth.n[size_t(u)] - truth.n[size_t(v)]);
    const double sd = 1.0 - std::abs(truth.d[size_t(u)] - truth.d[size_t(v)]);
    const double dx = truth.taste[size_t(u)][0] - truth.taste[size_t(v)][0];
    const double dy = truth.taste[size_t(u)][1] - truth.taste[size_t(v)][1];
    const double st = std::exp(-std::sqrt(dx * dx + dy * dy) / kTasteScale);
    return (wm * sm + wn * sn + wd * sd + wt * st) / denom;
  };
  const double beta = cfg.homophily_strength * kBetaMax;
  double alpha = -50.0;
  EdgeList el;
  const int64_t closure_target = llround(kClosureFrac * double(target_edges));
  const int64_t base_target = target_edges - closure_target;
  if (n_pairs > 0 && base_target > 0) {
    std::vector<double> calib;
    if (uint64_t(n_pairs) <= kCalibSamples) {
      calib.reserve(size_t(n_pairs));
      for (int64_t u = 0; u < n_users; ++u)
        for (int64_t v = u + 1; v < n_users; ++v) calib.push_back(similarity(u, v));
    } else {
      calib.reserve(kCalibSamples);
      while (calib.size() < kCalibSamples) {
        const int64_t u = int64_t(rng.uniform_int(uint64_t(n_users)));
        const int64_t v = int64_t(rng.uniform_int(uint64_t(n_users)));
        if (u == v) continue;
        calib.push_back(similarity(u, v));
      }
    }
    const double scale = double(n_pairs) / double(calib.size());
    double lo = -60.0, hi = 30.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      double s = 0.0;
      for (double c : calib) s += sigmoid_at(mid + beta * c);
      (s * scale < double(base_target) ? lo : hi) = mid;
    }
    alpha = 0.5 * (lo + hi);
    for (int64_t u = 0; u < n_users; ++u)
      for (int64_t v = u + 1; v < n_users; ++v)
        if (rng.uniform() < sigmoid_at(alpha + beta * similarity(u, v)))
          el.edges.emplace_back(u, v);
  }
  // Friend-of-a-friend closure: observed friendship graphs are triangle-rich,
  // so a fixed share of ties comes from a common contact introducing two of
  // their neighbours. Closed pairs inherit the similarity of their introducer,
  // so the homophily signal survives the shortcut.
  if (closure_target > 0 && !el.edges.empty()) {
    std::vector<std::vector<int64_t>> adj(static_cast<size_t>(n_users));
    std::unordered_set<uint64_t> have;
    have.reserve(size_t(target_edges) * 2);
    const auto key = [n_users](int64_t a, int64_t b) {
      return uint64_t(std::min(a, b)) * uint64_t(n_users) + uint64_t(std::max(a, b));
    };
    for (const auto& e : el.edges) {
      adj[size_t(e.first)].push_back(e.second);
      adj[size_t(e.second)].push_back(e.first);
      have.insert(key(e.first, e.second));
    }
    const int64_t max_tries = 50 * closure_target + 1000;
    int64_t added = 0;
    for (int64_t tries = 0; added < closure_target && tries < max_tries; ++tries) {
      const auto [a, b] = el.edges[size_t(rng.uniform_int(el.edges.size()))];
      const int64_t w = rng.uniform() < 0.5 ? a : b;
      const int64_t u = w == a ? b : a;
      const auto& nb = adj[size_t(w)];
      const int64_t v = nb[size_t(rng.uniform_int(nb.size()))];
      if (v == u || have.contains(key(u, v))) continue;
      el.edges.emplace_back(std::min(u, v), std::max(u, v));
      adj[size_t(u)].push_back(v);
      adj[size_t(v)].push_back(u);
      have.insert(key(u, v));
      ++added;
    }
  }
  truth.alpha = alpha;
  truth.beta = beta;
  return {std::move(log), std::move(gm), std::move(el), std::move(truth)};
}

void save_truth(const PlantedTruth& truth, const std::filesystem::path& path) {
  tsv::Writer out(path);
  for (size_t u = 0; u < truth.m.size(); ++u) {
    out.field(int64_t(u));
    out.field(truth.m[u]);
    out.field(truth.n[u]);
    out.field(truth.d[u]);
    out.field(truth.taste[u][0]);
    out.field(truth.taste[u][1]);
    out.end_row();
  }
  out.close();
}

}  // namespace homnet
