#pragma once

// Synthetic clustered rating data, random deletion, and the resolution
// (intra-cluster minus inter-cluster mean similarity) experiments.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lira/errors.hpp"
#include "lira/evaluation.hpp"
#include "lira/parallel.hpp"
#include "lira/random.hpp"
#include "lira/ratings.hpp"
#include "lira/similarity.hpp"

namespace lira {

/// Per-cluster, per-item categorical rating distributions.
struct ClusterParams {
  std::size_t num_users = 40;
  std::size_t num_items = 0;
  int scale_d = kDefaultScale;
  std::size_t num_clusters = 2;
  std::uint64_t seed = 0;
  std::vector<double> mu;  // [cluster][item][rating - 1], row-major

  std::span<const double> probs(std::size_t cluster, std::size_t item) const {
    const auto d = static_cast<std::size_t>(scale_d);
    return std::span<const double>(mu).subspan((cluster * num_items + item) * d, d);
  }
  std::span<double> probs(std::size_t cluster, std::size_t item) {
    const auto d = static_cast<std::size_t>(scale_d);
    return std::span<double>(mu).subspan((cluster * num_items + item) * d, d);
  }
};

/// Draws every μ from the flat Dirichlet on the d-simplex (normalized unit
/// exponentials).
inline ClusterParams draw_cluster_params(std::size_t num_users, std::size_t num_items, int scale_d,
                                         std::size_t num_clusters, std::uint64_t seed) {
  if (scale_d < 2 || scale_d > kMaxScale) throw DomainError("rating scale must be in 2..255");
  if (num_clusters == 0) throw DomainError("need at least one cluster");
  ClusterParams p{num_users, num_items, scale_d, num_clusters, seed, {}};
  p.mu.resize(num_clusters * num_items * static_cast<std::size_t>(scale_d));
  Engine rng(derive_seed(seed, {0}));
  for (std::size_t k = 0; k < num_clusters; ++k)
    for (std::size_t i = 0; i < num_items; ++i) {
      auto row = p.probs(k, i);
      double total = 0.0;
      for (auto& x : row) total += x = -std::log1p(-uniform01(rng));
      for (auto& x : row) x /= total;
    }
  return p;
}

struct ClusterDataset {
  RatingMatrix matrix;
  std::vector<std::size_t> labels;  // cluster of each user
  ClusterParams params;
  double missing_rate = 0.0;
};

/// Fills every (user, item) cell with one categorical draw from the user's
/// cluster distribution. Users are assigned to clusters in contiguous blocks
/// of m/κ.
inline ClusterDataset generate_clusters(const ClusterParams& params) {
  const auto m = params.num_users, n = params.num_items, kappa = params.num_clusters;
  const auto d = static_cast<std::size_t>(params.scale_d);
  if (kappa == 0 || m % kappa != 0) throw DomainError("number of users must be divisible by the number of clusters");
  if (n < 1) throw DomainError("need at least one item");
  if (params.scale_d < 2 || params.scale_d > kMaxScale) throw DomainError("rating scale must be in 2..255");
  if (params.mu.size() != kappa * n * d) throw DomainError("mu has the wrong shape");
  for (std::size_t k = 0; k < kappa; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (double x : params.probs(k, i)) {
        if (!(x >= 0.0)) throw DomainError("mu entries must be non-negative");
        s += x;
      }
      if (std::abs(s - 1.0) > 1e-9) throw DomainError("mu rows must sum to 1");
    }

  ClusterDataset ds;
  ds.params = params;
  ds.labels.resize(m);
  const auto block = m / kappa;
  std::vector<Rating> triples;
  triples.reserve(m * n);
  Engine rng(derive_seed(params.seed, {1}));
  for (std::size_t u = 0; u < m; ++u) {
    const auto k = u / block;
    ds.labels[u] = k;
    for (std::size_t i = 0; i < n; ++i) {
      const auto probs = params.probs(k, i);
      const double x = uniform01(rng);
      double cum = 0.0;
      std::size_t rho = d - 1;
      for (std::size_t r = 0; r < d; ++r) {
        cum += probs[r];
        if (x < cum) {
          rho = r;
          break;
        }
      }
      // Rounding slack in the cumulative sum lands on the last value with mass.
      while (probs[rho] == 0.0 && rho > 0) --rho;
      triples.push_back(Rating{static_cast<UserIndex>(u), static_cast<ItemIndex>(i), static_cast<RatingValue>(rho + 1)});
    }
  }
  ds.matrix = RatingMatrix(m, n, params.scale_d, std::move(triples));
  return ds;
}

/// Deletes each observed cell independently with probability `missing_rate`.
/// The keep/delete decision for a cell depends only on (seed, user, item).
inline ClusterDataset apply_missing(const ClusterDataset& ds, double missing_rate, std::uint64_t seed) {
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw DomainError("missing rate must lie in [0, 1)");
  std::vector<Rating> kept;
  kept.reserve(ds.matrix.num_ratings());
  for (const auto& r : ds.matrix.triples()) {
    const double x = static_cast<double>(derive_seed(seed, {r.user, r.item}) >> 11) * 0x1.0p-53;
    if (!(x < missing_rate)) kept.push_back(r);
  }
  ClusterDataset out;
  out.matrix = RatingMatrix(ds.matrix.num_users(), ds.matrix.num_items(), ds.matrix.scale_d(), std::move(kept),
                            ds.matrix.user_ids(), ds.matrix.item_ids());
  out.labels = ds.labels;
  out.params = ds.params;
  out.missing_rate = ds.missing_rate == 0.0 ? missing_rate : 1.0 - (1.0 - ds.missing_rate) * (1.0 - missing_rate);
  return out;
}

// ---------------------------------------------------------------------------
// Resolution

struct ResolutionReport {
  std::string score_name;
  std::size_t n = 0;
  double missing_rate = 0.0;
  double resolution = 0.0;
  double intra_mean = 0.0;
  double inter_mean = 0.0;
  std::size_t undefined_pairs = 0;
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
};

/// Mean over unordered same-cluster pairs minus mean over unordered
/// cross-cluster pairs. `pair_score(u, v)` returns nullopt for a pair the
/// score cannot judge; it then counts as 0 and is tallied in undefined_pairs.
template <typename PairScore>
ResolutionReport resolution_of(std::span<const std::size_t> labels, PairScore&& pair_score) {
  std::vector<double> intra, inter;
  ResolutionReport r;
  for (std::size_t u = 0; u < labels.size(); ++u)
    for (std::size_t v = u + 1; v < labels.size(); ++v) {
      const std::optional<double> s = pair_score(static_cast<UserIndex>(u), static_cast<UserIndex>(v));
      if (!s) ++r.undefined_pairs;
      (labels[u] == labels[v] ? intra : inter).push_back(s.value_or(0.0));
    }
  if (intra.empty() || inter.empty()) throw DomainError("resolution needs two clusters with at least two users each");
  r.intra_pairs = intra.size();
  r.inter_pairs = inter.size();
  r.intra_mean = pairwise_sum(intra) / static_cast<double>(intra.size());
  r.inter_mean = pairwise_sum(inter) / static_cast<double>(inter.size());
  r.resolution = r.intra_mean - r.inter_mean;
  return r;
}

inline ResolutionReport resolution(const ClusterDataset& ds, ScoreKind kind) {
  std::vector<std::size_t> per_cluster(ds.params.num_clusters, 0);
  for (auto l : ds.labels) ++per_cluster.at(l);
  for (auto c : per_cluster)
    if (c < 2) throw DomainError("resolution needs at least two users per cluster");
  const SimilarityScore score(kind, ds.matrix);
  auto r = resolution_of(ds.labels, [&](UserIndex u, UserIndex v) -> std::optional<double> {
    if (!score_defined(kind, ds.matrix, u, v)) return std::nullopt;
    return score(ds.matrix, u, v);
  });
  r.score_name = std::string(score.name());
  r.n = ds.matrix.num_items();
  r.missing_rate = ds.missing_rate;
  return r;
}

struct ResolutionGridConfig {
  std::size_t num_users = 40;
  int scale_d = kDefaultScale;
  std::size_t num_clusters = 2;
  std::vector<std::size_t> n_values{5, 10, 20, 40, 80};
  std::vector<double> missing_rates{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  std::vector<ScoreKind> scores{ScoreKind::LiRa, ScoreKind::Pearson, ScoreKind::Cosine, ScoreKind::BCF};
  std::vector<std::uint64_t> seeds;
};

inline std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t k = 0; k < count; ++k) s[k] = base + k;
  return s;
}

struct ResolutionRow {
  ResolutionReport report;
  std::uint64_t seed = 0;
  double scaled_resolution = 0.0;  // raw / max |seed-averaged resolution| of the score
};

struct ResolutionSummaryRow {
  std::string score_name;
  std::size_t n = 0;
  double missing_rate = 0.0;
  double mean_resolution = 0.0;
  double sd_resolution = 0.0;
  double intra_mean = 0.0;
  double inter_mean = 0.0;
  double scaled_resolution = 0.0;  // in [-1, 1]
};

struct ResolutionGrid {
  std::vector<ResolutionRow> rows;             // score, n, missing_rate, seed order
  std::vector<ResolutionSummaryRow> summary;   // score, n, missing_rate order

  const ResolutionSummaryRow* find(std::string_view score, std::size_t n, double missing_rate) const {
    for (const auto& s : summary)
      if (s.score_name == score && s.n == n && s.missing_rate == missing_rate) return &s;
    return nullptr;
  }
};

namespace detail {

// The dataset for one grid cell. Streams are keyed by the seed and the n /
// missing-rate values themselves, so a cell reproduces regardless of which
// other cells are in the grid or how work is scheduled.
inline ClusterDataset grid_cell_dataset(const ResolutionGridConfig& cfg, std::uint64_t seed, std::size_t n,
                                        double missing_rate) {
  const auto params = draw_cluster_params(cfg.num_users, n, cfg.scale_d, cfg.num_clusters, derive_seed(seed, {n}));
  const auto full = generate_clusters(params);
  return apply_missing(full, missing_rate, derive_seed(seed, {n, std::bit_cast<std::uint64_t>(missing_rate)}));
}

inline double scale_by(double x, double max_abs) { return max_abs > 0.0 ? x / max_abs : 0.0; }

}  // namespace detail

inline ResolutionGrid resolution_grid(const ResolutionGridConfig& cfg, unsigned threads = 1,
                                      const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  if (cfg.n_values.empty() || cfg.missing_rates.empty() || cfg.scores.empty() || cfg.seeds.empty())
    throw DomainError("resolution grid has an empty axis");
  const auto ns = cfg.n_values.size(), nr = cfg.missing_rates.size(), nseeds = cfg.seeds.size(),
             nsc = cfg.scores.size();
  // reports[((n * nr + rate) * nseeds + seed) * nsc + score]
  std::vector<ResolutionReport> reports(ns * nr * nseeds * nsc);
  std::atomic<std::size_t> done{0};
  parallel_for(ns * nr * nseeds, threads, [&](std::size_t cell) {
    const auto s = cell % nseeds, j = (cell / nseeds) % nr, a = cell / (nseeds * nr);
    const auto ds = detail::grid_cell_dataset(cfg, cfg.seeds[s], cfg.n_values[a], cfg.missing_rates[j]);
    for (std::size_t c = 0; c < nsc; ++c) {
      auto r = resolution(ds, cfg.scores[c]);
      r.missing_rate = cfg.missing_rates[j];
      reports[cell * nsc + c] = std::move(r);
    }
    if (progress) progress(++done, ns * nr * nseeds);
  });

  ResolutionGrid grid;
  for (std::size_t c = 0; c < nsc; ++c) {
    const auto first_summary = grid.summary.size();
    const auto first_row = grid.rows.size();
    for (std::size_t a = 0; a < ns; ++a)
      for (std::size_t j = 0; j < nr; ++j) {
        ResolutionSummaryRow sum{std::string(score_name(cfg.scores[c])), cfg.n_values[a], cfg.missing_rates[j]};
        std::vector<double> vals, intra, inter;
        for (std::size_t s = 0; s < nseeds; ++s) {
          const auto& r = reports[((a * nr + j) * nseeds + s) * nsc + c];
          grid.rows.push_back(ResolutionRow{r, cfg.seeds[s], 0.0});
          vals.push_back(r.resolution);
          intra.push_back(r.intra_mean);
          inter.push_back(r.inter_mean);
        }
        sum.mean_resolution = pairwise_sum(vals) / static_cast<double>(nseeds);
        sum.intra_mean = pairwise_sum(intra) / static_cast<double>(nseeds);
        sum.inter_mean = pairwise_sum(inter) / static_cast<double>(nseeds);
        double ss = 0.0;
        for (double v : vals) ss += (v - sum.mean_resolution) * (v - sum.mean_resolution);
        sum.sd_resolution = nseeds > 1 ? std::sqrt(ss / static_cast<double>(nseeds - 1)) : 0.0;
        grid.summary.push_back(std::move(sum));
      }
    double max_abs = 0.0;
    for (auto k = first_summary; k < grid.summary.size(); ++k)
      max_abs = std::max(max_abs, std::abs(grid.summary[k].mean_resolution));
    for (auto k = first_summary; k < grid.summary.size(); ++k)
      grid.summary[k].scaled_resolution = detail::scale_by(grid.summary[k].mean_resolution, max_abs);
    for (auto k = first_row; k < grid.rows.size(); ++k)
      grid.rows[k].scaled_resolution = detail::scale_by(grid.rows[k].report.resolution, max_abs);
  }
  return grid;
}

struct InterClusterRow {
  std::string score_name;
  double missing_rate = 0.0;
  double inter_mean = 0.0;         // averaged over seeds
  double scaled_inter_mean = 0.0;  // divided by the largest |inter_mean| over missing rates
};

/// Seed-averaged mean inter-cluster similarity per missing rate at a fixed n.
inline std::vector<InterClusterRow> inter_cluster_curve(ResolutionGridConfig cfg, std::size_t n,
                                                        unsigned threads = 1) {
  cfg.n_values = {n};
  const auto grid = resolution_grid(cfg, threads);
  std::vector<InterClusterRow> out;
  for (auto kind : cfg.scores) {
    const auto first = out.size();
    double max_abs = 0.0;
    for (double rate : cfg.missing_rates) {
      const auto* s = grid.find(score_name(kind), n, rate);
      out.push_back(InterClusterRow{s->score_name, rate, s->inter_mean, 0.0});
      max_abs = std::max(max_abs, std::abs(s->inter_mean));
    }
    for (auto k = first; k < out.size(); ++k) out[k].scaled_inter_mean = detail::scale_by(out[k].inter_mean, max_abs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string fmt_double(double x, const char* spec = "%.6f") {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

}  // namespace detail

inline constexpr const char* kResolutionCsvHeader =
    "score,n,missing_rate,seed,resolution,intra_mean,inter_mean,undefined_pairs,scaled_resolution";
inline constexpr const char* kResolutionSummaryCsvHeader =
    "score,n,missing_rate,mean_resolution,sd_resolution,intra_mean,inter_mean,scaled_resolution";
inline constexpr const char* kInterClusterCsvHeader = "score,missing_rate,inter_mean,scaled_inter_mean";

inline void write_resolution_csv(std::ostream& out, const ResolutionGrid& grid) {
  using detail::fmt_double;
  out << kResolutionCsvHeader << '\n';
  for (const auto& row : grid.rows) {
    const auto& r = row.report;
    out << r.score_name << ',' << r.n << ',' << fmt_double(r.missing_rate, "%.4g") << ',' << row.seed << ','
        << fmt_double(r.resolution) << ',' << fmt_double(r.intra_mean) << ',' << fmt_double(r.inter_mean) << ','
        << r.undefined_pairs << ',' << fmt_double(row.scaled_resolution) << '\n';
  }
}

inline void write_resolution_summary_csv(std::ostream& out, const ResolutionGrid& grid) {
  using detail::fmt_double;
  out << kResolutionSummaryCsvHeader << '\n';
  for (const auto& s : grid.summary)
    out << s.score_name << ',' << s.n << ',' << fmt_double(s.missing_rate, "%.4g") << ','
        << fmt_double(s.mean_resolution) << ',' << fmt_double(s.sd_resolution) << ',' << fmt_double(s.intra_mean)
        << ',' << fmt_double(s.inter_mean) << ',' << fmt_double(s.scaled_resolution) << '\n';
}

inline void write_inter_cluster_csv(std::ostream& out, std::span<const InterClusterRow> rows) {
  using detail::fmt_double;
  out << kInterClusterCsvHeader << '\n';
  for (const auto& r : rows)
    out << r.score_name << ',' << fmt_double(r.missing_rate, "%.4g") << ',' << fmt_double(r.inter_mean) << ','
        << fmt_double(r.scaled_inter_mean) << '\n';
}

/// MovieLens TAB layout with 1-based ids and a zero timestamp.
inline void write_ratings_tsv(std::ostream& out, const RatingMatrix& m) {
  for (const auto& r : m.triples())
    out << m.user_id(r.user) << '\t' << m.item_id(r.item) << '\t' << static_cast<int>(r.value) << "\t0\n";
}

inline void write_labels_csv(std::ostream& out, const ClusterDataset& ds) {
  out << "user,cluster\n";
  for (std::size_t u = 0; u < ds.labels.size(); ++u)
    out << ds.matrix.user_id(static_cast<UserIndex>(u)) << ',' << ds.labels[u] + 1 << '\n';
}

inline void write_params_csv(std::ostream& out, const ClusterParams& p) {
  out << "cluster,item,rho,mu\n";
  for (std::size_t k = 0; k < p.num_clusters; ++k)
    for (std::size_t i = 0; i < p.num_items; ++i) {
      const auto row = p.probs(k, i);
      for (std::size_t r = 0; r < row.size(); ++r)
        out << k + 1 << ',' << i + 1 << ',' << r + 1 << ',' << detail::fmt_double(row[r], "%.17g") << '\n';
    }
}

}  // namespace lira
