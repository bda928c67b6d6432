#pragma once

// MAE / RMSE and the (split x score x k) evaluation grid.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lira/errors.hpp"
#include "lira/knn.hpp"
#include "lira/random.hpp"
#include "lira/ratings.hpp"
#include "lira/similarity.hpp"

namespace lira {

/// Pairwise (cascade) summation; error grows with log n rather than n.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const auto half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mae(std::span<const PredictionRecord> records) {
  if (records.empty()) throw EmptyEvaluationError("MAE of an empty record set");
  std::vector<double> err(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) err[k] = std::abs(records[k].truth - records[k].prediction);
  return pairwise_sum(err) / static_cast<double>(records.size());
}

inline double rmse(std::span<const PredictionRecord> records) {
  if (records.empty()) throw EmptyEvaluationError("RMSE of an empty record set");
  std::vector<double> err(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    const double e = records[k].truth - records[k].prediction;
    err[k] = e * e;
  }
  return std::sqrt(pairwise_sum(err) / static_cast<double>(records.size()));
}

struct ErrorReport {
  std::string split;
  std::string score_name;
  std::size_t k = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n_test = 0;
  std::size_t n_fallback = 0;
  // Over records that had at least one neighbor; NaN when there are none.
  double mae_nofallback = std::numeric_limits<double>::quiet_NaN();
  double rmse_nofallback = std::numeric_limits<double>::quiet_NaN();
};

inline ErrorReport summarize(std::span<const PredictionRecord> records, std::string split, std::string score_name,
                             std::size_t k) {
  ErrorReport r{std::move(split), std::move(score_name), k};
  r.n_test = records.size();
  r.mae = mae(records);
  r.rmse = rmse(records);
  std::vector<PredictionRecord> covered;
  covered.reserve(records.size());
  for (const auto& rec : records)
    if (rec.fallback == Fallback::None) covered.push_back(rec);
  r.n_fallback = records.size() - covered.size();
  if (!covered.empty()) {
    r.mae_nofallback = mae(covered);
    r.rmse_nofallback = rmse(covered);
  }
  return r;
}

struct Split {
  std::string id;
  RatingMatrix train;
  std::vector<Rating> test;
};

struct GridResult {
  std::vector<ErrorReport> rows;
};

/// One report per (split, score, k); k values are deduplicated and ascending.
/// `progress`, when set, receives a line per finished (split, score).
inline GridResult evaluate_grid(std::span<const Split> splits, std::span<const ScoreKind> scores,
                                std::vector<std::size_t> k_values, unsigned threads = 1,
                                const std::function<void(const std::string&)>& progress = {}) {
  if (k_values.empty()) throw DomainError("k grid is empty");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  GridResult result;
  for (const auto& split : splits) {
    if (split.train.num_ratings() == 0) throw EmptyEvaluationError("split " + split.id + " has empty training data");
    if (split.test.empty()) throw EmptyEvaluationError("split " + split.id + " has empty test data");
    for (auto kind : scores) {
      const SimilarityScore score(kind, split.train);
      const auto per_k = predict_all_multi(split.train, split.test, score, k_values, threads);
      for (std::size_t j = 0; j < k_values.size(); ++j)
        result.rows.push_back(summarize(per_k[j], split.id, std::string(score.name()), k_values[j]));
      if (progress) progress("split " + split.id + " score " + std::string(score.name()) + " done");
    }
  }
  return result;
}

inline constexpr const char* kGridCsvHeader =
    "split,score,k,mae,rmse,n_test,n_fallback,mae_nofallback,rmse_nofallback";

inline void write_grid_csv(std::ostream& out, const GridResult& grid) {
  auto fixed6 = [](double x) {
    if (std::isnan(x)) return std::string("nan");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  out << kGridCsvHeader << '\n';
  for (const auto& r : grid.rows) {
    out << r.split << ',' << r.score_name << ',' << r.k << ',' << fixed6(r.mae) << ',' << fixed6(r.rmse) << ','
        << r.n_test << ',' << r.n_fallback << ',' << fixed6(r.mae_nofallback) << ',' << fixed6(r.rmse_nofallback)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Split construction

inline Split load_split(const std::string& id, const std::string& train_path, const std::string& test_path,
                        Format format, int scale_d) {
  auto train = build_matrix(read_ratings_file(train_path, format, scale_d), scale_d);
  auto test = index_against(train, read_ratings_file(test_path, format, scale_d));
  return Split{id, std::move(train), std::move(test)};
}

/// `count` independent seeded random splits of one ratings file.
inline std::vector<Split> random_splits(const RatingMatrix& all, std::size_t count, double test_fraction,
                                        std::uint64_t seed) {
  std::vector<Split> out;
  for (std::size_t s = 0; s < count; ++s) {
    auto tt = split_random(all, test_fraction, derive_seed(seed, {s}));
    out.push_back(Split{"r" + std::to_string(s + 1), std::move(tt.train), std::move(tt.test)});
  }
  return out;
}

/// MovieLens 100K splits: the published u1..u5 base/test pairs when present
/// in `dir`, otherwise seeded 80/20 splits of dir/u.data (reported through
/// `warn`).
inline std::vector<Split> load_ml100k(const std::filesystem::path& dir, int scale_d, std::uint64_t seed,
                                      const std::function<void(const std::string&)>& warn = {},
                                      std::size_t max_splits = 5) {
  std::vector<Split> out;
  for (std::size_t s = 1; s <= max_splits; ++s) {
    const auto base = dir / ("u" + std::to_string(s) + ".base");
    const auto test = dir / ("u" + std::to_string(s) + ".test");
    if (!std::filesystem::exists(base) || !std::filesystem::exists(test)) break;
    out.push_back(load_split("u" + std::to_string(s), base.string(), test.string(), Format::Tab, scale_d));
  }
  if (!out.empty()) return out;
  const auto all = dir / "u.data";
  if (!std::filesystem::exists(all)) throw IoError("no u1..u5 splits or u.data under " + dir.string());
  if (warn) warn("published u1..u5 splits not found; using seeded random 80/20 splits of u.data");
  const auto matrix = build_matrix(read_ratings_file(all.string(), Format::Tab, scale_d), scale_d);
  return random_splits(matrix, max_splits, 0.2, seed);
}

}  // namespace lira
