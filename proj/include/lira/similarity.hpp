#pragma once

// User-user similarity kernels: LiRa, Pearson, Cosine, Jaccard and BCF, plus
// the difference distributions LiRa compares.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lira/errors.hpp"
#include "lira/ratings.hpp"

namespace lira {

/// Probability of each absolute rating difference δ = 0..d-1.
struct DiffProbs {
  std::vector<double> values;
};

/// Difference distribution when both ratings are independent and uniform on 1..d.
inline DiffProbs chance_diff_probs(int d) {
  if (d < 2) throw DomainError("rating scale must have at least 2 values");
  const double dd = static_cast<double>(d);
  DiffProbs p{std::vector<double>(static_cast<std::size_t>(d))};
  p.values[0] = 1.0 / dd;
  for (int delta = 1; delta < d; ++delta) p.values[delta] = 2.0 * (dd - delta) / (dd * dd);
  return p;
}

/// Same-cluster difference distribution: (1/2)^(δ+1), with the tail mass
/// folded into δ = d-1 so the vector sums to one.
inline DiffProbs cluster_diff_probs(int d) {
  if (d < 2) throw DomainError("rating scale must have at least 2 values");
  DiffProbs p{std::vector<double>(static_cast<std::size_t>(d))};
  for (int delta = 0; delta <= d - 2; ++delta) p.values[delta] = std::ldexp(1.0, -(delta + 1));
  p.values[d - 1] = std::ldexp(1.0, -(d - 1));
  return p;
}

/// Per-difference contributions log10(c_δ / b_δ).
inline std::vector<double> lira_weights(int d) {
  const auto b = chance_diff_probs(d);
  const auto c = cluster_diff_probs(d);
  std::vector<double> w(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::log10(c.values[k] / b.values[k]);
  return w;
}

namespace detail {

inline double lira_dot(std::span<const std::uint32_t> counts, std::span<const double> weights) {
  double s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] != 0) s += static_cast<double>(counts[k]) * weights[k];
  return s;
}

}  // namespace detail

/// Log10 likelihood ratio of the observed differences under the same-cluster
/// model versus chance. An empty histogram scores 0.
inline double lira(const DiffHistogram& hist, int d) {
  if (static_cast<int>(hist.counts.size()) != d) throw DomainError("histogram scale does not match d");
  if (hist.total == 0) return 0.0;
  const auto w = lira_weights(d);
  return detail::lira_dot(hist.counts, w);
}

// ---------------------------------------------------------------------------
// Pearson / Cosine / Jaccard

/// Pearson correlation over co-rated items, means taken over the co-rated set.
/// Fewer than two co-rated items or zero variance on either side gives 0.
inline double pearson(std::span<const Entry> a, std::span<const Entry> b) {
  std::size_t n = 0;
  double sa = 0.0, sb = 0.0;
  detail::for_each_co_rated(a, b, [&](RatingValue x, RatingValue y) {
    ++n;
    sa += x;
    sb += y;
  });
  if (n <= 1) return 0.0;
  const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
  double num = 0.0, va = 0.0, vb = 0.0;
  detail::for_each_co_rated(a, b, [&](RatingValue x, RatingValue y) {
    const double dx = x - ma, dy = y - mb;
    num += dx * dy;
    va += dx * dx;
    vb += dy * dy;
  });
  if (va == 0.0 || vb == 0.0) return 0.0;
  return std::clamp(num / std::sqrt(va * vb), -1.0, 1.0);
}

inline double pearson(const RatingMatrix& m, UserIndex u, UserIndex v) {
  return pearson(m.user_ratings(u), m.user_ratings(v));
}

/// Co-rated dot product over the full-profile norms.
inline double cosine(std::span<const Entry> a, std::span<const Entry> b) {
  if (a.empty() || b.empty()) throw EmptyProfileError("cosine similarity needs a rating from each user");
  double dot = 0.0;
  detail::for_each_co_rated(a, b, [&](RatingValue x, RatingValue y) { dot += static_cast<double>(x) * y; });
  double na = 0.0, nb = 0.0;
  for (const auto& e : a) na += static_cast<double>(e.value) * e.value;
  for (const auto& e : b) nb += static_cast<double>(e.value) * e.value;
  return dot / std::sqrt(na * nb);
}

inline double cosine(const RatingMatrix& m, UserIndex u, UserIndex v) {
  return cosine(m.user_ratings(u), m.user_ratings(v));
}

enum class JaccardDenominator {
  Sum,    // |I_u| + |I_v|, as used for BCF
  Union,  // the textbook |I_u ∪ I_v|
};

inline double jaccard(std::span<const Entry> a, std::span<const Entry> b,
                      JaccardDenominator mode = JaccardDenominator::Sum) {
  const auto both = detail::co_rated_count(a, b);
  const auto denom = mode == JaccardDenominator::Sum ? a.size() + b.size() : a.size() + b.size() - both;
  if (denom == 0) return 0.0;
  return static_cast<double>(both) / static_cast<double>(denom);
}

inline double jaccard(const RatingMatrix& m, UserIndex u, UserIndex v,
                      JaccardDenominator mode = JaccardDenominator::Sum) {
  return jaccard(m.user_ratings(u), m.user_ratings(v), mode);
}

// ---------------------------------------------------------------------------
// BCF

/// Bhattacharyya coefficient of two item rating distributions. An item with no
/// raters has no distribution and contributes 0.
inline double bhattacharyya_coeff(const ItemDistribution& p, const ItemDistribution& q) {
  if (p.raters == 0 || q.raters == 0) return 0.0;
  if (p.probs.size() != q.probs.size()) throw DomainError("item distributions on different scales");
  double s = 0.0;
  for (std::size_t r = 0; r < p.probs.size(); ++r) s += std::sqrt(p.probs[r] * q.probs[r]);
  return s;
}

namespace detail {

// Jaccard plus Σ_{i∈I_u} Σ_{j∈I_v} BC(i,j)·loc_corr. The pair is evaluated
// with the lower user index first so the result is bit-symmetric.
template <typename BcLookup>
double bcf_kernel(std::span<const Entry> a, const UserStats& sa, std::span<const Entry> b, const UserStats& sb,
                  BcLookup&& bc) {
  const double jacc = jaccard(a, b);
  if (sa.stddev == 0.0 || sb.stddev == 0.0) return jacc;
  double local = 0.0;
  for (const auto& ei : a) {
    double row = 0.0;
    for (const auto& ej : b) row += bc(ei.index, ej.index) * (ej.value - sb.mean);
    local += (ei.value - sa.mean) * row;
  }
  return jacc + local / (sa.stddev * sb.stddev);
}

}  // namespace detail

/// Self-contained BCF: item distributions come from `m` itself.
inline double bcf(const RatingMatrix& m, UserIndex u, UserIndex v) {
  if (v < u) std::swap(u, v);
  const auto a = m.user_ratings(u), b = m.user_ratings(v);
  const auto sa = user_stats(a), sb = user_stats(b);
  std::vector<std::optional<ItemDistribution>> cache(m.num_items());
  auto dist = [&](ItemIndex i) -> const ItemDistribution& {
    if (!cache[i]) cache[i] = item_distribution(m, i);
    return *cache[i];
  };
  return detail::bcf_kernel(a, sa, b, sb,
                            [&](ItemIndex i, ItemIndex j) { return bhattacharyya_coeff(dist(i), dist(j)); });
}

/// Item distributions, pairwise coefficients and per-user stats for one matrix.
class BcfContext {
 public:
  static constexpr std::size_t kMaxTableItems = 8192;

  explicit BcfContext(const RatingMatrix& m) : num_users_(m.num_users()), num_items_(m.num_items()) {
    dists_.reserve(num_items_);
    for (ItemIndex i = 0; i < num_items_; ++i) dists_.push_back(item_distribution(m, i));
    stats_.reserve(num_users_);
    for (UserIndex u = 0; u < num_users_; ++u)
      stats_.push_back(m.user_ratings(u).empty() ? std::nullopt : std::optional(user_stats(m, u)));
    if (num_items_ <= kMaxTableItems) {
      table_.assign(num_items_ * num_items_, 0.0);
      for (std::size_t i = 0; i < num_items_; ++i)
        for (std::size_t j = i; j < num_items_; ++j)
          table_[i * num_items_ + j] = table_[j * num_items_ + i] = bhattacharyya_coeff(dists_[i], dists_[j]);
    }
  }

  bool matches(const RatingMatrix& m) const { return m.num_users() == num_users_ && m.num_items() == num_items_; }

  double bc(ItemIndex i, ItemIndex j) const {
    if (!table_.empty()) return table_[static_cast<std::size_t>(i) * num_items_ + j];
    return bhattacharyya_coeff(dists_[i], dists_[j]);
  }

  const UserStats& stats(UserIndex u) const {
    if (!stats_[u]) throw EmptyProfileError("BCF needs a rating from each user");
    return *stats_[u];
  }

 private:
  std::size_t num_users_;
  std::size_t num_items_;
  std::vector<ItemDistribution> dists_;
  std::vector<std::optional<UserStats>> stats_;
  std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Strategy

enum class ScoreKind { LiRa, Pearson, Cosine, Jaccard, BCF };

inline constexpr std::array<ScoreKind, 5> kAllScores = {ScoreKind::LiRa, ScoreKind::Pearson, ScoreKind::Cosine,
                                                        ScoreKind::Jaccard, ScoreKind::BCF};

inline std::string_view score_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::LiRa: return "lira";
    case ScoreKind::Pearson: return "pearson";
    case ScoreKind::Cosine: return "cosine";
    case ScoreKind::Jaccard: return "jaccard";
    case ScoreKind::BCF: return "bcf";
  }
  return "?";
}

inline std::optional<ScoreKind> parse_score_kind(std::string_view name) {
  for (auto k : kAllScores)
    if (score_name(k) == name) return k;
  return std::nullopt;
}

/// A score variant plus whatever it precomputes from the matrix it will be
/// evaluated on. Evaluation is const and thread-safe.
class SimilarityScore {
 public:
  SimilarityScore(ScoreKind kind, const RatingMatrix& m) : kind_(kind), scale_d_(m.scale_d()) {
    if (kind == ScoreKind::LiRa) weights_ = lira_weights(scale_d_);
    if (kind == ScoreKind::BCF) bcf_ = std::make_shared<const BcfContext>(m);
  }

  ScoreKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return score_name(kind_); }

  double operator()(const RatingMatrix& m, UserIndex u, UserIndex v) const {
    switch (kind_) {
      case ScoreKind::LiRa: {
        const auto h = diff_histogram(m, u, v);
        if (h.total == 0) return 0.0;
        return detail::lira_dot(h.counts, weights_);
      }
      case ScoreKind::Pearson: return pearson(m, u, v);
      case ScoreKind::Cosine: return cosine(m, u, v);
      case ScoreKind::Jaccard: return jaccard(m, u, v);
      case ScoreKind::BCF: {
        if (!bcf_->matches(m)) throw DomainError("BCF context was built for a different matrix");
        if (v < u) std::swap(u, v);
        return detail::bcf_kernel(m.user_ratings(u), bcf_->stats(u), m.user_ratings(v), bcf_->stats(v),
                                  [&](ItemIndex i, ItemIndex j) { return bcf_->bc(i, j); });
      }
    }
    return 0.0;
  }

 private:
  ScoreKind kind_;
  int scale_d_;
  std::vector<double> weights_;
  std::shared_ptr<const BcfContext> bcf_;
};

inline double score_pair(const SimilarityScore& score, const RatingMatrix& m, UserIndex u, UserIndex v) {
  return score(m, u, v);
}

/// False when the pair falls in a score's degenerate case (empty profile, no
/// co-rated items, or Pearson without two co-rated items and nonzero variance),
/// where the score reports its 0 sentinel.
inline bool score_defined(ScoreKind kind, const RatingMatrix& m, UserIndex u, UserIndex v) {
  const auto a = m.user_ratings(u), b = m.user_ratings(v);
  if (a.empty() || b.empty()) return false;
  if (kind == ScoreKind::BCF) return true;
  if (kind != ScoreKind::Pearson) return detail::co_rated_count(a, b) > 0;
  std::size_t n = 0;
  RatingValue first_a = 0, first_b = 0;
  bool var_a = false, var_b = false;
  detail::for_each_co_rated(a, b, [&](RatingValue x, RatingValue y) {
    if (n++ == 0) {
      first_a = x;
      first_b = y;
    } else {
      var_a = var_a || x != first_a;
      var_b = var_b || y != first_b;
    }
  });
  return n > 1 && var_a && var_b;
}

}  // namespace lira
