#pragma once

// User-based kNN rating prediction: the k most similar training users who
// rated the target item vote with an unweighted mean of their ratings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "lira/errors.hpp"
#include "lira/parallel.hpp"
#include "lira/ratings.hpp"
#include "lira/similarity.hpp"

namespace lira {

struct Neighbor {
  UserIndex user;
  double similarity;
  RatingValue rating;  // the neighbor's rating of the target item

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Best first: higher similarity, then lower user index.
using NeighborList = std::vector<Neighbor>;

inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.similarity != b.similarity ? a.similarity > b.similarity : a.user < b.user;
}

enum class Fallback { None, UserMean, GlobalMean };

inline std::string_view fallback_name(Fallback f) {
  switch (f) {
    case Fallback::None: return "none";
    case Fallback::UserMean: return "user_mean";
    case Fallback::GlobalMean: return "global_mean";
  }
  return "?";
}

struct PredictionRecord {
  UserIndex user;
  ItemIndex item;
  RatingValue truth;
  double prediction;
  std::size_t neighbors_used;
  Fallback fallback;
};

namespace detail {

inline bool scorable_user(const RatingMatrix& train, UserIndex u) {
  return train.has_user(u) && !train.user_ratings(u).empty();
}

// Top-k raters of item i by sim(v), excluding u, via a size-k heap whose front
// is the weakest kept neighbor.
template <typename SimFn>
NeighborList top_neighbors(const RatingMatrix& train, UserIndex u, ItemIndex i, std::size_t k, SimFn&& sim) {
  NeighborList heap;
  if (k == 0 || !train.has_item(i) || !scorable_user(train, u)) return heap;
  heap.reserve(std::min(k, train.item_ratings(i).size()));
  for (const auto& e : train.item_ratings(i)) {
    if (e.index == u) continue;
    Neighbor c{e.index, sim(e.index), e.value};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    } else if (ranks_before(c, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), ranks_before);
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), ranks_before);
  return heap;
}

inline double global_mean(const RatingMatrix& train) {
  if (train.num_ratings() == 0) return (1.0 + train.scale_d()) / 2.0;
  double s = 0.0;
  for (UserIndex u = 0; u < train.num_users(); ++u)
    for (const auto& e : train.user_ratings(u)) s += e.value;
  return s / static_cast<double>(train.num_ratings());
}

inline PredictionRecord finish(const RatingMatrix& train, const Rating& target, std::span<const Neighbor> used,
                               double global) {
  PredictionRecord rec{target.user, target.item, target.value, 0.0, used.size(), Fallback::None};
  if (!used.empty()) {
    double s = 0.0;
    for (const auto& n : used) s += n.rating;
    rec.prediction = s / static_cast<double>(used.size());
  } else if (scorable_user(train, target.user)) {
    rec.prediction = user_stats(train, target.user).mean;
    rec.fallback = Fallback::UserMean;
  } else {
    rec.prediction = global;
    rec.fallback = Fallback::GlobalMean;
  }
  return rec;
}

}  // namespace detail

/// Up to k training users who rated item i, most similar to u first. Empty
/// when u or i is unknown to training (or u has no training ratings).
inline NeighborList neighbors(const RatingMatrix& train, const SimilarityScore& score, UserIndex u, ItemIndex i,
                              std::size_t k) {
  if (k < 1) throw DomainError("k must be at least 1");
  return detail::top_neighbors(train, u, i, k, [&](UserIndex v) { return score(train, u, v); });
}

/// Unweighted mean of the neighbors' ratings; with no neighbors falls back to
/// u's training mean, then the global training mean, then the scale midpoint.
inline PredictionRecord predict(const RatingMatrix& train, const SimilarityScore& score, UserIndex u, ItemIndex i,
                                std::size_t k, RatingValue truth = 0) {
  const auto list = neighbors(train, score, u, i, k);
  return detail::finish(train, Rating{u, i, truth}, list, detail::global_mean(train));
}

/// Predictions for every test triple at each k in `ks`; result[j] holds the
/// records for ks[j], in test order. Similarities for a test user are computed
/// once and shared across its triples and all k.
inline std::vector<std::vector<PredictionRecord>> predict_all_multi(const RatingMatrix& train,
                                                                    std::span<const Rating> test,
                                                                    const SimilarityScore& score,
                                                                    std::span<const std::size_t> ks,
                                                                    unsigned threads = 1) {
  for (auto k : ks)
    if (k < 1) throw DomainError("k must be at least 1");
  std::vector<std::vector<PredictionRecord>> out(ks.size(), std::vector<PredictionRecord>(test.size()));
  if (test.empty() || ks.empty()) return out;
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  const double global = detail::global_mean(train);

  // Group test rows by user, preserving row order inside a group.
  std::vector<std::size_t> order(test.size());
  for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return test[a].user < test[b].user; });
  std::vector<std::size_t> group_start;
  for (std::size_t r = 0; r < order.size(); ++r)
    if (r == 0 || test[order[r]].user != test[order[r - 1]].user) group_start.push_back(r);
  group_start.push_back(order.size());

  parallel_for(group_start.size() - 1, threads, [&](std::size_t g) {
    const UserIndex u = test[order[group_start[g]]].user;
    std::vector<double> cache;
    std::vector<char> known;
    if (detail::scorable_user(train, u)) {
      cache.assign(train.num_users(), 0.0);
      known.assign(train.num_users(), 0);
    }
    auto sim = [&](UserIndex v) {
      if (!known[v]) {
        cache[v] = score(train, u, v);
        known[v] = 1;
      }
      return cache[v];
    };
    for (std::size_t r = group_start[g]; r < group_start[g + 1]; ++r) {
      const auto row = order[r];
      const auto ranked = detail::top_neighbors(train, u, test[row].item, kmax, sim);
      for (std::size_t j = 0; j < ks.size(); ++j) {
        const auto used = std::span<const Neighbor>(ranked).first(std::min(ks[j], ranked.size()));
        out[j][row] = detail::finish(train, test[row], used, global);
      }
    }
  });
  return out;
}

inline std::vector<PredictionRecord> predict_all(const RatingMatrix& train, std::span<const Rating> test,
                                                 const SimilarityScore& score, std::size_t k, unsigned threads = 1) {
  const std::size_t ks[] = {k};
  return std::move(predict_all_multi(train, test, score, ks, threads).front());
}

}  // namespace lira
