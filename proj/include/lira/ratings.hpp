#pragma once

// Sparse discrete rating matrix, MovieLens ingestion, per-user / per-item
// statistics and random train/test splitting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lira/errors.hpp"
#include "lira/random.hpp"

namespace lira {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;
using RatingValue = std::uint8_t;
using ExternalId = std::int64_t;

inline constexpr int kDefaultScale = 5;
inline constexpr int kMaxScale = 255;

/// One (user, item, rating) triple in dense index space.
struct Rating {
  UserIndex user;
  ItemIndex item;
  RatingValue value;

  friend bool operator==(const Rating&, const Rating&) = default;
};

/// A row entry of either view: the other axis' index plus the rating.
struct Entry {
  std::uint32_t index;
  RatingValue value;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// A parsed input line before id remapping.
struct RawRating {
  ExternalId user;
  ExternalId item;
  int value;
  std::size_t line;
};

enum class Format { Tab, DoubleColon };

/// Immutable user x item store of integer ratings on 1..scale_d, kept in two
/// compressed views (per user sorted by item, per item sorted by user) so
/// co-rated scans are linear merges.
class RatingMatrix {
 public:
  RatingMatrix() = default;

  /// Builds from dense triples. External ids default to index + 1 when the
  /// maps are left empty.
  RatingMatrix(std::size_t num_users, std::size_t num_items, int scale_d, std::vector<Rating> triples,
               std::vector<ExternalId> user_ids = {}, std::vector<ExternalId> item_ids = {})
      : num_users_(num_users), num_items_(num_items), scale_d_(scale_d) {
    if (scale_d < 1 || scale_d > kMaxScale) throw DomainError("rating scale must be in 1..255");
    if (user_ids.empty()) user_ids = sequential_ids(num_users);
    if (item_ids.empty()) item_ids = sequential_ids(num_items);
    if (user_ids.size() != num_users || item_ids.size() != num_items)
      throw DomainError("id map size does not match matrix dimensions");
    user_ids_ = std::move(user_ids);
    item_ids_ = std::move(item_ids);
    user_ids_sorted_ = std::is_sorted(user_ids_.begin(), user_ids_.end());
    item_ids_sorted_ = std::is_sorted(item_ids_.begin(), item_ids_.end());

    for (const auto& r : triples) {
      if (r.user >= num_users || r.item >= num_items) throw DomainError("rating index out of range");
      if (r.value < 1 || r.value > scale_d)
        throw DomainError("rating " + std::to_string(r.value) + " outside 1.." + std::to_string(scale_d));
    }
    std::sort(triples.begin(), triples.end(), [](const Rating& a, const Rating& b) {
      return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    for (std::size_t k = 1; k < triples.size(); ++k) {
      if (triples[k].user == triples[k - 1].user && triples[k].item == triples[k - 1].item)
        throw DomainError("duplicate rating for user " + std::to_string(user_ids_[triples[k].user]) + ", item " +
                          std::to_string(item_ids_[triples[k].item]));
    }

    user_offsets_.assign(num_users + 1, 0);
    item_offsets_.assign(num_items + 1, 0);
    for (const auto& r : triples) {
      ++user_offsets_[r.user + 1];
      ++item_offsets_[r.item + 1];
    }
    for (std::size_t u = 0; u < num_users; ++u) user_offsets_[u + 1] += user_offsets_[u];
    for (std::size_t i = 0; i < num_items; ++i) item_offsets_[i + 1] += item_offsets_[i];

    user_entries_.resize(triples.size());
    item_entries_.resize(triples.size());
    std::vector<std::size_t> cursor(item_offsets_.begin(), item_offsets_.end() - 1);
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const auto& r = triples[k];
      user_entries_[k] = Entry{r.item, r.value};
      // Triples are user-major, so each item row fills in ascending user order.
      item_entries_[cursor[r.item]++] = Entry{r.user, r.value};
    }
  }

  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  int scale_d() const noexcept { return scale_d_; }
  std::size_t num_ratings() const noexcept { return user_entries_.size(); }

  std::span<const Entry> user_ratings(UserIndex u) const {
    return {user_entries_.data() + user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]};
  }
  std::span<const Entry> item_ratings(ItemIndex i) const {
    return {item_entries_.data() + item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]};
  }

  bool has_user(std::size_t u) const noexcept { return u < num_users_; }
  bool has_item(std::size_t i) const noexcept { return i < num_items_; }

  std::optional<RatingValue> rating(UserIndex u, ItemIndex i) const {
    auto row = user_ratings(u);
    auto it = std::lower_bound(row.begin(), row.end(), i, [](const Entry& e, ItemIndex x) { return e.index < x; });
    if (it == row.end() || it->index != i) return std::nullopt;
    return it->value;
  }

  ExternalId user_id(UserIndex u) const { return user_ids_[u]; }
  ExternalId item_id(ItemIndex i) const { return item_ids_[i]; }
  const std::vector<ExternalId>& user_ids() const noexcept { return user_ids_; }
  const std::vector<ExternalId>& item_ids() const noexcept { return item_ids_; }

  std::optional<UserIndex> find_user(ExternalId id) const { return find_id(user_ids_, user_ids_sorted_, id); }
  std::optional<ItemIndex> find_item(ExternalId id) const { return find_id(item_ids_, item_ids_sorted_, id); }

  /// All triples in user-major, item-minor order.
  std::vector<Rating> triples() const {
    std::vector<Rating> out;
    out.reserve(num_ratings());
    for (UserIndex u = 0; u < num_users_; ++u)
      for (const auto& e : user_ratings(u)) out.push_back(Rating{u, e.index, e.value});
    return out;
  }

 private:
  static std::vector<ExternalId> sequential_ids(std::size_t n) {
    std::vector<ExternalId> ids(n);
    for (std::size_t k = 0; k < n; ++k) ids[k] = static_cast<ExternalId>(k + 1);
    return ids;
  }

  static std::optional<std::uint32_t> find_id(const std::vector<ExternalId>& ids, bool sorted, ExternalId id) {
    if (sorted) {
      auto it = std::lower_bound(ids.begin(), ids.end(), id);
      if (it != ids.end() && *it == id) return static_cast<std::uint32_t>(it - ids.begin());
      return std::nullopt;
    }
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it - ids.begin());
  }

  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  int scale_d_ = kDefaultScale;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<std::size_t> item_offsets_{0};
  std::vector<Entry> user_entries_;
  std::vector<Entry> item_entries_;
  std::vector<ExternalId> user_ids_;
  std::vector<ExternalId> item_ids_;
  bool user_ids_sorted_ = true;
  bool item_ids_sorted_ = true;
};

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads "user<TAB>item<TAB>rating<TAB>timestamp" or "user::item::rating::timestamp"
/// lines. Timestamps are optional and discarded; blank lines are skipped.
inline std::vector<RawRating> read_ratings(std::istream& in, Format format, int scale_d = kDefaultScale) {
  const std::string_view sep = format == Format::Tab ? "\t" : "::";
  std::vector<RawRating> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty()) continue;
    auto fields = detail::split_fields(view, sep);
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError(lineno, "expected 4 fields, found " + std::to_string(fields.size()));
    auto user = detail::parse_int(fields[0]);
    auto item = detail::parse_int(fields[1]);
    auto value = detail::parse_int(fields[2]);
    if (!user || !item) throw ParseError(lineno, "non-integer user or item id");
    if (!value) throw ParseError(lineno, "non-integer rating '" + std::string(fields[2]) + "'");
    if (fields.size() == 4 && !detail::parse_int(fields[3])) throw ParseError(lineno, "non-integer timestamp");
    if (*value < 1 || *value > scale_d)
      throw DomainError("line " + std::to_string(lineno) + ": rating " + std::to_string(*value) + " outside 1.." +
                        std::to_string(scale_d));
    out.push_back(RawRating{*user, *item, static_cast<int>(*value), lineno});
  }
  return out;
}

/// Remaps external ids to dense indices in ascending id order.
inline RatingMatrix build_matrix(const std::vector<RawRating>& raw, int scale_d = kDefaultScale) {
  std::vector<ExternalId> users, items;
  users.reserve(raw.size());
  items.reserve(raw.size());
  for (const auto& r : raw) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  auto uniq = [](std::vector<ExternalId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(users);
  uniq(items);
  auto index_of = [](const std::vector<ExternalId>& v, ExternalId id) {
    return static_cast<std::uint32_t>(std::lower_bound(v.begin(), v.end(), id) - v.begin());
  };
  std::vector<Rating> triples;
  triples.reserve(raw.size());
  for (const auto& r : raw) {
    if (r.value < 1 || r.value > scale_d)
      throw DomainError("line " + std::to_string(r.line) + ": rating outside 1.." + std::to_string(scale_d));
    triples.push_back(Rating{index_of(users, r.user), index_of(items, r.item), static_cast<RatingValue>(r.value)});
  }
  const auto nu = users.size(), ni = items.size();
  return RatingMatrix(nu, ni, scale_d, std::move(triples), std::move(users), std::move(items));
}

inline RatingMatrix parse_ratings(std::istream& in, Format format, int scale_d = kDefaultScale) {
  return build_matrix(read_ratings(in, format, scale_d), scale_d);
}

inline std::vector<RawRating> read_ratings_file(const std::string& path, Format format,
                                                int scale_d = kDefaultScale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return read_ratings(in, format, scale_d);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path);
  }
}

/// Maps raw triples into `train`'s index space. Users and items unknown to
/// training receive fresh indices at or beyond train.num_users() /
/// train.num_items(), so they stay distinguishable without a sentinel.
inline std::vector<Rating> index_against(const RatingMatrix& train, const std::vector<RawRating>& raw) {
  std::unordered_map<ExternalId, UserIndex> extra_users;
  std::unordered_map<ExternalId, ItemIndex> extra_items;
  std::vector<Rating> out;
  out.reserve(raw.size());
  for (const auto& r : raw) {
    if (r.value < 1 || r.value > train.scale_d())
      throw DomainError("line " + std::to_string(r.line) + ": rating outside 1.." + std::to_string(train.scale_d()));
    UserIndex u;
    if (auto found = train.find_user(r.user)) {
      u = *found;
    } else {
      auto [it, _] = extra_users.try_emplace(r.user, static_cast<UserIndex>(train.num_users() + extra_users.size()));
      u = it->second;
    }
    ItemIndex i;
    if (auto found = train.find_item(r.item)) {
      i = *found;
    } else {
      auto [it, _] = extra_items.try_emplace(r.item, static_cast<ItemIndex>(train.num_items() + extra_items.size()));
      i = it->second;
    }
    out.push_back(Rating{u, i, static_cast<RatingValue>(r.value)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

/// Counts of absolute rating differences over co-rated items; counts[δ] = #δ.
struct DiffHistogram {
  std::vector<std::uint32_t> counts;
  std::uint32_t total = 0;

  DiffHistogram() = default;
  explicit DiffHistogram(int scale_d) : counts(static_cast<std::size_t>(scale_d), 0) {}

  DiffHistogram& operator+=(const DiffHistogram& other) {
    if (other.counts.size() != counts.size()) throw DomainError("histograms on different scales");
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
    total += other.total;
    return *this;
  }
  friend bool operator==(const DiffHistogram&, const DiffHistogram&) = default;
};

namespace detail {

// Calls fn(a_value, b_value) for every item present in both sorted rows.
template <typename Fn>
void for_each_co_rated(std::span<const Entry> a, std::span<const Entry> b, Fn&& fn) {
  auto ia = a.begin(), ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->index < ib->index) {
      ++ia;
    } else if (ib->index < ia->index) {
      ++ib;
    } else {
      fn(ia->value, ib->value);
      ++ia;
      ++ib;
    }
  }
}

inline std::size_t co_rated_count(std::span<const Entry> a, std::span<const Entry> b) {
  std::size_t n = 0;
  for_each_co_rated(a, b, [&](RatingValue, RatingValue) { ++n; });
  return n;
}

}  // namespace detail

inline DiffHistogram diff_histogram(std::span<const Entry> a, std::span<const Entry> b, int scale_d) {
  DiffHistogram h(scale_d);
  detail::for_each_co_rated(a, b, [&](RatingValue x, RatingValue y) {
    ++h.counts[static_cast<std::size_t>(x > y ? x - y : y - x)];
  });
  for (auto c : h.counts) h.total += c;
  return h;
}

inline DiffHistogram diff_histogram(const RatingMatrix& m, UserIndex u, UserIndex v) {
  return diff_histogram(m.user_ratings(u), m.user_ratings(v), m.scale_d());
}

struct UserStats {
  double mean = 0.0;
  double stddev = 0.0;  // population form
  std::size_t count = 0;
};

inline UserStats user_stats(std::span<const Entry> row) {
  if (row.empty()) throw EmptyProfileError("user has no ratings");
  double sum = 0.0;
  for (const auto& e : row) sum += e.value;
  const double mean = sum / static_cast<double>(row.size());
  double ss = 0.0;
  for (const auto& e : row) ss += (e.value - mean) * (e.value - mean);
  return UserStats{mean, std::sqrt(ss / static_cast<double>(row.size())), row.size()};
}

inline UserStats user_stats(const RatingMatrix& m, UserIndex u) { return user_stats(m.user_ratings(u)); }

/// Empirical rating distribution of one item. A never-rated item yields
/// raters == 0 and all-zero probabilities.
struct ItemDistribution {
  std::vector<double> probs;  // probs[ρ - 1] = #ρ_i / #i
  std::size_t raters = 0;
};

inline ItemDistribution item_distribution(const RatingMatrix& m, ItemIndex i) {
  ItemDistribution d{std::vector<double>(static_cast<std::size_t>(m.scale_d()), 0.0), 0};
  auto col = m.item_ratings(i);
  d.raters = col.size();
  if (col.empty()) return d;
  std::vector<std::size_t> counts(d.probs.size(), 0);
  for (const auto& e : col) ++counts[e.value - 1u];
  for (std::size_t r = 0; r < counts.size(); ++r)
    d.probs[r] = static_cast<double>(counts[r]) / static_cast<double>(col.size());
  return d;
}

// ---------------------------------------------------------------------------
// Splitting

struct TrainTestSplit {
  RatingMatrix train;
  std::vector<Rating> test;
};

/// Sends each triple to the test side independently with probability
/// `test_fraction`. Train keeps the input's dimensions and id maps, so test
/// triples share its index space.
inline TrainTestSplit split_random(const RatingMatrix& m, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DomainError("test fraction must lie in (0, 1)");
  Engine rng(seed);
  std::vector<Rating> train, test;
  for (const auto& r : m.triples()) (uniform01(rng) < test_fraction ? test : train).push_back(r);
  return TrainTestSplit{RatingMatrix(m.num_users(), m.num_items(), m.scale_d(), std::move(train), m.user_ids(),
                                     m.item_ids()),
                        std::move(test)};
}

}  // namespace lira
