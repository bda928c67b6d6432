#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "lira/ratings.hpp"
#include "support/oracles.hpp"

using namespace lira;

namespace {

RatingMatrix parse(const std::string& text, Format f = Format::Tab, int d = 5) {
  std::istringstream in(text);
  return parse_ratings(in, f, d);
}

}  // namespace

TEST(ParseRatings, TabLine) {
  const auto m = parse("196\t242\t3\t881250949\n");
  ASSERT_EQ(m.num_ratings(), 1u);
  EXPECT_EQ(m.num_users(), 1u);
  EXPECT_EQ(m.num_items(), 1u);
  EXPECT_EQ(m.user_id(0), 196);
  EXPECT_EQ(m.item_id(0), 242);
  EXPECT_EQ(m.rating(0, 0), RatingValue{3});
}

TEST(ParseRatings, DoubleColonWithCrlf) {
  const auto m = parse("1::1193::5::978300760\r\n1::661::3::978302109\r\n2::661::4::1\r\n", Format::DoubleColon);
  EXPECT_EQ(m.num_users(), 2u);
  EXPECT_EQ(m.num_items(), 2u);
  EXPECT_EQ(m.num_ratings(), 3u);
  // Dense indices follow ascending external id.
  EXPECT_EQ(m.item_id(0), 661);
  EXPECT_EQ(m.rating(*m.find_user(1), *m.find_item(1193)), RatingValue{5});
}

TEST(ParseRatings, EmptyStream) {
  const auto m = parse("");
  EXPECT_EQ(m.num_ratings(), 0u);
  EXPECT_EQ(m.num_users(), 0u);
  EXPECT_EQ(m.num_items(), 0u);
}

TEST(ParseRatings, DuplicatePairIsDomainError) {
  EXPECT_THROW(parse("1\t2\t3\t0\n1\t2\t4\t0\n"), DomainError);
}

TEST(ParseRatings, RatingOutsideScaleIsDomainError) {
  EXPECT_THROW(parse("1\t2\t6\t0\n"), DomainError);
  EXPECT_THROW(parse("1\t2\t0\t0\n"), DomainError);
  EXPECT_NO_THROW(parse("1\t2\t6\t0\n", Format::Tab, 10));
}

TEST(ParseRatings, MalformedLineReportsLineNumber) {
  try {
    parse("1\t2\t3\t0\n1\t3\t4.5\t0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("1\t2\n"), ParseError);
  EXPECT_THROW(parse("1::2::3::4\n"), ParseError);  // wrong separator for TAB
}

TEST(RatingMatrix, ViewsAgree) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dense = oracle::random_dense(rng, 12, 15, 5, 0.4);
    const auto m = oracle::to_matrix(dense, 5);
    std::set<std::tuple<int, int, int>> by_user, by_item;
    for (UserIndex u = 0; u < m.num_users(); ++u) {
      auto row = m.user_ratings(u);
      for (std::size_t k = 0; k < row.size(); ++k) {
        by_user.insert({int(u), int(row[k].index), row[k].value});
        if (k) { EXPECT_LT(row[k - 1].index, row[k].index); }
      }
    }
    for (ItemIndex i = 0; i < m.num_items(); ++i) {
      auto col = m.item_ratings(i);
      for (std::size_t k = 0; k < col.size(); ++k) {
        by_item.insert({int(col[k].index), int(i), col[k].value});
        if (k) { EXPECT_LT(col[k - 1].index, col[k].index); }
      }
    }
    EXPECT_EQ(by_user, by_item);
    EXPECT_EQ(by_user.size(), m.num_ratings());
  }
}

TEST(DiffHistogram, WorkedExample) {
  const auto m = oracle::to_matrix({{1, 1, 0, 0, 0, 2}, {1, 1, 0, 0, 0, 2}}, 5);
  const auto h = diff_histogram(m, 0, 1);
  EXPECT_EQ(h.counts, (std::vector<std::uint32_t>{3, 0, 0, 0, 0}));
  EXPECT_EQ(h.total, 3u);
}

TEST(DiffHistogram, SelfPairAndDisjoint) {
  const auto m = oracle::to_matrix({{1, 4, 0, 0}, {0, 0, 3, 5}}, 5);
  const auto self = diff_histogram(m, 0, 0);
  EXPECT_EQ(self.counts[0], 2u);
  EXPECT_EQ(self.total, 2u);
  const auto none = diff_histogram(m, 0, 1);
  EXPECT_EQ(none.total, 0u);
  EXPECT_EQ(none.counts, (std::vector<std::uint32_t>(5, 0)));
}

TEST(DiffHistogram, SymmetricAndMatchesIntersectionOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto dense = oracle::random_dense(rng, 20, 25, 5, 0.3);
    const auto m = oracle::to_matrix(dense, 5);
    for (UserIndex u = 0; u < 20; ++u)
      for (UserIndex v = 0; v < 20; ++v) {
        const auto h = diff_histogram(m, u, v);
        EXPECT_EQ(h, diff_histogram(m, v, u));
        EXPECT_EQ(h.total, oracle::intersection_size(dense[u], dense[v]));
        std::uint32_t sum = 0;
        for (auto c : h.counts) sum += c;
        EXPECT_EQ(sum, h.total);
      }
  }
}

TEST(UserStats, Examples) {
  const auto m = oracle::to_matrix({{1, 1, 2}, {3, 0, 0}, {1, 5, 0}, {0, 0, 0}}, 5);
  auto s = user_stats(m, 0);
  EXPECT_DOUBLE_EQ(s.mean, 4.0 / 3.0);
  EXPECT_NEAR(s.stddev, std::sqrt(2.0 / 9.0), 1e-15);
  EXPECT_EQ(s.count, 3u);
  s = user_stats(m, 1);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.stddev, 0.0);
  s = user_stats(m, 2);
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.stddev, 2.0);
  EXPECT_THROW(user_stats(m, 3), EmptyProfileError);
}

TEST(ItemDistribution, Examples) {
  const auto m = oracle::to_matrix({{1, 5, 0}, {1, 0, 0}, {3, 0, 0}}, 5);
  auto d = item_distribution(m, 0);
  EXPECT_EQ(d.raters, 3u);
  EXPECT_DOUBLE_EQ(d.probs[0], 2.0 / 3.0);
  EXPECT_EQ(d.probs[1], 0.0);
  EXPECT_DOUBLE_EQ(d.probs[2], 1.0 / 3.0);
  d = item_distribution(m, 1);
  EXPECT_EQ(d.probs, (std::vector<double>{0, 0, 0, 0, 1}));
  d = item_distribution(m, 2);
  EXPECT_EQ(d.raters, 0u);
  EXPECT_EQ(d.probs, (std::vector<double>(5, 0.0)));
}

TEST(SplitRandom, PartitionsAndIsDeterministic) {
  std::mt19937_64 rng(3);
  const auto m = oracle::to_matrix(oracle::random_dense(rng, 300, 400, 5, 0.84), 5);  // ~100K ratings
  const auto a = split_random(m, 0.2, 42);
  const auto b = split_random(m, 0.2, 42);
  const auto c = split_random(m, 0.2, 43);

  EXPECT_EQ(a.train.num_ratings() + a.test.size(), m.num_ratings());
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.triples(), b.train.triples());
  EXPECT_NE(a.test, c.test);
  EXPECT_TRUE(oracle::within_binomial(static_cast<double>(a.test.size()), static_cast<double>(m.num_ratings()), 0.2));

  std::set<std::tuple<int, int>> train_keys;
  for (const auto& r : a.train.triples()) train_keys.insert({int(r.user), int(r.item)});
  std::set<std::tuple<int, int, int>> rebuilt;
  for (const auto& r : a.train.triples()) rebuilt.insert({int(r.user), int(r.item), r.value});
  for (const auto& r : a.test) {
    EXPECT_FALSE(train_keys.count({int(r.user), int(r.item)}));
    rebuilt.insert({int(r.user), int(r.item), r.value});
  }
  std::set<std::tuple<int, int, int>> original;
  for (const auto& r : m.triples()) original.insert({int(r.user), int(r.item), r.value});
  EXPECT_EQ(rebuilt, original);
}

TEST(SplitRandom, RejectsBadFraction) {
  const auto m = oracle::to_matrix({{1, 2}}, 5);
  EXPECT_THROW(split_random(m, 0.0, 1), DomainError);
  EXPECT_THROW(split_random(m, 1.0, 1), DomainError);
}

TEST(IndexAgainst, UnknownIdsGetFreshIndices) {
  std::istringstream train_in("1\t10\t3\t0\n2\t20\t4\t0\n");
  const auto train = parse_ratings(train_in, Format::Tab);
  std::istringstream test_in("2\t10\t5\t0\n9\t20\t1\t0\n9\t99\t2\t0\n");
  const auto test = index_against(train, read_ratings(test_in, Format::Tab));
  ASSERT_EQ(test.size(), 3u);
  EXPECT_EQ(test[0].user, *train.find_user(2));
  EXPECT_EQ(test[0].item, *train.find_item(10));
  EXPECT_EQ(test[1].user, train.num_users());
  EXPECT_EQ(test[2].user, train.num_users());
  EXPECT_EQ(test[2].item, train.num_items());
}
