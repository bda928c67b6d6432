#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lira/synthgen.hpp"
#include "support/oracles.hpp"

using namespace lira;

namespace {

ClusterParams fixed_params(std::size_t m, std::vector<std::vector<double>> mu_per_cluster_item1, std::uint64_t seed) {
  // One item; mu_per_cluster_item1[k] is cluster k's distribution.
  ClusterParams p{m, 1, 5, mu_per_cluster_item1.size(), seed, {}};
  for (const auto& row : mu_per_cluster_item1) p.mu.insert(p.mu.end(), row.begin(), row.end());
  return p;
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t j = k;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[k]]) ++j;
    for (std::size_t t = k; t <= j; ++t) r[idx[t]] = (k + j) / 2.0;
    k = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double num = 0, dx = 0, dy = 0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    num += (rx[k] - mx) * (ry[k] - my);
    dx += (rx[k] - mx) * (rx[k] - mx);
    dy += (ry[k] - my) * (ry[k] - my);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace

TEST(DrawClusterParams, RowsLieOnSimplex) {
  const auto p = draw_cluster_params(40, 80, 5, 2, 3);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 80; ++i) {
      double s = 0;
      for (double x : p.probs(k, i)) {
        EXPECT_GE(x, 0.0);
        s += x;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(GenerateClusters, ShapeLabelsAndDeterminism) {
  const auto p = draw_cluster_params(40, 12, 5, 2, 4);
  const auto a = generate_clusters(p), b = generate_clusters(p);
  EXPECT_EQ(a.matrix.num_ratings(), 40u * 12u);
  EXPECT_EQ(a.matrix.triples(), b.matrix.triples());
  ASSERT_EQ(a.labels.size(), 40u);
  EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), 0u), 20);
  EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), 1u), 20);
  auto bad = p;
  bad.num_users = 41;
  EXPECT_THROW(generate_clusters(bad), DomainError);
}

TEST(GenerateClusters, PointMassIsDeterministicRating) {
  const auto ds = generate_clusters(fixed_params(10, {{0, 0, 1, 0, 0}, {0, 0, 0, 0, 1}}, 8));
  for (UserIndex u = 0; u < 10; ++u) EXPECT_EQ(*ds.matrix.rating(u, 0), ds.labels[u] == 0 ? 3 : 5);
}

TEST(GenerateClusters, FrequenciesMatchParameters) {
  // The example parameter vector: cluster 1 rates item 1 with a 1 about half the time.
  const std::vector<std::vector<double>> mu{{0.55, 0.09, 0.25, 0.01, 0.10}, {0.17, 0.08, 0.12, 0.33, 0.30}};
  const auto ds = generate_clusters(fixed_params(4000, mu, 17));
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> counts(5, 0);
    for (UserIndex u = 0; u < 4000; ++u)
      if (ds.labels[u] == k) counts[*ds.matrix.rating(u, 0) - 1] += 1;
    double chi2 = 0;
    for (int r = 0; r < 5; ++r) {
      EXPECT_TRUE(oracle::within_binomial(counts[r], 2000, mu[k][r], 3.0)) << "cluster " << k << " rho " << r + 1;
      const double expected = 2000 * mu[k][r];
      chi2 += (counts[r] - expected) * (counts[r] - expected) / expected;
    }
    EXPECT_LT(chi2, 18.467);  // chi-square, 4 dof, p = 0.001
  }
}

TEST(ApplyMissing, ZeroRateKeepsEverything) {
  const auto ds = generate_clusters(draw_cluster_params(40, 10, 5, 2, 1));
  const auto same = apply_missing(ds, 0.0, 5);
  EXPECT_EQ(same.matrix.triples(), ds.matrix.triples());
  EXPECT_EQ(same.labels, ds.labels);
}

TEST(ApplyMissing, RateAndDeterminism) {
  const auto ds = generate_clusters(draw_cluster_params(40, 80, 5, 2, 2));
  const auto a = apply_missing(ds, 0.95, 77), b = apply_missing(ds, 0.95, 77);
  EXPECT_EQ(a.matrix.triples(), b.matrix.triples());
  EXPECT_TRUE(oracle::within_binomial(static_cast<double>(a.matrix.num_ratings()), 3200, 0.05));
  EXPECT_EQ(a.labels, ds.labels);
  EXPECT_EQ(a.missing_rate, 0.95);
  EXPECT_THROW(apply_missing(ds, 1.0, 1), DomainError);
}

TEST(ApplyMissing, CellDecisionIndependentOfOtherCells) {
  // Deleting from a sub-dataset keeps exactly the cells the full deletion keeps.
  const auto ds = generate_clusters(draw_cluster_params(40, 20, 5, 2, 6));
  const auto first = apply_missing(ds, 0.3, 101);
  const auto chained = apply_missing(first, 0.5, 202);
  const auto direct = apply_missing(ds, 0.5, 202);
  for (const auto& r : chained.matrix.triples()) EXPECT_TRUE(direct.matrix.rating(r.user, r.item));
  for (const auto& r : direct.matrix.triples())
    EXPECT_EQ(chained.matrix.rating(r.user, r.item).has_value(), first.matrix.rating(r.user, r.item).has_value());
}

TEST(Resolution, ConstantScores) {
  const std::vector<std::size_t> labels{0, 0, 0, 1, 1, 1};
  const auto r = resolution_of(labels, [&](UserIndex u, UserIndex v) -> std::optional<double> {
    return labels[u] == labels[v] ? 2.5 : -0.5;
  });
  EXPECT_DOUBLE_EQ(r.resolution, 3.0);
  EXPECT_EQ(r.intra_pairs, 6u);
  EXPECT_EQ(r.inter_pairs, 9u);
}

TEST(Resolution, NegatingScoresNegatesResolution) {
  const auto ds = apply_missing(generate_clusters(draw_cluster_params(20, 30, 5, 2, 9)), 0.4, 3);
  const SimilarityScore s(ScoreKind::LiRa, ds.matrix);
  const auto pos = resolution_of(ds.labels, [&](UserIndex u, UserIndex v) -> std::optional<double> {
    return s(ds.matrix, u, v);
  });
  const auto neg = resolution_of(ds.labels, [&](UserIndex u, UserIndex v) -> std::optional<double> {
    return -s(ds.matrix, u, v);
  });
  EXPECT_NEAR(pos.resolution, -neg.resolution, 1e-12);
  EXPECT_NEAR(pos.resolution, resolution(ds, ScoreKind::LiRa).resolution, 1e-12);
}

TEST(Resolution, SeparatedClustersGivePositiveLira) {
  // Cluster 0 rates every item 1, cluster 1 rates every item 5.
  const auto ds = generate_clusters(fixed_params(8, {{1, 0, 0, 0, 0}, {0, 0, 0, 0, 1}}, 1));
  const auto r = resolution(ds, ScoreKind::LiRa);
  EXPECT_NEAR(r.intra_mean, std::log10(2.5), 1e-12);
  EXPECT_LT(r.inter_mean, 0.0);
  EXPECT_GT(r.resolution, 0.0);
  EXPECT_EQ(r.undefined_pairs, 0u);
  EXPECT_NEAR(r.resolution, r.intra_mean - r.inter_mean, 1e-12);
}

TEST(Resolution, UndefinedPairsCounted) {
  const auto ds = apply_missing(generate_clusters(draw_cluster_params(40, 5, 5, 2, 10)), 0.9, 10);
  const auto r = resolution(ds, ScoreKind::Pearson);
  EXPECT_GT(r.undefined_pairs, 700u);  // nearly every pair has < 2 co-rated items
  EXPECT_NO_THROW(resolution(ds, ScoreKind::Cosine));
  EXPECT_NO_THROW(resolution(ds, ScoreKind::BCF));
}

TEST(ResolutionGrid, ScalingAndDeterminism) {
  ResolutionGridConfig cfg;
  cfg.n_values = {5, 20};
  cfg.missing_rates = {0.2, 0.7};
  cfg.seeds = seed_range(1, 3);
  const auto a = resolution_grid(cfg, 1), b = resolution_grid(cfg, 4);
  EXPECT_EQ(a.rows.size(), 4u * 2u * 2u * 3u);
  std::ostringstream ca, cb;
  write_resolution_csv(ca, a);
  write_resolution_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  for (auto kind : cfg.scores) {
    double max_abs = 0;
    for (const auto& s : a.summary)
      if (s.score_name == score_name(kind)) {
        EXPECT_LE(std::abs(s.scaled_resolution), 1.0);
        max_abs = std::max(max_abs, std::abs(s.scaled_resolution));
      }
    EXPECT_EQ(max_abs, 1.0) << score_name(kind);
  }
  // A cell reproduces when the rest of the grid changes.
  auto narrow = cfg;
  narrow.n_values = {20};
  narrow.missing_rates = {0.7};
  const auto c = resolution_grid(narrow, 1);
  const auto* full = a.find("lira", 20, 0.7);
  const auto* part = c.find("lira", 20, 0.7);
  ASSERT_TRUE(full && part);
  EXPECT_EQ(full->mean_resolution, part->mean_resolution);
}

TEST(ResolutionGrid, LiraGainsFromDataWhilePearsonAndCosineDoNot) {
  ResolutionGridConfig cfg;
  cfg.scores = {ScoreKind::LiRa, ScoreKind::Pearson, ScoreKind::Cosine};
  cfg.seeds = seed_range(1, 20);
  const auto grid = resolution_grid(cfg);

  EXPECT_GT(grid.find("lira", 80, 0.1)->scaled_resolution, grid.find("lira", 5, 0.9)->scaled_resolution);

  // More items at a low missing rate: LiRa's resolution multiplies, the others stay flat.
  auto gain = [&](const char* s) { return grid.find(s, 80, 0.1)->mean_resolution / grid.find(s, 5, 0.1)->mean_resolution; };
  EXPECT_GE(gain("lira"), 2.0);
  EXPECT_LT(gain("pearson"), 2.0);
  EXPECT_LT(gain("cosine"), 2.0);

  // Rank correlation of resolution against expected observed entries per user.
  auto rho = [&](const char* s) {
    std::vector<double> data, res;
    for (const auto& row : grid.summary)
      if (row.score_name == s) {
        data.push_back(row.n * (1.0 - row.missing_rate));
        res.push_back(row.scaled_resolution);
      }
    return spearman(data, res);
  };
  const double lira_rho = rho("lira");
  EXPECT_GT(lira_rho, 0.9);
  EXPECT_LT(std::abs(rho("pearson")), lira_rho);
  EXPECT_LT(std::abs(rho("cosine")), lira_rho);
}

TEST(InterClusterCurve, SignsAndScaling) {
  ResolutionGridConfig cfg;
  cfg.scores = {ScoreKind::LiRa, ScoreKind::Cosine};
  cfg.seeds = seed_range(1, 20);
  const auto rows = inter_cluster_curve(cfg, 80);
  ASSERT_EQ(rows.size(), 2u * cfg.missing_rates.size());
  double prev = -1e300;
  for (const auto& r : rows) {
    EXPECT_LE(std::abs(r.scaled_inter_mean), 1.0);
    if (r.score_name == "lira") {
      EXPECT_LT(r.inter_mean, 0.0);
      EXPECT_GT(r.inter_mean, prev);  // rows ascend in missing rate
      prev = r.inter_mean;
    } else {
      EXPECT_GT(r.inter_mean, 0.0);
    }
  }
}

TEST(SyntheticCsv, Layouts) {
  const auto ds = generate_clusters(fixed_params(4, {{1, 0, 0, 0, 0}, {0, 0, 0, 0, 1}}, 1));
  std::ostringstream ratings, labels, params;
  write_ratings_tsv(ratings, ds.matrix);
  write_labels_csv(labels, ds);
  write_params_csv(params, ds.params);
  EXPECT_EQ(ratings.str(), "1\t1\t1\t0\n2\t1\t1\t0\n3\t1\t5\t0\n4\t1\t5\t0\n");
  EXPECT_EQ(labels.str(), "user,cluster\n1,1\n2,1\n3,2\n4,2\n");
  EXPECT_EQ(params.str().substr(0, 30), "cluster,item,rho,mu\n1,1,1,1\n1,");
  // Generated ratings parse back through the MovieLens reader.
  std::istringstream in(ratings.str());
  EXPECT_EQ(parse_ratings(in, Format::Tab).triples(), ds.matrix.triples());
}
