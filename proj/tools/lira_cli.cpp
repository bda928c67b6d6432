// Command-line front end: kNN evaluation on MovieLens-style data, the
// synthetic resolution experiments, pairwise similarity inspection and
// synthetic data generation. Data goes to files or stdout, progress to stderr.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lira/lira.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

lira::Format parse_format(const std::string& tag) {
  if (tag == "tab") return lira::Format::Tab;
  if (tag == "doublecolon") return lira::Format::DoubleColon;
  throw UsageError("unknown format '" + tag + "' (expected tab or doublecolon)");
}

std::vector<lira::ScoreKind> parse_scores(const std::vector<std::string>& names) {
  std::vector<lira::ScoreKind> out;
  for (const auto& n : names) {
    auto k = lira::parse_score_kind(n);
    if (!k) throw UsageError("unknown score '" + n + "'");
    out.push_back(*k);
  }
  if (out.empty()) throw UsageError("no scores requested");
  return out;
}

// Writes the whole payload at once so a failed run leaves no partial file.
void emit(const std::string& path, const std::string& payload) {
  if (path.empty() || path == "-") {
    std::cout << payload << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lira::IoError("cannot write " + path);
  out << payload;
  if (!out) throw lira::IoError("error writing " + path);
}

void progress(const std::string& msg) { std::cerr << msg << '\n'; }

// ---------------------------------------------------------------------------

struct EvalConfig {
  std::vector<std::string> train, test;
  std::string ml100k, data;
  std::size_t splits = 5;
  double test_fraction = 0.2;
  std::string format = "tab";
  int scale_d = lira::kDefaultScale;
  std::vector<std::string> scores{"lira", "pearson", "cosine", "bcf"};
  std::vector<std::size_t> k{5, 10, 20, 40, 80, 160};
  std::uint64_t seed = 1;
  unsigned threads = lira::default_threads();
  std::string out = "-";
};

int cmd_eval(const EvalConfig& cfg) {
  const int sources = (!cfg.train.empty() || !cfg.test.empty()) + !cfg.ml100k.empty() + !cfg.data.empty();
  if (sources != 1) throw UsageError("give exactly one of --train/--test, --ml100k or --data");
  if (cfg.train.size() != cfg.test.size()) throw UsageError("--train and --test must be given in pairs");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw UsageError("--test-fraction must lie in (0, 1)");
  const auto scores = parse_scores(cfg.scores);
  const auto format = parse_format(cfg.format);
  progress("seed: " + std::to_string(cfg.seed));

  std::vector<lira::Split> splits;
  if (!cfg.train.empty()) {
    for (std::size_t s = 0; s < cfg.train.size(); ++s) {
      auto id = std::filesystem::path(cfg.train[s]).stem().string();
      splits.push_back(lira::load_split(id, cfg.train[s], cfg.test[s], format, cfg.scale_d));
    }
  } else if (!cfg.ml100k.empty()) {
    splits = lira::load_ml100k(cfg.ml100k, cfg.scale_d, cfg.seed, [](const std::string& w) { progress("warning: " + w); },
                               cfg.splits);
  } else {
    const auto all = lira::build_matrix(lira::read_ratings_file(cfg.data, format, cfg.scale_d), cfg.scale_d);
    splits = lira::random_splits(all, cfg.splits, cfg.test_fraction, cfg.seed);
  }

  const auto grid = lira::evaluate_grid(splits, scores, cfg.k, cfg.threads, progress);
  std::ostringstream csv;
  lira::write_grid_csv(csv, grid);
  emit(cfg.out, csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ResolutionConfig {
  std::size_t m = 40;
  int scale_d = lira::kDefaultScale;
  std::size_t clusters = 2;
  std::vector<std::size_t> n{5, 10, 20, 40, 80};
  std::vector<double> missing{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  std::vector<std::string> scores{"lira", "pearson", "cosine", "bcf"};
  std::size_t seeds = 20;
  std::uint64_t seed = 1;
  unsigned threads = lira::default_threads();
  std::string out = "resolution.csv";
  std::string summary_out;
  std::string inter_out = "inter_cluster.csv";
  std::size_t inter_n = 80;
};

int cmd_resolution(const ResolutionConfig& cfg) {
  if (cfg.seeds == 0) throw UsageError("--seeds must be at least 1");
  if (cfg.clusters == 0 || cfg.m % cfg.clusters != 0 || cfg.m / cfg.clusters < 2)
    throw UsageError("--m must be a multiple of --clusters with at least 2 users per cluster");
  for (auto n : cfg.n)
    if (n == 0) throw UsageError("--n values must be positive");
  if (cfg.inter_n == 0) throw UsageError("--inter-n must be positive");
  for (auto r : cfg.missing)
    if (!(r >= 0.0 && r < 1.0)) throw UsageError("--missing values must lie in [0, 1)");
  if (cfg.scale_d < 2) throw UsageError("--scale-d must be at least 2");

  lira::ResolutionGridConfig grid_cfg;
  grid_cfg.num_users = cfg.m;
  grid_cfg.scale_d = cfg.scale_d;
  grid_cfg.num_clusters = cfg.clusters;
  grid_cfg.n_values = cfg.n;
  grid_cfg.missing_rates = cfg.missing;
  grid_cfg.scores = parse_scores(cfg.scores);
  grid_cfg.seeds = lira::seed_range(cfg.seed, cfg.seeds);
  progress("seed: " + std::to_string(cfg.seed) + " (" + std::to_string(cfg.seeds) + " realizations)");

  const auto grid = lira::resolution_grid(grid_cfg, cfg.threads, [](std::size_t done, std::size_t total) {
    if (done == total || done % 100 == 0) progress("resolution cells " + std::to_string(done) + "/" + std::to_string(total));
  });
  const auto inter = lira::inter_cluster_curve(grid_cfg, cfg.inter_n, cfg.threads);

  std::ostringstream res_csv, inter_csv, summary_csv;
  lira::write_resolution_csv(res_csv, grid);
  lira::write_inter_cluster_csv(inter_csv, inter);
  emit(cfg.out, res_csv.str());
  emit(cfg.inter_out, inter_csv.str());
  if (!cfg.summary_out.empty()) {
    lira::write_resolution_summary_csv(summary_csv, grid);
    emit(cfg.summary_out, summary_csv.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimConfig {
  std::string data, format = "tab";
  std::vector<lira::ExternalId> users;
  std::string inline_u, inline_v;
  int scale_d = lira::kDefaultScale;
  std::vector<std::string> scores{"lira", "pearson", "cosine", "jaccard", "bcf"};
};

// "1,1,-,-,-,2": integers are ratings, '-' (or an empty field) is missing.
std::vector<int> parse_inline_vector(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || tok == "-") {
      out.push_back(0);
      continue;
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw UsageError("bad rating '" + tok + "' in vector");
    }
  }
  return out;
}

int cmd_sim(const SimConfig& cfg) {
  const auto scores = parse_scores(cfg.scores);
  lira::RatingMatrix m;
  lira::UserIndex u = 0, v = 1;
  if (!cfg.inline_u.empty() || !cfg.inline_v.empty()) {
    if (cfg.inline_u.empty() || cfg.inline_v.empty() || !cfg.data.empty() || !cfg.users.empty())
      throw UsageError("give --u and --v together, without --data/--user");
    const auto xu = parse_inline_vector(cfg.inline_u), xv = parse_inline_vector(cfg.inline_v);
    if (xu.size() != xv.size()) throw UsageError("--u and --v must have the same length");
    std::vector<lira::Rating> triples;
    for (std::size_t i = 0; i < xu.size(); ++i) {
      for (auto [user, x] : {std::pair{0u, xu[i]}, std::pair{1u, xv[i]}}) {
        if (x == 0) continue;
        if (x < 1 || x > cfg.scale_d) throw lira::DomainError("rating " + std::to_string(x) + " outside scale");
        triples.push_back(lira::Rating{user, static_cast<lira::ItemIndex>(i), static_cast<lira::RatingValue>(x)});
      }
    }
    m = lira::RatingMatrix(2, xu.size(), cfg.scale_d, std::move(triples));
  } else {
    if (cfg.data.empty() || cfg.users.size() != 2) throw UsageError("give --data with two --user ids, or --u and --v");
    m = lira::build_matrix(lira::read_ratings_file(cfg.data, parse_format(cfg.format), cfg.scale_d), cfg.scale_d);
    auto a = m.find_user(cfg.users[0]), b = m.find_user(cfg.users[1]);
    if (!a) throw lira::DomainError("unknown user id " + std::to_string(cfg.users[0]));
    if (!b) throw lira::DomainError("unknown user id " + std::to_string(cfg.users[1]));
    u = *a;
    v = *b;
  }

  const auto hist = lira::diff_histogram(m, u, v);
  std::ostringstream out;
  out << "histogram:";
  for (auto c : hist.counts) out << ' ' << c;
  out << "\nco_rated: " << hist.total << '\n';
  for (auto kind : scores) {
    const auto t0 = std::chrono::steady_clock::now();
    const lira::SimilarityScore score(kind, m);
    std::string value;
    try {
      value = lira::detail::fmt_double(lira::score_pair(score, m, u, v));
    } catch (const lira::EmptyProfileError&) {
      value = "undefined";
    }
    const auto us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    out << score.name() << ": " << value << '\n';
    std::cerr << score.name() << " took " << us << " us\n";
  }
  std::cout << out.str();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenConfig {
  std::size_t m = 40, n = 80, clusters = 2;
  int scale_d = lira::kDefaultScale;
  double missing = 0.0;
  std::uint64_t seed = 1;
  std::string out = "ratings.tsv", labels_out = "labels.csv", params_out = "params.csv";
};

int cmd_gen(const GenConfig& cfg) {
  if (cfg.clusters == 0 || cfg.m % cfg.clusters != 0) throw UsageError("--m must be a multiple of --clusters");
  if (cfg.n == 0) throw UsageError("--n must be positive");
  if (!(cfg.missing >= 0.0 && cfg.missing < 1.0)) throw UsageError("--missing must lie in [0, 1)");
  progress("seed: " + std::to_string(cfg.seed));
  lira::ResolutionGridConfig grid_cfg;
  grid_cfg.num_users = cfg.m;
  grid_cfg.scale_d = cfg.scale_d;
  grid_cfg.num_clusters = cfg.clusters;
  // Same streams as the resolution grid cell (seed, n, missing).
  const auto ds = lira::detail::grid_cell_dataset(grid_cfg, cfg.seed, cfg.n, cfg.missing);
  std::ostringstream ratings, labels, params;
  lira::write_ratings_tsv(ratings, ds.matrix);
  lira::write_labels_csv(labels, ds);
  lira::write_params_csv(params, ds.params);
  emit(cfg.out, ratings.str());
  emit(cfg.labels_out, labels.str());
  emit(cfg.params_out, params.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-ratio (LiRa) and baseline similarity scores for user-based collaborative filtering"};
  app.require_subcommand(1);

  EvalConfig eval;
  auto* eval_cmd = app.add_subcommand("eval", "kNN MAE/RMSE over a (split x score x k) grid");
  eval_cmd->add_option("--train", eval.train, "Training ratings file (repeatable, paired with --test)");
  eval_cmd->add_option("--test", eval.test, "Test ratings file (repeatable)");
  eval_cmd->add_option("--ml100k", eval.ml100k, "MovieLens 100K directory (u1..u5 splits or u.data)");
  eval_cmd->add_option("--data", eval.data, "Single ratings file to split at random");
  eval_cmd->add_option("--splits", eval.splits, "Number of random splits")->capture_default_str();
  eval_cmd->add_option("--test-fraction", eval.test_fraction, "Test share of random splits")->capture_default_str();
  eval_cmd->add_option("--format", eval.format, "tab | doublecolon")->capture_default_str();
  eval_cmd->add_option("--scale-d", eval.scale_d, "Number of rating values")->capture_default_str();
  eval_cmd->add_option("--scores", eval.scores, "Similarity scores")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "Neighborhood sizes")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "Random seed")->capture_default_str();
  eval_cmd->add_option("--threads", eval.threads, "Worker threads")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval.out, "CSV output path, - for stdout")->capture_default_str();

  ResolutionConfig res;
  auto* res_cmd = app.add_subcommand("resolution", "Synthetic two-cluster resolution grid and inter-cluster curve");
  res_cmd->add_option("--m", res.m, "Users")->capture_default_str();
  res_cmd->add_option("--scale-d", res.scale_d, "Number of rating values")->capture_default_str();
  res_cmd->add_option("--clusters", res.clusters, "Clusters")->capture_default_str();
  res_cmd->add_option("--n", res.n, "Item counts")->delimiter(',')->capture_default_str();
  res_cmd->add_option("--missing", res.missing, "Missing rates")->delimiter(',')->capture_default_str();
  res_cmd->add_option("--scores", res.scores, "Similarity scores")->delimiter(',')->capture_default_str();
  res_cmd->add_option("--seeds", res.seeds, "Number of realizations")->capture_default_str();
  res_cmd->add_option("--seed", res.seed, "First seed")->capture_default_str();
  res_cmd->add_option("--threads", res.threads, "Worker threads")->check(CLI::PositiveNumber);
  res_cmd->add_option("--out", res.out, "Per-seed resolution CSV")->capture_default_str();
  res_cmd->add_option("--summary-out", res.summary_out, "Seed-averaged resolution CSV (optional)");
  res_cmd->add_option("--inter-out", res.inter_out, "Inter-cluster curve CSV")->capture_default_str();
  res_cmd->add_option("--inter-n", res.inter_n, "Item count for the inter-cluster curve")->capture_default_str();

  SimConfig sim;
  auto* sim_cmd = app.add_subcommand("sim", "Similarity of one user pair");
  sim_cmd->add_option("--data", sim.data, "Ratings file");
  sim_cmd->add_option("--format", sim.format, "tab | doublecolon")->capture_default_str();
  sim_cmd->add_option("--user", sim.users, "External user id (give twice)");
  sim_cmd->add_option("--u", sim.inline_u, "Inline vector, e.g. 1,1,-,-,-,2");
  sim_cmd->add_option("--v", sim.inline_v, "Inline vector");
  sim_cmd->add_option("--scale-d", sim.scale_d, "Number of rating values")->capture_default_str();
  sim_cmd->add_option("--scores", sim.scores, "Similarity scores")->delimiter(',')->capture_default_str();

  GenConfig gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic clustered ratings data set");
  gen_cmd->add_option("--m", gen.m, "Users")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Items")->capture_default_str();
  gen_cmd->add_option("--scale-d", gen.scale_d, "Number of rating values")->capture_default_str();
  gen_cmd->add_option("--clusters", gen.clusters, "Clusters")->capture_default_str();
  gen_cmd->add_option("--missing", gen.missing, "Missing rate")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Ratings file (MovieLens TAB layout)")->capture_default_str();
  gen_cmd->add_option("--labels-out", gen.labels_out, "user,cluster CSV")->capture_default_str();
  gen_cmd->add_option("--params-out", gen.params_out, "cluster,item,rho,mu CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*eval_cmd) return cmd_eval(eval);
    if (*res_cmd) return cmd_resolution(res);
    if (*sim_cmd) return cmd_sim(sim);
    if (*gen_cmd) return cmd_gen(gen);
  } catch (const lira::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
