#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "sakt/ablation.hpp"
#include "sakt/data.hpp"
#include "sakt/evaluation.hpp"
#include "sakt/model.hpp"

using namespace sakt;

namespace {

// Quadratic-time reference: counts (positive, negative) pairs, ties half.
double auc_bruteforce(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc known values") {
  CHECK(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
  CHECK(auc({0.2, 0.5, 0.5, 0.9}, {0, 0, 1, 1}) == Catch::Approx(0.875).margin(1e-15));
}

TEST_CASE("auc input validation") {
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::domain_error);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {0, 0}), std::domain_error);
  CHECK_THROWS_AS(auc({0.1}, {0, 1}), std::invalid_argument);
}

TEST_CASE("auc matches the quadratic reference on random instances") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size_dist(2, 200);
  std::uniform_real_distribution<double> score_dist(0.0, 1.0);
  std::bernoulli_distribution label_dist(0.4);
  std::uniform_int_distribution<int> grid(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = size_dist(rng);
    std::vector<double> scores(m);
    std::vector<int> labels(m);
    bool any_pos = false, any_neg = false;
    const bool quantized = trial % 2 == 0;  // force heavy ties half the time
    for (int i = 0; i < m; ++i) {
      scores[i] = quantized ? grid(rng) / 10.0 : score_dist(rng);
      labels[i] = label_dist(rng) ? 1 : 0;
      (labels[i] ? any_pos : any_neg) = true;
    }
    if (!any_pos) labels[0] = 1;
    if (!any_neg) labels[m > 1 ? 1 : 0] = 0;
    if (m == 1) continue;
    CHECK(std::abs(auc(scores, labels) - auc_bruteforce(scores, labels)) <= 1e-12);
  }
}

TEST_CASE("auc is invariant under monotone score transforms") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> score_dist(0.01, 0.99);
  std::bernoulli_distribution label_dist(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(50);
    std::vector<int> labels(50);
    for (int i = 0; i < 50; ++i) {
      scores[i] = score_dist(rng);
      labels[i] = label_dist(rng) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> logit(50);
    for (int i = 0; i < 50; ++i) logit[i] = std::log(scores[i] / (1 - scores[i]));
    CHECK(auc(scores, labels) == Catch::Approx(auc(logit, labels)).margin(1e-12));
  }
}

TEST_CASE("evaluate pools valid positions and is deterministic") {
  ModelConfig cfg;
  cfg.num_exercises = 6;
  cfg.d = 4;
  cfg.n = 5;
  cfg.heads = 2;
  ModelParams<double> params = ModelParams<double>::init(cfg, 3);
  Dataset ds = generate_synthetic(15, 6, 2, 0.0, 5);
  auto windows = build_windows(ds, cfg.n);
  EvalResult a = evaluate(params, windows);
  EvalResult b = evaluate(params, windows);
  CHECK(a.auc == b.auc);
  CHECK(a.mean_loss == b.mean_loss);
  std::size_t expected = 0;
  for (const auto& w : windows) expected += w.valid_count();
  CHECK(a.num_predictions == expected);
  CHECK(a.auc >= 0.0);
  CHECK(a.auc <= 1.0);
  CHECK(a.mean_loss > 0.0);

  CHECK_THROWS_AS(evaluate(params, std::vector<EncodedWindow>{}), std::domain_error);
}

TEST_CASE("relevance matrix rows are normalized with support") {
  ModelConfig cfg;
  cfg.num_exercises = 5;
  cfg.d = 4;
  cfg.n = 6;
  cfg.heads = 3;
  ModelParams<double> params = ModelParams<double>::init(cfg, 7);
  Dataset ds = generate_synthetic(12, 5, 2, 0.0, 9);
  auto windows = build_windows(ds, cfg.n);
  RelevanceMatrix rel = relevance_matrix(params, windows);
  CHECK(rel.num_exercises == 5);
  CHECK(rel.source_block == 0);
  for (int q = 0; q < 5; ++q) {
    double row_sum = 0.0, support = 0.0;
    for (int k = 0; k < 5; ++k) {
      CHECK(rel.weights(q, k) >= 0.0);
      row_sum += rel.weights(q, k);
      support += rel.support(q, k);
    }
    if (support > 0.0) CHECK(row_sum == Catch::Approx(1.0).margin(1e-9));
    else CHECK(row_sum == 0.0);
  }
}

TEST_CASE("relevance respects the sequential exercise order") {
  // When every student answers 0..E-1 in order, a query for exercise q can
  // only attend to keys with lower exercise id, so cells above the diagonal
  // (key > query... accounting for the shifted stream, key >= query) are
  // never touched.
  ModelConfig cfg;
  cfg.num_exercises = 6;
  cfg.d = 4;
  cfg.n = 5;
  cfg.heads = 2;
  ModelParams<double> params = ModelParams<double>::init(cfg, 11);
  Dataset ds = generate_synthetic(10, 6, 3, 0.0, 13);
  auto windows = build_windows(ds, cfg.n);
  RelevanceMatrix rel = relevance_matrix(params, windows);
  for (int q = 0; q < 6; ++q) {
    for (int k = q; k < 6; ++k) {
      CHECK(rel.weights(q, k) == 0.0);
      CHECK(rel.support(q, k) == 0.0);
    }
  }
}

TEST_CASE("relevance with a single available key is all mass") {
  // Sequences of length 2: each query sees exactly one key.
  ModelConfig cfg;
  cfg.num_exercises = 4;
  cfg.d = 4;
  cfg.n = 4;
  cfg.heads = 2;
  ModelParams<double> params = ModelParams<double>::init(cfg, 17);
  Dataset ds;
  ds.num_exercises = 4;
  for (int e = 0; e < 4; ++e) ds.exercise_ids.push_back(std::to_string(e));
  ds.sequences.push_back({"s0", {{0, 1}, {2, 0}}});
  ds.sequences.push_back({"s1", {{1, 0}, {3, 1}}});
  auto windows = build_windows(ds, cfg.n);
  RelevanceMatrix rel = relevance_matrix(params, windows);
  CHECK(rel.weights(2, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(rel.weights(3, 1) == Catch::Approx(1.0).margin(1e-12));
  CHECK(rel.support(2, 0) == 1.0);
  CHECK(rel.support(3, 2) == 0.0);
}

TEST_CASE("relevance requires an attention block") {
  ModelConfig cfg;
  cfg.num_exercises = 4;
  cfg.d = 4;
  cfg.n = 4;
  cfg.heads = 1;
  cfg.blocks = 0;
  ModelParams<double> params = ModelParams<double>::init(cfg, 19);
  Dataset ds = generate_synthetic(5, 4, 2, 0.0, 21);
  auto windows = build_windows(ds, cfg.n);
  CHECK_THROWS_AS(relevance_matrix(params, windows), std::domain_error);
}

TEST_CASE("concept anchors are the first exercise of each concept") {
  std::vector<int> concept_of{1, 0, 1, 2, 0};
  auto anchors = concept_anchors(concept_of, 3);
  CHECK(anchors == std::vector<int>{1, 0, 3});
}

TEST_CASE("influence graph takes top-2 keys with lower-id tiebreak") {
  RelevanceMatrix rel;
  rel.num_exercises = 4;
  rel.weights = Matrix<double>(4, 4);
  rel.support = Matrix<double>(4, 4);
  // Node 3 (non-anchor): keys 0,1,2 supported; 1 and 2 tie above 0.
  for (int k = 0; k < 3; ++k) rel.support(3, k) = 1.0;
  rel.weights(3, 0) = 0.2;
  rel.weights(3, 1) = 0.4;
  rel.weights(3, 2) = 0.4;
  // Node 2 (non-anchor): only one supported key.
  rel.support(2, 0) = 1.0;
  rel.weights(2, 0) = 1.0;

  InfluenceGraph g = influence_graph(rel, {0, 1});
  REQUIRE(g.edges.size() == 3);
  CHECK(g.edges[0].from == 2);
  CHECK(g.edges[0].to == 0);
  CHECK(g.edges[1].from == 3);
  CHECK(g.edges[1].to == 1);  // tie with 2 broken toward lower id
  CHECK(g.edges[2].from == 3);
  CHECK(g.edges[2].to == 2);
  REQUIRE(g.warnings.size() == 1);
  CHECK_THAT(g.warnings[0], Catch::Matchers::ContainsSubstring("exercise 2"));

  // Anchors emit no edges.
  for (const auto& e : g.edges) {
    CHECK(e.from != 0);
    CHECK(e.from != 1);
  }
  // Self-edges never appear.
  for (const auto& e : g.edges) CHECK(e.from != e.to);
}

TEST_CASE("component purity hand cases") {
  InfluenceGraph g;
  g.num_nodes = 6;
  g.edges = {{1, 0, 1.0}, {2, 0, 1.0}, {4, 3, 1.0}, {5, 3, 1.0}};
  // Components {0,1,2} and {3,4,5}.
  CHECK(component_purity(g, {0, 0, 0, 1, 1, 1}) == 1.0);
  CHECK(component_purity(g, {0, 0, 1, 1, 1, 0}) == Catch::Approx(4.0 / 6).margin(1e-12));
  // Everything in one component: purity is the majority fraction.
  g.edges.push_back({3, 0, 1.0});
  CHECK(component_purity(g, {0, 0, 0, 1, 1, 1}) == 0.5);
  CHECK_THROWS_AS(component_purity(g, {0, 1}), std::invalid_argument);
}

TEST_CASE("singleton nodes form their own pure components") {
  InfluenceGraph g;
  g.num_nodes = 3;
  g.edges = {};
  CHECK(component_purity(g, {0, 1, 2}) == 1.0);
}

TEST_CASE("ablation variant list") {
  TrainConfig base;
  auto variants = ablation_variants(base);
  REQUIRE(variants.size() == 7);
  CHECK(variants[0].first == "Default");
  CHECK(variants[1].first == "No PE");
  CHECK(variants[1].second.no_pe);
  CHECK(variants[2].first == "No RC");
  CHECK(variants[2].second.no_residual);
  CHECK(variants[3].first == "No Dropout");
  CHECK(variants[3].second.no_dropout);
  CHECK(variants[4].first == "Single head");
  CHECK(variants[4].second.single_head);
  CHECK(variants[5].first == "0 block");
  CHECK(variants[5].second.blocks == 0);
  CHECK(variants[6].first == "2 blocks");
  CHECK(variants[6].second.blocks == 2);
  // Non-ablated fields stay put.
  for (const auto& [name, cfg] : variants) {
    CHECK(cfg.d == base.d);
    CHECK(cfg.seed == base.seed);
  }
}

TEST_CASE("ablation run produces one row per variant at tiny scale") {
  Dataset ds = generate_synthetic(15, 6, 2, 0.0, 31);
  TrainConfig cfg;
  cfg.d = 4;
  cfg.n = 6;
  cfg.heads = 2;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.seed = 31;
  std::ostringstream log;
  AblationTable table = run_ablations(cfg, ds, 0.8, log);
  REQUIRE(table.rows.size() == 7);
  for (const auto& row : table.rows) {
    CHECK(row.test_auc >= 0.0);
    CHECK(row.test_auc <= 1.0);
  }
}

TEST_CASE("no-dropout variant equals default when dropout is zero") {
  Dataset ds = generate_synthetic(12, 5, 2, 0.0, 37);
  auto [train_set, test_set] = split_train_test(ds, 0.8, 37);
  TrainConfig cfg;
  cfg.d = 4;
  cfg.n = 5;
  cfg.heads = 1;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.dropout = 0.0;
  cfg.seed = 37;
  std::ostringstream log;
  TrainResult base = train(train_set, test_set, cfg, log);
  cfg.no_dropout = true;
  TrainResult nod = train(train_set, test_set, cfg, log);
  auto ea = param_entries(base.params);
  auto eb = param_entries(nod.params);
  for (std::size_t i = 0; i < ea.size(); ++i) {
    CHECK(*ea[i].tensor == *eb[i].tensor);
  }
}
