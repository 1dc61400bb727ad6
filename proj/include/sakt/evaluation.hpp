// AUC, pooled test-set evaluation, attention-relevance aggregation, the
// exercise influence graph, and concept-clustering purity.
#ifndef SAKT_EVALUATION_HPP
#define SAKT_EVALUATION_HPP

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sakt/data.hpp"
#include "sakt/matrix.hpp"
#include "sakt/model.hpp"

namespace sakt {

// Mann-Whitney AUC: probability a random positive outscores a random
// negative, ties counted one half. Computed from tie-averaged ranks.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc: scores/labels length mismatch");
  }
  std::size_t num_pos = 0, num_neg = 0;
  for (int l : labels) (l ? num_pos : num_neg) += 1;
  if (num_pos == 0 || num_neg == 0) {
    throw std::domain_error("auc: undefined for single-class labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(num_pos) * static_cast<double>(num_pos + 1);
  return u / (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

struct EvalResult {
  double auc = 0.0;
  double mean_loss = 0.0;
  std::size_t num_predictions = 0;
};

// Pools predictions over all valid positions of all windows, dropout off.
template <class Real>
EvalResult evaluate(const ModelParams<Real>& params,
                    const std::vector<EncodedWindow>& windows) {
  std::vector<double> scores;
  std::vector<int> labels;
  double total_loss = 0.0;
  for (const auto& window : windows) {
    ForwardTrace<Real> trace;
    const auto p = forward_eval(window, params, trace);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!window.valid[i]) continue;
      scores.push_back(static_cast<double>(p[i]));
      labels.push_back(window.targets[i]);
      const double pc = std::clamp(static_cast<double>(p[i]), kProbClamp,
                                   1.0 - kProbClamp);
      total_loss -= window.targets[i] ? std::log(pc) : std::log(1.0 - pc);
    }
  }
  if (scores.empty()) throw std::domain_error("evaluate: no valid predictions");
  EvalResult r;
  r.auc = auc(scores, labels);
  r.mean_loss = total_loss / static_cast<double>(scores.size());
  r.num_predictions = scores.size();
  return r;
}

// E x E row-normalized aggregate of attention mass from query exercise to
// key exercise, averaged over the heads of the final block.
struct RelevanceMatrix {
  Matrix<double> weights;   // row-normalized on rows with support
  Matrix<double> support;   // accumulation counts per cell
  int num_exercises = 0;
  int source_block = 0;     // which block's weights were aggregated
};

template <class Real>
RelevanceMatrix relevance_matrix(const ModelParams<Real>& params,
                                 const std::vector<EncodedWindow>& windows) {
  const ModelConfig& cfg = params.config;
  if (cfg.blocks == 0) {
    throw std::domain_error("relevance_matrix: model has no attention block");
  }
  const int e = cfg.num_exercises;
  RelevanceMatrix rel;
  rel.num_exercises = e;
  rel.source_block = cfg.blocks - 1;
  rel.weights = Matrix<double>(e, e);
  rel.support = Matrix<double>(e, e);

  const std::size_t heads = static_cast<std::size_t>(cfg.heads);
  for (const auto& window : windows) {
    ForwardTrace<Real> trace;
    forward_eval(window, params, trace);
    const auto& bt = trace.blocks.back();
    const std::size_t n = window.length();
    for (std::size_t i = 0; i < n; ++i) {
      if (!window.valid[i]) continue;
      const int query = window.query_exercise_ids[i];
      for (std::size_t j = 0; j <= i; ++j) {
        if (!window.valid[j]) continue;
        double w = 0.0;
        for (std::size_t h = 0; h < heads; ++h) {
          w += static_cast<double>(bt.att[h](i, j));
        }
        w /= static_cast<double>(heads);
        const int key = window.interaction_ids[j] % e;
        rel.weights(query, key) += w;
        rel.support(query, key) += 1.0;
      }
    }
  }
  for (int q = 0; q < e; ++q) {
    double row_sum = 0.0;
    for (int k = 0; k < e; ++k) row_sum += rel.weights(q, k);
    if (row_sum > 0.0) {
      for (int k = 0; k < e; ++k) rel.weights(q, k) /= row_sum;
    }
  }
  return rel;
}

struct InfluenceGraph {
  struct Edge {
    int from = 0;
    int to = 0;
    double weight = 0.0;
  };
  int num_nodes = 0;
  std::vector<int> anchors;
  std::vector<Edge> edges;
  std::vector<std::string> warnings;
};

// First exercise (in the canonical 0..E-1 sequence order) of each concept.
inline std::vector<int> concept_anchors(const std::vector<int>& concept_of,
                                        int num_concepts) {
  std::vector<int> anchors(num_concepts, -1);
  for (int e = 0; e < static_cast<int>(concept_of.size()); ++e) {
    if (anchors[concept_of[e]] < 0) anchors[concept_of[e]] = e;
  }
  return anchors;
}

// Each non-anchor exercise links to its top-2 keys by relevance (self-edges
// excluded, ties broken toward the lower exercise id). Anchors contribute no
// outgoing edges.
inline InfluenceGraph influence_graph(const RelevanceMatrix& rel,
                                      const std::vector<int>& anchors) {
  InfluenceGraph g;
  g.num_nodes = rel.num_exercises;
  g.anchors = anchors;
  std::vector<bool> is_anchor(rel.num_exercises, false);
  for (int a : anchors) {
    if (a >= 0 && a < rel.num_exercises) is_anchor[a] = true;
  }
  for (int q = 0; q < rel.num_exercises; ++q) {
    if (is_anchor[q]) continue;
    std::vector<int> candidates;
    for (int k = 0; k < rel.num_exercises; ++k) {
      if (k != q && rel.support(q, k) > 0.0) candidates.push_back(k);
    }
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      if (rel.weights(q, a) != rel.weights(q, b)) {
        return rel.weights(q, a) > rel.weights(q, b);
      }
      return a < b;
    });
    if (candidates.size() < 2) {
      g.warnings.push_back("exercise " + std::to_string(q) + " has only " +
                           std::to_string(candidates.size()) + " supported keys");
    }
    const std::size_t take = std::min<std::size_t>(2, candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
      g.edges.push_back({q, candidates[i], rel.weights(q, candidates[i])});
    }
  }
  return g;
}

// Purity of the graph's weakly-connected components against ground-truth
// concept labels.
inline double component_purity(const InfluenceGraph& g,
                               const std::vector<int>& concept_of) {
  if (static_cast<int>(concept_of.size()) != g.num_nodes) {
    throw std::invalid_argument("component_purity: label count != node count");
  }
  std::vector<int> parent(g.num_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) parent[find(e.from)] = find(e.to);

  std::map<int, std::map<int, int>> comp_counts;  // root -> concept -> count
  for (int v = 0; v < g.num_nodes; ++v) {
    comp_counts[find(v)][concept_of[v]] += 1;
  }
  int majority_total = 0;
  for (const auto& [root, counts] : comp_counts) {
    int best = 0;
    for (const auto& [label, count] : counts) best = std::max(best, count);
    majority_total += best;
  }
  return static_cast<double>(majority_total) / static_cast<double>(g.num_nodes);
}

inline void write_relevance_csv(const RelevanceMatrix& rel,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_relevance_csv: cannot open " + path);
  for (int q = 0; q < rel.num_exercises; ++q) {
    for (int k = 0; k < rel.num_exercises; ++k) {
      if (k) out << ',';
      out << rel.weights(q, k);
    }
    out << '\n';
  }
}

inline void write_relevance_meta(const RelevanceMatrix& rel,
                                 const std::string& path) {
  nlohmann::json j;
  j["num_exercises"] = rel.num_exercises;
  j["head_aggregation"] = "mean";
  j["source_block"] = rel.source_block;
  nlohmann::json support = nlohmann::json::array();
  for (int q = 0; q < rel.num_exercises; ++q) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < rel.num_exercises; ++k) row.push_back(rel.support(q, k));
    support.push_back(std::move(row));
  }
  j["support"] = std::move(support);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_relevance_meta: cannot open " + path);
  out << j.dump(2) << '\n';
}

inline void write_influence_dot(const InfluenceGraph& g,
                                const std::vector<int>* concept_of,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_influence_dot: cannot open " + path);
  out << "digraph influence {\n";
  std::vector<bool> is_anchor(g.num_nodes, false);
  for (int a : g.anchors) {
    if (a >= 0 && a < g.num_nodes) is_anchor[a] = true;
  }
  for (int v = 0; v < g.num_nodes; ++v) {
    out << "  n" << v << " [label=\"" << v << "\"";
    if (concept_of) out << ", concept=" << (*concept_of)[v];
    if (is_anchor[v]) out << ", shape=doublecircle";
    out << "];\n";
  }
  for (const auto& e : g.edges) {
    out << "  n" << e.from << " -> n" << e.to << " [weight=" << e.weight
        << ", label=\"" << e.weight << "\"];\n";
  }
  out << "}\n";
}

}  // namespace sakt

#endif  // SAKT_EVALUATION_HPP
