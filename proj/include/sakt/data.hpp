// Student interaction sequences, interaction encoding, fixed-length window
// construction, IRT synthetic data generation, and train/test splitting.
#ifndef SAKT_DATA_HPP
#define SAKT_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sakt/rng.hpp"

namespace sakt {

struct Interaction {
  int exercise = 0;  // 0-based, < num_exercises
  int correct = 0;   // 0 or 1
};

struct InteractionSequence {
  std::string student_id;
  std::vector<Interaction> events;
};

struct SyntheticInfo {
  std::vector<int> concept_of;  // exercise -> concept index
  int num_concepts = 0;
  double guess = 0.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  int num_exercises = 0;
  std::vector<InteractionSequence> sequences;
  // Dense index -> original exercise id (identity labels for synthetic data).
  std::vector<std::string> exercise_ids;
  std::optional<SyntheticInfo> synthetic;
};

// y = e + r * E. Ids [0, 2E) are real interactions; 2E is reserved as the
// padding id by window construction.
inline int encode_interaction(int e, int r, int num_exercises) {
  if (e < 0 || e >= num_exercises) {
    throw std::invalid_argument("encode_interaction: exercise " +
                                std::to_string(e) + " outside [0, " +
                                std::to_string(num_exercises) + ")");
  }
  if (r != 0 && r != 1) {
    throw std::invalid_argument("encode_interaction: correctness must be 0 or 1, got " +
                                std::to_string(r));
  }
  return e + r * num_exercises;
}

inline std::pair<int, int> decode_interaction(int id, int num_exercises) {
  if (id < 0 || id >= 2 * num_exercises) {
    throw std::invalid_argument("decode_interaction: id " + std::to_string(id) +
                                " outside [0, 2E)");
  }
  return {id % num_exercises, id / num_exercises};
}

// Fixed-length model input. Valid positions form a contiguous suffix; the
// padding interaction id is 2E and the padding exercise id is E.
struct EncodedWindow {
  std::vector<int> interaction_ids;
  std::vector<int> query_exercise_ids;
  std::vector<int> targets;
  std::vector<std::uint8_t> valid;

  std::size_t length() const { return interaction_ids.size(); }
  std::size_t valid_count() const {
    std::size_t c = 0;
    for (auto v : valid) c += v;
    return c;
  }
};

// Builds the shifted (history x_i, query e_{i+1}, target r_{i+1}) stream and
// packs it into ceil((t-1)/n) windows, left-padding only the first. A
// sequence with fewer than two events yields no windows (callers record the
// skip).
inline std::vector<EncodedWindow> make_windows(const InteractionSequence& seq,
                                               int n, int num_exercises) {
  if (n < 2) throw std::invalid_argument("make_windows: n must be >= 2");
  const std::size_t t = seq.events.size();
  std::vector<EncodedWindow> out;
  if (t < 2) return out;

  const std::size_t stream_len = t - 1;
  const std::size_t num_windows = (stream_len + n - 1) / n;
  // First window holds the remainder (left-padded); the rest are full.
  std::size_t first_len = stream_len - (num_windows - 1) * n;

  const int pad_interaction = 2 * num_exercises;
  const int pad_exercise = num_exercises;

  std::size_t pos = 0;  // index into the shifted stream
  for (std::size_t w = 0; w < num_windows; ++w) {
    const std::size_t len = (w == 0) ? first_len : static_cast<std::size_t>(n);
    EncodedWindow win;
    win.interaction_ids.assign(n, pad_interaction);
    win.query_exercise_ids.assign(n, pad_exercise);
    win.targets.assign(n, 0);
    win.valid.assign(n, 0);
    const std::size_t offset = n - len;
    for (std::size_t i = 0; i < len; ++i, ++pos) {
      const Interaction& hist = seq.events[pos];
      const Interaction& next = seq.events[pos + 1];
      win.interaction_ids[offset + i] =
          encode_interaction(hist.exercise, hist.correct, num_exercises);
      win.query_exercise_ids[offset + i] = next.exercise;
      win.targets[offset + i] = next.correct;
      win.valid[offset + i] = 1;
    }
    out.push_back(std::move(win));
  }
  return out;
}

// Builds windows for a whole dataset, skipping too-short sequences.
inline std::vector<EncodedWindow> build_windows(
    const Dataset& ds, int n, std::vector<std::string>* skipped = nullptr) {
  std::vector<EncodedWindow> out;
  for (const auto& seq : ds.sequences) {
    if (seq.events.size() < 2) {
      if (skipped) skipped->push_back(seq.student_id);
      continue;
    }
    auto wins = make_windows(seq, n, ds.num_exercises);
    out.insert(out.end(), std::make_move_iterator(wins.begin()),
               std::make_move_iterator(wins.end()));
  }
  return out;
}

// p(correct | alpha, beta) = c + (1 - c) / (1 + exp(beta - alpha))
inline double irt_prob(double alpha, double beta, double c) {
  if (c < 0.0 || c >= 1.0) {
    throw std::invalid_argument("irt_prob: guess probability must be in [0,1), got " +
                                std::to_string(c));
  }
  return c + (1.0 - c) / (1.0 + std::exp(beta - alpha));
}

// Spreads of the ability/difficulty normals. Chosen so that the oracle AUC
// of the generated data sits near the level the SAKT evaluation reports on
// its synthetic dataset; unit spreads make the data nearly unlearnable
// (oracle AUC ~0.73 at guess 0.25).
inline constexpr double kAbilityStd = 3.0;
inline constexpr double kDifficultyStd = 2.0;

// Simulates students who all answer exercises 0..E-1 in order. Each exercise
// belongs to one concept; abilities are per (student, concept) and
// difficulties per exercise, drawn from seeded centered normals.
inline Dataset generate_synthetic(int num_students, int num_exercises,
                                  int num_concepts, double guess,
                                  std::uint64_t seed) {
  if (num_concepts > num_exercises) {
    throw std::invalid_argument("generate_synthetic: more concepts than exercises");
  }
  if (num_students < 1 || num_exercises < 1 || num_concepts < 1) {
    throw std::invalid_argument("generate_synthetic: counts must be positive");
  }
  if (guess < 0.0 || guess >= 1.0) {
    throw std::invalid_argument("generate_synthetic: guess must be in [0,1)");
  }

  Dataset ds;
  ds.num_exercises = num_exercises;
  ds.exercise_ids.reserve(num_exercises);
  for (int e = 0; e < num_exercises; ++e) {
    ds.exercise_ids.push_back(std::to_string(e));
  }

  SyntheticInfo info;
  info.num_concepts = num_concepts;
  info.guess = guess;
  info.seed = seed;

  std::mt19937_64 assign_rng(derive_seed(seed, "concepts"));
  std::uniform_int_distribution<int> concept_dist(0, num_concepts - 1);
  info.concept_of.resize(num_exercises);
  for (int e = 0; e < num_exercises; ++e) {
    info.concept_of[e] = concept_dist(assign_rng);
  }
  // Every concept must own at least one exercise.
  std::vector<int> count(num_concepts, 0);
  for (int c : info.concept_of) ++count[c];
  for (int c = 0; c < num_concepts; ++c) {
    if (count[c] == 0) {
      --count[info.concept_of[c]];
      info.concept_of[c] = c;
      ++count[c];
    }
  }

  std::mt19937_64 rng(derive_seed(seed, "irt"));
  std::normal_distribution<double> ability(0.0, kAbilityStd);
  std::normal_distribution<double> difficulty(0.0, kDifficultyStd);
  std::vector<double> beta(num_exercises);
  for (double& b : beta) b = difficulty(rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ds.sequences.reserve(num_students);
  std::vector<double> alpha(num_concepts);
  for (int s = 0; s < num_students; ++s) {
    for (double& a : alpha) a = ability(rng);
    InteractionSequence seq;
    seq.student_id = std::to_string(s);
    seq.events.reserve(num_exercises);
    for (int e = 0; e < num_exercises; ++e) {
      const double p = irt_prob(alpha[info.concept_of[e]], beta[e], guess);
      seq.events.push_back({e, unif(rng) < p ? 1 : 0});
    }
    ds.sequences.push_back(std::move(seq));
  }
  ds.synthetic = std::move(info);
  return ds;
}

// Student-level split; |train| = round(fraction * N).
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& ds,
                                                    double fraction,
                                                    std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_train_test: fraction must be in (0,1)");
  }
  if (ds.sequences.size() < 2) {
    throw std::invalid_argument("split_train_test: need at least 2 sequences");
  }
  std::vector<std::size_t> order(ds.sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(ds.sequences.size())));

  Dataset train = ds, test = ds;
  train.sequences.clear();
  test.sequences.clear();
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).sequences.push_back(ds.sequences[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace sakt

#endif  // SAKT_DATA_HPP
