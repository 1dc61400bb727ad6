// Mini-batch training loop: windows are shuffled each epoch, gradients are
// pooled per batch over valid positions, and Adam updates every tensor. The
// best-test-AUC parameters are kept. Per-window dropout streams are seeded
// from (epoch, window index), so batch-parallel gradient computation matches
// the serial path window for window.
#ifndef SAKT_TRAINING_HPP
#define SAKT_TRAINING_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sakt/adam.hpp"
#include "sakt/config.hpp"
#include "sakt/data.hpp"
#include "sakt/evaluation.hpp"
#include "sakt/model.hpp"

namespace sakt {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_auc = 0.0;
  double seconds = 0.0;
  bool evaluated = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  ModelParams<double> params;       // best test AUC seen (final if never evaluated)
  TrainHistory history;
  double best_auc = 0.0;
};

namespace detail {

struct WindowGrad {
  ModelParams<double> grads;   // gradients of the window's sum-loss
  double loss_sum = 0.0;
  std::size_t valid_count = 0;
};

inline WindowGrad window_gradient(const EncodedWindow& window,
                                  const ModelParams<double>& params,
                                  double dropout_rate,
                                  std::uint64_t dropout_seed) {
  WindowGrad wg{ModelParams<double>::zeros_like(params.config)};
  auto dropout = dropout_rate > 0.0
                     ? Dropout<double>::training(dropout_rate, dropout_seed)
                     : Dropout<double>::eval();
  ForwardTrace<double> trace;
  const auto p = forward(window, params, dropout, trace);
  wg.loss_sum = loss_sum(p, window.targets, window.valid);
  wg.valid_count = window.valid_count();
  wg.grads = backward_scaled(window, params, trace, 1.0);
  return wg;
}

}  // namespace detail

inline TrainResult train(const Dataset& train_set, const Dataset& test_set,
                         const TrainConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  if (train_set.sequences.empty()) {
    throw std::invalid_argument("train: empty training set");
  }
  const SeedLineage seeds = SeedLineage::from_master(cfg.seed);

  std::vector<std::string> skipped;
  const auto windows = build_windows(train_set, cfg.n, &skipped);
  const auto test_windows = build_windows(test_set, cfg.n, &skipped);
  for (const auto& id : skipped) {
    log << "warning: skipping student " << id << " (fewer than 2 interactions)\n";
  }
  if (windows.empty()) throw std::invalid_argument("train: no usable training windows");

  const ModelConfig model_cfg = cfg.model_config(train_set.num_exercises);
  TrainResult result;
  result.params = ModelParams<double>::init(model_cfg, seeds.init);
  ModelParams<double> current = result.params;
  result.best_auc = -1.0;

  // One Adam state per tensor, aligned with param_entries order.
  auto entries = param_entries(current);
  std::vector<AdamState<double>> adam;
  adam.reserve(entries.size());
  for (const auto& e : entries) {
    adam.emplace_back(e.tensor->rows(), e.tensor->cols(), cfg.learning_rate);
  }

  const double dropout_rate = cfg.effective_dropout();
  std::mt19937_64 shuffle_rng(seeds.shuffle);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss_sum = 0.0;
    std::size_t epoch_valid = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(),
                                       start + static_cast<std::size_t>(cfg.batch_size));
      ModelParams<double> batch_grads = ModelParams<double>::zeros_like(model_cfg);
      double batch_loss_sum = 0.0;
      std::size_t batch_valid = 0;

      auto accumulate = [&](const detail::WindowGrad& wg) {
        auto bg = param_entries(batch_grads);
        auto wgrad = param_entries(const_cast<ModelParams<double>&>(wg.grads));
        for (std::size_t t = 0; t < bg.size(); ++t) {
          add_inplace(*bg[t].tensor, *wgrad[t].tensor);
        }
        batch_loss_sum += wg.loss_sum;
        batch_valid += wg.valid_count;
      };

      if (cfg.threads <= 1 || end - start == 1) {
        for (std::size_t w = start; w < end; ++w) {
          const std::size_t wi = order[w];
          accumulate(detail::window_gradient(
              windows[wi], current, dropout_rate,
              derive_seed(seeds.dropout, "window", epoch, wi)));
        }
      } else {
        const std::size_t count = end - start;
        const std::size_t num_threads = std::min<std::size_t>(cfg.threads, count);
        std::vector<std::vector<detail::WindowGrad>> partial(num_threads);
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < num_threads; ++t) {
          pool.emplace_back([&, t] {
            for (std::size_t w = start + t; w < end; w += num_threads) {
              const std::size_t wi = order[w];
              partial[t].push_back(detail::window_gradient(
                  windows[wi], current, dropout_rate,
                  derive_seed(seeds.dropout, "window", epoch, wi)));
            }
          });
        }
        for (auto& th : pool) th.join();
        // Merge in window order so the reduction order is fixed.
        std::vector<std::size_t> next(num_threads, 0);
        for (std::size_t w = 0; w < count; ++w) {
          const std::size_t t = w % num_threads;
          accumulate(partial[t][next[t]++]);
        }
      }

      if (!std::isfinite(batch_loss_sum)) {
        double norm = 0.0;
        for (const auto& e : param_entries(current)) {
          norm += frobenius_norm(*e.tensor);
        }
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(start / cfg.batch_size) +
            " (parameter norm sum " + std::to_string(norm) + ")");
      }

      // Pooled mean over valid positions in the batch.
      const double inv_valid = 1.0 / static_cast<double>(batch_valid);
      auto cur = param_entries(current);
      auto bg = param_entries(batch_grads);
      for (std::size_t t = 0; t < cur.size(); ++t) {
        scale_inplace(*bg[t].tensor, inv_valid);
        adam_step(*cur[t].tensor, *bg[t].tensor, adam[t], cur[t].name);
      }
      epoch_loss_sum += batch_loss_sum;
      epoch_valid += batch_valid;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = epoch_loss_sum / static_cast<double>(epoch_valid);
    if (!test_windows.empty() && (epoch + 1) % cfg.eval_every == 0) {
      const EvalResult ev = evaluate(current, test_windows);
      rec.test_loss = ev.mean_loss;
      rec.test_auc = ev.auc;
      rec.evaluated = true;
      if (ev.auc > result.best_auc) {
        result.best_auc = ev.auc;
        result.params = current;
      }
    }
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - epoch_start).count();
    result.history.epochs.push_back(rec);
    log << "epoch " << rec.epoch << "/" << cfg.epochs
        << " train_loss=" << rec.train_loss;
    if (rec.evaluated) {
      log << " test_loss=" << rec.test_loss << " test_auc=" << rec.test_auc;
    }
    log << " (" << rec.seconds << "s)\n";
  }

  if (result.best_auc < 0.0) {
    result.params = current;  // never evaluated; return the final parameters
    result.best_auc = 0.0;
  }
  return result;
}

inline void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
  out << "epoch,train_loss,test_loss,test_auc,seconds\n";
  for (const auto& r : history.epochs) {
    out << r.epoch << ',' << r.train_loss << ',';
    if (r.evaluated) {
      out << r.test_loss << ',' << r.test_auc;
    } else {
      out << ',';
    }
    out << ',' << r.seconds << '\n';
  }
}

}  // namespace sakt

#endif  // SAKT_TRAINING_HPP
