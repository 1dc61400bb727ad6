// Ablation orchestration: retrains the architecture variants from one seed
// and data split and tabulates their test AUCs.
#ifndef SAKT_ABLATION_HPP
#define SAKT_ABLATION_HPP

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sakt/training.hpp"

namespace sakt {

struct AblationRow {
  std::string name;
  double test_auc = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
};

inline std::vector<std::pair<std::string, TrainConfig>> ablation_variants(
    const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> v;
  v.emplace_back("Default", base);
  TrainConfig c = base;
  c.no_pe = true;
  v.emplace_back("No PE", c);
  c = base;
  c.no_residual = true;
  v.emplace_back("No RC", c);
  c = base;
  c.no_dropout = true;
  v.emplace_back("No Dropout", c);
  c = base;
  c.single_head = true;
  v.emplace_back("Single head", c);
  c = base;
  c.blocks = 0;
  v.emplace_back("0 block", c);
  c = base;
  c.blocks = 2;
  v.emplace_back("2 blocks", c);
  return v;
}

inline AblationTable run_ablations(const TrainConfig& base, const Dataset& dataset,
                                   double train_fraction = 0.8,
                                   std::ostream& log = std::cerr) {
  base.validate();
  const auto [train_set, test_set] =
      split_train_test(dataset, train_fraction, base.seed);
  AblationTable table;
  for (const auto& [name, cfg] : ablation_variants(base)) {
    log << "ablation: training variant '" << name << "'\n";
    const TrainResult result = train(train_set, test_set, cfg, log);
    const auto test_windows = build_windows(test_set, cfg.n);
    const EvalResult ev = evaluate(result.params, test_windows);
    table.rows.push_back({name, ev.auc});
    log << "ablation: " << name << " test_auc=" << ev.auc << "\n";
  }
  return table;
}

inline void write_ablation_csv(const AblationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_ablation_csv: cannot open " + path);
  out << "architecture,test_auc\n";
  for (const auto& row : table.rows) {
    out << row.name << ',' << row.test_auc << '\n';
  }
}

}  // namespace sakt

#endif  // SAKT_ABLATION_HPP
