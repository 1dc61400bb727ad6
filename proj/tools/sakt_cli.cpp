// Command-line front end: generate synthetic data, train, evaluate, export
// attention artifacts, and run the ablation table.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sakt/sakt.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitInvalidConfig = 4;

std::string sidecar_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw sakt::FileError("missing file: " + path);
  }
}

sakt::Dataset load_with_sidecar(const std::string& data_path,
                                std::string sidecar) {
  require_file(data_path);
  if (sidecar.empty()) {
    const std::string guess = sidecar_path_for(data_path);
    if (std::filesystem::exists(guess)) sidecar = guess;
  } else {
    require_file(sidecar);
  }
  return sakt::load_dataset(data_path, sidecar);
}

int run(int argc, char** argv) {
  CLI::App app{"SAKT: self-attentive knowledge tracing"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic IRT dataset");
  int students = 4000, exercises = 50, concepts = 5;
  double guess = 0.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "synthetic.csv";
  gen->add_option("--students", students, "Number of simulated students");
  gen->add_option("--exercises", exercises, "Number of exercises");
  gen->add_option("--concepts", concepts, "Number of hidden concepts");
  gen->add_option("--guess", guess, "IRT guess probability c");
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--out", gen_out, "Output CSV path (sidecar JSON written next to it)");

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_config, tr_data, tr_sidecar, tr_out = "checkpoint.json", tr_history;
  std::optional<std::uint64_t> tr_seed;
  std::optional<int> tr_threads;
  double tr_fraction = 0.8;
  tr->add_option("--config", tr_config, "Training config file")->required();
  tr->add_option("--data", tr_data, "Dataset CSV")->required();
  tr->add_option("--sidecar", tr_sidecar, "Dataset sidecar JSON");
  tr->add_option("--out", tr_out, "Checkpoint output path");
  tr->add_option("--history", tr_history, "History CSV path (default: <out>.history.csv)");
  tr->add_option("--seed", tr_seed, "Override the config seed");
  tr->add_option("--threads", tr_threads, "Parallel gradient workers (default serial)");
  tr->add_option("--train-fraction", tr_fraction, "Train split fraction");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  std::string ev_ckpt, ev_data, ev_sidecar, ev_out;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint path")->required();
  ev->add_option("--data", ev_data, "Dataset CSV")->required();
  ev->add_option("--sidecar", ev_sidecar, "Dataset sidecar JSON");
  ev->add_option("--out", ev_out, "JSON report path");

  // attention
  auto* at = app.add_subcommand("attention", "Export relevance matrix and influence graph");
  std::string at_ckpt, at_data, at_sidecar, at_out = "attention";
  at->add_option("--checkpoint", at_ckpt, "Checkpoint path")->required();
  at->add_option("--data", at_data, "Dataset CSV")->required();
  at->add_option("--sidecar", at_sidecar, "Dataset sidecar JSON");
  at->add_option("--out", at_out, "Output path prefix");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and score the ablation variants");
  std::string ab_config, ab_data, ab_sidecar, ab_out = "ablation.csv";
  std::optional<std::uint64_t> ab_seed;
  ab->add_option("--config", ab_config, "Training config file")->required();
  ab->add_option("--data", ab_data, "Dataset CSV")->required();
  ab->add_option("--sidecar", ab_sidecar, "Dataset sidecar JSON");
  ab->add_option("--out", ab_out, "Ablation table CSV path");
  ab->add_option("--seed", ab_seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  if (gen->parsed()) {
    const sakt::Dataset ds =
        sakt::generate_synthetic(students, exercises, concepts, guess, gen_seed);
    sakt::save_csv(ds, gen_out);
    const std::string sidecar = sidecar_path_for(gen_out);
    sakt::save_sidecar(ds, sidecar);
    std::cout << "wrote " << gen_out << "\n" << "wrote " << sidecar << "\n";
    return 0;
  }

  if (tr->parsed()) {
    require_file(tr_config);
    sakt::TrainConfig cfg = sakt::load_train_config(tr_config);
    if (tr_seed) cfg.seed = *tr_seed;
    if (tr_threads) cfg.threads = *tr_threads;
    const sakt::Dataset ds = load_with_sidecar(tr_data, tr_sidecar);
    const auto [train_set, test_set] =
        sakt::split_train_test(ds, tr_fraction, cfg.seed);
    const sakt::TrainResult result = sakt::train(train_set, test_set, cfg);
    sakt::Checkpoint ckpt{result.params, cfg,
                          sakt::SeedLineage::from_master(cfg.seed)};
    sakt::save_checkpoint(ckpt, tr_out);
    const std::string history =
        tr_history.empty() ? tr_out + ".history.csv" : tr_history;
    sakt::write_history_csv(result.history, history);
    std::cout << "wrote " << tr_out << "\n" << "wrote " << history << "\n";
    return 0;
  }

  if (ev->parsed()) {
    require_file(ev_ckpt);
    const sakt::Checkpoint ckpt = sakt::load_checkpoint(ev_ckpt);
    const sakt::Dataset ds = load_with_sidecar(ev_data, ev_sidecar);
    const auto windows = sakt::build_windows(ds, ckpt.params.config.n);
    const sakt::EvalResult r = sakt::evaluate(ckpt.params, windows);
    std::cout << "auc " << r.auc << "\n"
              << "mean_loss " << r.mean_loss << "\n"
              << "predictions " << r.num_predictions << "\n";
    if (!ev_out.empty()) {
      nlohmann::json j = {{"auc", r.auc},
                          {"mean_loss", r.mean_loss},
                          {"predictions", r.num_predictions}};
      std::ofstream out(ev_out);
      if (!out) throw std::runtime_error("cannot open " + ev_out);
      out << j.dump(2) << '\n';
      std::cout << "wrote " << ev_out << "\n";
    }
    return 0;
  }

  if (at->parsed()) {
    require_file(at_ckpt);
    const sakt::Checkpoint ckpt = sakt::load_checkpoint(at_ckpt);
    const sakt::Dataset ds = load_with_sidecar(at_data, at_sidecar);
    const auto windows = sakt::build_windows(ds, ckpt.params.config.n);
    const sakt::RelevanceMatrix rel = sakt::relevance_matrix(ckpt.params, windows);
    const std::string rel_csv = at_out + ".relevance.csv";
    const std::string rel_meta = at_out + ".relevance.json";
    const std::string dot = at_out + ".influence.dot";
    sakt::write_relevance_csv(rel, rel_csv);
    sakt::write_relevance_meta(rel, rel_meta);
    std::vector<int> anchors;
    const std::vector<int>* concept_of = nullptr;
    if (ds.synthetic) {
      anchors = sakt::concept_anchors(ds.synthetic->concept_of,
                                      ds.synthetic->num_concepts);
      concept_of = &ds.synthetic->concept_of;
    }
    const sakt::InfluenceGraph graph = sakt::influence_graph(rel, anchors);
    for (const auto& w : graph.warnings) std::cerr << "warning: " << w << "\n";
    sakt::write_influence_dot(graph, concept_of, dot);
    std::cout << "wrote " << rel_csv << "\n"
              << "wrote " << rel_meta << "\n"
              << "wrote " << dot << "\n";
    if (concept_of) {
      std::cout << "component_purity " << sakt::component_purity(graph, *concept_of)
                << "\n";
    }
    return 0;
  }

  if (ab->parsed()) {
    require_file(ab_config);
    sakt::TrainConfig cfg = sakt::load_train_config(ab_config);
    if (ab_seed) cfg.seed = *ab_seed;
    const sakt::Dataset ds = load_with_sidecar(ab_data, ab_sidecar);
    const sakt::AblationTable table = sakt::run_ablations(cfg, ds);
    sakt::write_ablation_csv(table, ab_out);
    std::cout << "wrote " << ab_out << "\n";
    return 0;
  }

  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sakt::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingFile;
  } catch (const sakt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
