// Self-describing JSON checkpoint: model/train config, seed lineage, and
// every parameter tensor with its shape. Doubles are emitted in shortest
// round-trip form, so load(save(x)) is bit-exact.
#ifndef SAKT_CHECKPOINT_HPP
#define SAKT_CHECKPOINT_HPP

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sakt/config.hpp"
#include "sakt/model.hpp"

namespace sakt {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "sakt-checkpoint";

struct Checkpoint {
  ModelParams<double> params;
  TrainConfig train_config;
  SeedLineage seeds;
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  const ModelConfig& m = ckpt.params.config;
  j["model"] = {{"num_exercises", m.num_exercises}, {"d", m.d},
                {"n", m.n},                         {"heads", m.heads},
                {"blocks", m.blocks},               {"no_pe", m.no_pe},
                {"no_residual", m.no_residual}};
  j["train"] = ckpt.train_config;
  j["seeds"] = ckpt.seeds;
  nlohmann::json tensors = nlohmann::json::object();
  auto entries = param_entries(const_cast<ModelParams<double>&>(ckpt.params));
  for (const auto& e : entries) {
    tensors[e.name] = {{"rows", e.tensor->rows()},
                       {"cols", e.tensor->cols()},
                       {"data", e.tensor->data()}};
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw CheckpointError("save_checkpoint: cannot open " + path);
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("load_checkpoint: corrupt file " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw CheckpointError("load_checkpoint: not a checkpoint file: " + path);
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("load_checkpoint: version " + std::to_string(version) +
                            " unsupported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    ModelConfig m;
    const auto& jm = j.at("model");
    jm.at("num_exercises").get_to(m.num_exercises);
    jm.at("d").get_to(m.d);
    jm.at("n").get_to(m.n);
    jm.at("heads").get_to(m.heads);
    jm.at("blocks").get_to(m.blocks);
    jm.at("no_pe").get_to(m.no_pe);
    jm.at("no_residual").get_to(m.no_residual);

    Checkpoint ckpt;
    ckpt.params = ModelParams<double>::zeros_like(m);
    j.at("train").get_to(ckpt.train_config);
    j.at("seeds").get_to(ckpt.seeds);

    const auto& tensors = j.at("tensors");
    for (auto& e : param_entries(ckpt.params)) {
      if (!tensors.contains(e.name)) {
        throw CheckpointError("load_checkpoint: missing tensor '" + e.name + "'");
      }
      const auto& t = tensors.at(e.name);
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      if (rows != e.tensor->rows() || cols != e.tensor->cols()) {
        throw CheckpointError("load_checkpoint: tensor '" + e.name +
                              "' shape (" + std::to_string(rows) + "x" +
                              std::to_string(cols) + ") disagrees with config " +
                              e.tensor->shape_str());
      }
      auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != e.tensor->size()) {
        throw CheckpointError("load_checkpoint: tensor '" + e.name + "' data length mismatch");
      }
      e.tensor->data() = std::move(data);
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("load_checkpoint: corrupt file " + path + ": " + e.what());
  }
}

}  // namespace sakt

#endif  // SAKT_CHECKPOINT_HPP
