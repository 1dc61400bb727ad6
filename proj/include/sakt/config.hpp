// Training hyperparameters and the flat key/value config file format.
#ifndef SAKT_CONFIG_HPP
#define SAKT_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sakt/model.hpp"
#include "sakt/rng.hpp"

namespace sakt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int d = 50;
  int n = 50;
  int heads = 5;
  int blocks = 1;
  double dropout = 0.2;
  double learning_rate = 0.001;
  int batch_size = 128;
  int epochs = 50;
  std::uint64_t seed = 0;
  bool no_pe = false;
  bool no_residual = false;
  bool no_dropout = false;
  bool single_head = false;
  int eval_every = 1;
  int threads = 1;

  void validate() const {
    if (d < 1 || n < 2 || heads < 1) throw ConfigError("config: d, n, heads out of range");
    if (blocks < 0 || blocks > 2) throw ConfigError("config: blocks must be 0, 1 or 2");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("config: dropout must be in [0,1)");
    if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
    if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
  }

  ModelConfig model_config(int num_exercises) const {
    ModelConfig m;
    m.num_exercises = num_exercises;
    m.d = d;
    m.n = n;
    m.heads = single_head ? 1 : heads;
    m.blocks = blocks;
    m.no_pe = no_pe;
    m.no_residual = no_residual;
    return m;
  }

  double effective_dropout() const { return no_dropout ? 0.0 : dropout; }

  bool operator==(const TrainConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"d", c.d},
       {"n", c.n},
       {"heads", c.heads},
       {"blocks", c.blocks},
       {"dropout", c.dropout},
       {"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"seed", c.seed},
       {"no_pe", c.no_pe},
       {"no_residual", c.no_residual},
       {"no_dropout", c.no_dropout},
       {"single_head", c.single_head},
       {"eval_every", c.eval_every},
       {"threads", c.threads}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  j.at("d").get_to(c.d);
  j.at("n").get_to(c.n);
  j.at("heads").get_to(c.heads);
  j.at("blocks").get_to(c.blocks);
  j.at("dropout").get_to(c.dropout);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("batch_size").get_to(c.batch_size);
  j.at("epochs").get_to(c.epochs);
  j.at("seed").get_to(c.seed);
  j.at("no_pe").get_to(c.no_pe);
  j.at("no_residual").get_to(c.no_residual);
  j.at("no_dropout").get_to(c.no_dropout);
  j.at("single_head").get_to(c.single_head);
  j.at("eval_every").get_to(c.eval_every);
  if (j.contains("threads")) j.at("threads").get_to(c.threads);
}

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

// One `key = value` per line; '#' starts a comment; unknown keys rejected.
inline TrainConfig parse_train_config(std::istream& in) {
  TrainConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "d") c.d = std::stoi(value);
      else if (key == "n") c.n = std::stoi(value);
      else if (key == "heads") c.heads = std::stoi(value);
      else if (key == "blocks") c.blocks = std::stoi(value);
      else if (key == "dropout") c.dropout = std::stod(value);
      else if (key == "learning_rate") c.learning_rate = std::stod(value);
      else if (key == "batch_size") c.batch_size = std::stoi(value);
      else if (key == "epochs") c.epochs = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "no_pe") c.no_pe = detail::parse_bool(value, key);
      else if (key == "no_residual") c.no_residual = detail::parse_bool(value, key);
      else if (key == "no_dropout") c.no_dropout = detail::parse_bool(value, key);
      else if (key == "single_head") c.single_head = detail::parse_bool(value, key);
      else if (key == "eval_every") c.eval_every = std::stoi(value);
      else if (key == "threads") c.threads = std::stoi(value);
      else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        ": bad value '" + value + "' for " + key);
    } catch (const std::out_of_range&) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        ": value out of range for " + key);
    }
  }
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  return parse_train_config(in);
}

inline std::string serialize_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "d = " << c.d << '\n'
      << "n = " << c.n << '\n'
      << "heads = " << c.heads << '\n'
      << "blocks = " << c.blocks << '\n'
      << "dropout = " << c.dropout << '\n'
      << "learning_rate = " << c.learning_rate << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "epochs = " << c.epochs << '\n'
      << "seed = " << c.seed << '\n'
      << "no_pe = " << (c.no_pe ? "true" : "false") << '\n'
      << "no_residual = " << (c.no_residual ? "true" : "false") << '\n'
      << "no_dropout = " << (c.no_dropout ? "true" : "false") << '\n'
      << "single_head = " << (c.single_head ? "true" : "false") << '\n'
      << "eval_every = " << c.eval_every << '\n'
      << "threads = " << c.threads << '\n';
  return out.str();
}

// Named sub-seeds fanned out from the master seed so data generation,
// initialization, dropout and shuffling are independently reproducible.
struct SeedLineage {
  std::uint64_t master = 0;
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t dropout = 0;
  std::uint64_t shuffle = 0;

  static SeedLineage from_master(std::uint64_t master) {
    SeedLineage s;
    s.master = master;
    s.data = derive_seed(master, "data");
    s.init = derive_seed(master, "init");
    s.dropout = derive_seed(master, "dropout");
    s.shuffle = derive_seed(master, "shuffle");
    return s;
  }
};

inline void to_json(nlohmann::json& j, const SeedLineage& s) {
  j = {{"master", s.master},
       {"data", s.data},
       {"init", s.init},
       {"dropout", s.dropout},
       {"shuffle", s.shuffle}};
}

inline void from_json(const nlohmann::json& j, SeedLineage& s) {
  j.at("master").get_to(s.master);
  j.at("data").get_to(s.data);
  j.at("init").get_to(s.init);
  j.at("dropout").get_to(s.dropout);
  j.at("shuffle").get_to(s.shuffle);
}

}  // namespace sakt

#endif  // SAKT_CONFIG_HPP
