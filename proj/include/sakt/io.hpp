// CSV ingestion in the ASSISTments style plus the JSON sidecar that carries
// the exercise id map and, for synthetic data, the generation parameters.
#ifndef SAKT_IO_HPP
#define SAKT_IO_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sakt/data.hpp"

namespace sakt {

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvSchema {
  std::string student_col = "user_id";
  std::string exercise_col = "skill_id";
  std::string correct_col = "correct";
  // Empty means file order; otherwise rows are stably sorted per student by
  // this numeric column.
  std::string order_col;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

// Loads one InteractionSequence per student in encounter order. Exercise ids
// are densely re-indexed to [0, E) in first-encounter order; the id map is
// recorded in Dataset::exercise_ids for persistence alongside the data.
inline Dataset load_csv(const std::string& path,
                        const CsvSchema& schema = CsvSchema{}) {
  std::ifstream in(path);
  if (!in) throw FileError("load_csv: cannot open " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw FileError("load_csv: empty file " + path);
  }
  const auto header = detail::split_csv_line(detail::strip_cr(header_line));
  auto col_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw FileError("load_csv: missing column '" + name + "' in " + path);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t student_ix = col_index(schema.student_col);
  const std::size_t exercise_ix = col_index(schema.exercise_col);
  const std::size_t correct_ix = col_index(schema.correct_col);
  std::optional<std::size_t> order_ix;
  if (!schema.order_col.empty()) order_ix = col_index(schema.order_col);

  struct Row {
    int exercise;
    int correct;
    double order_key;
    std::size_t file_pos;
  };
  std::map<std::string, std::vector<Row>> per_student;
  std::vector<std::string> student_order;
  std::map<std::string, int> exercise_index;
  std::vector<std::string> exercise_ids;

  std::string line;
  std::size_t line_no = 1;
  std::size_t file_pos = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::size_t needed = std::max(
        {student_ix, exercise_ix, correct_ix, order_ix.value_or(0)});
    if (fields.size() <= needed) {
      throw RowError("load_csv: line " + std::to_string(line_no) +
                     ": expected at least " + std::to_string(needed + 1) +
                     " fields, got " + std::to_string(fields.size()));
    }
    const std::string& correct_str = fields[correct_ix];
    if (correct_str != "0" && correct_str != "1") {
      throw RowError("load_csv: line " + std::to_string(line_no) +
                     ": correctness must be 0 or 1, got '" + correct_str + "'");
    }
    const std::string& ex_id = fields[exercise_ix];
    auto [it, inserted] =
        exercise_index.try_emplace(ex_id, static_cast<int>(exercise_ids.size()));
    if (inserted) exercise_ids.push_back(ex_id);

    double order_key = 0.0;
    if (order_ix) {
      try {
        order_key = std::stod(fields[*order_ix]);
      } catch (const std::exception&) {
        throw RowError("load_csv: line " + std::to_string(line_no) +
                       ": unparsable ordering value '" + fields[*order_ix] + "'");
      }
    }
    const std::string& student = fields[student_ix];
    if (per_student.find(student) == per_student.end()) {
      student_order.push_back(student);
    }
    per_student[student].push_back(
        {it->second, correct_str == "1" ? 1 : 0, order_key, file_pos++});
  }
  if (student_order.empty()) {
    throw FileError("load_csv: no data rows in " + path);
  }

  Dataset ds;
  ds.num_exercises = static_cast<int>(exercise_ids.size());
  ds.exercise_ids = std::move(exercise_ids);
  for (const auto& student : student_order) {
    auto& rows = per_student[student];
    if (order_ix) {
      std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.order_key < b.order_key;
      });
    }
    InteractionSequence seq;
    seq.student_id = student;
    seq.events.reserve(rows.size());
    for (const auto& r : rows) seq.events.push_back({r.exercise, r.correct});
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path,
                     const CsvSchema& schema = CsvSchema{}) {
  std::ofstream out(path);
  if (!out) throw FileError("save_csv: cannot open " + path + " for writing");
  out << schema.student_col << ',' << schema.exercise_col << ','
      << schema.correct_col << '\n';
  for (const auto& seq : ds.sequences) {
    for (const auto& ev : seq.events) {
      out << seq.student_id << ',' << ds.exercise_ids[ev.exercise] << ','
          << ev.correct << '\n';
    }
  }
  if (!out) throw FileError("save_csv: write failed for " + path);
}

inline void save_sidecar(const Dataset& ds, const std::string& path) {
  nlohmann::json j;
  j["num_exercises"] = ds.num_exercises;
  j["exercise_ids"] = ds.exercise_ids;
  if (ds.synthetic) {
    j["synthetic"] = {{"concept_of", ds.synthetic->concept_of},
                      {"num_concepts", ds.synthetic->num_concepts},
                      {"guess", ds.synthetic->guess},
                      {"seed", ds.synthetic->seed}};
  }
  std::ofstream out(path);
  if (!out) throw FileError("save_sidecar: cannot open " + path);
  out << j.dump(2) << '\n';
}

// Applies a sidecar to a freshly loaded dataset: fixes E and the id map (and
// remaps events accordingly), and restores synthetic ground truth.
inline void apply_sidecar(Dataset& ds, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("apply_sidecar: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FileError("apply_sidecar: malformed JSON in " + path + ": " + e.what());
  }
  const int num_exercises = j.at("num_exercises").get<int>();
  const auto ids = j.at("exercise_ids").get<std::vector<std::string>>();
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);
  for (auto& seq : ds.sequences) {
    for (auto& ev : seq.events) {
      auto it = index.find(ds.exercise_ids[ev.exercise]);
      if (it == index.end()) {
        throw FileError("apply_sidecar: exercise id '" +
                        ds.exercise_ids[ev.exercise] + "' not in sidecar map");
      }
      ev.exercise = it->second;
    }
  }
  ds.num_exercises = num_exercises;
  ds.exercise_ids = ids;
  if (j.contains("synthetic")) {
    SyntheticInfo info;
    info.concept_of = j["synthetic"].at("concept_of").get<std::vector<int>>();
    info.num_concepts = j["synthetic"].at("num_concepts").get<int>();
    info.guess = j["synthetic"].at("guess").get<double>();
    info.seed = j["synthetic"].at("seed").get<std::uint64_t>();
    ds.synthetic = std::move(info);
  }
}

inline Dataset load_dataset(const std::string& csv_path,
                            const std::string& sidecar_path = "",
                            const CsvSchema& schema = CsvSchema{}) {
  Dataset ds = load_csv(csv_path, schema);
  if (!sidecar_path.empty()) apply_sidecar(ds, sidecar_path);
  return ds;
}

}  // namespace sakt

#endif  // SAKT_IO_HPP
