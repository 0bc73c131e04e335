#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "indagg/core.hpp"
#include "indagg/evaluation.hpp"
#include "indagg/indicators.hpp"
#include "indagg/naive_bayes.hpp"
#include "indagg/random_forest.hpp"
#include "indagg/selection.hpp"
#include "indagg/signalgen.hpp"

namespace indagg::io {

using nlohmann::json;

/// %.17g: enough digits to round-trip any double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- signals (JSON lines) ---------------------------------------------------

inline void write_signal(std::ostream& os, const SignalRecord& rec) {
  os << "{\"id\":" << json(rec.id).dump() << ",\"label\":" << to_int(rec.label) << ",\"change_point\":";
  if (rec.change_point) os << *rec.change_point;
  else os << "null";
  os << ",\"values\":[";
  for (std::size_t i = 0; i < rec.values.size(); ++i) {
    if (i) os << ',';
    os << format_double(rec.values[i]);
  }
  os << "]}\n";
}

inline void write_signals(std::ostream& os, std::span<const SignalRecord> recs) {
  for (const auto& r : recs) write_signal(os, r);
}

inline SignalRecord parse_signal(const std::string& line) {
  const json j = json::parse(line);
  SignalRecord rec;
  rec.id = j.at("id").get<std::string>();
  rec.label = shift_class_from_int(j.at("label").get<int>());
  const auto& cp = j.at("change_point");
  if (!cp.is_null()) rec.change_point = cp.get<int>();
  rec.values = j.at("values").get<std::vector<double>>();
  if ((rec.label == ShiftClass::None) != !rec.change_point.has_value())
    throw std::invalid_argument("change_point must be null exactly when label is 0");
  return rec;
}

/// Reads JSON-lines signals; blank lines are skipped. Errors name the line.
inline std::vector<SignalRecord> read_signals(std::istream& is) {
  std::vector<SignalRecord> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_signal(line));
    } catch (const std::exception& e) {
      throw InputError("signals line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// --- indicator matrix (CSV) ---------------------------------------------------

inline void write_matrix_csv(std::ostream& os, const IndicatorMatrix& m) {
  os << "id,label";
  for (const auto& s : m.specs) os << ',' << s.id;
  os << '\n';
  std::string line;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    line = m.row_ids[r];
    line += ',';
    line += static_cast<char>('0' + to_int(m.labels[r]));
    for (auto b : m.row(r)) {
      line += ',';
      line += b ? '1' : '0';
    }
    line += '\n';
    os << line;
  }
}

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}
}  // namespace detail

inline IndicatorMatrix read_matrix_csv(std::istream& is) {
  IndicatorMatrix m;
  std::string line;
  if (!std::getline(is, line)) throw InputError("matrix: empty file");
  auto header = detail::split_csv(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw InputError("matrix line 1: header must start with id,label and name at least one indicator");
  for (std::size_t c = 2; c < header.size(); ++c) {
    try {
      m.specs.push_back(parse_indicator_id(header[c]));
    } catch (const std::exception& e) {
      throw InputError("matrix line 1: " + std::string(e.what()));
    }
  }
  const std::size_t p = m.specs.size();
  for (std::size_t lineno = 2; std::getline(is, line); ++lineno) {
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != p + 2)
      throw InputError("matrix line " + std::to_string(lineno) + ": expected " + std::to_string(p + 2) +
                       " fields, got " + std::to_string(fields.size()));
    m.row_ids.push_back(fields[0]);
    if (fields[1].size() != 1 || fields[1][0] < '0' || fields[1][0] > '3')
      throw InputError("matrix line " + std::to_string(lineno) + ": bad label");
    m.labels.push_back(static_cast<ShiftClass>(fields[1][0] - '0'));
    for (std::size_t c = 2; c < fields.size(); ++c) {
      if (fields[c] != "0" && fields[c] != "1")
        throw InputError("matrix line " + std::to_string(lineno) + ": bit must be 0 or 1");
      m.bits.push_back(fields[c] == "1" ? 1 : 0);
    }
  }
  return m;
}

// --- ranked list (CSV) -------------------------------------------------------

inline void write_ranked_csv(std::ostream& os, const RankedList& r, const IndicatorMatrix& m) {
  os << "rank,column_index,indicator_id,score\n";
  for (std::size_t i = 0; i < r.order.size(); ++i)
    os << i + 1 << ',' << r.order[i] << ',' << m.specs.at(r.order[i]).id << ',' << format_double(r.scores[i])
       << '\n';
}

inline RankedList read_ranked_csv(std::istream& is) {
  RankedList r;
  std::string line;
  if (!std::getline(is, line) || line.rfind("rank,column_index,indicator_id,score", 0) != 0)
    throw InputError("ranked list line 1: bad header");
  for (std::size_t lineno = 2; std::getline(is, line); ++lineno) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    try {
      if (f.size() != 4) throw std::invalid_argument("expected 4 fields");
      r.order.push_back(std::stoull(f[1]));
      r.scores.push_back(std::stod(f[3]));
    } catch (const std::exception& e) {
      throw InputError("ranked list line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return r;
}

// --- models (JSON) -------------------------------------------------------------

inline json nb_to_json(const NaiveBayesModel& m) {
  return {{"type", "naive_bayes"},
          {"epsilon", m.smoothing},
          {"priors", m.priors},
          {"cond_p", m.cond_p},
          {"feature_ids", m.feature_ids}};
}

inline NaiveBayesModel nb_from_json(const json& j) {
  NaiveBayesModel m;
  m.smoothing = j.at("epsilon").get<double>();
  m.priors = j.at("priors").get<std::vector<double>>();
  m.cond_p = j.at("cond_p").get<std::vector<std::vector<double>>>();
  m.feature_ids = j.value("feature_ids", std::vector<std::string>{});
  if (m.cond_p.size() != m.priors.size()) throw InputError("naive bayes model: class count mismatch");
  m.prepare();
  return m;
}

namespace detail {

inline json node_to_json(const DecisionTree& t, int idx) {
  const auto& node = t.nodes[static_cast<std::size_t>(idx)];
  if (node.is_leaf()) return {{"counts", node.counts}};
  return {{"feature", node.feature}, {"left", node_to_json(t, node.left)}, {"right", node_to_json(t, node.right)}};
}

inline int node_from_json(DecisionTree& t, const json& j) {
  const int idx = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("counts")) {
    t.nodes[static_cast<std::size_t>(idx)].counts = j.at("counts").get<std::vector<int>>();
    return idx;
  }
  const int feature = j.at("feature").get<int>();
  const int left = node_from_json(t, j.at("left"));
  const int right = node_from_json(t, j.at("right"));
  auto& node = t.nodes[static_cast<std::size_t>(idx)];
  node.feature = feature;
  node.left = left;
  node.right = right;
  return idx;
}

}  // namespace detail

inline json rf_to_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(detail::node_to_json(t, 0));
  json j = {{"type", "random_forest"},
            {"config",
             {{"n_trees", m.config.n_trees},
              {"mtry", m.config.mtry},
              {"min_leaf", m.config.min_leaf},
              {"seed", m.config.seed}}},
            {"n_classes", m.n_classes},
            {"importances", m.importances},
            {"feature_ids", m.feature_ids},
            {"trees", std::move(trees)}};
  j["oob_accuracy"] = m.oob_accuracy ? json(*m.oob_accuracy) : json(nullptr);
  return j;
}

inline ForestModel rf_from_json(const json& j) {
  ForestModel m;
  const auto& c = j.at("config");
  m.config.n_trees = c.at("n_trees").get<int>();
  m.config.mtry = c.at("mtry").get<int>();
  m.config.min_leaf = c.at("min_leaf").get<int>();
  m.config.seed = c.at("seed").get<std::uint64_t>();
  m.n_classes = j.value("n_classes", kNumClasses);
  m.importances = j.at("importances").get<std::vector<double>>();
  m.feature_ids = j.value("feature_ids", std::vector<std::string>{});
  if (!j.at("oob_accuracy").is_null()) m.oob_accuracy = j.at("oob_accuracy").get<double>();
  for (const auto& tj : j.at("trees")) {
    DecisionTree t;
    detail::node_from_json(t, tj);
    for (const auto& node : t.nodes)
      if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= m.importances.size())
        throw InputError("random forest model: node references an invalid feature");
    m.trees.push_back(std::move(t));
  }
  return m;
}

// --- reports ------------------------------------------------------------------

inline json report_to_json(const EvalReport& r) {
  json cm = json::array();
  for (const auto& row : r.confusion.counts) cm.push_back(row);
  json j = {{"n_indicators", r.n_indicators},
            {"train_accuracy", r.train_accuracy},
            {"subset_accuracies", r.subset_accuracies},
            {"mean", r.mean},
            {"std", r.std},
            {"confusion", cm},
            {"per_class_error", r.per_class_error},
            {"train_per_class_error", r.train_per_class_error}};
  j["oob_accuracy"] = r.oob_accuracy ? json(*r.oob_accuracy) : json(nullptr);
  return j;
}

inline std::string fixed(double v, int digits = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// One row per k; NB per-class errors are given for training and full test set.
inline void write_curves_csv(std::ostream& os, std::span<const CurvePoint> curve) {
  os << "k,nb_train,nb_test_mean,nb_test_std,rf_train,rf_oob,rf_test_mean,rf_test_std";
  for (int c = 0; c < kNumClasses; ++c) os << ",nb_train_err_" << c;
  for (int c = 0; c < kNumClasses; ++c) os << ",nb_test_err_" << c;
  os << '\n';
  for (const auto& pt : curve) {
    os << pt.k << ',' << fixed(pt.nb.train_accuracy) << ',' << fixed(pt.nb.mean) << ',' << fixed(pt.nb.std) << ','
       << fixed(pt.rf.train_accuracy) << ',' << (pt.rf.oob_accuracy ? fixed(*pt.rf.oob_accuracy) : "") << ','
       << fixed(pt.rf.mean) << ',' << fixed(pt.rf.std);
    for (double e : pt.nb.train_per_class_error) os << ',' << fixed(e);
    for (double e : pt.nb.per_class_error) os << ',' << fixed(e);
    os << '\n';
  }
}

// --- files --------------------------------------------------------------------

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path);
  return is;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path);
  return os;
}

inline json read_json_file(const std::string& path) {
  auto is = open_in(path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

}  // namespace indagg::io
