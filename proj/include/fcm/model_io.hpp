#ifndef FCM_MODEL_IO_HPP
#define FCM_MODEL_IO_HPP

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fcm/core.hpp"
#include "fcm/learning.hpp"

namespace fcm {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// A model plus optional named clamp presets (label -> forced value) and
/// named initial states.
struct ModelDocument {
  int format_version = kFormatVersion;
  FcmModel model;
  std::map<std::string, std::map<std::string, double>> clamp_presets;
  std::map<std::string, std::vector<double>> initial_states;

  friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

// ---------------------------------------------------------------------------
// Canonical text form

namespace detail {

inline bool is_scalar_array(const json& j) {
  return std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
}

inline void canonical_write(std::ostringstream& os, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << inner << json(it.key()).dump() << ": ";
      canonical_write(os, it.value(), depth + 1);
    }
    os << "\n" << pad << "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      os << "[]";
    } else if (is_scalar_array(j)) {
      os << "[";
      for (std::size_t i = 0; i < j.size(); ++i) os << (i ? ", " : "") << j[i].dump();
      os << "]";
    } else {
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        os << inner;
        canonical_write(os, j[i], depth + 1);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      os << pad << "]";
    }
  } else {
    os << j.dump();
  }
}

}  // namespace detail

/// Sorted keys, two-space indent, scalar arrays on one line, trailing newline.
inline std::string canonical_dump(const json& j) {
  std::ostringstream os;
  detail::canonical_write(os, j, 0);
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Model <-> JSON

inline json activation_to_json(const ActivationSpec& a) {
  json j;
  j["kind"] = to_string(a.kind);
  if (a.kind == ActivationKind::logistic)
    j["c"] = a.c;
  else
    j["threshold"] = a.threshold;
  return j;
}

inline json model_to_json(const FcmModel& m) {
  json j;
  j["name"] = m.metadata.name;
  j["source"] = m.metadata.source;
  j["notes"] = m.metadata.notes;
  j["nodes"] = json::array();
  for (const auto& n : m.nodes) {
    j["nodes"].push_back(json{{"label", n.label},
                              {"description", n.description},
                              {"activation", activation_to_json(n.activation)}});
  }
  j["edges"] = json::array();
  for (const auto& row : m.edges.rows()) {
    json r = json::array();
    for (double v : row) r.push_back(v);
    j["edges"].push_back(std::move(r));
  }
  return j;
}

inline json document_to_json(const ModelDocument& doc) {
  json j;
  j["format_version"] = doc.format_version;
  j["model"] = model_to_json(doc.model);
  if (!doc.clamp_presets.empty()) j["clamp_presets"] = doc.clamp_presets;
  if (!doc.initial_states.empty()) j["initial_states"] = doc.initial_states;
  return j;
}

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::parse, where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(ErrorKind::parse, "unknown field at " + where + "/" + it.key());
  }
}

inline const json& require_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::parse, "missing field " + where + "/" + key);
  return *it;
}

inline double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::parse, where + ": expected a number");
  return j.get<double>();
}

inline std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw Error(ErrorKind::parse, where + ": expected a string");
  return j.get<std::string>();
}

inline std::string optional_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  return it == obj.end() ? std::string{} : as_string(*it, where + "/" + key);
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline ActivationSpec activation_from_json(const json& j, const std::string& where) {
  detail::reject_unknown(j, {"kind", "threshold", "c"}, where);
  const std::string kind = detail::as_string(detail::require_field(j, "kind", where), where + "/kind");
  if (kind == "hard-threshold") {
    if (j.contains("c")) throw Error(ErrorKind::parse, "unknown field at " + where + "/c for hard-threshold");
    double theta = j.contains("threshold") ? detail::as_number(j["threshold"], where + "/threshold") : 0.0;
    return ActivationSpec::hard(theta);
  }
  if (kind == "logistic") {
    if (j.contains("threshold"))
      throw Error(ErrorKind::parse, "unknown field at " + where + "/threshold for logistic");
    double c = j.contains("c") ? detail::as_number(j["c"], where + "/c") : 5.0;
    return ActivationSpec::logistic(c);
  }
  throw Error(ErrorKind::validation, where + "/kind: unsupported activation '" + kind + "'");
}

/// Strict decoding; does not run validate_model.
inline FcmModel model_from_json(const json& j, const std::string& where = "/model") {
  detail::reject_unknown(j, {"name", "source", "notes", "nodes", "edges"}, where);
  FcmModel m;
  m.metadata.name = detail::optional_string(j, "name", where);
  m.metadata.source = detail::optional_string(j, "source", where);
  m.metadata.notes = detail::optional_string(j, "notes", where);
  const json& nodes = detail::require_field(j, "nodes", where);
  if (!nodes.is_array()) throw Error(ErrorKind::parse, where + "/nodes: expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string at = where + "/nodes/" + std::to_string(i);
    detail::reject_unknown(nodes[i], {"label", "description", "activation"}, at);
    ConceptNode node;
    node.id = i;
    node.label = detail::as_string(detail::require_field(nodes[i], "label", at), at + "/label");
    node.description = detail::optional_string(nodes[i], "description", at);
    if (nodes[i].contains("activation")) node.activation = activation_from_json(nodes[i]["activation"], at + "/activation");
    m.nodes.push_back(std::move(node));
  }
  const json& edges = detail::require_field(j, "edges", where);
  if (!edges.is_array()) throw Error(ErrorKind::parse, where + "/edges: expected an array of rows");
  const std::size_t n = edges.size();
  m.edges = EdgeMatrix(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string at = where + "/edges/" + std::to_string(r);
    if (!edges[r].is_array()) throw Error(ErrorKind::parse, at + ": expected a row array");
    if (edges[r].size() != n)
      throw Error(ErrorKind::validation, "dimension mismatch: " + at + " has " + std::to_string(edges[r].size()) +
                                             " entries, expected " + std::to_string(n));
    for (std::size_t c = 0; c < n; ++c) m.edges.at(r, c) = detail::as_number(edges[r][c], at + "/" + std::to_string(c));
  }
  return m;
}

inline ModelDocument document_from_json(const json& j) {
  detail::reject_unknown(j, {"format_version", "model", "clamp_presets", "initial_states"}, "");
  ModelDocument doc;
  const json& v = detail::require_field(j, "format_version", "");
  if (!v.is_number_integer()) throw Error(ErrorKind::parse, "/format_version: expected an integer");
  doc.format_version = v.get<int>();
  if (doc.format_version != kFormatVersion)
    throw Error(ErrorKind::parse, "unsupported format_version " + std::to_string(doc.format_version));
  doc.model = model_from_json(detail::require_field(j, "model", ""));
  if (j.contains("clamp_presets")) {
    const json& presets = j["clamp_presets"];
    if (!presets.is_object()) throw Error(ErrorKind::parse, "/clamp_presets: expected an object");
    for (auto it = presets.begin(); it != presets.end(); ++it) {
      const std::string at = "/clamp_presets/" + it.key();
      if (!it->is_object()) throw Error(ErrorKind::parse, at + ": expected an object of label -> value");
      auto& dst = doc.clamp_presets[it.key()];
      for (auto kv = it->begin(); kv != it->end(); ++kv) dst[kv.key()] = detail::as_number(kv.value(), at + "/" + kv.key());
    }
  }
  if (j.contains("initial_states")) {
    const json& states = j["initial_states"];
    if (!states.is_object()) throw Error(ErrorKind::parse, "/initial_states: expected an object");
    for (auto it = states.begin(); it != states.end(); ++it) {
      const std::string at = "/initial_states/" + it.key();
      if (!it->is_array()) throw Error(ErrorKind::parse, at + ": expected an array");
      auto& dst = doc.initial_states[it.key()];
      for (std::size_t k = 0; k < it->size(); ++k) dst.push_back(detail::as_number((*it)[k], at + "/" + std::to_string(k)));
    }
  }
  return doc;
}

/// Checks the model plus presets (labels exist, values in [0,1], state sizes).
inline std::vector<std::string> validate_document(const ModelDocument& doc) {
  auto v = validate_model(doc.model);
  for (const auto& [name, preset] : doc.clamp_presets) {
    for (const auto& [label, value] : preset) {
      bool found = false;
      for (const auto& node : doc.model.nodes) found = found || node.label == label;
      if (!found) v.push_back("clamp preset '" + name + "' names unknown node '" + label + "'");
      if (!(value >= 0.0 && value <= 1.0)) v.push_back("clamp preset '" + name + "' value outside [0,1]");
    }
  }
  for (const auto& [name, state] : doc.initial_states) {
    if (state.size() != doc.model.size()) v.push_back("initial state '" + name + "' has the wrong dimension");
    for (double x : state)
      if (!(x >= 0.0 && x <= 1.0)) {
        v.push_back("initial state '" + name + "' value outside [0,1]");
        break;
      }
  }
  return v;
}

/// Parses and validates document text; syntax errors carry line and column.
inline ModelDocument parse_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = detail::line_column(text, e.byte);
    throw Error(ErrorKind::parse, "syntax error at line " + std::to_string(line) + ", column " +
                                      std::to_string(col) + ": " + e.what());
  }
  ModelDocument doc = document_from_json(j);
  auto violations = validate_document(doc);
  if (!violations.empty()) throw Error(ErrorKind::validation, "document failed validation: " + violations.front(), violations);
  return doc;
}

inline std::string document_to_string(const ModelDocument& doc) { return canonical_dump(document_to_json(doc)); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write to '" + path + "' failed");
}

inline ModelDocument load_document(const std::string& path) {
  try {
    return parse_document(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), path + ": " + e.what(), e.details());
  }
}

inline void save_document(const ModelDocument& doc, const std::string& path) { write_file(path, document_to_string(doc)); }

inline FcmModel load_model(const std::string& path) { return load_document(path).model; }

inline void save_model(const FcmModel& model, const std::string& path) {
  require_valid(model);
  save_document(ModelDocument{kFormatVersion, model, {}, {}}, path);
}

/// Resolves a preset's labels to node ids.
inline ClampSpec clamps_from_labels(const FcmModel& model, const std::map<std::string, double>& by_label) {
  ClampSpec c;
  for (const auto& [label, v] : by_label) c.set(model.index_of(label), v);
  check_clamps(c, model.size());
  return c;
}

// ---------------------------------------------------------------------------
// Time-series CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  for (auto& c : cells) {
    auto b = c.find_first_not_of(" \t");
    auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

inline bool parse_integer(const std::string& s, long long& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return errno == 0 && end == s.c_str() + s.size();
}

}  // namespace detail

/// Header row of labels (first column is the integer time index), one row
/// per sample. Every node column is min-max normalized to [0,1]; a constant
/// column becomes all zeros and is flagged in zero_range.
inline TimeSeries parse_timeseries_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  TimeSeries ts;
  std::size_t row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    if (!header) {
      if (cells.size() < 2) throw Error(ErrorKind::parse, "row 1: header needs a time column and at least one node");
      ts.labels.assign(cells.begin() + 1, cells.end());
      header = true;
      continue;
    }
    if (cells.size() != ts.labels.size() + 1)
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": expected " + std::to_string(ts.labels.size() + 1) +
                                        " cells, found " + std::to_string(cells.size()));
    TimeSample s;
    if (!detail::parse_integer(cells[0], s.t))
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + ", column 1: time index '" + cells[0] +
                                        "' is not an integer");
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v)) {
        throw Error(ErrorKind::parse, "row " + std::to_string(row) + ", column " + std::to_string(c + 1) + " (" +
                                          ts.labels[c - 1] + "): " +
                                          (cells[c].empty() ? std::string("missing value") : "non-numeric '" + cells[c] + "'"));
      }
      s.values.push_back(v);
    }
    if (!ts.samples.empty() && s.t <= ts.samples.back().t)
      throw Error(ErrorKind::parse, "row " + std::to_string(row) + ": time index not strictly increasing");
    ts.samples.push_back(std::move(s));
  }
  if (!header) throw Error(ErrorKind::parse, "empty CSV");
  const std::size_t w = ts.labels.size();
  ts.scale_min.assign(w, 0.0);
  ts.scale_max.assign(w, 0.0);
  ts.zero_range.assign(w, false);
  for (std::size_t c = 0; c < w && !ts.samples.empty(); ++c) {
    double lo = ts.samples[0].values[c], hi = lo;
    for (const auto& s : ts.samples) {
      lo = std::min(lo, s.values[c]);
      hi = std::max(hi, s.values[c]);
    }
    ts.scale_min[c] = lo;
    ts.scale_max[c] = hi;
    ts.zero_range[c] = !(hi > lo);
    for (auto& s : ts.samples) s.values[c] = ts.zero_range[c] ? 0.0 : (s.values[c] - lo) / (hi - lo);
  }
  return ts;
}

inline TimeSeries load_timeseries_csv(const std::string& path) {
  try {
    return parse_timeseries_csv(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), path + ": " + e.what(), e.details());
  }
}

}  // namespace fcm

#endif  // FCM_MODEL_IO_HPP
