#ifndef FCM_CORE_HPP
#define FCM_CORE_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fcm {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  validation,
  non_differentiable,
  parse,
  io,
};

/// Every failure raised by the engine carries one of these kinds so front
/// ends can map it to an exit code or HTTP status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::vector<std::string> details = {})
      : std::runtime_error(what), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorKind kind_;
  std::vector<std::string> details_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::validation: return "validation";
    case ErrorKind::non_differentiable: return "non-differentiable-activation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

using NodeId = std::size_t;

enum class ActivationKind { hard_threshold, logistic };

struct ActivationSpec {
  ActivationKind kind = ActivationKind::hard_threshold;
  double threshold = 0.0;  // hard-threshold only
  double c = 5.0;          // logistic steepness

  static ActivationSpec hard(double theta = 0.0) {
    return {ActivationKind::hard_threshold, theta, 5.0};
  }
  static ActivationSpec logistic(double steepness = 5.0) {
    return {ActivationKind::logistic, 0.0, steepness};
  }

  bool is_smooth() const noexcept { return kind == ActivationKind::logistic; }

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

inline const char* to_string(ActivationKind k) {
  return k == ActivationKind::logistic ? "logistic" : "hard-threshold";
}

/// Node output for total input x. The hard threshold maps the tie x == theta to 0.
inline double activate(const ActivationSpec& spec, double x) noexcept {
  if (spec.kind == ActivationKind::hard_threshold) return x > spec.threshold ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-spec.c * x));
}

/// dC/dx expressed through the node output C: c * C * (1 - C).
inline double activation_derivative(const ActivationSpec& spec, double activation) {
  if (spec.kind != ActivationKind::logistic) {
    throw Error(ErrorKind::non_differentiable,
                "activation derivative requested for a hard-threshold node");
  }
  return spec.c * activation * (1.0 - activation);
}

struct ConceptNode {
  NodeId id = 0;
  std::string label;
  std::string description;
  ActivationSpec activation;

  friend bool operator==(const ConceptNode&, const ConceptNode&) = default;
};

/// Square causal edge matrix; at(i, j) is the edge from node i to node j.
class EdgeMatrix {
 public:
  EdgeMatrix() = default;
  explicit EdgeMatrix(std::size_t n) : n_(n), w_(n * n, 0.0) {}

  /// Builds from row-major rows; rows must be square.
  static EdgeMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    EdgeMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "edge matrix row " + std::to_string(i) + " has " +
                        std::to_string(rows[i].size()) + " entries, expected " +
                        std::to_string(rows.size()));
      }
      for (std::size_t j = 0; j < rows.size(); ++j) m.at(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  double& at(std::size_t i, std::size_t j) { return w_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
  std::vector<double>& data() noexcept { return w_; }
  const std::vector<double>& data() const noexcept { return w_; }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = at(i, j);
    return out;
  }

  friend bool operator==(const EdgeMatrix&, const EdgeMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
};

struct ModelMetadata {
  std::string name;
  std::string source;
  std::string notes;

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct FcmModel {
  std::vector<ConceptNode> nodes;
  EdgeMatrix edges;
  ModelMetadata metadata;

  std::size_t size() const noexcept { return nodes.size(); }

  /// Index of the node with this label, or throws invalid_argument.
  NodeId index_of(const std::string& label) const {
    for (const auto& n : nodes)
      if (n.label == label) return n.id;
    throw Error(ErrorKind::invalid_argument, "unknown node label '" + label + "'");
  }

  bool all_hard_threshold() const noexcept {
    for (const auto& n : nodes)
      if (n.activation.kind != ActivationKind::hard_threshold) return false;
    return true;
  }

  friend bool operator==(const FcmModel&, const FcmModel&) = default;
};

/// Convenience builder: labels in order, uniform activation, zero edges.
inline FcmModel make_model(const std::vector<std::string>& labels,
                           ActivationSpec activation = ActivationSpec::hard(),
                           std::string name = {}) {
  FcmModel m;
  m.metadata.name = std::move(name);
  m.edges = EdgeMatrix(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    m.nodes.push_back(ConceptNode{i, labels[i], {}, activation});
  return m;
}

struct StateVector {
  std::vector<double> values;
  std::size_t t = 0;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  /// Equality on values only; the time index is bookkeeping.
  friend bool operator==(const StateVector& a, const StateVector& b) {
    return a.values == b.values;
  }
};

inline StateVector zero_state(std::size_t n) { return StateVector{std::vector<double>(n, 0.0), 0}; }

/// Nodes forced to a value after every activation.
struct ClampSpec {
  std::map<NodeId, double> entries;

  bool empty() const noexcept { return entries.empty(); }
  ClampSpec& set(NodeId id, double value) {
    entries[id] = value;
    return *this;
  }
  void apply(std::vector<double>& values) const {
    for (const auto& [id, v] : entries) values[id] = v;
  }

  friend bool operator==(const ClampSpec&, const ClampSpec&) = default;
};

inline void check_clamps(const ClampSpec& clamps, std::size_t n) {
  for (const auto& [id, v] : clamps.entries) {
    if (id >= n)
      throw Error(ErrorKind::invalid_argument, "clamp names node id " + std::to_string(id) +
                                                   " outside a " + std::to_string(n) + "-node model");
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorKind::invalid_argument,
                  "clamp value for node " + std::to_string(id) + " outside [0,1]");
  }
}

/// All invariant violations of a model; empty means valid.
inline std::vector<std::string> validate_model(const FcmModel& model) {
  std::vector<std::string> violations;
  const std::size_t n = model.nodes.size();
  if (model.edges.size() != n) {
    violations.push_back("dimension mismatch: " + std::to_string(n) + " nodes but " +
                         std::to_string(model.edges.size()) + "x" +
                         std::to_string(model.edges.size()) + " edge matrix");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = model.nodes[i];
    if (node.id != i)
      violations.push_back("node '" + node.label + "' has id " + std::to_string(node.id) +
                           " but sits at position " + std::to_string(i));
    if (node.label.empty()) violations.push_back("node " + std::to_string(i) + " has an empty label");
    if (!seen.insert(node.label).second)
      violations.push_back("duplicate label '" + node.label + "'");
    const auto& a = node.activation;
    if (a.kind == ActivationKind::logistic && !(a.c > 0.0 && std::isfinite(a.c)))
      violations.push_back("node '" + node.label + "' has non-positive logistic steepness");
    if (a.kind == ActivationKind::hard_threshold && !std::isfinite(a.threshold))
      violations.push_back("node '" + node.label + "' has a non-finite threshold");
  }
  const std::size_t m = model.edges.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double e = model.edges.at(i, j);
      if (!(e >= -1.0 && e <= 1.0))
        violations.push_back("edge out of [-1,1] at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
    }
  }
  return violations;
}

inline void require_valid(const FcmModel& model) {
  auto v = validate_model(model);
  if (!v.empty()) throw Error(ErrorKind::validation, "model failed validation: " + v.front(), v);
}

}  // namespace fcm

#endif  // FCM_CORE_HPP
