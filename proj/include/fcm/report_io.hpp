#ifndef FCM_REPORT_IO_HPP
#define FCM_REPORT_IO_HPP

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fcm/fusion.hpp"
#include "fcm/inference.hpp"
#include "fcm/influence.hpp"
#include "fcm/learning.hpp"
#include "fcm/model_io.hpp"
#include "fcm/sweep.hpp"

namespace fcm {

inline json state_to_json(const StateVector& s) { return json(s.values); }

inline json states_to_json(const std::vector<StateVector>& states) {
  json out = json::array();
  for (const auto& s : states) out.push_back(state_to_json(s));
  return out;
}

inline json equilibrium_to_json(const EquilibriumResult& r) {
  return json{{"kind", to_string(r.kind)},
              {"transient", states_to_json(r.transient)},
              {"cycle", states_to_json(r.cycle)},
              {"iterations_used", r.iterations_used},
              {"steps_to_attractor", r.steps_to_attractor()}};
}

inline json matrix_to_json(const EdgeMatrix& e) { return json(e.rows()); }

inline json edge_stats_to_json(const EdgeStats& s) {
  json out{{"m", s.m}, {"mean", matrix_to_json(s.mean)}};
  out["var"] = s.var_defined() ? matrix_to_json(s.var) : json(nullptr);
  return out;
}

inline json influence_to_json(const FcmModel& model, const InfluenceReport& r) {
  json paths = json::array();
  for (const auto& p : r.paths) {
    json labels = json::array();
    for (NodeId id : p.node_ids) labels.push_back(model.nodes[id].label);
    paths.push_back(json{{"node_ids", p.node_ids},
                         {"labels", labels},
                         {"edge_product", p.edge_product},
                         {"weight_psi", p.weight_psi},
                         {"influence", p.influence},
                         {"negative_edges", p.negative_edges}});
  }
  return json{{"from", model.nodes[r.from].label},
              {"to", model.nodes[r.to].label},
              {"paths", paths},
              {"total", r.total},
              {"truncated", r.truncated},
              {"cycle_warning", r.cycle_warning}};
}

inline json learning_to_json(const LearningResult& r, const std::vector<std::string>& labels) {
  json tracked = json::array();
  for (const auto& [i, j] : r.tracked) tracked.push_back(json{{"from", labels[i]}, {"to", labels[j]}});
  json trace = json::array();
  for (const auto& p : r.trace) trace.push_back(json{{"pass", p.pass}, {"t", p.t}, {"values", p.values}});
  return json{{"labels", labels}, {"edges", matrix_to_json(r.edges)}, {"tracked", tracked}, {"trace", trace}};
}

inline json sweep_config_to_json(const SweepConfig& c, const std::vector<std::string>& labels) {
  json inputs = json::array();
  for (NodeId id : c.input_nodes) inputs.push_back(labels[id]);
  return json{{"input_nodes", inputs},
              {"clamp_mode", to_string(c.clamp_mode)},
              {"outcome_node", labels[c.outcome_node]},
              {"outcome_rule", to_string(c.outcome_rule)},
              {"max_iters", c.max_iters}};
}

/// Summary report: counts, fractions and per-class profiles (no per-scenario rows).
inline json sweep_report_to_json(const SweepReport& r) {
  json pos = json::object(), neg = json::object();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    pos[r.labels[i]] = r.positive_profile[i];
    neg[r.labels[i]] = r.negative_profile[i];
  }
  return json{{"config", sweep_config_to_json(r.config, r.labels)},
              {"scenarios", r.scenarios},
              {"outcome_positive_count", r.outcome_positive_count},
              {"outcome_negative_count", r.outcome_negative_count},
              {"not_converged_count", r.not_converged_count},
              {"outcome_fraction", r.outcome_fraction},
              {"negative_fraction", r.negative_fraction},
              {"positive_profile", pos},
              {"negative_profile", neg}};
}

inline json quantized_comparison_to_json(const QuantizedComparison& q) {
  json agreement = json::object();
  const Outcome all[] = {Outcome::positive, Outcome::negative, Outcome::not_converged};
  for (Outcome a : all)
    for (Outcome b : all)
      agreement[std::string(to_string(a)) + "/" + to_string(b)] =
          q.agreement[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  return json{{"original", sweep_report_to_json(q.original)},
              {"quantized", sweep_report_to_json(q.quantized)},
              {"agreement", agreement},
              {"agreement_rate", q.agreement_rate}};
}

namespace detail {

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string number(double v) { return json(v).dump(); }

}  // namespace detail

/// One row per scenario: assignment id, one 0/1 column per input, kind, outcome.
inline std::string sweep_records_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "assignment";
  for (NodeId id : r.config.input_nodes) os << "," << detail::csv_cell(r.labels[id]);
  os << ",kind,outcome\n";
  for (const auto& rec : r.records) {
    os << rec.assignment;
    for (std::size_t b = 0; b < r.config.input_nodes.size(); ++b) os << "," << ((rec.assignment >> b) & 1u);
    os << "," << to_string(rec.kind) << "," << to_string(rec.outcome) << "\n";
  }
  return os.str();
}

/// Bar-chart table: label, mean activation for the positive and negative classes.
inline std::string profile_table_csv(const SweepReport& r) {
  std::ostringstream os;
  os << "label," << to_string(Outcome::positive) << "," << to_string(Outcome::negative) << "\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i)
    os << detail::csv_cell(r.labels[i]) << "," << detail::number(r.positive_profile[i]) << ","
       << detail::number(r.negative_profile[i]) << "\n";
  return os.str();
}

inline std::string matrix_csv(const EdgeMatrix& e, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "from";
  for (const auto& l : labels) os << "," << detail::csv_cell(l);
  os << "\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    os << detail::csv_cell(labels[i]);
    for (std::size_t j = 0; j < e.size(); ++j) os << "," << detail::number(e.at(i, j));
    os << "\n";
  }
  return os.str();
}

/// Convergence trace: pass, t, then one column per tracked edge ("from->to").
inline std::string learning_trace_csv(const LearningResult& r, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "pass,t";
  for (const auto& [i, j] : r.tracked) os << "," << detail::csv_cell(labels[i] + "->" + labels[j]);
  os << "\n";
  for (const auto& p : r.trace) {
    os << p.pass << "," << p.t;
    for (double v : p.values) os << "," << detail::number(v);
    os << "\n";
  }
  return os.str();
}

}  // namespace fcm

#endif  // FCM_REPORT_IO_HPP
