#ifndef FCM_BUNDLED_HPP
#define FCM_BUNDLED_HPP

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "fcm/core.hpp"
#include "fcm/model_io.hpp"
#include "fcm/sweep.hpp"

namespace fcm {

namespace detail {

struct LabelledEdge {
  const char* from;
  const char* to;
  double value;
};

inline void set_edges(FcmModel& m, const std::vector<LabelledEdge>& edges) {
  for (const auto& e : edges) m.edges.at(m.index_of(e.from), m.index_of(e.to)) = e.value;
}

inline FcmModel described_model(const std::vector<std::pair<std::string, std::string>>& nodes,
                                ActivationSpec activation) {
  std::vector<std::string> labels;
  for (const auto& n : nodes) labels.push_back(n.first);
  FcmModel m = make_model(labels, activation);
  for (std::size_t i = 0; i < nodes.size(); ++i) m.nodes[i].description = nodes[i].second;
  return m;
}

}  // namespace detail

/// Five binary nodes, trivalent edges; the pod's predator-prey cycle.
inline FcmModel dolphin_model() {
  FcmModel m = detail::described_model({{"herd", "Pod clusters together"},
                                        {"tired", "Pod tires from flight"},
                                        {"rest", "Pod rests"},
                                        {"srv-threat", "Shark or other survival threat present"},
                                        {"flee", "Pod runs away"}},
                                       ActivationSpec::hard(0.0));
  m.edges = EdgeMatrix::from_rows({{0, 1, 0, -1, 0},
                                   {0, 0, 1, 0, -1},
                                   {0, -1, 0, 1, -1},
                                   {1, 0, -1, 0, 1},
                                   {-1, 1, 0, -1, 0}});
  m.metadata = {"dolphin", "Dickerson and Kosko predator-prey fragment, 5x5 trivalent edge matrix",
                "Binary nodes with zero threshold."};
  return m;
}

inline const std::vector<std::pair<std::string, std::string>>& thucydides_nodes() {
  static const std::vector<std::pair<std::string, std::string>> nodes = {
      {"FEAR", "Fear"},
      {"usd", "US Military/Defense Posture"},
      {"chnd", "China Military/Defense Posture"},
      {"geod", "Geographical Distance"},
      {"ENT", "Sense of Entitlement/Honor"},
      {"uspub", "US Public Resentment"},
      {"chnpub", "Chinese Public Resentment"},
      {"dipl", "Diplomacy Channels & International Rules"},
      {"NUKE", "Nuclear Power/MAD"},
      {"ShrdCult", "Shared Culture"},
      {"INT", "National Interests Clash"},
      {"usecon", "US Economic Dominance"},
      {"chnecon", "China Economic Dominance"},
      {"econdep", "Economic Interdependence"},
      {"ally", "Alliance Network Structural Friction"},
      {"shi", "'Shi' or Contextual/Historical Military Momentum"},
      {"WAR*", "War, Military Conflict between USA and China"},
  };
  return nodes;
}

/// US-China Thucydides-trap map: 17 binary nodes, fuzzy edges.
inline FcmModel thucydides_model() {
  FcmModel m = detail::described_model(thucydides_nodes(), ActivationSpec::hard(0.0));
  detail::set_edges(m, {
                           {"FEAR", "WAR*", 0.281},     {"INT", "WAR*", 0.411},
                           {"ENT", "WAR*", 0.111},      {"ally", "WAR*", 0.881},
                           {"shi", "WAR*", 0.331},      {"usecon", "WAR*", 0.471},
                           {"usd", "WAR*", 0.061},      {"chnd", "WAR*", 0.071},
                           {"uspub", "WAR*", 0.041},    {"chnpub", "WAR*", 0.031},
                           {"NUKE", "WAR*", -0.52},     {"ShrdCult", "WAR*", -0.43},
                           {"dipl", "WAR*", -0.31},     {"econdep", "WAR*", -0.29},
                           {"geod", "WAR*", -0.12},     {"WAR*", "WAR*", 0.5},
                           {"usd", "FEAR", 0.6},        {"chnd", "FEAR", 0.5},
                           {"geod", "FEAR", -0.4},      {"chnecon", "INT", 0.7},
                           {"usecon", "INT", 0.5},      {"dipl", "INT", -0.4},
                           {"uspub", "ENT", 0.6},       {"chnpub", "ENT", 0.5},
                           {"dipl", "ENT", -0.4},       {"FEAR", "chnd", 0.6},
                           {"ENT", "chnpub", 0.5},      {"chnd", "shi", 0.5},
                           {"econdep", "ShrdCult", 0.4}, {"ShrdCult", "econdep", 0.4},
                           {"uspub", "ShrdCult", -0.5}, {"chnpub", "ShrdCult", -0.5},
                           {"econdep", "usecon", -0.4}, {"econdep", "chnecon", -0.4},
                       });
  m.metadata = {"thucydides-reference",
                "Allison's Thucydides trap for US-China relations (2017)",
                "Sign-consistent reconstruction: every edge with a documented textual justification carries "
                "its stated sign; magnitudes were chosen locally because the original companion matrix was "
                "not available. Nodes are binary with zero threshold."};
  return m;
}

struct SignedEdge {
  std::string from;
  std::string to;
  int sign = 0;
};

/// Edge signs with textual justifications for the Thucydides-trap map.
inline const std::vector<SignedEdge>& thucydides_sign_table() {
  static const std::vector<SignedEdge> table = {
      {"FEAR", "WAR*", 1},     {"INT", "WAR*", 1},         {"ENT", "WAR*", 1},
      {"ShrdCult", "WAR*", -1}, {"ally", "WAR*", 1},       {"NUKE", "WAR*", -1},
      {"shi", "WAR*", 1},      {"econdep", "usecon", -1},  {"econdep", "chnecon", -1},
      {"geod", "FEAR", -1},    {"geod", "WAR*", -1},       {"dipl", "ENT", -1},
      {"dipl", "INT", -1},     {"WAR*", "WAR*", 1},        {"chnecon", "INT", 1},
      {"usecon", "INT", 1},    {"chnpub", "ENT", 1},       {"uspub", "ENT", 1},
      {"chnd", "FEAR", 1},     {"usd", "FEAR", 1},         {"ShrdCult", "econdep", 1},
      {"econdep", "ShrdCult", 1},
  };
  return table;
}

/// Mismatches between a model's edge signs and a sign table; empty means consistent.
inline std::vector<std::string> check_signs(const FcmModel& model, const std::vector<SignedEdge>& table) {
  std::vector<std::string> out;
  for (const auto& row : table) {
    NodeId i = 0, j = 0;
    try {
      i = model.index_of(row.from);
      j = model.index_of(row.to);
    } catch (const Error& e) {
      out.push_back(e.what());
      continue;
    }
    const double e = model.edges.at(i, j);
    const int sign = e > 0.0 ? 1 : (e < 0.0 ? -1 : 0);
    if (sign != row.sign)
      out.push_back(row.from + "->" + row.to + " has sign " + std::to_string(sign) + ", expected " +
                    std::to_string(row.sign));
  }
  return out;
}

/// Sweep every non-WAR* node on/off and count war-type attractors.
inline SweepConfig thucydides_sweep_config(const FcmModel& model) {
  SweepConfig c = SweepConfig::all_inputs(model, model.index_of("WAR*"));
  c.clamp_mode = ClampMode::on_off;
  c.outcome_rule = OutcomeRule::any_cycle_state;
  return c;
}

/// Strong US defense, rising China economy, US public resentment, economic
/// interdependence, mutual nuclear deterrence and diplomatic channels.
inline std::map<std::string, double> thucydides_trap_preset() {
  return {{"usd", 1.0}, {"chnecon", 1.0}, {"uspub", 1.0}, {"econdep", 1.0}, {"NUKE", 1.0}, {"dipl", 1.0}};
}

/// Public support for insurgency and terrorism factor tree with cross-links,
/// edges reduced to their signs.
inline FcmModel psot_model() {
  FcmModel m = detail::described_model(
      {
          {"lead", "Leadership Strategic or otherwise"},
          {"pkg", "Ideological Package & Framing"},
          {"rsrc", "Resource Mobilization"},
          {"opp", "Opportunism & Adaptation"},
          {"pres", "Presence, Tactics, & Deeds"},
          {"EFF", "Effectiveness of Organization"},
          {"reli", "Ideological Religious Concepts"},
          {"socs", "Social Services"},
          {"glry", "Glory, Excitement"},
          {"ATT", "Attractions"},
          {"duty", "Duty & Honor"},
          {"rwrd", "Rewards"},
          {"MOTV", "Motivation for Supporting Group, Cause"},
          {"intl", "Religious, Ideological, Ethical Beliefs; Intolerance"},
          {"rvng", "Revenge"},
          {"cprop", "Cultural Propensity for Accepting Violence"},
          {"desp", "Desperation, Necessity"},
          {"PLEG", "Perceived Legitimacy of Violence"},
          {"intm", "Intimidation"},
          {"lvic", "Assessment of Likely Victor"},
          {"prsk", "Personal Risk and Opportunity Cost"},
          {"scst", "Countervailing Social Costs & Pressures"},
          {"ACR", "Acceptability of Costs & Risks"},
          {"id", "Identity"},
          {"shgr", "Shared Grievances & Aspirations"},
          {"ugb", "Unacceptable Group Behavior"},
          {"env", "Environmental Factors"},
          {"impl", "Impulses, Emotions, Social Psychology"},
          {"hsucc", "History of Successes"},
          {"mgtc", "Management Competence"},
          {"prop", "Propaganda, Advertising"},
          {"efdoc", "Effectiveness of Indoctrination/Passing Beliefs"},
          {"hfail", "History of Failures"},
          {"PSOT*", "Public Support for Insurgency and Terrorism"},
      },
      ActivationSpec::logistic(5.0));
  detail::set_edges(m, {
                           {"lead", "EFF", 1},   {"pkg", "EFF", 1},    {"rsrc", "EFF", 1},
                           {"opp", "EFF", 1},    {"pres", "EFF", 1},   {"mgtc", "EFF", 1},
                           {"reli", "ATT", 1},   {"socs", "ATT", 1},   {"glry", "ATT", 1},
                           {"ATT", "MOTV", 1},   {"duty", "MOTV", 1},  {"rwrd", "MOTV", 1},
                           {"id", "MOTV", 1},    {"shgr", "MOTV", 1},  {"id", "duty", 1},
                           {"intl", "PLEG", 1},  {"rvng", "PLEG", 1},  {"cprop", "PLEG", 1},
                           {"desp", "PLEG", 1},  {"intm", "ACR", 1},   {"lvic", "ACR", 1},
                           {"prsk", "ACR", -1},  {"scst", "ACR", -1},  {"env", "desp", 1},
                           {"impl", "rvng", 1},  {"prop", "pkg", 1},   {"prop", "efdoc", 1},
                           {"efdoc", "MOTV", 1}, {"EFF", "MOTV", 1},   {"MOTV", "PLEG", 1},
                           {"PLEG", "ACR", 1},   {"EFF", "hsucc", 1},  {"hsucc", "MOTV", 1},
                           {"hfail", "MOTV", -1}, {"hsucc", "prsk", -1}, {"hfail", "prsk", 1},
                           {"ugb", "MOTV", -1},  {"ugb", "EFF", -1},   {"EFF", "PSOT*", 1},
                           {"MOTV", "PSOT*", 1}, {"PLEG", "PSOT*", 1}, {"ACR", "PSOT*", 1},
                           {"PSOT*", "PSOT*", 1},
                       });
  m.metadata = {"psot-signs",
                "Factor-tree model of public support for insurgency and terrorism, dynamic variant with "
                "cross-links",
                "Illustrative: edges carry signs only because magnitudes are not published. Tree edges "
                "follow the factor grouping; cross-cutting factor placement is approximate."};
  return m;
}

/// Bundled models by name.
inline std::map<std::string, FcmModel> bundled_models() {
  return {{"dolphin", dolphin_model()}, {"thucydides-reference", thucydides_model()}, {"psot-signs", psot_model()}};
}

/// Bundled models with their named clamp presets and initial states.
inline std::map<std::string, ModelDocument> bundled_documents() {
  std::map<std::string, ModelDocument> docs;
  docs["dolphin"] = ModelDocument{kFormatVersion, dolphin_model(), {{"shark-pursuit", {{"srv-threat", 1.0}}}},
                                  {{"shark-appears", {0, 0, 0, 1, 0}}}};
  docs["thucydides-reference"] =
      ModelDocument{kFormatVersion, thucydides_model(), {{"trap", thucydides_trap_preset()}}, {}};
  docs["psot-signs"] = ModelDocument{kFormatVersion, psot_model(), {}, {}};
  return docs;
}

}  // namespace fcm

#endif  // FCM_BUNDLED_HPP
