#ifndef FCM_SWEEP_HPP
#define FCM_SWEEP_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fcm/core.hpp"
#include "fcm/fusion.hpp"
#include "fcm/inference.hpp"

namespace fcm {

inline constexpr std::size_t kMaxSweepInputs = 22;
/// A node counts as active when its activation exceeds this level.
inline constexpr double kActiveLevel = 0.5;

enum class ClampMode { on_off, on_free };
enum class OutcomeRule { any_cycle_state, all_cycle_states };
enum class Outcome { positive, negative, not_converged };

inline const char* to_string(ClampMode m) { return m == ClampMode::on_off ? "on-off" : "on-free"; }
inline const char* to_string(OutcomeRule r) {
  return r == OutcomeRule::any_cycle_state ? "active-in-any-cycle-state" : "active-in-all-cycle-states";
}
inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::positive: return "positive";
    case Outcome::negative: return "negative";
    case Outcome::not_converged: return "not-converged";
  }
  return "unknown";
}

inline ClampMode parse_clamp_mode(const std::string& s) {
  if (s == "on-off") return ClampMode::on_off;
  if (s == "on-free") return ClampMode::on_free;
  throw Error(ErrorKind::invalid_argument, "unknown clamp mode '" + s + "'");
}

inline OutcomeRule parse_outcome_rule(const std::string& s) {
  if (s == "active-in-any-cycle-state" || s == "any") return OutcomeRule::any_cycle_state;
  if (s == "active-in-all-cycle-states" || s == "all") return OutcomeRule::all_cycle_states;
  throw Error(ErrorKind::invalid_argument, "unknown outcome rule '" + s + "'");
}

struct SweepConfig {
  std::vector<NodeId> input_nodes;
  ClampMode clamp_mode = ClampMode::on_off;
  NodeId outcome_node = 0;
  OutcomeRule outcome_rule = OutcomeRule::any_cycle_state;
  int max_iters = kDefaultMaxIters;

  /// Every node except the outcome is an input.
  static SweepConfig all_inputs(const FcmModel& model, NodeId outcome) {
    SweepConfig c;
    c.outcome_node = outcome;
    for (NodeId i = 0; i < model.size(); ++i)
      if (i != outcome) c.input_nodes.push_back(i);
    return c;
  }

  void check(const FcmModel& model) const {
    if (outcome_node >= model.size()) throw Error(ErrorKind::invalid_argument, "outcome node out of range");
    if (input_nodes.empty()) throw Error(ErrorKind::invalid_argument, "sweep needs at least one input node");
    if (input_nodes.size() > kMaxSweepInputs)
      throw Error(ErrorKind::invalid_argument,
                  "sweep over " + std::to_string(input_nodes.size()) + " inputs exceeds the limit of " +
                      std::to_string(kMaxSweepInputs) + " (2^" + std::to_string(kMaxSweepInputs) +
                      " scenarios)");
    std::vector<NodeId> sorted = input_nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(ErrorKind::invalid_argument, "duplicate sweep input node");
    for (NodeId id : input_nodes) {
      if (id >= model.size()) throw Error(ErrorKind::invalid_argument, "sweep input node out of range");
      if (id == outcome_node) throw Error(ErrorKind::invalid_argument, "outcome node cannot be a sweep input");
    }
    if (max_iters < 1) throw Error(ErrorKind::invalid_argument, "max_iters must be >= 1");
  }

  std::uint64_t scenario_count() const { return std::uint64_t{1} << input_nodes.size(); }

  /// Bit b of `assignment` switches input_nodes[b] on.
  ClampSpec clamps_for(std::uint64_t assignment) const {
    ClampSpec clamps;
    for (std::size_t b = 0; b < input_nodes.size(); ++b) {
      const bool on = (assignment >> b) & 1u;
      if (on)
        clamps.set(input_nodes[b], 1.0);
      else if (clamp_mode == ClampMode::on_off)
        clamps.set(input_nodes[b], 0.0);
    }
    return clamps;
  }
};

/// Positive when the outcome node is active in any (or all) attractor states.
inline Outcome classify(const EquilibriumResult& eq, NodeId outcome, OutcomeRule rule) {
  if (!eq.converged()) return Outcome::not_converged;
  bool any = false, all = true;
  for (const auto& s : eq.cycle) {
    const bool active = s.values[outcome] > kActiveLevel;
    any = any || active;
    all = all && active;
  }
  return (rule == OutcomeRule::any_cycle_state ? any : all) ? Outcome::positive : Outcome::negative;
}

struct ScenarioResult {
  EquilibriumResult equilibrium;
  Outcome outcome = Outcome::not_converged;
};

/// One clamped scenario from the all-zero state.
inline ScenarioResult run_scenario(const FcmModel& model, const ClampSpec& conditions, NodeId outcome_node,
                                   int max_iters = kDefaultMaxIters,
                                   OutcomeRule rule = OutcomeRule::any_cycle_state) {
  if (outcome_node >= model.size()) throw Error(ErrorKind::invalid_argument, "outcome node out of range");
  ScenarioResult r;
  r.equilibrium = run(model, zero_state(model.size()), conditions, max_iters);
  r.outcome = classify(r.equilibrium, outcome_node, rule);
  return r;
}

struct ScenarioRecord {
  std::uint64_t assignment = 0;
  EquilibriumKind kind = EquilibriumKind::not_converged;
  Outcome outcome = Outcome::not_converged;
};

/// Counts and per-class activation sums; partials from workers merge by addition.
struct SweepAccumulator {
  std::size_t n = 0;
  std::array<std::size_t, 3> counts{};
  std::vector<double> positive_sum;
  std::vector<double> negative_sum;

  explicit SweepAccumulator(std::size_t nodes = 0)
      : n(nodes), positive_sum(nodes, 0.0), negative_sum(nodes, 0.0) {}

  void add(const EquilibriumResult& eq, Outcome o) {
    counts[static_cast<std::size_t>(o)] += 1;
    if (o == Outcome::not_converged) return;
    auto& sum = o == Outcome::positive ? positive_sum : negative_sum;
    const double k = static_cast<double>(eq.cycle.size());
    for (const auto& s : eq.cycle)
      for (std::size_t i = 0; i < n; ++i) sum[i] += s.values[i] / k;
  }

  void merge(const SweepAccumulator& other) {
    for (std::size_t c = 0; c < 3; ++c) counts[c] += other.counts[c];
    for (std::size_t i = 0; i < n; ++i) {
      positive_sum[i] += other.positive_sum[i];
      negative_sum[i] += other.negative_sum[i];
    }
  }
};

struct SweepReport {
  SweepConfig config;
  std::vector<std::string> labels;
  std::size_t scenarios = 0;
  std::size_t outcome_positive_count = 0;
  std::size_t outcome_negative_count = 0;
  std::size_t not_converged_count = 0;
  double outcome_fraction = 0.0;   // positive / scenarios
  double negative_fraction = 0.0;  // negative / scenarios ("peace" fraction for a war outcome)
  std::vector<double> positive_profile;  // mean attractor activation per node, positive class
  std::vector<double> negative_profile;
  std::vector<ScenarioRecord> records;  // indexed by assignment
};

/// Nodes ranked by mean activation within one class, highest first; ties keep node order.
inline std::vector<std::pair<std::string, double>> ranked_profile(const SweepReport& report,
                                                                  Outcome cls, bool skip_outcome = true) {
  const auto& prof = cls == Outcome::positive ? report.positive_profile : report.negative_profile;
  std::vector<std::pair<std::string, double>> rows;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    if (skip_outcome && i == report.config.outcome_node) continue;
    rows.emplace_back(report.labels[i], prof[i]);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return rows;
}

/// Every clamp assignment of the inputs, each run from the all-zero state.
/// `jobs` workers split the scenario range; `progress`, when given, counts
/// finished scenarios.
inline SweepReport run_sweep(const FcmModel& model, const SweepConfig& config, unsigned jobs = 1,
                             std::atomic<std::size_t>* progress = nullptr) {
  require_valid(model);
  config.check(model);
  const std::uint64_t total = config.scenario_count();
  const std::size_t n = model.size();
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::min<std::uint64_t>(total, 256))));

  SweepReport report;
  report.config = config;
  for (const auto& node : model.nodes) report.labels.push_back(node.label);
  report.records.resize(total);

  std::vector<SweepAccumulator> partial(jobs, SweepAccumulator(n));
  auto work = [&](unsigned w) {
    const std::uint64_t begin = total * w / jobs, end = total * (w + 1) / jobs;
    const StateVector zero = zero_state(n);
    for (std::uint64_t a = begin; a < end; ++a) {
      const ClampSpec clamps = config.clamps_for(a);
      EquilibriumResult eq = run(model, zero, clamps, config.max_iters);
      const Outcome o = classify(eq, config.outcome_node, config.outcome_rule);
      partial[w].add(eq, o);
      report.records[a] = ScenarioRecord{a, eq.kind, o};
      if (progress) progress->fetch_add(1, std::memory_order_relaxed);
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  SweepAccumulator acc(n);
  for (const auto& p : partial) acc.merge(p);

  report.scenarios = static_cast<std::size_t>(total);
  report.outcome_positive_count = acc.counts[static_cast<std::size_t>(Outcome::positive)];
  report.outcome_negative_count = acc.counts[static_cast<std::size_t>(Outcome::negative)];
  report.not_converged_count = acc.counts[static_cast<std::size_t>(Outcome::not_converged)];
  report.outcome_fraction = static_cast<double>(report.outcome_positive_count) / static_cast<double>(total);
  report.negative_fraction = static_cast<double>(report.outcome_negative_count) / static_cast<double>(total);
  report.positive_profile.assign(n, 0.0);
  report.negative_profile.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (report.outcome_positive_count)
      report.positive_profile[i] = acc.positive_sum[i] / static_cast<double>(report.outcome_positive_count);
    if (report.outcome_negative_count)
      report.negative_profile[i] = acc.negative_sum[i] / static_cast<double>(report.outcome_negative_count);
  }
  return report;
}

struct QuantizedComparison {
  SweepReport original;
  SweepReport quantized;
  /// agreement[a][b]: scenarios classified a by the original and b by the quantized map.
  std::array<std::array<std::size_t, 3>, 3> agreement{};
  double agreement_rate = 0.0;
};

/// Sweeps the model and its sign-quantized copy under the same configuration.
inline QuantizedComparison compare_quantized(const FcmModel& model, const SweepConfig& config, unsigned jobs = 1,
                                             std::atomic<std::size_t>* progress = nullptr) {
  QuantizedComparison out;
  out.original = run_sweep(model, config, jobs, progress);
  out.quantized = run_sweep(quantize(model), config, jobs, progress);
  std::size_t same = 0;
  for (std::size_t a = 0; a < out.original.records.size(); ++a) {
    const auto o = static_cast<std::size_t>(out.original.records[a].outcome);
    const auto q = static_cast<std::size_t>(out.quantized.records[a].outcome);
    out.agreement[o][q] += 1;
    if (o == q) ++same;
  }
  out.agreement_rate = static_cast<double>(same) / static_cast<double>(out.original.records.size());
  return out;
}

}  // namespace fcm

#endif  // FCM_SWEEP_HPP
