#ifndef FCM_INFERENCE_HPP
#define FCM_INFERENCE_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "fcm/core.hpp"

namespace fcm {

/// Componentwise tolerance for recurrence detection when any node is smooth.
inline constexpr double kStateTolerance = 1e-9;
inline constexpr int kDefaultMaxIters = 1000;

enum class EquilibriumKind { fixed_point, limit_cycle, not_converged };

inline const char* to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::fixed_point: return "fixed-point";
    case EquilibriumKind::limit_cycle: return "limit-cycle";
    case EquilibriumKind::not_converged: return "not-converged";
  }
  return "unknown";
}

struct EquilibriumResult {
  std::vector<StateVector> transient;
  std::vector<StateVector> cycle;  // empty when not converged
  EquilibriumKind kind = EquilibriumKind::not_converged;
  int iterations_used = 0;  // number of step() evaluations

  bool converged() const noexcept { return kind != EquilibriumKind::not_converged; }
  /// Index of the first attractor state, i.e. steps taken to reach the attractor.
  std::size_t steps_to_attractor() const noexcept { return transient.size(); }
};

namespace detail {

inline void check_state(const FcmModel& model, const StateVector& state) {
  if (state.size() != model.size() || model.edges.size() != model.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "state has " + std::to_string(state.size()) + " entries but the model has " +
                    std::to_string(model.size()) + " nodes");
  }
}

inline StateVector clamped_initial(const FcmModel& model, const StateVector& initial,
                                   const ClampSpec& clamps) {
  check_state(model, initial);
  check_clamps(clamps, model.size());
  StateVector s = initial;
  clamps.apply(s.values);
  return s;
}

// Unchecked synchronous update.
inline StateVector step_unchecked(const FcmModel& model, const StateVector& state,
                                  const ClampSpec& clamps) {
  const std::size_t n = model.size();
  StateVector next{std::vector<double>(n, 0.0), state.t + 1};
  for (std::size_t j = 0; j < n; ++j) {
    double x = 0.0;
    for (std::size_t i = 0; i < n; ++i) x += state.values[i] * model.edges.at(i, j);
    next.values[j] = activate(model.nodes[j].activation, x);
  }
  clamps.apply(next.values);
  return next;
}

inline bool near_equal(const std::vector<double>& a, const std::vector<double>& b, double eps) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > eps) return false;
  return true;
}

}  // namespace detail

/// One synchronous update: x_j = sum_i state_i * e_ij, activate, then overwrite clamps.
inline StateVector step(const FcmModel& model, const StateVector& state,
                        const ClampSpec& clamps = {}) {
  detail::check_state(model, state);
  check_clamps(clamps, model.size());
  return detail::step_unchecked(model, state, clamps);
}

/// initial (clamps applied) followed by exactly n_steps successors.
inline std::vector<StateVector> trace(const FcmModel& model, const StateVector& initial,
                                      const ClampSpec& clamps, std::size_t n_steps) {
  std::vector<StateVector> out;
  out.reserve(n_steps + 1);
  out.push_back(detail::clamped_initial(model, initial, clamps));
  for (std::size_t k = 0; k < n_steps; ++k)
    out.push_back(detail::step_unchecked(model, out.back(), clamps));
  return out;
}

/// Iterates until the first recurrence of an earlier state and splits the
/// trajectory into transient and cycle. Threshold-only models compare states
/// exactly; otherwise states within kStateTolerance componentwise match.
inline EquilibriumResult run(const FcmModel& model, const StateVector& initial,
                             const ClampSpec& clamps = {}, int max_iters = kDefaultMaxIters) {
  if (max_iters < 1) throw Error(ErrorKind::invalid_argument, "max_iters must be >= 1");
  std::vector<StateVector> seen;
  seen.push_back(detail::clamped_initial(model, initial, clamps));
  seen.back().t = 0;

  const bool exact = model.all_hard_threshold();
  std::map<std::vector<double>, std::size_t> index;
  if (exact) index.emplace(seen.back().values, 0);

  EquilibriumResult result;
  for (int it = 1; it <= max_iters; ++it) {
    StateVector next = detail::step_unchecked(model, seen.back(), clamps);
    result.iterations_used = it;
    std::size_t hit = seen.size();
    if (exact) {
      auto found = index.find(next.values);
      if (found != index.end()) hit = found->second;
    } else {
      for (std::size_t k = 0; k < seen.size(); ++k) {
        if (detail::near_equal(seen[k].values, next.values, kStateTolerance)) {
          hit = k;
          break;
        }
      }
    }
    if (hit < seen.size()) {
      result.transient.assign(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(hit));
      result.cycle.assign(seen.begin() + static_cast<std::ptrdiff_t>(hit), seen.end());
      result.kind = result.cycle.size() == 1 ? EquilibriumKind::fixed_point
                                             : EquilibriumKind::limit_cycle;
      return result;
    }
    if (exact) index.emplace(next.values, seen.size());
    seen.push_back(std::move(next));
  }
  result.transient = std::move(seen);
  result.kind = EquilibriumKind::not_converged;
  return result;
}

}  // namespace fcm

#endif  // FCM_INFERENCE_HPP
