#ifndef FCM_LEARNING_HPP
#define FCM_LEARNING_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fcm/core.hpp"

namespace fcm {

struct TimeSample {
  long long t = 0;
  std::vector<double> values;
};

/// Per-node observations ordered by strictly increasing sample index.
struct TimeSeries {
  std::vector<std::string> labels;
  std::vector<TimeSample> samples;
  // Min-max scale applied on ingestion (value = min + normalized * (max - min)).
  std::vector<double> scale_min;
  std::vector<double> scale_max;
  std::vector<bool> zero_range;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t width() const noexcept { return labels.size(); }
  double at(std::size_t k, std::size_t node) const { return samples[k].values[node]; }

  void check() const {
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (samples[k].values.size() != labels.size())
        throw Error(ErrorKind::dimension_mismatch,
                    "sample " + std::to_string(k) + " has " + std::to_string(samples[k].values.size()) +
                        " values for " + std::to_string(labels.size()) + " labels");
      if (k > 0 && samples[k].t <= samples[k - 1].t)
        throw Error(ErrorKind::invalid_argument, "sample times must be strictly increasing");
    }
  }

  /// One-step backward difference C(k) - C(k-1); requires k >= 1.
  double delta(std::size_t k, std::size_t node) const { return at(k, node) - at(k - 1, node); }
};

enum class LearningLaw { hebbian, dhl, hybrid, discrete_dhl };

inline const char* to_string(LearningLaw law) {
  switch (law) {
    case LearningLaw::hebbian: return "hebbian";
    case LearningLaw::dhl: return "dhl";
    case LearningLaw::hybrid: return "hybrid";
    case LearningLaw::discrete_dhl: return "discrete-dhl";
  }
  return "unknown";
}

inline LearningLaw parse_learning_law(const std::string& s) {
  if (s == "hebbian") return LearningLaw::hebbian;
  if (s == "dhl") return LearningLaw::dhl;
  if (s == "hybrid") return LearningLaw::hybrid;
  if (s == "discrete-dhl") return LearningLaw::discrete_dhl;
  throw Error(ErrorKind::invalid_argument, "unknown learning law '" + s + "'");
}

struct LearningConfig {
  LearningLaw law = LearningLaw::discrete_dhl;
  double mu = 0.1;  // discrete-dhl rate, (0, 1]
  double h = 0.1;   // Euler step for the continuous laws
  int iterations = 1;  // passes over the series
  bool learn_diagonal = false;
  std::vector<std::pair<NodeId, NodeId>> tracked;  // edges recorded in the trace

  void check() const {
    if (!(mu > 0.0 && mu <= 1.0)) throw Error(ErrorKind::invalid_argument, "mu must lie in (0,1]");
    if (!(h > 0.0)) throw Error(ErrorKind::invalid_argument, "h must be positive");
    if (iterations < 1) throw Error(ErrorKind::invalid_argument, "iterations must be >= 1");
  }
};

struct TracePoint {
  int pass = 0;
  long long t = 0;                 // sample index of the update
  std::vector<double> values;      // one per tracked edge, unclipped
};

struct LearningResult {
  EdgeMatrix edges;  // clipped to [-1, 1]
  std::vector<std::pair<NodeId, NodeId>> tracked;
  std::vector<TracePoint> trace;
};

namespace detail {

inline double update_edge(LearningLaw law, const LearningConfig& cfg, double e, double ci, double cj,
                          double dci, double dcj) {
  switch (law) {
    case LearningLaw::hebbian: return e + cfg.h * (-e + ci * cj);
    case LearningLaw::dhl: return e + cfg.h * (-e + dci * dcj);
    case LearningLaw::hybrid: return e + cfg.h * (-e + ci * cj + dci * dcj);
    case LearningLaw::discrete_dhl: return dci != 0.0 ? e + cfg.mu * (dci * dcj - e) : e;
  }
  return e;
}

}  // namespace detail

/// Sweeps the series `iterations` times and updates every edge with the chosen law.
/// Derivatives are one-step backward differences; Hebbian updates use every sample,
/// the derivative laws start at the second.
inline LearningResult learn_edges(const TimeSeries& series, const LearningConfig& config,
                                  const EdgeMatrix& init) {
  config.check();
  series.check();
  if (series.size() == 0) throw Error(ErrorKind::invalid_argument, "empty time series");
  if (init.size() != series.width())
    throw Error(ErrorKind::dimension_mismatch, "initial matrix is " + std::to_string(init.size()) +
                                                   "x" + std::to_string(init.size()) + " for " +
                                                   std::to_string(series.width()) + " series");
  const bool needs_delta = config.law != LearningLaw::hebbian;
  if (needs_delta && series.size() < 2)
    throw Error(ErrorKind::invalid_argument, "derivative-based laws need at least two samples");
  for (const auto& [i, j] : config.tracked)
    if (i >= init.size() || j >= init.size())
      throw Error(ErrorKind::invalid_argument, "tracked edge outside the matrix");

  const std::size_t n = series.width();
  const std::size_t first = needs_delta ? 1 : 0;
  LearningResult result{init, config.tracked, {}};
  EdgeMatrix& e = result.edges;

  auto record = [&](int pass, long long t) {
    TracePoint p{pass, t, {}};
    for (const auto& [i, j] : config.tracked) p.values.push_back(e.at(i, j));
    result.trace.push_back(std::move(p));
  };
  if (!config.tracked.empty()) record(0, series.samples.front().t);

  for (int pass = 1; pass <= config.iterations; ++pass) {
    for (std::size_t k = first; k < series.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double ci = series.at(k, i);
        const double dci = needs_delta ? series.delta(k, i) : 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j && !config.learn_diagonal) continue;
          const double cj = series.at(k, j);
          const double dcj = needs_delta ? series.delta(k, j) : 0.0;
          e.at(i, j) = detail::update_edge(config.law, config, e.at(i, j), ci, cj, dci, dcj);
        }
      }
      if (!config.tracked.empty()) record(pass, series.samples[k].t);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e.at(i, j) = std::fmax(-1.0, std::fmin(1.0, e.at(i, j)));
  return result;
}

inline constexpr double kSignTolerance = 1e-9;

/// Sign of the mean concomitant variation over steps where node i moves.
inline int infer_edge_sign(const TimeSeries& series, NodeId i, NodeId j) {
  series.check();
  if (i >= series.width() || j >= series.width())
    throw Error(ErrorKind::invalid_argument, "node id outside the series");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 1; k < series.size(); ++k) {
    const double di = series.delta(k, i);
    if (di == 0.0) continue;
    sum += di * series.delta(k, j);
    ++count;
  }
  if (count == 0) return 0;
  const double mean = sum / static_cast<double>(count);
  if (std::fabs(mean) <= kSignTolerance) return 0;
  return mean > 0.0 ? 1 : -1;
}

}  // namespace fcm

#endif  // FCM_LEARNING_HPP
