#ifndef FCM_FUSION_HPP
#define FCM_FUSION_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fcm/core.hpp"

namespace fcm {

inline constexpr double kConvexityTolerance = 1e-12;

/// Convex mixing weights, one per input model.
struct FusionWeights {
  std::vector<double> w;

  static FusionWeights equal(std::size_t m) {
    return FusionWeights{std::vector<double>(m, 1.0 / static_cast<double>(m))};
  }

  void check() const {
    double sum = 0.0;
    for (double x : w) {
      if (!(x >= 0.0)) throw Error(ErrorKind::invalid_argument, "fusion weights must be non-negative");
      sum += x;
    }
    if (std::fabs(sum - 1.0) > kConvexityTolerance)
      throw Error(ErrorKind::invalid_argument,
                  "fusion weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
};

/// Union node list plus each input's edge matrix padded and permuted into union order.
struct AlignedModels {
  std::vector<ConceptNode> nodes;
  std::vector<EdgeMatrix> edges;
};

/// Node identity is the label (case-sensitive); labels keep first-seen order.
inline AlignedModels align(const std::vector<FcmModel>& models) {
  if (models.empty()) throw Error(ErrorKind::invalid_argument, "align needs at least one model");
  AlignedModels out;
  std::map<std::string, std::size_t> pos;
  for (const auto& m : models) {
    require_valid(m);
    for (const auto& node : m.nodes) {
      auto it = pos.find(node.label);
      if (it == pos.end()) {
        ConceptNode copy = node;
        copy.id = out.nodes.size();
        pos.emplace(node.label, copy.id);
        out.nodes.push_back(std::move(copy));
        continue;
      }
      auto& known = out.nodes[it->second];
      const bool desc_clash =
          !known.description.empty() && !node.description.empty() && known.description != node.description;
      if (desc_clash || known.activation != node.activation) {
        throw Error(ErrorKind::invalid_argument,
                    "conflicting node descriptors under label '" + node.label + "'");
      }
      if (known.description.empty()) known.description = node.description;
    }
  }
  const std::size_t n = out.nodes.size();
  for (const auto& m : models) {
    EdgeMatrix e(n);
    std::vector<std::size_t> map(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) map[i] = pos.at(m.nodes[i].label);
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < m.size(); ++j) e.at(map[i], map[j]) = m.edges.at(i, j);
    out.edges.push_back(std::move(e));
  }
  return out;
}

namespace detail {

inline FcmModel fused_model(AlignedModels&& aligned, EdgeMatrix&& edges, std::string name) {
  FcmModel result;
  result.nodes = std::move(aligned.nodes);
  result.edges = std::move(edges);
  result.metadata.name = std::move(name);
  return result;
}

inline double clip_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace detail

/// Weighted average of the zero-padded edge matrices.
inline FcmModel combine(const std::vector<FcmModel>& models, const FusionWeights& weights) {
  if (weights.w.size() != models.size()) {
    throw Error(ErrorKind::invalid_argument,
                std::to_string(weights.w.size()) + " weights for " + std::to_string(models.size()) + " models");
  }
  weights.check();
  AlignedModels aligned = align(models);
  const std::size_t n = aligned.nodes.size();
  EdgeMatrix sum(n);
  for (std::size_t k = 0; k < models.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sum.at(i, j) += weights.w[k] * aligned.edges[k].at(i, j);
  // Convexity keeps entries in range up to rounding; clip the last ulp.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sum.at(i, j) = detail::clip_unit(sum.at(i, j));
  return detail::fused_model(std::move(aligned), std::move(sum), "combined");
}

/// Per-edge weights: weights[k].at(i, j) is expert k's weight on edge (i, j) in
/// union order. Every edge position must carry a convex weight vector.
inline FcmModel combine_elementwise(const std::vector<FcmModel>& models,
                                    const std::vector<EdgeMatrix>& weights) {
  if (weights.size() != models.size())
    throw Error(ErrorKind::invalid_argument, "one weight matrix per model is required");
  AlignedModels aligned = align(models);
  const std::size_t n = aligned.nodes.size();
  for (const auto& w : weights)
    if (w.size() != n)
      throw Error(ErrorKind::dimension_mismatch, "weight matrix does not match the union node count");
  EdgeMatrix sum(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < models.size(); ++k) {
        const double wk = weights[k].at(i, j);
        if (!(wk >= 0.0)) throw Error(ErrorKind::invalid_argument, "negative per-edge weight");
        total += wk;
        sum.at(i, j) += wk * aligned.edges[k].at(i, j);
      }
      if (std::fabs(total - 1.0) > kConvexityTolerance)
        throw Error(ErrorKind::invalid_argument, "per-edge weights at (" + std::to_string(i) + "," +
                                                     std::to_string(j) + ") do not sum to 1");
      sum.at(i, j) = detail::clip_unit(sum.at(i, j));
    }
  }
  return detail::fused_model(std::move(aligned), std::move(sum), "combined");
}

/// Data-driven and expert maps mixed with a convex pair of weights.
inline FcmModel fuse_data_expert(const FcmModel& data, const FcmModel& expert, double w_data,
                                 double w_expert) {
  FcmModel fused = combine({data, expert}, FusionWeights{{w_data, w_expert}});
  fused.metadata.name = "fused";
  return fused;
}

/// Running per-edge mean and unbiased variance over an equal-weight stream of maps.
struct EdgeStats {
  EdgeMatrix mean;
  EdgeMatrix var;  // meaningful only when var_defined()
  std::size_t m = 0;

  explicit EdgeStats(std::size_t n = 0) : mean(n), var(n) {}
  bool var_defined() const noexcept { return m > 1; }
  std::size_t size() const noexcept { return mean.size(); }
};

/// Predictor-corrector update of mean and variance with one more matrix.
[[nodiscard]] inline EdgeStats update_stats(EdgeStats stats, const EdgeMatrix& next) {
  const std::size_t n = stats.size();
  if (next.size() != n)
    throw Error(ErrorKind::dimension_mismatch, "new matrix is " + std::to_string(next.size()) +
                                                   "x" + std::to_string(next.size()) + ", stats are " +
                                                   std::to_string(n) + "x" + std::to_string(n));
  if (stats.m == 0) {
    stats.mean = next;
    stats.var = EdgeMatrix(n);
    stats.m = 1;
    return stats;
  }
  const double m = static_cast<double>(stats.m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double e = next.at(i, j);
      const double old_mean = stats.mean.at(i, j);
      const double new_mean = old_mean + (e - old_mean) / (m + 1.0);
      double& v = stats.var.at(i, j);
      v += ((e - old_mean) * (e - new_mean) - v) / m;
      if (v < 0.0) v = 0.0;
      stats.mean.at(i, j) = new_mean;
    }
  }
  stats.m += 1;
  return stats;
}

[[nodiscard]] inline EdgeStats update_stats(EdgeStats stats, const FcmModel& next) {
  return update_stats(std::move(stats), next.edges);
}

/// Replaces every edge with its sign.
inline FcmModel quantize(const FcmModel& model) {
  FcmModel q = model;
  const std::size_t n = q.edges.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double& e = q.edges.at(i, j);
      e = e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
    }
  }
  return q;
}

inline const std::string kDisconceptPrefix = "\xC2\xAC";  // U+00AC NOT SIGN

/// Doubles the node set with negated companions ("¬L") and reroutes every
/// negative edge i->j as a positive edge i->¬j. Dis-concept rows stay zero.
inline FcmModel disconcept_transform(const FcmModel& model) {
  const std::size_t n = model.size();
  FcmModel out;
  out.metadata = model.metadata;
  out.metadata.name = model.metadata.name.empty() ? "disconcept" : model.metadata.name + "-disconcept";
  for (std::size_t i = 0; i < n; ++i) out.nodes.push_back(model.nodes[i]);
  for (std::size_t i = 0; i < n; ++i) {
    ConceptNode neg = model.nodes[i];
    neg.id = n + i;
    neg.label = kDisconceptPrefix + model.nodes[i].label;
    neg.description = model.nodes[i].description.empty() ? std::string{}
                                                          : "not: " + model.nodes[i].description;
    out.nodes.push_back(std::move(neg));
  }
  out.edges = EdgeMatrix(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double e = model.edges.at(i, j);
      if (e < 0.0)
        out.edges.at(i, n + j) = -e;
      else
        out.edges.at(i, j) = e;
    }
  }
  return out;
}

}  // namespace fcm

#endif  // FCM_FUSION_HPP
