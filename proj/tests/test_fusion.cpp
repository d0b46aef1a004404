#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fcm/bundled.hpp"
#include "fcm/fusion.hpp"

using namespace fcm;

namespace {

FcmModel random_model(std::mt19937& rng, const std::vector<std::string>& labels) {
  FcmModel m = make_model(labels);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) m.edges.at(i, j) = u(rng);
  return m;
}

FcmModel from_rows(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& rows) {
  FcmModel m = make_model(labels);
  m.edges = EdgeMatrix::from_rows(rows);
  return m;
}

// Two-pass sample mean and unbiased sample variance.
void batch_stats(const std::vector<EdgeMatrix>& seq, std::size_t i, std::size_t j, double& mean, double& var) {
  const double m = static_cast<double>(seq.size());
  mean = 0;
  for (const auto& e : seq) mean += e.at(i, j);
  mean /= m;
  var = 0;
  for (const auto& e : seq) var += (e.at(i, j) - mean) * (e.at(i, j) - mean);
  var = seq.size() > 1 ? var / (m - 1) : 0.0;
}

}  // namespace

TEST(Align, IdenticalNodeSetsKeepMatrices) {
  std::mt19937 rng(1);
  const FcmModel a = random_model(rng, {"x", "y", "z"});
  const auto al = align({a, a});
  ASSERT_EQ(al.nodes.size(), 3u);
  EXPECT_EQ(al.edges[0], a.edges);
  EXPECT_EQ(al.edges[1], a.edges);
}

TEST(Align, PermutedLabelsReorder) {
  const FcmModel a = from_rows({"x", "y"}, {{0, 0.5}, {-0.25, 0}});
  const FcmModel b = from_rows({"y", "x"}, {{0, 0.75}, {0.1, 0}});
  const auto al = align({a, b});
  EXPECT_EQ(al.nodes[0].label, "x");
  // In b, y->x is 0.75; in union order that is (1,0).
  EXPECT_EQ(al.edges[1].at(1, 0), 0.75);
  EXPECT_EQ(al.edges[1].at(0, 1), 0.1);
}

TEST(Align, MissingNodeGainsZeroRowAndColumn) {
  const FcmModel e1 = from_rows({"a", "HCF", "b"}, {{0, 1, 0.5}, {1, 0, -1}, {0.2, 0.3, 0}});
  const FcmModel e2 = from_rows({"a", "b"}, {{0, -0.5}, {0.4, 0}});
  const auto al = align({e1, e2});
  ASSERT_EQ(al.nodes.size(), 3u);
  const NodeId hcf = 1;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(al.edges[1].at(hcf, k), 0.0);
    EXPECT_EQ(al.edges[1].at(k, hcf), 0.0);
  }
  EXPECT_EQ(al.edges[1].at(0, 2), -0.5);
}

TEST(Align, SingleModelIsItself) {
  const FcmModel d = dolphin_model();
  const auto al = align({d});
  EXPECT_EQ(al.edges[0], d.edges);
  EXPECT_EQ(al.nodes, d.nodes);
}

TEST(Align, ConflictingDescriptorsRejected) {
  FcmModel a = make_model({"x"});
  FcmModel b = make_model({"x"}, ActivationSpec::logistic());
  EXPECT_THROW(align({a, b}), Error);
  a.nodes[0].description = "one";
  FcmModel c = make_model({"x"});
  c.nodes[0].description = "two";
  EXPECT_THROW(align({a, c}), Error);
}

TEST(Combine, TwoThirdsOneThird) {
  std::mt19937 rng(2);
  const FcmModel a = random_model(rng, {"p", "q", "r", "s"});
  const FcmModel b = random_model(rng, {"p", "q", "r", "s"});
  const FcmModel c = combine({a, b}, FusionWeights{{2.0 / 3.0, 1.0 / 3.0}});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(c.edges.at(i, j), 2.0 / 3.0 * a.edges.at(i, j) + 1.0 / 3.0 * b.edges.at(i, j), 1e-12);
}

TEST(Combine, IdentityMixture) {
  const FcmModel d = dolphin_model();
  EXPECT_EQ(combine({d}, FusionWeights{{1.0}}).edges, d.edges);
}

TEST(Combine, ArithmeticMeanOfTrivalent) {
  const FcmModel a = from_rows({"u", "v"}, {{0, 1}, {0, 0}});
  const FcmModel b = from_rows({"u", "v"}, {{0, 1}, {0, 0}});
  const FcmModel c = from_rows({"u", "v"}, {{0, -1}, {0, 0}});
  EXPECT_NEAR(combine({a, b, c}, FusionWeights::equal(3)).edges.at(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(Combine, RejectsBadWeights) {
  const FcmModel d = dolphin_model();
  EXPECT_THROW(combine({d, d}, FusionWeights{{0.5}}), Error);
  EXPECT_THROW(combine({d, d}, FusionWeights{{0.6, 0.6}}), Error);
  EXPECT_THROW(combine({d, d}, FusionWeights{{1.5, -0.5}}), Error);
}

TEST(Combine, EqualWeightsPermutationInvariant) {
  std::mt19937 rng(3);
  const FcmModel a = random_model(rng, {"p", "q", "r"});
  const FcmModel b = random_model(rng, {"p", "q", "r"});
  const FcmModel c = random_model(rng, {"p", "q", "r"});
  const FcmModel x = combine({a, b, c}, FusionWeights::equal(3));
  const FcmModel y = combine({c, a, b}, FusionWeights::equal(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(x.edges.at(i, j), y.edges.at(i, j), 1e-15);
}

TEST(Combine, ElementwiseWeights) {
  const FcmModel a = from_rows({"u", "v"}, {{0, 1}, {0.5, 0}});
  const FcmModel b = from_rows({"u", "v"}, {{0, -1}, {-0.5, 0}});
  EdgeMatrix wa = EdgeMatrix::from_rows({{0.5, 0.25}, {1.0, 0.5}});
  EdgeMatrix wb = EdgeMatrix::from_rows({{0.5, 0.75}, {0.0, 0.5}});
  const FcmModel c = combine_elementwise({a, b}, {wa, wb});
  EXPECT_DOUBLE_EQ(c.edges.at(0, 1), 0.25 - 0.75);
  EXPECT_DOUBLE_EQ(c.edges.at(1, 0), 0.5);
  wb.at(0, 0) = 0.4;
  EXPECT_THROW(combine_elementwise({a, b}, {wa, wb}), Error);
}

TEST(FuseDataExpert, DegenerateAndMidpoint) {
  const FcmModel data = from_rows({"u", "v"}, {{0, 0.2}, {0, 0}});
  const FcmModel expert = from_rows({"u", "v"}, {{0, 0.4}, {0, 0}});
  EXPECT_EQ(fuse_data_expert(data, expert, 1.0, 0.0).edges, data.edges);
  EXPECT_NEAR(fuse_data_expert(data, expert, 0.5, 0.5).edges.at(0, 1), 0.3, 1e-15);
  const FcmModel wider = from_rows({"u", "v", "w"}, {{0, 0.4, 1}, {0, 0, 0}, {0, 0, 0}});
  const FcmModel fused = fuse_data_expert(data, wider, 0.5, 0.5);
  EXPECT_EQ(fused.size(), 3u);
  EXPECT_DOUBLE_EQ(fused.edges.at(0, 2), 0.5);
}

TEST(Stats, TwoValues) {
  EdgeStats s(1);
  s = update_stats(s, EdgeMatrix::from_rows({{0.5}}));
  EXPECT_FALSE(s.var_defined());
  s = update_stats(s, EdgeMatrix::from_rows({{0.7}}));
  EXPECT_NEAR(s.mean.at(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(s.var.at(0, 0), 0.02, 1e-15);
  EXPECT_TRUE(s.var_defined());
}

TEST(Stats, ConstantSequence) {
  EdgeStats s(2);
  const EdgeMatrix e = EdgeMatrix::from_rows({{0.25, -0.5}, {0.125, 1}});
  for (int k = 0; k < 37; ++k) s = update_stats(s, e);
  EXPECT_EQ(s.m, 37u);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_NEAR(s.mean.at(i, j), e.at(i, j), 1e-15);
      EXPECT_NEAR(s.var.at(i, j), 0.0, 1e-15);
    }
}

TEST(Stats, StreamingMatchesBatch) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<EdgeMatrix> seq;
  EdgeStats s(5);
  for (int k = 0; k < 100; ++k) {
    EdgeMatrix e(5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) e.at(i, j) = u(rng);
    seq.push_back(e);
    s = update_stats(s, e);
  }
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double mean = 0, var = 0;
      batch_stats(seq, i, j, mean, var);
      EXPECT_NEAR(s.mean.at(i, j), mean, 1e-10);
      EXPECT_NEAR(s.var.at(i, j), var, 1e-10);
      EXPECT_GE(s.var.at(i, j), 0.0);
    }
}

TEST(Stats, DimensionMismatch) {
  EdgeStats s(2);
  EXPECT_THROW(update_stats(s, EdgeMatrix(3)), Error);
}

TEST(Quantize, SignsAndIdempotence) {
  const FcmModel m = from_rows({"u", "v"}, {{0.35, -0.2}, {0, 1e-9}});
  const FcmModel q = quantize(m);
  EXPECT_EQ(q.edges.rows(), (std::vector<std::vector<double>>{{1, -1}, {0, 1}}));
  EXPECT_EQ(quantize(q).edges, q.edges);
  EXPECT_EQ(q.nodes, m.nodes);
}

TEST(Quantize, MajoritySignOfTrivalentCombination) {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> t(-1, 1);
  for (int k = 0; k < 200; ++k) {
    std::vector<FcmModel> ms;
    for (int e = 0; e < 5; ++e) ms.push_back(from_rows({"u", "v"}, {{0, double(t(rng))}, {0, 0}}));
    int sum = 0;
    for (const auto& m : ms) sum += static_cast<int>(m.edges.at(0, 1));
    const double q = quantize(combine(ms, FusionWeights::equal(5))).edges.at(0, 1);
    EXPECT_EQ(q, sum > 0 ? 1.0 : (sum < 0 ? -1.0 : 0.0));
  }
}

TEST(Disconcept, NegativeEdgeBecomesPositiveIntoNegatedNode) {
  const FcmModel m = from_rows({"terrorism", "stability"}, {{0, -0.8}, {0, 0}});
  const FcmModel d = disconcept_transform(m);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.nodes[3].label, "\xC2\xAC" "stability");
  EXPECT_EQ(d.edges.at(0, 3), 0.8);
  EXPECT_EQ(d.edges.at(0, 1), 0.0);
}

TEST(Disconcept, AllPositiveEmbedsOriginal) {
  const FcmModel m = from_rows({"a", "b"}, {{0.1, 0.2}, {0.3, 0}});
  const FcmModel d = disconcept_transform(m);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(d.edges.at(i, j), (i < 2 && j < 2) ? m.edges.at(i, j) : 0.0);
}

TEST(Disconcept, DolphinHasNoNegativeEntries) {
  const FcmModel d = disconcept_transform(dolphin_model());
  EXPECT_EQ(d.size(), 10u);
  EXPECT_TRUE(validate_model(d).empty());
  for (double e : d.edges.data()) EXPECT_GE(e, 0.0);
  // Oracle: entrywise rule on the original matrix.
  const auto rows = dolphin_model().edges.rows();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(d.edges.at(i, j), std::max(0.0, rows[i][j]));
      EXPECT_EQ(d.edges.at(i, 5 + j), std::max(0.0, -rows[i][j]));
    }
}
