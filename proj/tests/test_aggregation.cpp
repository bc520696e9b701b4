#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "cpsi/aggregation.hpp"
#include "cpsi/errors.hpp"

using namespace cpsi;

TEST(Weights, FixedFamilies) {
  Matrix linf(1, 4), l1(1, 4), top(1, 4);
  linf << 1, 0, 0, 0;
  l1 << 1, 1, 1, 1;
  top << 1, 1, 0, 0;
  EXPECT_EQ(wrag_weights(AggregationSpec::linf(), 4), linf);
  EXPECT_EQ(wrag_weights(AggregationSpec::l1(), 4), l1);
  EXPECT_EQ(wrag_weights(AggregationSpec::top_k(2), 4), top);
}

TEST(Weights, DoubleCusumTwoDimensions) {
  // gamma_1 = 1 * 3 / 4; weights sqrt(0.75) and -sqrt(0.75) / 3.
  const Matrix w = wrag_weights(AggregationSpec::double_cusum(0.5), 2);
  ASSERT_EQ(w.rows(), 1);
  EXPECT_NEAR(w(0, 0), 0.8660254037844386, 1e-15);
  EXPECT_NEAR(w(0, 1), -0.28867513459481287, 1e-15);
}

TEST(Weights, DoubleCusumRowsHaveNonNegativePrefixSums) {
  for (int n = 2; n < 30; ++n) {
    const Matrix w = wrag_weights(AggregationSpec::double_cusum(0.5), n);
    for (int r = 0; r < w.rows(); ++r) {
      double prefix = 0.0;
      for (int j = 0; j < n; ++j) {
        prefix += w(r, j);
        EXPECT_GE(prefix, -1e-14);
      }
    }
  }
}

TEST(Spec, ParseAndName) {
  for (const char* s : {"linf", "l1", "topk:3", "dc:0.5", "dc:1"})
    EXPECT_EQ(AggregationSpec::parse(s).name(), s);
  EXPECT_EQ(AggregationSpec::parse("dc").phi, 0.5);
  for (const char* s : {"", "top", "topk", "topk:x", "dc:", "dc:1x", "linf:2"})
    EXPECT_THROW(AggregationSpec::parse(s), ArgumentError) << s;
}

TEST(Spec, Validation) {
  EXPECT_THROW(AggregationSpec::top_k(0).validate(3), ArgumentError);
  EXPECT_THROW(AggregationSpec::top_k(4).validate(3), ArgumentError);
  EXPECT_THROW(AggregationSpec::double_cusum(0.5).validate(1), ArgumentError);
  EXPECT_THROW(AggregationSpec::double_cusum(0.0).validate(3), ArgumentError);
  Matrix bad(1, 3);
  bad << 1, -2, 1;
  EXPECT_THROW(AggregationSpec::custom(bad).validate(3), ArgumentError);
  Matrix ok(1, 3);
  ok << 2, -1, -1;
  EXPECT_NO_THROW(AggregationSpec::custom(ok).validate(3));
  EXPECT_THROW(AggregationSpec::custom(ok).validate(4), ArgumentError);
}

TEST(Detect, SingleShiftedRowLInf) {
  Matrix m = Matrix::Zero(3, 10);
  m.block(1, 6, 1, 4).setConstant(50.0);
  const auto det = detect_single(SequenceMatrix(m), AggregationSpec::linf());
  EXPECT_EQ(det.t_hat, 6);
  EXPECT_EQ(det.selected_dimensions(), std::vector<int>{1});
}

TEST(Detect, ThetaEqualsBilinearForm) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(4, 12);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  for (const auto& spec : {AggregationSpec::linf(), AggregationSpec::l1(), AggregationSpec::top_k(2),
                           AggregationSpec::double_cusum()}) {
    const auto det = detect_single(SequenceMatrix(m), spec);
    EXPECT_NEAR(det.theta, det.delta.dot(m * det.eta), 1e-12);
    EXPECT_GE(det.theta, 0.0);
    // theta is the global maximum of the aggregate scores.
    EXPECT_DOUBLE_EQ(det.theta, aggregate(det.profile, spec).maxCoeff());
  }
}

TEST(Detect, TopKOneMatchesLInfAndTopKAllMatchesL1) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m(5, 15);
    for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    const SequenceMatrix y(m);
    const auto a = detect_single(y, AggregationSpec::top_k(1));
    const auto b = detect_single(y, AggregationSpec::linf());
    EXPECT_EQ(a.t_hat, b.t_hat);
    EXPECT_DOUBLE_EQ(a.theta, b.theta);
    const auto c = detect_single(y, AggregationSpec::top_k(5));
    const auto d = detect_single(y, AggregationSpec::l1());
    EXPECT_EQ(c.t_hat, d.t_hat);
    EXPECT_NEAR(c.theta, d.theta, 1e-12);
  }
}

TEST(Detect, TiesGoToTheSmallestSplit) {
  // Constant data: every score is zero, so the first split wins.
  const auto det = detect_single(SequenceMatrix(Matrix::Constant(2, 6, 1.0)),
                                 AggregationSpec::double_cusum());
  EXPECT_EQ(det.t_hat, 1);
  EXPECT_EQ(det.weight_row, 0);
  EXPECT_TRUE(det.degenerate);
  EXPECT_EQ(det.theta, 0.0);
}

TEST(Detect, StatisticAtFixedSplit) {
  Matrix m(2, 6);
  m << 0, 0, 0, 2, 2, 2, 0, 1, 0, 1, 0, 1;
  const CusumProfile p{SequenceMatrix(m)};
  const auto at = statistic_at(p, AggregationSpec::l1(), 3);
  EXPECT_EQ(at.t_hat, 3);
  EXPECT_NEAR(at.theta, p.rho().col(2).sum(), 1e-15);
  EXPECT_THROW(statistic_at(p, AggregationSpec::l1(), 6), ArgumentError);
}

TEST(TopKSets, PairwiseDominanceEqualsSubsetSumMaximality) {
  // For x >= 0 and |I| = K: min over I >= max over the complement exactly when
  // sum over I is maximal among all K-subsets.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int counterexamples = 0;
  for (int n = 1; n <= 6; ++n)
    for (int rep = 0; rep < 20; ++rep) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x(i) = u(rng);
      for (int k = 1; k <= n; ++k)
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
          if (std::popcount(mask) != k) continue;
          std::vector<int> subset;
          for (int i = 0; i < n; ++i)
            if (mask >> i & 1u) subset.push_back(i);
          double best = 0.0, sum = 0.0;
          for (unsigned other = 0; other < (1u << n); ++other) {
            if (std::popcount(other) != k) continue;
            double s = 0.0;
            for (int i = 0; i < n; ++i)
              if (other >> i & 1u) s += x(i);
            best = std::max(best, s);
          }
          for (int i : subset) sum += x(i);
          if (is_top_k_set(x, subset) != (sum >= best)) ++counterexamples;
        }
    }
  EXPECT_EQ(counterexamples, 0);
}
