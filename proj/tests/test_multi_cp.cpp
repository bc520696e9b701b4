#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cpsi/errors.hpp"
#include "cpsi/multi_cp.hpp"
#include "cpsi/simulation.hpp"

using namespace cpsi;

namespace {

Matrix two_shift_sequence(int dims, int length, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix y(dims, length);
  for (int c = 0; c < length; ++c)
    for (int r = 0; r < dims; ++r) y(r, c) = noise(rng);
  for (int c = length / 3; c < 2 * length / 3; ++c) y.row(0).array()(c) += 4.0;
  return y;
}

// Re-scan by brute force: t is kept when no u in the window beats it, and
// earlier ties win.
std::vector<int> brute_force_estimates(const Vector& f, int length, int h) {
  std::vector<int> out;
  for (int t = h; t <= length - h; ++t) {
    bool keep = true;
    for (int u = t - h + 1; u <= t + h - 1; ++u) {
      if (u < t && f(u - 1) >= f(t - 1)) keep = false;
      if (u > t && f(u - 1) > f(t - 1)) keep = false;
    }
    if (keep) out.push_back(t);
  }
  return out;
}

}  // namespace

TEST(WindowConfig, DefaultHalfWidthIsRoundedLog) {
  EXPECT_EQ(WindowConfig::for_length(100).h, 5);  // log 100 = 4.6
  EXPECT_EQ(WindowConfig::for_length(200).h, 5);  // 5.3
  EXPECT_EQ(WindowConfig::for_length(4).h, 2);
}

TEST(WindowConfig, Validation) {
  EXPECT_THROW(WindowConfig({1, false}).validate(10), ArgumentError);
  EXPECT_THROW(WindowConfig({6, false}).validate(10), ArgumentError);
  EXPECT_NO_THROW(WindowConfig({5, false}).validate(10));
}

TEST(LocalEstimates, HandSequence) {
  Vector f(9);
  f << 1, 3, 2, 2, 5, 1, 0, 4, 1;  // splits 1..9, T = 10
  const auto est = local_estimates(f, 10, 2);
  EXPECT_EQ(est, (std::vector<int>{2, 5, 8}));
}

TEST(LocalEstimates, ConstantSequenceHasNone) {
  const SequenceMatrix y(Matrix::Constant(3, 30, 2.5));
  EXPECT_TRUE(local_estimates(y, AggregationSpec::l1(), {4, false}).empty());
}

TEST(LocalEstimates, MatchesBruteForceRescan) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const SequenceMatrix y(two_shift_sequence(4, 200, rng));
    const auto spec = AggregationSpec::double_cusum();
    const Vector f = aggregate_max(aggregate(CusumProfile(y), spec));
    EXPECT_EQ(local_estimates(y, spec, {5, false}), brute_force_estimates(f, 200, 5));
  }
}

TEST(TestLocal, FullWindowReducesToSingleChangePoint) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  int compared = 0;
  for (const auto& spec : {AggregationSpec::linf(), AggregationSpec::l1(),
                           AggregationSpec::top_k(2), AggregationSpec::double_cusum()}) {
    for (int rep = 0; rep < 10; ++rep) {
      const int h = 5, length = 2 * h;
      Matrix m(3, length);
      for (int c = 0; c < length; ++c)
        for (int r = 0; r < 3; ++r) m(r, c) = noise(rng) + (r < 2 && c >= h ? 2.5 : 0.0);
      const SequenceMatrix y(m);
      const auto cov = cell_covariance(3, length, 0.3, 0.2);
      const auto single = run_selective_test(y, spec, cov);
      if (single.t_hat() != h) continue;
      const auto local = test_local(y, spec, cov, h, {h, false});
      EXPECT_NEAR(local.test.detection.theta, single.detection.theta, 1e-12);
      EXPECT_NEAR(local.test.interval.lower, single.interval.lower, 1e-9);
      EXPECT_EQ(std::isinf(local.test.interval.upper), std::isinf(single.interval.upper));
      if (!std::isinf(single.interval.upper))
        EXPECT_NEAR(local.test.interval.upper, single.interval.upper, 1e-9);
      EXPECT_NEAR(local.test.p_selective, single.p_selective, 1e-9);
      ++compared;
    }
  }
  EXPECT_GT(compared, 20);
}

TEST(TestLocal, StatisticIsRecomputedOnTheWindowSlice) {
  std::mt19937_64 rng(5);
  const SequenceMatrix y(two_shift_sequence(4, 120, rng));
  const auto spec = AggregationSpec::double_cusum();
  const auto cov = KroneckerCovariance::identity(4, 120);
  const WindowConfig cfg{5, false};
  const auto report = detect_multiple(y, spec, cov, cfg);
  ASSERT_FALSE(report.estimates.empty());
  for (const auto& e : report.estimates) {
    const CusumProfile window(y.slice(e.t - cfg.h, 2 * cfg.h));
    const Vector f = aggregate_max(aggregate(window, spec));
    EXPECT_NEAR(e.test.detection.theta, f(cfg.h - 1), 1e-12);
    EXPECT_LE(e.test.interval.lower, e.test.detection.theta);
    EXPECT_GE(e.test.interval.upper, e.test.detection.theta);
  }
}

TEST(TestLocal, RejectsNonEstimate) {
  std::mt19937_64 rng(6);
  const SequenceMatrix y(two_shift_sequence(3, 60, rng));
  const auto spec = AggregationSpec::l1();
  const auto est = local_estimates(y, spec, {4, false});
  int bad = 4;
  while (std::find(est.begin(), est.end(), bad) != est.end()) ++bad;
  EXPECT_THROW(test_local(y, spec, KroneckerCovariance::identity(3, 60), bad, {4, false}),
               ArgumentError);
}

TEST(TestLocal, BonferroniScalesAndClamps) {
  std::mt19937_64 rng(8);
  const SequenceMatrix y(two_shift_sequence(3, 90, rng));
  const auto spec = AggregationSpec::linf();
  const auto cov = KroneckerCovariance::identity(3, 90);
  const auto plain = detect_multiple(y, spec, cov, {4, false});
  const auto adjusted = detect_multiple(y, spec, cov, {4, true});
  ASSERT_EQ(plain.estimates.size(), adjusted.estimates.size());
  const double m = static_cast<double>(plain.estimates.size());
  for (std::size_t i = 0; i < plain.estimates.size(); ++i)
    EXPECT_DOUBLE_EQ(adjusted.estimates[i].test.p_selective,
                     std::min(1.0, plain.estimates[i].test.p_selective * m));
}

TEST(TestLocal, LineInsideIntervalKeepsEstimateAndStatistic) {
  std::mt19937_64 rng(12);
  const int dims = 3, length = 40, h = 4;
  const auto cov = cell_covariance(dims, length, 0.4, 0.3);
  const auto spec = AggregationSpec::double_cusum();
  int checked = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const SequenceMatrix y(two_shift_sequence(dims, length, rng));
    const auto report = detect_multiple(y, spec, cov, {h, false});
    for (const auto& e : report.estimates) {
      const auto& det = e.test.detection;
      Vector eta = Vector::Zero(length);
      eta.segment(e.window_first, 2 * h) = det.eta;
      const Vector gamma = lemma_direction(cov, det.delta, eta);
      const Vector vec_y = Eigen::Map<const Vector>(y.values().data(), y.values().size());
      const Vector z = vec_y - gamma * det.theta;
      const auto& in = e.test.interval;
      const double lo = std::isinf(in.lower) ? det.theta - 4 * in.scale : in.lower;
      const double hi = std::isinf(in.upper) ? det.theta + 4 * in.scale : in.upper;
      for (int g = 1; g < 50; ++g) {
        const double x = lo + (hi - lo) * g / 50.0;
        const SequenceMatrix yx(Eigen::Map<const Matrix>(Vector(z + gamma * x).data(), dims, length));
        const auto est = local_estimates(yx, spec, {h, false});
        ASSERT_NE(std::find(est.begin(), est.end(), e.t), est.end());
        const auto redo = statistic_at(CusumProfile(yx.slice(e.window_first, 2 * h)), spec, h);
        EXPECT_NEAR(redo.theta, x, 1e-8 * std::max(1.0, x));
        EXPECT_EQ(redo.weight_row, det.weight_row);
        EXPECT_EQ(redo.selected_dimensions(), det.selected_dimensions());
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(TestLocal, NullPValuesAtAFixedSplitAreUniform) {
  // Condition on a fixed t0 being a local estimate so the collected p-values
  // are independent draws of the same conditional law.
  const int dims = 5, length = 40, h = 5, t0 = 20;
  const auto cov = KroneckerCovariance::identity(dims, length);
  const KroneckerSampler sampler(cov);
  const auto spec = AggregationSpec::double_cusum();
  std::vector<double> p;
  for (int r = 0; p.size() < 1000 && r < 40000; ++r) {
    Rng rng(substream_seed(31, 0, r));
    const SequenceMatrix y(sampler.draw_null(rng));
    const auto est = local_estimates(y, spec, {h, false});
    if (std::find(est.begin(), est.end(), t0) == est.end()) continue;
    p.push_back(test_local(y, spec, cov, t0, {h, false}).test.p_selective);
  }
  ASSERT_EQ(p.size(), 1000u);
  EXPECT_GT(ks_uniform(p).p_value, 0.01);
}
