#include "cpsi/multi_cp.hpp"

#include <algorithm>
#include <cmath>

#include "cpsi/detail/selection_event.hpp"
#include "cpsi/errors.hpp"

namespace cpsi {

WindowConfig WindowConfig::for_length(int length, bool bonferroni) {
  WindowConfig cfg;
  cfg.h = std::max(2, static_cast<int>(std::lround(std::log(static_cast<double>(length)))));
  cfg.bonferroni = bonferroni;
  return cfg;
}

void WindowConfig::validate(int length) const {
  if (h < 2) throw ArgumentError("window half-width h must be at least 2");
  if (2 * h > length) throw ArgumentError("window length 2h exceeds the sequence length");
}

std::vector<int> local_estimates(const Vector& scores, int length, int h) {
  if (scores.size() != length - 1) throw ArgumentError("need one aggregate score per split");
  WindowConfig{h, false}.validate(length);
  std::vector<int> out;
  for (int t = h; t <= length - h; ++t) {
    int best = t - h + 1;
    for (int u = t - h + 2; u <= t + h - 1; ++u)
      if (scores(u - 1) > scores(best - 1)) best = u;
    if (best == t) out.push_back(t);
  }
  return out;
}

std::vector<int> local_estimates(const SequenceMatrix& y, const AggregationSpec& spec,
                                 const WindowConfig& cfg) {
  const CusumProfile profile(y);
  return local_estimates(aggregate_max(aggregate(profile, spec)), y.length(), cfg.h);
}

namespace {

int best_row_at(const Matrix& scores, int t) {
  int row = 0;
  for (int k = 1; k < scores.rows(); ++k)
    if (scores(k, t - 1) > scores(row, t - 1)) row = k;
  return row;
}

LocalTest window_test(const SequenceMatrix& y, const AggregationSpec& spec,
                      const KroneckerCovariance& cov, const CusumProfile& global,
                      const Matrix& weights, const Matrix& global_scores, int t, int h,
                      double multiplicity) {
  const int first = t - h;
  const CusumProfile local(y.slice(first, 2 * h));
  DetectionResult det = statistic_at(local, spec, h);

  // The window statistic as a contrast of the full sequence.
  Vector eta_full = Vector::Zero(y.length());
  eta_full.segment(first, 2 * h) = det.eta;
  const detail::StatisticGeometry geo(cov, det.delta, eta_full, det.theta);
  const auto global_factors = geo.contrast_factors(0, y.length());
  const auto local_factors = geo.contrast_factors(first, 2 * h);

  const double value_scale =
      std::max({det.theta, global.rho().maxCoeff(), local.rho().maxCoeff()});
  detail::BoundAccumulator acc(det.theta, value_scale);

  // t is the first argmax of the global aggregate over its window.
  detail::add_selection_event(acc, detail::ContrastFamily{global, global_factors},
                              geo.sigma_delta, spec, weights, t, best_row_at(global_scores, t),
                              t - h + 1, t + h - 1);
  // Rank, sign and row pattern of the window statistic at the centre.
  detail::add_selection_event(acc, detail::ContrastFamily{local, local_factors}, geo.sigma_delta,
                              spec, weights, h, det.weight_row, h, h);

  LocalTest out;
  out.t = t;
  out.window_first = first;
  out.selected_dimensions = det.selected_dimensions();
  SelectiveTest& test = out.test;
  test.interval = detail::finish_interval(acc, det.theta, std::sqrt(geo.norm2));
  const auto p = selective_p_value(test.interval);
  test.p_selective = std::min(1.0, p.value * multiplicity);
  test.low_precision = p.low_precision;
  test.p_naive = std::min(1.0, naive_p_value(det.theta, test.interval.scale) * multiplicity);
  test.detection = std::move(det);
  return out;
}

void check_shapes(const SequenceMatrix& y, const KroneckerCovariance& cov) {
  if (cov.dims() != y.dims() || cov.length() != y.length())
    throw ArgumentError("covariance does not match the sequence shape");
}

}  // namespace

LocalTest test_local(const SequenceMatrix& y, const AggregationSpec& spec,
                     const KroneckerCovariance& cov, int t, const WindowConfig& cfg) {
  check_shapes(y, cov);
  cfg.validate(y.length());
  const CusumProfile global(y);
  const Matrix weights = wrag_weights(spec, y.dims());
  const Matrix scores = aggregate(global, weights);
  const auto est = local_estimates(aggregate_max(scores), y.length(), cfg.h);
  if (std::find(est.begin(), est.end(), t) == est.end())
    throw ArgumentError("split " + std::to_string(t) + " is not a local estimate");
  const double m = cfg.bonferroni ? static_cast<double>(est.size()) : 1.0;
  return window_test(y, spec, cov, global, weights, scores, t, cfg.h, m);
}

MultiCpReport detect_multiple(const SequenceMatrix& y, const AggregationSpec& spec,
                              const KroneckerCovariance& cov, const WindowConfig& cfg) {
  check_shapes(y, cov);
  cfg.validate(y.length());
  const CusumProfile global(y);
  const Matrix weights = wrag_weights(spec, y.dims());
  const Matrix scores = aggregate(global, weights);
  const auto est = local_estimates(aggregate_max(scores), y.length(), cfg.h);
  const double m = cfg.bonferroni ? static_cast<double>(est.size()) : 1.0;

  MultiCpReport report;
  report.window = cfg;
  for (int t : est)
    report.estimates.push_back(window_test(y, spec, cov, global, weights, scores, t, cfg.h, m));
  return report;
}

}  // namespace cpsi
