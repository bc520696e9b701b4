#pragma once

// Closed-form evaluation of selection-event constraints projected onto the
// lemma direction. Shared by the single change point and windowed tests.

#include <vector>

#include "cpsi/aggregation.hpp"
#include "cpsi/core_model.hpp"
#include "cpsi/selective.hpp"

namespace cpsi::detail {

// Lemma geometry of the tested statistic delta^T Y eta.
struct StatisticGeometry {
  StatisticGeometry(const KroneckerCovariance& cov, const Vector& delta, const Vector& eta,
                    double theta);

  // tau-style time factors (eta_u^T xi eta) / norm2 for the CUSUM contrasts
  // of columns [first, first + len); entry u - 1 for split u.
  std::vector<double> contrast_factors(int first, int len) const;

  Vector xi_eta;
  Vector sigma_delta;
  double norm2 = 1.0;  // |eta|^2_xi |delta|^2_sigma
  double theta = 0.0;
};

// Collects constraints a^T vec(Y) <= 0 through value = a^T vec(Y) and
// coef = a^T gamma. `magnitude` is the sum of absolute summands of coef and
// decides when coef is zero up to rounding.
class BoundAccumulator {
 public:
  BoundAccumulator(double theta, double value_scale);

  void add(double value, double coef, double magnitude);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  bool residual_ok() const { return residual_ok_; }
  int count() const { return count_; }

 private:
  double theta_;
  double value_tol_;
  double lower_ = -kUnbounded;
  double upper_ = kUnbounded;
  bool residual_ok_ = true;
  int count_ = 0;
};

// A CUSUM profile plus the time factors of its contrasts.
struct ContrastFamily {
  const CusumProfile& profile;
  const std::vector<double>& factors;
  double factor(int t) const { return factors[t - 1]; }
};

// Event of detect_single restricted to splits u in [u_first, u_last], with
// the selected split t_sel (and weight row) inside that range.
void add_selection_event(BoundAccumulator& acc, const ContrastFamily& family,
                         const Vector& sigma_delta, const AggregationSpec& spec,
                         const Matrix& weights, int t_sel, int row_sel, int u_first, int u_last);

// Turns accumulated bounds into an interval, snapping sub-1e-8 rounding
// violations of L <= theta <= U onto theta.
TruncationInterval finish_interval(const BoundAccumulator& acc, double theta, double scale);

}  // namespace cpsi::detail
