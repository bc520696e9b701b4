#pragma once

#include <limits>
#include <vector>

#include "cpsi/aggregation.hpp"
#include "cpsi/core_model.hpp"

namespace cpsi {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Lemma direction gamma = (xi eta kron sigma delta) / (|eta|^2_xi |delta|^2_sigma),
// laid out as vec() of an N x T matrix (column-major).
Vector lemma_direction(const KroneckerCovariance& cov, const Vector& delta, const Vector& eta);

struct PolyhedralBounds {
  double lower = -kUnbounded;
  double upper = kUnbounded;
  bool residual_ok = true;  // N(z) >= 0 on rows orthogonal to gamma
};

// Truncation of delta^T Y eta implied by {A vec(Y) <= b}, by direct
// evaluation of the polyhedral lemma. Throws ConsistencyError if the observed
// Y violates the event, NumericalError if the bounds cross.
PolyhedralBounds polyhedral_truncation(const Matrix& a, const Vector& b, const SequenceMatrix& y,
                                       const KroneckerCovariance& cov, const Vector& delta,
                                       const Vector& eta);

struct TruncationInterval {
  double lower = 0.0;
  double upper = kUnbounded;
  double scale = 1.0;  // v, with v^2 = |eta|^2_xi |delta|^2_sigma
  double theta = 0.0;
  bool snapped = false;  // a bound was moved onto theta to absorb rounding
};

// Closed-form intervals, one per aggregation family. Each conditions on the
// observed selection event of detect_single for that family over every split.
TruncationInterval truncation_general_wrag(const DetectionResult& result,
                                           const KroneckerCovariance& cov);
TruncationInterval truncation_linf(const DetectionResult& result, const KroneckerCovariance& cov);
TruncationInterval truncation_l1(const DetectionResult& result, const KroneckerCovariance& cov);
TruncationInterval truncation_topk(const DetectionResult& result, const KroneckerCovariance& cov);

// Dispatches on result.spec.kind.
TruncationInterval truncation_interval(const DetectionResult& result,
                                       const KroneckerCovariance& cov);

struct SelectivePValue {
  double value = 1.0;
  bool low_precision = false;
};

// (Phi(U/v) - Phi(theta/v)) / (Phi(U/v) - Phi(L/v)), tail-stable.
SelectivePValue selective_p_value(const TruncationInterval& interval);

// 1 - Phi(theta / v): the same statistic without selection correction.
double naive_p_value(double theta, double scale);

struct PowerEstimate {
  double alpha = 0.05;
  double mu = 0.0;
  double z_alpha = 0.0;  // upper alpha-quantile of the truncated null
  double kappa = 0.0;
  double power_quadratic = 0.0;
  double power_lower_bound = 0.0;
};

// Local-alternative power expansion for the truncated-normal test.
PowerEstimate power_estimate(const TruncationInterval& interval, double alpha, double mu);

struct SelectiveTest {
  DetectionResult detection;
  TruncationInterval interval;
  double p_selective = 1.0;
  double p_naive = 1.0;
  bool low_precision = false;

  int t_hat() const { return detection.t_hat; }
  int k_hat() const { return detection.k_hat; }
};

SelectiveTest selective_test(DetectionResult detection, const KroneckerCovariance& cov);
SelectiveTest run_selective_test(const SequenceMatrix& y, const AggregationSpec& spec,
                                 const KroneckerCovariance& cov);

// Discrete outcome that the interval conditions on: two detections share a
// signature exactly when they fall in the same selection event.
struct SelectionSignature {
  std::vector<int> items;
  bool operator==(const SelectionSignature&) const = default;
};

SelectionSignature selection_signature(const DetectionResult& result);

}  // namespace cpsi
