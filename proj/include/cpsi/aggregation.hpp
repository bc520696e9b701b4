#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpsi/core_model.hpp"

namespace cpsi {

enum class AggregationKind { LInf, L1, TopK, DoubleCusum, CustomWrag };

// One member of the weighted rank aggregation family
//   F(S(t)) = max_k sum_j c_{k,j} rho_j(t).
struct AggregationSpec {
  AggregationKind kind = AggregationKind::DoubleCusum;
  int k = 1;          // TopK only
  double phi = 0.5;   // DoubleCusum only
  std::optional<Matrix> custom_weights;  // CustomWrag only, rows x N

  static AggregationSpec linf() { return {AggregationKind::LInf, 1, 0.5, std::nullopt}; }
  static AggregationSpec l1() { return {AggregationKind::L1, 1, 0.5, std::nullopt}; }
  static AggregationSpec top_k(int k) { return {AggregationKind::TopK, k, 0.5, std::nullopt}; }
  static AggregationSpec double_cusum(double phi = 0.5) {
    return {AggregationKind::DoubleCusum, 1, phi, std::nullopt};
  }
  static AggregationSpec custom(Matrix weights) {
    return {AggregationKind::CustomWrag, 1, 0.5, std::move(weights)};
  }

  // Parses "linf", "l1", "topk:K", "dc" / "dc:PHI". Custom weights have no
  // string form.
  static AggregationSpec parse(const std::string& text);
  // Inverse of parse(); "custom" for CustomWrag.
  std::string name() const;

  // True when the weight matrix has a single row (no k selection).
  bool fixed_rank_cutoff() const {
    return kind == AggregationKind::LInf || kind == AggregationKind::L1 ||
           kind == AggregationKind::TopK;
  }

  // Throws ArgumentError if the spec is invalid for N dimensions.
  void validate(int dims) const;
};

// Weight matrix c_{k,j}: one row for LInf / L1 / TopK, N-1 rows for
// DoubleCusum, the user rows for CustomWrag.
Matrix wrag_weights(const AggregationSpec& spec, int dims);

// theta_k(t) = sum_j c_{k,j} rho_j(t); rows = weight rows, columns = t - 1.
Matrix aggregate(const CusumProfile& profile, const Matrix& weights);
Matrix aggregate(const CusumProfile& profile, const AggregationSpec& spec);

// Per-t value of F, i.e. the column maxima of aggregate().
Vector aggregate_max(const Matrix& scores);

struct DetectionResult {
  AggregationSpec spec;
  int t_hat = 1;       // split point in [1, T-1]
  int weight_row = 0;  // selected row of the weight matrix (0-based)
  int k_hat = 1;       // rank cutoff: K for TopK, 1 for LInf, N for L1, selected k otherwise
  double theta = 0.0;
  Vector delta;        // theta = delta^T Y eta
  Vector eta;
  CusumProfile profile;
  Matrix weights;
  bool degenerate = false;  // every aggregate score is zero

  // Dimensions carrying the selected statistic (0-based, in rank order).
  std::vector<int> selected_dimensions() const;
};

// Argmax over (t, k) of the aggregate scores, ties to smaller t then smaller k.
DetectionResult detect_single(const SequenceMatrix& y, const AggregationSpec& spec);
DetectionResult detect_single(const CusumProfile& profile, const AggregationSpec& spec);

// Statistic of `spec` at a fixed split t (best weight row at t), packaged like
// a detection. Used for window-centred tests.
DetectionResult statistic_at(const CusumProfile& profile, const AggregationSpec& spec, int t);

// Pairwise test: every x_i with i in `subset` is >= every x_j outside it.
// For x >= 0 this is the same as `subset` having a maximal sum among all
// subsets of its size, which is what the top-K event relies on.
bool is_top_k_set(const Vector& x, const std::vector<int>& subset);

// delta = P_t G_t^T c for a weight row c.
Vector signed_dimension_weights(const CusumProfile& profile, int t,
                                const Eigen::Ref<const Vector>& rank_weights);

}  // namespace cpsi
