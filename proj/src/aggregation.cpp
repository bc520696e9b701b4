#include "cpsi/aggregation.hpp"

#include <cmath>
#include <sstream>

#include "cpsi/errors.hpp"

namespace cpsi {

AggregationSpec AggregationSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "linf" && arg.empty()) return linf();
    if (head == "l1" && arg.empty()) return l1();
    if (head == "topk" && !arg.empty()) {
      std::size_t used = 0;
      const int k = std::stoi(arg, &used);
      if (used == arg.size()) return top_k(k);
    }
    if (head == "dc") {
      if (colon == std::string::npos) return double_cusum();
      std::size_t used = 0;
      const double phi = std::stod(arg, &used);
      if (used == arg.size()) return double_cusum(phi);
    }
  } catch (const std::logic_error&) {
  }
  throw ArgumentError("unknown aggregation '" + text + "' (expected linf, l1, topk:K, dc[:phi])");
}

std::string AggregationSpec::name() const {
  switch (kind) {
    case AggregationKind::LInf:
      return "linf";
    case AggregationKind::L1:
      return "l1";
    case AggregationKind::TopK:
      return "topk:" + std::to_string(k);
    case AggregationKind::DoubleCusum: {
      std::ostringstream os;
      os << "dc:" << phi;
      return os.str();
    }
    case AggregationKind::CustomWrag:
      return "custom";
  }
  return "unknown";
}

void AggregationSpec::validate(int dims) const {
  if (dims < 1) throw ArgumentError("need at least one dimension");
  switch (kind) {
    case AggregationKind::LInf:
    case AggregationKind::L1:
      return;
    case AggregationKind::TopK:
      if (k < 1 || k > dims) throw ArgumentError("top-K needs 1 <= K <= N");
      return;
    case AggregationKind::DoubleCusum:
      if (dims < 2) throw ArgumentError("double CUSUM needs N >= 2");
      if (!(phi > 0.0) || !std::isfinite(phi)) throw ArgumentError("double CUSUM needs phi > 0");
      return;
    case AggregationKind::CustomWrag: {
      if (!custom_weights || custom_weights->rows() < 1)
        throw ArgumentError("custom aggregation needs a weight matrix");
      const Matrix& w = *custom_weights;
      if (w.cols() != dims) throw ArgumentError("custom weight matrix must have N columns");
      if (!w.allFinite()) throw ArgumentError("custom weights contain NaN or Inf");
      // Non-negative prefix sums keep c^T rho >= 0 for every sorted rho >= 0.
      for (int r = 0; r < w.rows(); ++r) {
        double prefix = 0.0;
        for (int j = 0; j < w.cols(); ++j) {
          prefix += w(r, j);
          if (prefix < 0.0)
            throw ArgumentError("custom weight rows need non-negative prefix sums");
        }
      }
      return;
    }
  }
}

Matrix wrag_weights(const AggregationSpec& spec, int dims) {
  spec.validate(dims);
  switch (spec.kind) {
    case AggregationKind::LInf: {
      Matrix w = Matrix::Zero(1, dims);
      w(0, 0) = 1.0;
      return w;
    }
    case AggregationKind::L1:
      return Matrix::Ones(1, dims);
    case AggregationKind::TopK: {
      Matrix w = Matrix::Zero(1, dims);
      w.leftCols(spec.k).setOnes();
      return w;
    }
    case AggregationKind::DoubleCusum: {
      const double n = dims;
      Matrix w(dims - 1, dims);
      for (int k = 1; k <= dims - 1; ++k) {
        const double gamma = k * (2.0 * n - k) / (2.0 * n);
        const double g = std::pow(gamma, spec.phi);
        for (int j = 1; j <= dims; ++j)
          w(k - 1, j - 1) = j <= k ? g / k : -g / (2.0 * n - k);
      }
      return w;
    }
    case AggregationKind::CustomWrag:
      return *spec.custom_weights;
  }
  throw ArgumentError("unknown aggregation kind");
}

Matrix aggregate(const CusumProfile& profile, const Matrix& weights) {
  if (weights.cols() != profile.dims())
    throw ArgumentError("weight matrix does not match the profile dimension");
  return weights * profile.rho();
}

Matrix aggregate(const CusumProfile& profile, const AggregationSpec& spec) {
  return aggregate(profile, wrag_weights(spec, profile.dims()));
}

Vector aggregate_max(const Matrix& scores) { return scores.colwise().maxCoeff().transpose(); }

Vector signed_dimension_weights(const CusumProfile& profile, int t,
                                const Eigen::Ref<const Vector>& rank_weights) {
  Vector delta(profile.dims());
  for (int i = 0; i < profile.dims(); ++i)
    delta(i) = profile.sign(i, t) * rank_weights(profile.rank_of(i, t));
  return delta;
}

bool is_top_k_set(const Vector& x, const std::vector<int>& subset) {
  std::vector<bool> inside(static_cast<std::size_t>(x.size()), false);
  for (int i : subset) {
    if (i < 0 || i >= x.size()) throw ArgumentError("subset index out of range");
    inside[static_cast<std::size_t>(i)] = true;
  }
  for (int i : subset)
    for (int j = 0; j < x.size(); ++j)
      if (!inside[static_cast<std::size_t>(j)] && x(i) < x(j)) return false;
  return true;
}

std::vector<int> DetectionResult::selected_dimensions() const {
  int count = 0;
  switch (spec.kind) {
    case AggregationKind::LInf:
    case AggregationKind::TopK:
    case AggregationKind::L1:
    case AggregationKind::DoubleCusum:
      count = k_hat;
      break;
    case AggregationKind::CustomWrag:
      for (int j = 0; j < weights.cols(); ++j)
        if (weights(weight_row, j) > 0.0) count = j + 1;
      break;
  }
  std::vector<int> dims;
  for (int j = 0; j < count; ++j) dims.push_back(profile.dim_at_rank(j, t_hat));
  return dims;
}

DetectionResult detect_single(const SequenceMatrix& y, const AggregationSpec& spec) {
  return detect_single(CusumProfile(y), spec);
}

namespace {

void fill_selection(DetectionResult& r, const CusumProfile& profile, int t, int row) {
  r.t_hat = t;
  r.weight_row = row;
  switch (r.spec.kind) {
    case AggregationKind::LInf:
      r.k_hat = 1;
      break;
    case AggregationKind::L1:
      r.k_hat = profile.dims();
      break;
    case AggregationKind::TopK:
      r.k_hat = r.spec.k;
      break;
    case AggregationKind::DoubleCusum:
    case AggregationKind::CustomWrag:
      r.k_hat = row + 1;
      break;
  }
  r.delta = signed_dimension_weights(profile, t, r.weights.row(row).transpose());
  r.eta = cusum_contrast(t, profile.length()).eta;
  r.profile = profile;
}

}  // namespace

DetectionResult detect_single(const CusumProfile& profile, const AggregationSpec& spec) {
  DetectionResult r;
  r.spec = spec;
  r.weights = wrag_weights(spec, profile.dims());
  const Matrix scores = aggregate(profile, r.weights);

  // Column-major scan with strict '>' gives the smallest t, then smallest k.
  double best = scores(0, 0);
  int best_t = 1, best_row = 0;
  for (int c = 0; c < scores.cols(); ++c)
    for (int k = 0; k < scores.rows(); ++k)
      if (scores(k, c) > best) {
        best = scores(k, c);
        best_t = c + 1;
        best_row = k;
      }

  r.theta = best;
  r.degenerate = scores.cwiseAbs().maxCoeff() == 0.0;
  fill_selection(r, profile, best_t, best_row);
  return r;
}

DetectionResult statistic_at(const CusumProfile& profile, const AggregationSpec& spec, int t) {
  if (t < 1 || t > profile.splits()) throw ArgumentError("split point out of range");
  DetectionResult r;
  r.spec = spec;
  r.weights = wrag_weights(spec, profile.dims());
  const Vector col = r.weights * profile.rho().col(t - 1);
  int best_row = 0;
  for (int k = 1; k < col.size(); ++k)
    if (col(k) > col(best_row)) best_row = k;
  r.theta = col(best_row);
  r.degenerate = profile.rho().col(t - 1).cwiseAbs().maxCoeff() == 0.0;
  fill_selection(r, profile, t, best_row);
  return r;
}

}  // namespace cpsi
