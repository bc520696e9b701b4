#include "cpsi/selective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpsi/detail/selection_event.hpp"
#include "cpsi/errors.hpp"
#include "cpsi/normal.hpp"

namespace cpsi {

Vector lemma_direction(const KroneckerCovariance& cov, const Vector& delta, const Vector& eta) {
  const Vector xe = cov.xi() * eta;
  const Vector sd = cov.sigma() * delta;
  const double norm2 = eta.dot(xe) * delta.dot(sd);
  if (!(norm2 > 0.0)) throw NumericalError("statistic has zero variance");
  const Matrix gamma = sd * xe.transpose() / norm2;
  return Eigen::Map<const Vector>(gamma.data(), gamma.size());
}

PolyhedralBounds polyhedral_truncation(const Matrix& a, const Vector& b, const SequenceMatrix& y,
                                       const KroneckerCovariance& cov, const Vector& delta,
                                       const Vector& eta) {
  const int nt = y.dims() * y.length();
  if (a.cols() != nt || b.size() != a.rows())
    throw ArgumentError("constraint system does not match vec(Y)");
  if (cov.dims() != y.dims() || cov.length() != y.length())
    throw ArgumentError("covariance does not match the sequence shape");

  const Vector vec_y = Eigen::Map<const Vector>(y.values().data(), nt);
  const Vector gamma = lemma_direction(cov, delta, eta);
  const double theta = delta.dot(y.values() * eta);
  const Vector z = vec_y - gamma * theta;

  const Vector a_y = a * vec_y;
  const Vector a_gamma = a * gamma;
  const Vector a_z = a * z;
  const Vector y_mag = a.cwiseAbs() * vec_y.cwiseAbs();
  const Vector g_mag = a.cwiseAbs() * gamma.cwiseAbs();

  PolyhedralBounds out;
  for (int l = 0; l < a.rows(); ++l) {
    const double tol = 1e-9 * (1.0 + y_mag(l) + std::abs(b(l)));
    if (a_y(l) > b(l) + tol) {
      std::ostringstream os;
      os << "observed Y violates constraint row " << l << " by " << a_y(l) - b(l);
      throw ConsistencyError(os.str());
    }
    const double residual = b(l) - a_z(l);
    if (std::abs(a_gamma(l)) <= 1e-11 * g_mag(l)) {
      if (residual < -tol) out.residual_ok = false;
      continue;
    }
    const double bound = residual / a_gamma(l);
    if (a_gamma(l) < 0.0)
      out.lower = std::max(out.lower, bound);
    else
      out.upper = std::min(out.upper, bound);
  }
  if (out.lower > out.upper) {
    const double gap = out.lower - out.upper;
    if (gap > 1e-8 * std::max({1.0, std::abs(out.lower), std::abs(out.upper)})) {
      std::ostringstream os;
      os << "truncation bounds cross: L=" << out.lower << " U=" << out.upper << " theta=" << theta;
      throw NumericalError(os.str());
    }
    out.lower = out.upper = theta;
  }
  return out;
}

namespace {

TruncationInterval single_cp_interval(const DetectionResult& r, const KroneckerCovariance& cov) {
  const CusumProfile& p = r.profile;
  if (cov.dims() != p.dims() || cov.length() != p.length())
    throw ArgumentError("covariance does not match the sequence shape");
  const detail::StatisticGeometry geo(cov, r.delta, r.eta, r.theta);
  const auto factors = geo.contrast_factors(0, p.length());
  const detail::ContrastFamily family{p, factors};
  const double value_scale = std::max(r.theta, p.rho().maxCoeff());
  detail::BoundAccumulator acc(r.theta, value_scale);
  detail::add_selection_event(acc, family, geo.sigma_delta, r.spec, r.weights, r.t_hat,
                              r.weight_row, 1, p.splits());
  return detail::finish_interval(acc, r.theta, std::sqrt(geo.norm2));
}

void require_kind(const DetectionResult& r, bool ok, const char* what) {
  if (!ok) throw ArgumentError(std::string(what) + " truncation called for aggregation " + r.spec.name());
}

}  // namespace

TruncationInterval truncation_general_wrag(const DetectionResult& result,
                                           const KroneckerCovariance& cov) {
  require_kind(result,
               result.spec.kind == AggregationKind::DoubleCusum ||
                   result.spec.kind == AggregationKind::CustomWrag,
               "general WRAG");
  return single_cp_interval(result, cov);
}

TruncationInterval truncation_linf(const DetectionResult& result, const KroneckerCovariance& cov) {
  require_kind(result, result.spec.kind == AggregationKind::LInf, "l-infinity");
  return single_cp_interval(result, cov);
}

TruncationInterval truncation_l1(const DetectionResult& result, const KroneckerCovariance& cov) {
  require_kind(result, result.spec.kind == AggregationKind::L1, "l1");
  return single_cp_interval(result, cov);
}

TruncationInterval truncation_topk(const DetectionResult& result, const KroneckerCovariance& cov) {
  require_kind(result, result.spec.kind == AggregationKind::TopK, "top-K");
  return single_cp_interval(result, cov);
}

TruncationInterval truncation_interval(const DetectionResult& result,
                                       const KroneckerCovariance& cov) {
  return single_cp_interval(result, cov);
}

SelectivePValue selective_p_value(const TruncationInterval& in) {
  if (!(in.scale > 0.0)) throw ArgumentError("truncation scale must be positive");
  if (!(in.lower <= in.theta && in.theta <= in.upper))
    throw ArgumentError("statistic lies outside its truncation interval");
  const auto tail = normal::truncated_sf(in.theta / in.scale, in.lower / in.scale,
                                         in.upper / in.scale);
  return {tail.value, tail.low_precision};
}

double naive_p_value(double theta, double scale) {
  if (!(scale > 0.0)) throw ArgumentError("scale must be positive");
  return std::clamp(normal::sf(theta / scale), 0.0, 1.0);
}

PowerEstimate power_estimate(const TruncationInterval& in, double alpha, double mu) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  if (!(in.scale > 0.0)) throw ArgumentError("truncation scale must be positive");
  if (!(in.lower < in.upper)) throw ArgumentError("degenerate truncation interval (L = U)");
  const double v = in.scale;
  const double a = in.lower / v;
  const double b = in.upper / v;

  // Upper alpha-quantile of TN(0, v^2, L, U):
  // sf(z) = sf(b) + alpha * (sf(a) - sf(b)).
  const double log_sf_a = normal::log_sf(a);
  const double log_sf_b = normal::log_sf(b);
  const double log_q = log_sf_a + std::log(alpha + (1.0 - alpha) * std::exp(log_sf_b - log_sf_a));
  const double z_std = normal::isf_log(log_q);

  const double mass = std::exp(normal::log_interval_mass(a, b));
  if (!(mass > 0.0)) throw NumericalError("truncation interval has no representable mass");
  const double pdf_a = normal::pdf(a);
  const double pdf_b = normal::pdf(b);

  PowerEstimate out;
  out.alpha = alpha;
  out.mu = mu;
  out.z_alpha = v * z_std;
  out.kappa = (normal::pdf(z_std) - (pdf_b - alpha * (pdf_b - pdf_a))) / mass;
  out.power_quadratic =
      alpha + out.kappa / v * mu + out.kappa / (v * v) * ((pdf_b - pdf_a) / mass) * mu * mu;
  out.power_lower_bound =
      0.75 * alpha + 0.25 * (normal::pdf(z_std) - pdf_b) / (pdf_a - pdf_b);
  return out;
}

SelectiveTest selective_test(DetectionResult detection, const KroneckerCovariance& cov) {
  SelectiveTest out;
  out.interval = truncation_interval(detection, cov);
  const auto p = selective_p_value(out.interval);
  out.p_selective = p.value;
  out.low_precision = p.low_precision;
  out.p_naive = naive_p_value(out.interval.theta, out.interval.scale);
  out.detection = std::move(detection);
  return out;
}

SelectiveTest run_selective_test(const SequenceMatrix& y, const AggregationSpec& spec,
                                 const KroneckerCovariance& cov) {
  if (cov.dims() != y.dims() || cov.length() != y.length())
    throw ArgumentError("covariance does not match the sequence shape");
  return selective_test(detect_single(y, spec), cov);
}

SelectionSignature selection_signature(const DetectionResult& r) {
  const CusumProfile& p = r.profile;
  SelectionSignature sig;
  auto& v = sig.items;
  v.push_back(r.t_hat);
  v.push_back(r.weight_row);
  switch (r.spec.kind) {
    case AggregationKind::LInf: {
      const int i = p.dim_at_rank(0, r.t_hat);
      v.push_back(i);
      v.push_back(p.sign(i, r.t_hat));
      break;
    }
    case AggregationKind::L1:
      for (int u = 1; u <= p.splits(); ++u)
        for (int i = 0; i < p.dims(); ++i) v.push_back(p.sign(i, u));
      break;
    case AggregationKind::TopK:
      for (int u = 1; u <= p.splits(); ++u) {
        std::vector<std::pair<int, int>> top;
        for (int j = 0; j < r.spec.k; ++j) {
          const int dim = p.dim_at_rank(j, u);
          top.emplace_back(dim, p.sign(dim, u));
        }
        std::sort(top.begin(), top.end());
        for (const auto& [dim, s] : top) {
          v.push_back(dim);
          v.push_back(s);
        }
      }
      break;
    case AggregationKind::DoubleCusum:
    case AggregationKind::CustomWrag:
      for (int u = 1; u <= p.splits(); ++u)
        for (int j = 0; j < p.dims(); ++j) {
          const int dim = p.dim_at_rank(j, u);
          v.push_back(dim);
          v.push_back(p.sign(dim, u));
        }
      break;
  }
  return sig;
}

}  // namespace cpsi
