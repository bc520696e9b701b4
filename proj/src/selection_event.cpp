#include "cpsi/detail/selection_event.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpsi/errors.hpp"

namespace cpsi::detail {

namespace {

constexpr double kZeroCoef = 1e-11;

// G_u P_u (sigma delta): entry j belongs to the dimension ranked j at u.
Vector ranked_signed(const CusumProfile& p, int u, const Vector& s) {
  Vector q(p.dims());
  for (int j = 0; j < p.dims(); ++j) {
    const int dim = p.dim_at_rank(j, u);
    q(j) = p.sign(dim, u) * s(dim);
  }
  return q;
}

void add_wrag_event(BoundAccumulator& acc, const ContrastFamily& fam, const Vector& s,
                    const Matrix& w, int t_sel, int row_sel, int u_first, int u_last) {
  const CusumProfile& p = fam.profile;
  const int n = p.dims();
  const Matrix w_abs = w.cwiseAbs();

  const Vector q_t = ranked_signed(p, t_sel, s);
  const double f_t = fam.factor(t_sel);
  const double theta_sel = w.row(row_sel).dot(p.rho().col(t_sel - 1));
  const double self_coef = f_t * w.row(row_sel).dot(q_t);
  const double self_mag = std::abs(f_t) * w_abs.row(row_sel).dot(q_t.cwiseAbs());

  for (int u = u_first; u <= u_last; ++u) {
    const Vector q = ranked_signed(p, u, s);
    const double f = fam.factor(u);
    const auto rho = p.rho().col(u - 1);

    // theta_l(u) <= theta_k(t) for every weight row l.
    const Vector values = w * rho;
    const Vector coefs = f * (w * q);
    const Vector mags = std::abs(f) * (w_abs * q.cwiseAbs());
    for (int l = 0; l < w.rows(); ++l)
      acc.add(values(l) - theta_sel, coefs(l) - self_coef, mags(l) + self_mag);

    // rho(u) >= 0 (signs P_u).
    for (int j = 0; j < n; ++j) acc.add(-rho(j), -f * q(j), std::abs(f * q(j)));

    // rho_j(u) >= rho_{j+1}(u) (permutation G_u).
    for (int j = 0; j + 1 < n; ++j)
      acc.add(rho(j + 1) - rho(j), f * (q(j + 1) - q(j)),
              std::abs(f) * (std::abs(q(j)) + std::abs(q(j + 1))));
  }
}

void add_linf_event(BoundAccumulator& acc, const ContrastFamily& fam, const Vector& s, int t_sel,
                    int u_first, int u_last) {
  const CusumProfile& p = fam.profile;
  const int i = p.dim_at_rank(0, t_sel);
  const double theta_sel = p.rho(0, t_sel);
  const double c_sel = fam.factor(t_sel) * p.sign(i, t_sel) * s(i);

  // |S_i(t)| >= 0 fixes the sign.
  acc.add(-theta_sel, -c_sel, std::abs(c_sel));

  // -|S_i(t)| <= S_j(u) <= |S_i(t)| for every (u, j).
  for (int u = u_first; u <= u_last; ++u) {
    const double f = fam.factor(u);
    for (int j = 0; j < p.dims(); ++j) {
      if (u == t_sel && j == i) continue;
      const double score = p.score(j, u);
      const double tau = f * s(j);
      const double mag = std::abs(c_sel) + std::abs(tau);
      acc.add(-theta_sel - score, -c_sel - tau, mag);
      acc.add(-theta_sel + score, -c_sel + tau, mag);
    }
  }
}

void add_l1_event(BoundAccumulator& acc, const ContrastFamily& fam, const Vector& s, int t_sel,
                  int u_first, int u_last) {
  const CusumProfile& p = fam.profile;
  const int n = p.dims();
  auto signed_sum = [&](int u, double f, double& mag) {
    double c = 0.0;
    mag = 0.0;
    for (int i = 0; i < n; ++i) {
      const double term = f * p.sign(i, u) * s(i);
      c += term;
      mag += std::abs(term);
    }
    return c;
  };
  double mag_t = 0.0;
  const double c_t = signed_sum(t_sel, fam.factor(t_sel), mag_t);
  const double theta_sel = p.rho().col(t_sel - 1).sum();

  for (int u = u_first; u <= u_last; ++u) {
    const double f = fam.factor(u);
    if (u != t_sel) {
      double mag_u = 0.0;
      const double c_u = signed_sum(u, f, mag_u);
      acc.add(p.rho().col(u - 1).sum() - theta_sel, c_u - c_t, mag_u + mag_t);
    }
    for (int l = 0; l < n; ++l) {
      const double c = f * p.sign(l, u) * s(l);
      acc.add(-std::abs(p.score(l, u)), -c, std::abs(c));
    }
  }
}

void add_topk_event(BoundAccumulator& acc, const ContrastFamily& fam, const Vector& s, int k,
                    int t_sel, int u_first, int u_last) {
  const CusumProfile& p = fam.profile;
  const int n = p.dims();

  double c_t = 0.0, mag_t = 0.0, theta_sel = 0.0;
  for (int r = 0; r < k; ++r) {
    const int dim = p.dim_at_rank(r, t_sel);
    const double term = fam.factor(t_sel) * p.sign(dim, t_sel) * s(dim);
    c_t += term;
    mag_t += std::abs(term);
    theta_sel += p.rho(r, t_sel);
  }

  for (int u = u_first; u <= u_last; ++u) {
    const double f = fam.factor(u);
    double c_u = 0.0, mag_u = 0.0, sum_u = 0.0;
    for (int r = 0; r < k; ++r) {
      const int j = p.dim_at_rank(r, u);
      const double a = f * p.sign(j, u) * s(j);
      c_u += a;
      mag_u += std::abs(a);
      sum_u += p.rho(r, u);

      // Sign of each top-K member.
      acc.add(-p.rho(r, u), -a, std::abs(a));

      // Pairwise dominance over the complement makes J_u a top-K set.
      for (int r2 = k; r2 < n; ++r2) {
        const int l = p.dim_at_rank(r2, u);
        const double score = p.score(l, u);
        const double b = f * s(l);
        const double mag = std::abs(a) + std::abs(b);
        acc.add(-p.rho(r, u) - score, -a - b, mag);
        acc.add(-p.rho(r, u) + score, -a + b, mag);
      }
    }
    // Top-K sum at u does not exceed the selected one.
    if (u != t_sel) acc.add(sum_u - theta_sel, c_u - c_t, mag_u + mag_t);
  }
}

}  // namespace

StatisticGeometry::StatisticGeometry(const KroneckerCovariance& cov, const Vector& delta,
                                     const Vector& eta, double theta_value)
    : xi_eta(cov.xi() * eta), sigma_delta(cov.sigma() * delta), theta(theta_value) {
  if (eta.size() != cov.length() || delta.size() != cov.dims())
    throw ArgumentError("statistic vectors do not match the covariance shape");
  norm2 = eta.dot(xi_eta) * delta.dot(sigma_delta);
  if (!(norm2 > 0.0)) throw NumericalError("statistic has zero variance");
}

std::vector<double> StatisticGeometry::contrast_factors(int first, int len) const {
  std::vector<double> out(len - 1);
  const Vector w = xi_eta.segment(first, len);
  Vector prefix(len + 1);
  prefix(0) = 0.0;
  for (int i = 0; i < len; ++i) prefix(i + 1) = prefix(i) + w(i);
  const double n = len;
  for (int u = 1; u < len; ++u) {
    const double sc = std::sqrt(u * (n - u) / n);
    const double dot = sc * (prefix(u) / u - (prefix(len) - prefix(u)) / (n - u));
    out[u - 1] = dot / norm2;
  }
  return out;
}

BoundAccumulator::BoundAccumulator(double theta, double value_scale)
    : theta_(theta), value_tol_(1e-9 * std::max(1.0, value_scale)) {}

void BoundAccumulator::add(double value, double coef, double magnitude) {
  ++count_;
  if (value > value_tol_) {
    std::ostringstream os;
    os << "observed data violates its selection event (constraint value " << value << ")";
    throw ConsistencyError(os.str());
  }
  if (std::abs(coef) <= kZeroCoef * magnitude) return;
  const double bound = theta_ - value / coef;
  if (coef < 0.0)
    lower_ = std::max(lower_, bound);
  else
    upper_ = std::min(upper_, bound);
}

void add_selection_event(BoundAccumulator& acc, const ContrastFamily& family,
                         const Vector& sigma_delta, const AggregationSpec& spec,
                         const Matrix& weights, int t_sel, int row_sel, int u_first, int u_last) {
  switch (spec.kind) {
    case AggregationKind::LInf:
      add_linf_event(acc, family, sigma_delta, t_sel, u_first, u_last);
      return;
    case AggregationKind::L1:
      add_l1_event(acc, family, sigma_delta, t_sel, u_first, u_last);
      return;
    case AggregationKind::TopK:
      add_topk_event(acc, family, sigma_delta, spec.k, t_sel, u_first, u_last);
      return;
    case AggregationKind::DoubleCusum:
    case AggregationKind::CustomWrag:
      add_wrag_event(acc, family, sigma_delta, weights, t_sel, row_sel, u_first, u_last);
      return;
  }
}

TruncationInterval finish_interval(const BoundAccumulator& acc, double theta, double scale) {
  TruncationInterval out;
  out.theta = theta;
  out.scale = scale;
  out.lower = acc.lower();
  out.upper = acc.upper();
  const double slack = 1e-8 * std::max(1.0, std::abs(theta));
  if (out.lower > theta) {
    if (out.lower - theta > slack) {
      std::ostringstream os;
      os << "lower truncation " << out.lower << " exceeds statistic " << theta;
      throw NumericalError(os.str());
    }
    out.lower = theta;
    out.snapped = true;
  }
  if (out.upper < theta) {
    if (theta - out.upper > slack) {
      std::ostringstream os;
      os << "upper truncation " << out.upper << " is below statistic " << theta;
      throw NumericalError(os.str());
    }
    out.upper = theta;
    out.snapped = true;
  }
  return out;
}

}  // namespace cpsi::detail
