#include "cpsi/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cpsi/errors.hpp"

namespace cpsi {

SequenceMatrix::SequenceMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1) throw ArgumentError("sequence needs at least one dimension");
  if (values_.cols() < 2) throw ArgumentError("sequence needs at least two time points");
  if (!values_.allFinite()) throw ArgumentError("sequence contains NaN or Inf");
}

SequenceMatrix SequenceMatrix::slice(int first, int count) const {
  if (first < 0 || count < 2 || first + count > length())
    throw ArgumentError("column slice out of range");
  return SequenceMatrix(values_.middleCols(first, count));
}

Matrix checked_cholesky(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw ArgumentError(std::string(what) + " must be a non-empty square matrix");
  if (!m.allFinite()) throw ArgumentError(std::string(what) + " contains NaN or Inf");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ArgumentError(std::string(what) + " is not symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw ArgumentError(std::string(what) + " is not positive definite");
  Matrix l = llt.matrixL();
  if ((l.diagonal().array() <= 0.0).any())
    throw ArgumentError(std::string(what) + " is not positive definite");
  return l;
}

KroneckerCovariance::KroneckerCovariance(Matrix xi, Matrix sigma)
    : xi_(std::move(xi)), sigma_(std::move(sigma)) {
  xi_factor_ = checked_cholesky(xi_, "time covariance");
  sigma_factor_ = checked_cholesky(sigma_, "dimension covariance");
}

KroneckerCovariance KroneckerCovariance::identity(int dims, int length) {
  return KroneckerCovariance(Matrix::Identity(length, length), Matrix::Identity(dims, dims));
}

KroneckerCovariance KroneckerCovariance::restrict_time(int first, int count) const {
  if (first < 0 || count < 1 || first + count > length())
    throw ArgumentError("time window out of range");
  return KroneckerCovariance(xi_.block(first, first, count, count), sigma_);
}

CusumContrast cusum_contrast(int t, int length) {
  if (length < 2 || t < 1 || t > length - 1)
    throw ArgumentError("split point must satisfy 1 <= t <= T-1");
  const double n = length;
  const double scale = std::sqrt(static_cast<double>(t) * (n - t) / n);
  Vector eta(length);
  eta.head(t).setConstant(scale / t);
  eta.tail(length - t).setConstant(-scale / (n - t));
  return {t, std::move(eta)};
}

CusumProfile::CusumProfile(const SequenceMatrix& y) : length_(y.length()) {
  const int n_dims = y.dims();
  const int len = y.length();
  const double n = len;
  scores_.resize(n_dims, len - 1);
  // Re-reference each row to its first entry: constant rows give exact zeros.
  for (int i = 0; i < n_dims; ++i) {
    const double ref = y.values()(i, 0);
    double total = 0.0;
    for (int u = 0; u < len; ++u) total += y.values()(i, u) - ref;
    double head = 0.0;
    for (int t = 1; t < len; ++t) {
      head += y.values()(i, t - 1) - ref;
      const double scale = std::sqrt(t * (n - t) / n);
      scores_(i, t - 1) = scale * (head / t - (total - head) / (n - t));
    }
  }

  signs_.resize(n_dims, len - 1);
  rho_.resize(n_dims, len - 1);
  order_.resize(n_dims, len - 1);
  rank_.resize(n_dims, len - 1);
  std::vector<int> idx(n_dims);
  for (int c = 0; c < len - 1; ++c) {
    for (int i = 0; i < n_dims; ++i) signs_(i, c) = scores_(i, c) < 0.0 ? -1 : 1;
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(scores_(a, c)) > std::abs(scores_(b, c));
    });
    for (int j = 0; j < n_dims; ++j) {
      order_(j, c) = idx[j];
      rank_(idx[j], c) = j;
      rho_(j, c) = std::abs(scores_(idx[j], c));
    }
  }
}

Matrix ar1_covariance(double rho, int size) {
  if (!(std::abs(rho) < 1.0)) throw ArgumentError("AR(1) coefficient must satisfy |rho| < 1");
  if (size < 1) throw ArgumentError("AR(1) covariance size must be positive");
  Matrix m(size, size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) m(i, j) = std::pow(rho, std::abs(i - j));
  return m;
}

namespace {

// Centered, unit-variance copies of the non-constant control rows.
std::vector<Vector> standardized_rows(const SequenceMatrix& control) {
  std::vector<Vector> rows;
  for (int i = 0; i < control.dims(); ++i) {
    Vector r = control.values().row(i).transpose();
    r.array() -= r.mean();
    const double var = r.squaredNorm() / static_cast<double>(r.size());
    if (var <= 0.0) continue;
    rows.push_back(r / std::sqrt(var));
  }
  return rows;
}

}  // namespace

TimeCovarianceFit estimate_time_covariance(const SequenceMatrix& control, int length,
                                           TimeCovarianceModel model) {
  if (control.dims() < 2) throw InsufficientDataError("need at least two control rows");
  if (length < 1) throw ArgumentError("target length must be positive");
  const auto rows = standardized_rows(control);
  if (rows.empty()) throw InsufficientDataError("all control rows are constant");

  const int n = control.length();
  auto autocorr = [&](int lag) {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.head(n - lag).dot(r.tail(n - lag)) / n;
    return acc / static_cast<double>(rows.size());
  };

  TimeCovarianceFit fit;
  fit.rows_used = static_cast<int>(rows.size());
  fit.lag1 = autocorr(1);

  if (model == TimeCovarianceModel::Ar1) {
    fit.xi = ar1_covariance(std::clamp(fit.lag1, -0.99, 0.99), length);
    return fit;
  }

  // Tapered Toeplitz: lags beyond length/4 (or beyond the control length) are zero.
  const int max_lag = std::min(length / 4, n - 1);
  Vector acf = Vector::Zero(length);
  acf(0) = 1.0;
  for (int k = 1; k <= max_lag; ++k) acf(k) = autocorr(k);
  Matrix xi(length, length);
  for (int i = 0; i < length; ++i)
    for (int j = 0; j < length; ++j) xi(i, j) = acf(std::abs(i - j));

  double ridge = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Matrix candidate = xi;
    candidate.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(candidate);
    if (llt.info() == Eigen::Success &&
        (Matrix(llt.matrixL()).diagonal().array() > 0.0).all()) {
      fit.xi = std::move(candidate);
      return fit;
    }
    ridge = ridge == 0.0 ? 1e-8 : ridge * 4.0;
  }
  throw NumericalError("could not make the Toeplitz estimate positive definite");
}

}  // namespace cpsi
