#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace cpsi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// N x T observation matrix: row = dimension, column = time point.
class SequenceMatrix {
 public:
  explicit SequenceMatrix(Matrix values);

  int dims() const { return static_cast<int>(values_.rows()); }
  int length() const { return static_cast<int>(values_.cols()); }
  const Matrix& values() const { return values_; }

  // Columns [first, first + count) as a new sequence (0-based column index).
  SequenceMatrix slice(int first, int count) const;

 private:
  Matrix values_;
};

// cov(vec(Y)) = xi (T x T, time) kron sigma (N x N, dimensions).
class KroneckerCovariance {
 public:
  KroneckerCovariance(Matrix xi, Matrix sigma);

  static KroneckerCovariance identity(int dims, int length);

  const Matrix& xi() const { return xi_; }
  const Matrix& sigma() const { return sigma_; }
  int dims() const { return static_cast<int>(sigma_.rows()); }
  int length() const { return static_cast<int>(xi_.rows()); }

  // Lower Cholesky factors: xi = B B^T, sigma = A A^T.
  const Matrix& xi_factor() const { return xi_factor_; }
  const Matrix& sigma_factor() const { return sigma_factor_; }

  // Principal submatrix of xi for columns [first, first + count).
  KroneckerCovariance restrict_time(int first, int count) const;

 private:
  Matrix xi_;
  Matrix sigma_;
  Matrix xi_factor_;
  Matrix sigma_factor_;
};

// Throws ArgumentError unless m is square, symmetric (relative 1e-10) and
// positive definite. Returns the lower Cholesky factor.
Matrix checked_cholesky(const Matrix& m, const char* what);

// Time contrast eta_t with S(t) = Y eta_t. t counts the points before the
// split, 1 <= t <= length - 1.
struct CusumContrast {
  int t;
  Vector eta;
};

CusumContrast cusum_contrast(int t, int length);

// Multivariate CUSUM scores with per-column signs and descending |S| order.
// All time arguments are split points t in [1, T-1].
class CusumProfile {
 public:
  CusumProfile() = default;
  explicit CusumProfile(const SequenceMatrix& y);

  int dims() const { return static_cast<int>(scores_.rows()); }
  int length() const { return length_; }
  int splits() const { return static_cast<int>(scores_.cols()); }

  double score(int dim, int t) const { return scores_(dim, t - 1); }
  int sign(int dim, int t) const { return signs_(dim, t - 1); }
  // rho_j(t), j = 0 for the largest |S_i(t)|.
  double rho(int rank, int t) const { return rho_(rank, t - 1); }
  // Dimension holding rank `rank` at t.
  int dim_at_rank(int rank, int t) const { return order_(rank, t - 1); }
  int rank_of(int dim, int t) const { return rank_(dim, t - 1); }

  const Matrix& scores() const { return scores_; }
  const Matrix& rho() const { return rho_; }
  const Eigen::MatrixXi& signs() const { return signs_; }
  const Eigen::MatrixXi& order() const { return order_; }

 private:
  int length_ = 0;
  Matrix scores_;
  Matrix rho_;
  Eigen::MatrixXi signs_;
  Eigen::MatrixXi order_;
  Eigen::MatrixXi rank_;
};

inline CusumProfile cusum_profile(const SequenceMatrix& y) { return CusumProfile(y); }

// Toeplitz matrix with entries rho^|i-j|.
Matrix ar1_covariance(double rho, int size);

enum class TimeCovarianceModel { Ar1, Toeplitz };

struct TimeCovarianceFit {
  Matrix xi;
  double lag1 = 0.0;  // averaged lag-1 autocorrelation
  int rows_used = 0;
};

// Fits the time factor from change-free control rows and evaluates it at
// `length` time points. Constant rows are skipped.
TimeCovarianceFit estimate_time_covariance(const SequenceMatrix& control, int length,
                                           TimeCovarianceModel model = TimeCovarianceModel::Ar1);

}  // namespace cpsi
