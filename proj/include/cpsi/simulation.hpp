#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "cpsi/aggregation.hpp"
#include "cpsi/core_model.hpp"

namespace cpsi {

using Rng = std::mt19937_64;

// splitmix64 chain over (seed, cell, replicate). Each replicate seeds its own
// Rng with this value, so results do not depend on scheduling.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t replicate);

// Draws vec(Y) ~ N(vec(M), xi kron sigma) as M + A Z B^T.
class KroneckerSampler {
 public:
  explicit KroneckerSampler(KroneckerCovariance cov);

  Matrix draw(const Matrix& mean, Rng& rng) const;
  Matrix draw_null(Rng& rng) const;
  const KroneckerCovariance& covariance() const { return cov_; }

 private:
  KroneckerCovariance cov_;
};

SequenceMatrix sample_sequence(const Matrix& mean, const KroneckerCovariance& cov, Rng& rng);

// Worker count: CPSI_THREADS if set and positive, else hardware concurrency.
int default_threads();

// Calls fn(i) for i in [0, count) on `threads` workers. The first exception
// thrown by any call is rethrown after all workers stop.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

struct ExperimentGrid {
  int dims = 20;
  int length = 100;
  std::vector<double> xi_values{0.0};
  std::vector<double> sigma_values{0.0};
  std::vector<AggregationSpec> specs{AggregationSpec::double_cusum()};
  int replicates = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 2018;

  void validate() const;

  // Key-value text, one "key = value" per line, '#' starts a comment.
  // Keys: N, T, xi, sigma, specs, replicates, alpha, seed. Lists are
  // comma-separated; specs use AggregationSpec::parse names.
  static ExperimentGrid parse(std::istream& in);
  static ExperimentGrid load(const std::string& path);
};

// Covariance of a grid cell: xi = AR(1) over time, sigma = AR(1) over dimensions.
KroneckerCovariance cell_covariance(int dims, int length, double xi, double sigma);

struct FprRow {
  double xi = 0.0;
  double sigma = 0.0;
  AggregationSpec spec;
  int k = 0;  // rank cutoff column: K, 1 for linf, N for l1, 0 when chosen adaptively
  double fpr_selective = 0.0;
  double fpr_naive = 0.0;
  double mc_stderr = 0.0;  // of fpr_selective
  int replicates = 0;
};

struct FprTable {
  std::vector<FprRow> rows;
  void write_csv(std::ostream& out) const;
};

// Null rejection frequencies for every (sigma, xi, spec) cell. All specs of
// a (sigma, xi) cell share the same sampled sequences.
FprTable fpr_experiment(const ExperimentGrid& grid, int threads = 0);

struct NullCell {
  int dims = 20;
  int length = 100;
  double xi = 0.05;
  double sigma = 0.0;
  AggregationSpec spec;
  int replicates = 1000;
  std::uint64_t seed = 2018;
};

struct NullPValues {
  std::vector<double> selective;
  std::vector<double> naive;
};

NullPValues null_p_values(const NullCell& cell, int threads = 0);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges on [0, 1]
  std::vector<int> counts;
};

// Equal-width bins on [0, 1]; the last bin is closed on the right.
Histogram histogram(const std::vector<double>& values, int bins);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int n = 0;
};

// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

// One-sample KS test against Uniform(0, 1) with the asymptotic p-value.
KsResult ks_uniform(std::vector<double> values);

struct PValueHistogram {
  Histogram hist;
  KsResult ks;
};

PValueHistogram pvalue_histogram(const std::vector<double>& p_values, int bins);

}  // namespace cpsi
