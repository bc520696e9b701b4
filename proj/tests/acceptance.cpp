// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Tolerances are fixed here and are not
// tuned to the observed results.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cpsi/normal.hpp"
#include "cpsi/selective.hpp"
#include "cpsi/simulation.hpp"
#include "support/oracle.hpp"

using namespace cpsi;

namespace {

constexpr std::uint64_t kSeed = 2018;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s -- %s\n", ok ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::vector<AggregationSpec> all_specs(int dims) {
  std::vector<AggregationSpec> out{AggregationSpec::linf(), AggregationSpec::l1()};
  for (int k = 1; k <= dims; ++k) out.push_back(AggregationSpec::top_k(k));
  if (dims >= 2) out.push_back(AggregationSpec::double_cusum(0.5));
  return out;
}

double rel_gap(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b ? 0.0 : kUnbounded;
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

FprTable fpr_grid() {
  ExperimentGrid g;
  g.dims = 20;
  g.length = 100;
  g.sigma_values = {0.0, 0.5};
  g.xi_values = {0.0, 0.25, 0.5, 0.75};
  g.specs = {AggregationSpec::linf(), AggregationSpec::top_k(5), AggregationSpec::top_k(10),
             AggregationSpec::l1(), AggregationSpec::double_cusum(0.5)};
  g.replicates = 1000;
  g.alpha = 0.05;
  g.seed = kSeed;
  return fpr_experiment(g);
}

void criterion_fpr(const FprTable& table) {
  int inside = 0;
  double lo = 1.0, hi = 0.0;
  for (const auto& r : table.rows) {
    if (r.fpr_selective >= 0.029 && r.fpr_selective <= 0.071) ++inside;
    lo = std::min(lo, r.fpr_selective);
    hi = std::max(hi, r.fpr_selective);
  }
  std::ostringstream os;
  os << inside << "/" << table.rows.size() << " cells in [0.029, 0.071], range [" << lo << ", "
     << hi << "]";
  report(1, inside == static_cast<int>(table.rows.size()) && table.rows.size() == 40,
         "selective FPR control on the 40-cell null grid", os.str());
}

void criterion_naive(const FprTable& table) {
  bool ok = true;
  std::ostringstream os;
  int seen = 0;
  for (const auto& r : table.rows) {
    if (r.xi != 0.0 || r.sigma != 0.0) continue;
    if (r.spec.kind != AggregationKind::LInf && r.spec.kind != AggregationKind::DoubleCusum)
      continue;
    ++seen;
    os << r.spec.name() << " fpr_naive=" << r.fpr_naive << " ";
    ok = ok && r.fpr_naive > 0.10;
  }
  report(2, ok && seen == 2, "naive FPR exceeds 0.10 at xi=0, sigma=0", os.str());
}

void criterion_pivot() {
  NullCell cell;
  cell.dims = 20;
  cell.length = 100;
  cell.xi = 0.05;
  cell.sigma = 0.0;
  cell.spec = AggregationSpec::double_cusum(0.5);
  cell.replicates = 1000;
  cell.seed = kSeed;
  const auto p = null_p_values(cell);
  const auto sel = ks_uniform(p.selective);
  const auto naive = ks_uniform(p.naive);
  std::ostringstream os;
  os << "KS selective D=" << sel.statistic << " p=" << sel.p_value << "; naive D="
     << naive.statistic << " p=" << naive.p_value;
  report(3, sel.p_value > 0.01 && naive.p_value < 0.01,
         "selective p-values uniform, naive not (KS at 1%)", os.str());
}

void criterion_oracle() {
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<int> pick_n(1, 4), pick_t(2, 8);
  double worst = 0.0;
  int instances = 0, comparisons = 0;
  for (int rep = 0; rep < 250; ++rep) {
    const int n = pick_n(rng), t = pick_t(rng);
    const auto inst = oracle::random_instance(rng, n, t, rep % 2 == 0);
    const SequenceMatrix y(inst.y);
    const KroneckerCovariance cov(ar1_covariance(inst.xi, t), ar1_covariance(inst.sigma, n));
    ++instances;
    for (const auto& spec : all_specs(n)) {
      const auto det = detect_single(y, spec);
      const auto closed = truncation_interval(det, cov);
      const Matrix a = oracle::assemble_event(det, inst.y);
      const auto generic =
          polyhedral_truncation(a, Vector::Zero(a.rows()), y, cov, det.delta, det.eta);
      worst = std::max({worst, rel_gap(closed.lower, generic.lower),
                        rel_gap(closed.upper, generic.upper)});
      ++comparisons;
    }
  }
  std::ostringstream os;
  os << instances << " instances, " << comparisons << " interval pairs, max relative gap " << worst;
  report(4, instances >= 200 && worst <= 1e-9,
         "closed-form truncation equals the assembled polyhedral lemma", os.str());
}

void criterion_line_search() {
  std::mt19937_64 rng(kSeed + 1);
  std::uniform_int_distribution<int> pick_n(1, 4), pick_t(3, 8);
  int finite = 0, checked = 0, violations = 0, points = 0;
  for (int rep = 0; rep < 200 && finite < 60; ++rep) {
    const int n = pick_n(rng), t = pick_t(rng);
    const auto inst = oracle::random_instance(rng, n, t, true);
    const SequenceMatrix y(inst.y);
    const KroneckerCovariance cov(ar1_covariance(inst.xi, t), ar1_covariance(inst.sigma, n));
    for (const auto& spec : all_specs(n)) {
      const auto det = detect_single(y, spec);
      const auto in = truncation_interval(det, cov);
      if (std::isinf(in.upper) || !(in.upper > in.lower)) continue;
      ++finite;
      const auto sig = selection_signature(det);
      const Vector gamma = lemma_direction(cov, det.delta, det.eta);
      const Vector vec_y = Eigen::Map<const Vector>(inst.y.data(), inst.y.size());
      const Vector z = vec_y - gamma * det.theta;
      const double width = in.upper - in.lower;
      const double step = 1e-3 * width;
      for (int g = -250; g <= 1250; ++g) {
        const double x = in.lower + g * step;
        // Grid points on the boundary itself are ties; skip them.
        if (g == 0 || g == 1000) continue;
        const SequenceMatrix yx(Eigen::Map<const Matrix>(Vector(z + gamma * x).data(), n, t));
        const auto redo = detect_single(yx, spec);
        const bool inside = g > 0 && g < 1000;
        if (inside != (selection_signature(redo) == sig)) ++violations;
        ++points;
      }
      ++checked;
    }
  }
  std::ostringstream os;
  os << checked << " finite intervals, " << points << " grid points, " << violations
     << " violations";
  report(5, checked >= 50 && violations == 0,
         "re-detection along gamma reproduces the event exactly inside [L, U]", os.str());
}

void criterion_lemma() {
  std::mt19937_64 rng(kSeed + 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long long cases = 0, counterexamples = 0;
  for (int n = 1; n <= 8; ++n) {
    for (int rep = 0; rep < 100; ++rep) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x(i) = u(rng);
      std::vector<double> sums(1u << n, 0.0);
      std::vector<double> best(n + 1, -1.0);
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        for (int i = 0; i < n; ++i)
          if (mask >> i & 1u) sums[mask] += x(i);
        const int k = std::popcount(mask);
        best[k] = std::max(best[k], sums[mask]);
      }
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> subset;
        for (int i = 0; i < n; ++i)
          if (mask >> i & 1u) subset.push_back(i);
        const bool pairwise = is_top_k_set(x, subset);
        const bool maximal = sums[mask] >= best[std::popcount(mask)];
        if (pairwise != maximal) ++counterexamples;
        ++cases;
      }
    }
  }
  std::ostringstream os;
  os << cases << " (vector, subset) cases, " << counterexamples << " counterexamples";
  report(6, counterexamples == 0, "pairwise dominance equals subset-sum maximality", os.str());
}

// Exact power of the truncated test: P(X >= z | L <= X <= U), X ~ N(mu, v^2).
double exact_power(double z, double lower, double upper, double mu, double v) {
  return normal::truncated_sf((z - mu) / v, (lower - mu) / v, (upper - mu) / v).value;
}

void criterion_power() {
  std::mt19937_64 rng(kSeed + 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double alpha = 0.05;

  auto random_interval = [&] {
    TruncationInterval in;
    in.scale = 0.2 + 3.0 * u(rng);
    in.lower = in.scale * (-2.0 + 4.0 * u(rng));
    in.upper = u(rng) < 0.3 ? kUnbounded : in.lower + in.scale * (0.5 + 4.0 * u(rng));
    in.theta = in.lower;
    return in;
  };

  // (a) the expansion equals alpha at mu = 0.
  bool at_zero = true;
  // (b) kappa <= 0.
  int kappa_positive = 0;
  double kappa_max = -kUnbounded;
  for (int i = 0; i < 1000; ++i) {
    const auto in = random_interval();
    const auto p = power_estimate(in, alpha, 0.0);
    at_zero = at_zero && p.power_quadratic == alpha;
    if (p.kappa > 0.0) ++kappa_positive;
    kappa_max = std::max(kappa_max, p.kappa);
  }

  // (c) quadratic expansion against Monte Carlo rejection frequencies.
  const int draws = 200000;
  int mc_checks = 0, mc_misses = 0;
  double worst_z = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto in = random_interval();
    const double v = in.scale;
    for (double frac : {0.025, 0.05, 0.075, 0.1}) {
      const double mu = frac * v;
      const auto p = power_estimate(in, alpha, mu);
      const double fa = normal::cdf((in.lower - mu) / v);
      const double fb = std::isinf(in.upper) ? 1.0 : normal::cdf((in.upper - mu) / v);
      int hits = 0;
      for (int d = 0; d < draws; ++d) {
        const double q = fa + u(rng) * (fb - fa);
        const double x = mu + v * normal::isf(1.0 - q);
        if (x >= p.z_alpha) ++hits;
      }
      const double freq = static_cast<double>(hits) / draws;
      const double se = std::sqrt(freq * (1.0 - freq) / draws);
      const double z = std::abs(p.power_quadratic - freq) / se;
      worst_z = std::max(worst_z, z);
      if (z > 2.0) ++mc_misses;
      ++mc_checks;
    }
  }

  std::ostringstream os;
  os << "power(0)=alpha: " << (at_zero ? "yes" : "no") << "; kappa>0 on " << kappa_positive
     << "/1000 intervals (max " << kappa_max << "); quadratic vs MC: " << mc_misses << "/"
     << mc_checks << " beyond 2 SE (worst " << worst_z << " SE)";
  report(7, at_zero && kappa_positive == 0 && mc_misses == 0,
         "power expansion: exact at 0, kappa <= 0, matches Monte Carlo", os.str());
}

void criterion_sampler() {
  Matrix xi(3, 3), sigma(2, 2);
  xi << 1.0, 0.6, 0.2, 0.6, 1.5, -0.3, 0.2, -0.3, 0.8;
  sigma << 2.0, -0.7, -0.7, 1.0;
  const KroneckerCovariance cov(xi, sigma);
  const KroneckerSampler sampler(cov);
  Rng rng(kSeed);
  const int reps = 100000;
  Matrix sum_outer = Matrix::Zero(6, 6);
  Vector sum = Vector::Zero(6);
  for (int r = 0; r < reps; ++r) {
    const Matrix y = sampler.draw_null(rng);
    const Vector v = Eigen::Map<const Vector>(y.data(), 6);
    sum += v;
    sum_outer += v * v.transpose();
  }
  const Vector mean = sum / reps;
  const Matrix emp = (sum_outer - reps * mean * mean.transpose()) / (reps - 1);
  Matrix truth(6, 6);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) truth.block(2 * a, 2 * b, 2, 2) = xi(a, b) * sigma;
  int outside = 0;
  double worst = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const double se = std::sqrt((truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j)) / reps);
      const double z = std::abs(emp(i, j) - truth(i, j)) / se;
      worst = std::max(worst, z);
      if (z > 4.0) ++outside;
    }
  std::ostringstream os;
  os << outside << "/36 entries beyond 4 SE (worst " << worst << " SE)";
  report(8, outside == 0, "sampler covariance equals xi kron sigma", os.str());
}

}  // namespace

int main() {
  std::cout.precision(6);
  const auto table = fpr_grid();
  std::cout << "# null FPR grid (N=20, T=100, 1000 replicates, alpha=0.05, seed " << kSeed
            << ")\n";
  table.write_csv(std::cout);
  criterion_fpr(table);
  criterion_naive(table);
  criterion_pivot();
  criterion_oracle();
  criterion_line_search();
  criterion_lemma();
  criterion_power();
  criterion_sampler();
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
