#include "cpsi/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cpsi/errors.hpp"
#include "cpsi/selective.hpp"

namespace cpsi {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != text.size() || text.empty())
    throw ParseError("grid key '" + key + "': '" + text + "' is not a number");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != text.size() || text.empty())
    throw ParseError("grid key '" + key + "': '" + text + "' is not an integer");
  return v;
}

int rank_cutoff_column(const AggregationSpec& spec, int dims) {
  switch (spec.kind) {
    case AggregationKind::LInf:
      return 1;
    case AggregationKind::L1:
      return dims;
    case AggregationKind::TopK:
      return spec.k;
    default:
      return 0;
  }
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t replicate) {
  return splitmix64(splitmix64(splitmix64(seed) ^ cell) ^ replicate);
}

KroneckerSampler::KroneckerSampler(KroneckerCovariance cov) : cov_(std::move(cov)) {}

Matrix KroneckerSampler::draw_null(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(cov_.dims(), cov_.length());
  for (int c = 0; c < z.cols(); ++c)
    for (int r = 0; r < z.rows(); ++r) z(r, c) = normal(rng);
  return cov_.sigma_factor().triangularView<Eigen::Lower>() * z *
         cov_.xi_factor().transpose().triangularView<Eigen::Upper>();
}

Matrix KroneckerSampler::draw(const Matrix& mean, Rng& rng) const {
  if (mean.rows() != cov_.dims() || mean.cols() != cov_.length())
    throw ArgumentError("mean matrix does not match the covariance shape");
  return mean + draw_null(rng);
}

SequenceMatrix sample_sequence(const Matrix& mean, const KroneckerCovariance& cov, Rng& rng) {
  return SequenceMatrix(KroneckerSampler(cov).draw(mean, rng));
}

int default_threads() {
  if (const char* env = std::getenv("CPSI_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = default_threads();
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void ExperimentGrid::validate() const {
  if (dims < 1) throw ArgumentError("grid N must be at least 1");
  if (length < 2) throw ArgumentError("grid T must be at least 2");
  if (replicates < 1) throw ArgumentError("grid replicates must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("grid alpha must lie in (0, 1)");
  if (xi_values.empty() || sigma_values.empty() || specs.empty())
    throw ArgumentError("grid needs at least one xi, sigma and spec");
  for (double v : xi_values)
    if (!(v >= 0.0 && v < 1.0)) throw ArgumentError("grid xi values must lie in [0, 1)");
  for (double v : sigma_values)
    if (!(v >= 0.0 && v < 1.0)) throw ArgumentError("grid sigma values must lie in [0, 1)");
  for (const auto& s : specs) s.validate(dims);
}

ExperimentGrid ExperimentGrid::parse(std::istream& in) {
  ExperimentGrid g;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("grid line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "N") {
      g.dims = static_cast<int>(parse_integer(key, value));
    } else if (key == "T") {
      g.length = static_cast<int>(parse_integer(key, value));
    } else if (key == "xi" || key == "sigma") {
      std::vector<double> vals;
      for (const auto& item : split_list(value)) vals.push_back(parse_real(key, item));
      (key == "xi" ? g.xi_values : g.sigma_values) = vals;
    } else if (key == "specs") {
      g.specs.clear();
      for (const auto& item : split_list(value)) {
        try {
          g.specs.push_back(AggregationSpec::parse(item));
        } catch (const ArgumentError& e) {
          throw ParseError(std::string("grid key 'specs': ") + e.what());
        }
      }
    } else if (key == "replicates") {
      g.replicates = static_cast<int>(parse_integer(key, value));
    } else if (key == "alpha") {
      g.alpha = parse_real(key, value);
    } else if (key == "seed") {
      std::size_t used = 0;
      try {
        g.seed = std::stoull(value, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used != value.size() || value.empty() || value[0] == '-')
        throw ParseError("grid key 'seed': '" + value + "' is not an unsigned integer");
    } else {
      throw ParseError("grid line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  g.validate();
  return g;
}

ExperimentGrid ExperimentGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid file " + path);
  return parse(in);
}

KroneckerCovariance cell_covariance(int dims, int length, double xi, double sigma) {
  return KroneckerCovariance(ar1_covariance(xi, length), ar1_covariance(sigma, dims));
}

void FprTable::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(10);
  out << "xi,sigma,spec,k,fpr_selective,fpr_naive,stderr,replicates\n";
  for (const auto& r : rows)
    out << r.xi << ',' << r.sigma << ',' << r.spec.name() << ',' << r.k << ',' << r.fpr_selective
        << ',' << r.fpr_naive << ',' << r.mc_stderr << ',' << r.replicates << '\n';
  out.precision(old_precision);
}

FprTable fpr_experiment(const ExperimentGrid& grid, int threads) {
  grid.validate();
  const int n_specs = static_cast<int>(grid.specs.size());
  const int n_xi = static_cast<int>(grid.xi_values.size());
  FprTable table;
  for (int si = 0; si < static_cast<int>(grid.sigma_values.size()); ++si) {
    for (int xi_i = 0; xi_i < n_xi; ++xi_i) {
      const double xi = grid.xi_values[xi_i];
      const double sigma = grid.sigma_values[si];
      const std::uint64_t cell = static_cast<std::uint64_t>(si) * n_xi + xi_i;
      const KroneckerSampler sampler(cell_covariance(grid.dims, grid.length, xi, sigma));

      // reject[r * n_specs + s] = (selective, naive) rejections of replicate r.
      std::vector<std::pair<char, char>> reject(static_cast<std::size_t>(grid.replicates) *
                                                n_specs);
      parallel_for(grid.replicates, threads, [&](int r) {
        Rng rng(substream_seed(grid.seed, cell, r));
        const SequenceMatrix y(sampler.draw_null(rng));
        const CusumProfile profile(y);
        for (int s = 0; s < n_specs; ++s) {
          const auto test = selective_test(detect_single(profile, grid.specs[s]),
                                           sampler.covariance());
          reject[static_cast<std::size_t>(r) * n_specs + s] = {test.p_selective <= grid.alpha,
                                                               test.p_naive <= grid.alpha};
        }
      });

      for (int s = 0; s < n_specs; ++s) {
        int sel = 0, naive = 0;
        for (int r = 0; r < grid.replicates; ++r) {
          sel += reject[static_cast<std::size_t>(r) * n_specs + s].first;
          naive += reject[static_cast<std::size_t>(r) * n_specs + s].second;
        }
        FprRow row;
        row.xi = xi;
        row.sigma = sigma;
        row.spec = grid.specs[s];
        row.k = rank_cutoff_column(grid.specs[s], grid.dims);
        row.replicates = grid.replicates;
        row.fpr_selective = static_cast<double>(sel) / grid.replicates;
        row.fpr_naive = static_cast<double>(naive) / grid.replicates;
        row.mc_stderr = std::sqrt(row.fpr_selective * (1.0 - row.fpr_selective) / grid.replicates);
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

NullPValues null_p_values(const NullCell& cell, int threads) {
  if (cell.replicates < 1) throw ArgumentError("replicates must be at least 1");
  const KroneckerSampler sampler(cell_covariance(cell.dims, cell.length, cell.xi, cell.sigma));
  cell.spec.validate(cell.dims);
  NullPValues out;
  out.selective.resize(cell.replicates);
  out.naive.resize(cell.replicates);
  parallel_for(cell.replicates, threads, [&](int r) {
    Rng rng(substream_seed(cell.seed, 0, r));
    const SequenceMatrix y(sampler.draw_null(rng));
    const auto test = selective_test(detect_single(y, cell.spec), sampler.covariance());
    out.selective[r] = test.p_selective;
    out.naive[r] = test.p_naive;
  });
  return out;
}

Histogram histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw ArgumentError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  for (int b = 0; b <= bins; ++b) h.edges.push_back(static_cast<double>(b) / bins);
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("histogram values must lie in [0, 1]");
    const int b = std::min(bins - 1, static_cast<int>(v * bins));
    ++h.counts[b];
  }
  return h;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // The alternating series converges slowly for small lambda; use the
  // theta-function form there.
  if (lambda < 1.18) {
    const double pi = 3.14159265358979323846;
    const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
    double sum = 0.0;
    for (int k = 1; k <= 7; ++k) sum += std::pow(y, (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("KS test needs at least one value");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  KsResult out;
  out.statistic = d;
  out.n = static_cast<int>(values.size());
  const double rn = std::sqrt(n);
  out.p_value = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
  return out;
}

PValueHistogram pvalue_histogram(const std::vector<double>& p_values, int bins) {
  return {histogram(p_values, bins), ks_uniform(p_values)};
}

}  // namespace cpsi
