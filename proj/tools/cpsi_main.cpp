#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cpsi/csv_io.hpp"
#include "cpsi/errors.hpp"
#include "cpsi/multi_cp.hpp"
#include "report.hpp"

using namespace cpsi;
using report::json;

namespace {

struct CovarianceFlags {
  std::optional<double> xi;
  std::string xi_file;
  std::string control_file;
  std::string control_model = "ar1";
  std::optional<double> sigma;
  std::string sigma_file;

  void add(CLI::App* app) {
    app->add_option("--xi", xi, "AR(1) coefficient of the time covariance");
    app->add_option("--xi-file", xi_file, "time covariance matrix (square CSV)");
    app->add_option("--control-file", control_file, "control sequences for estimating the time covariance");
    app->add_option("--control-model", control_model, "ar1 or toeplitz")
        ->check(CLI::IsMember({"ar1", "toeplitz"}));
    app->add_option("--sigma", sigma, "AR(1) coefficient across dimensions (default: identity)");
    app->add_option("--sigma-file", sigma_file, "dimension covariance matrix (square CSV)");
  }

};

struct Resolved {
  KroneckerCovariance cov;
  json info;
};

Resolved resolve_covariance(const CovarianceFlags& f, int dims, int length, char delimiter) {
  const int time_sources = (f.xi ? 1 : 0) + (f.xi_file.empty() ? 0 : 1) + (f.control_file.empty() ? 0 : 1);
  if (time_sources != 1)
    throw ArgumentError("exactly one of --xi, --xi-file, --control-file is required");
  if (f.sigma && !f.sigma_file.empty())
    throw ArgumentError("--sigma and --sigma-file are mutually exclusive");

  json info;
  Matrix xi;
  if (f.xi) {
    xi = ar1_covariance(*f.xi, length);
    info["xi"] = {{"source", "ar1"}, {"coefficient", *f.xi}};
  } else if (!f.xi_file.empty()) {
    xi = load_matrix_csv(f.xi_file, delimiter);
    if (xi.rows() != length)
      throw ArgumentError("--xi-file is " + std::to_string(xi.rows()) + "x" + std::to_string(xi.cols()) +
                          ", sequence length is " + std::to_string(length));
    info["xi"] = {{"source", "file"}, {"path", f.xi_file}};
  } else {
    CsvOptions opts;
    opts.delimiter = delimiter;
    const auto control = load_sequence_csv(f.control_file, opts);
    const auto model = f.control_model == "toeplitz" ? TimeCovarianceModel::Toeplitz : TimeCovarianceModel::Ar1;
    const auto fit = estimate_time_covariance(SequenceMatrix(control.values), length, model);
    xi = fit.xi;
    info["xi"] = {{"source", "control"},
                  {"path", f.control_file},
                  {"model", f.control_model},
                  {"lag1", fit.lag1},
                  {"rows_used", fit.rows_used}};
  }

  Matrix sigma;
  if (f.sigma) {
    sigma = ar1_covariance(*f.sigma, dims);
    info["sigma"] = {{"source", "ar1"}, {"coefficient", *f.sigma}};
  } else if (!f.sigma_file.empty()) {
    sigma = load_matrix_csv(f.sigma_file, delimiter);
    if (sigma.rows() != dims)
      throw ArgumentError("--sigma-file is " + std::to_string(sigma.rows()) + "x" +
                          std::to_string(sigma.cols()) + ", sequence has " + std::to_string(dims) +
                          " dimensions");
    info["sigma"] = {{"source", "file"}, {"path", f.sigma_file}};
  } else {
    sigma = Matrix::Identity(dims, dims);
    info["sigma"] = {{"source", "identity"}};
  }
  return {KroneckerCovariance(std::move(xi), std::move(sigma)), info};
}

struct AggFlags {
  std::string agg = "dc";
  int k = 1;
  double phi = 0.5;

  void add(CLI::App* app) {
    app->add_option("--agg", agg, "linf, l1, topk or dc")->check(CLI::IsMember({"linf", "l1", "topk", "dc"}));
    app->add_option("--k", k, "rank cutoff for topk");
    app->add_option("--phi", phi, "exponent for dc");
  }

  AggregationSpec spec() const {
    if (agg == "linf") return AggregationSpec::linf();
    if (agg == "l1") return AggregationSpec::l1();
    if (agg == "topk") return AggregationSpec::top_k(k);
    return AggregationSpec::double_cusum(phi);
  }
};

char delimiter_of(const std::string& s) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) throw ArgumentError("--delimiter must be a single character");
  return s[0];
}

// Writes text to path, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
  if (!out) throw ArgumentError("write failed: " + path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> pick_labels(const std::vector<int>& dims, const std::vector<std::string>& labels) {
  std::vector<std::string> out;
  if (labels.empty()) return out;
  for (int d : dims) out.push_back(labels[d]);
  return out;
}

// ---- detect

struct DetectArgs {
  std::string input;
  AggFlags agg;
  CovarianceFlags cov;
  double alpha = 0.05;
  std::optional<int> window_h;
  bool bonferroni = false;
  std::string delimiter = ",";
  bool header = false, no_header = false, labels = false, no_labels = false;
  std::string out;
  std::string format = "json";
};

void add_csv_flags(CLI::App* app, DetectArgs& a) {
  app->add_option("--delimiter", a.delimiter, "field separator (use \\t for tab)");
  app->add_flag("--header", a.header, "first row holds time labels");
  app->add_flag("--no-header", a.no_header, "first row is data");
  app->add_flag("--row-labels", a.labels, "first column holds dimension labels");
  app->add_flag("--no-row-labels", a.no_labels, "first column is data");
}

LabeledSequence load_input(const DetectArgs& a) {
  CsvOptions opts;
  opts.delimiter = delimiter_of(a.delimiter);
  if (a.header && a.no_header) throw ArgumentError("--header and --no-header conflict");
  if (a.labels && a.no_labels) throw ArgumentError("--row-labels and --no-row-labels conflict");
  if (a.header) opts.header = true;
  if (a.no_header) opts.header = false;
  if (a.labels) opts.row_labels = true;
  if (a.no_labels) opts.row_labels = false;
  return load_sequence_csv(a.input, opts);
}

int run_detect(const DetectArgs& a) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ArgumentError("--alpha must lie in (0, 1)");
  const auto data = load_input(a);
  const SequenceMatrix y(data.values);
  const auto spec = a.agg.spec();
  spec.validate(y.dims());
  const auto cov = resolve_covariance(a.cov, y.dims(), y.length(), delimiter_of(a.delimiter));

  json rep = {{"command", "detect"},
              {"input", {{"path", a.input}, {"dims", y.dims()}, {"length", y.length()}}},
              {"aggregation", report::aggregation(spec)},
              {"covariance", cov.info},
              {"alpha", a.alpha}};
  json warnings = json::array();
  std::string csv = "t,k_hat,theta,lower,upper,scale,p_selective,p_naive,reject\n";
  auto csv_row = [&](int t, int k, const SelectiveTest& s) {
    csv += std::to_string(t) + "," + std::to_string(k) + "," + fmt(s.detection.theta) + "," +
           fmt(s.interval.lower) + "," + fmt(s.interval.upper) + "," + fmt(s.interval.scale) + "," +
           fmt(s.p_selective) + "," + fmt(s.p_naive) + "," + (s.p_selective <= a.alpha ? "1" : "0") + "\n";
  };

  if (a.window_h) {
    const WindowConfig cfg{*a.window_h, a.bonferroni};
    const auto multi = detect_multiple(y, spec, cov.cov, cfg);
    rep["mode"] = "windowed";
    rep["window"] = {{"h", cfg.h}, {"bonferroni", cfg.bonferroni}};
    json est = json::array();
    for (const auto& e : multi.estimates) {
      json j = report::local_test(e, a.alpha);
      if (!data.dim_labels.empty()) j["labels"] = pick_labels(e.selected_dimensions, data.dim_labels);
      if (!data.time_labels.empty()) j["time_label"] = data.time_labels[e.t - 1];
      if (e.test.low_precision) warnings.push_back("low precision p-value at t=" + std::to_string(e.t));
      est.push_back(std::move(j));
      csv_row(e.t, e.test.k_hat(), e.test);
    }
    if (multi.estimates.empty()) warnings.push_back("no local estimates");
    rep["estimates"] = std::move(est);
  } else {
    const auto test = run_selective_test(y, spec, cov.cov);
    rep["mode"] = "single";
    json j = report::single_test(test, a.alpha);
    const auto dims = test.detection.selected_dimensions();
    if (!data.dim_labels.empty()) j["labels"] = pick_labels(dims, data.dim_labels);
    if (!data.time_labels.empty()) j["time_label"] = data.time_labels[test.t_hat() - 1];
    if (test.detection.degenerate) warnings.push_back("degenerate detection: every aggregate score is zero");
    if (test.low_precision) warnings.push_back("low precision p-value");
    rep["result"] = std::move(j);
    csv_row(test.t_hat(), test.k_hat(), test);
  }
  rep["warnings"] = warnings;
  for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
  emit(a.out, a.format == "csv" ? csv : dump(rep));
  return 0;
}

// ---- simulate-fpr

struct SimArgs {
  std::string config;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  std::string format = "csv";
};

int run_simulate(const SimArgs& a) {
  auto grid = a.config.empty() ? ExperimentGrid{} : ExperimentGrid::load(a.config);
  if (a.replicates) grid.replicates = *a.replicates;
  if (a.seed) grid.seed = *a.seed;
  grid.validate();
  const auto table = fpr_experiment(grid, a.threads);
  for (const auto& r : table.rows)
    std::cerr << "xi=" << fmt(r.xi) << " sigma=" << fmt(r.sigma) << " spec=" << r.spec.name()
              << " fpr_selective=" << fmt(r.fpr_selective) << " fpr_naive=" << fmt(r.fpr_naive)
              << " stderr=" << fmt(r.mc_stderr) << "\n";
  if (a.format == "json") {
    const json rep = {{"command", "simulate-fpr"},
                      {"grid",
                       {{"N", grid.dims},
                        {"T", grid.length},
                        {"replicates", grid.replicates},
                        {"alpha", grid.alpha},
                        {"seed", grid.seed}}},
                      {"rows", report::fpr_table(table)}};
    emit(a.out, dump(rep));
  } else {
    std::ostringstream s;
    table.write_csv(s);
    emit(a.out, s.str());
  }
  return 0;
}

// ---- pvalue-hist

struct HistArgs {
  std::string input;
  int dims = 20, length = 100;
  double xi = 0.0, sigma = 0.0;
  AggFlags agg;
  int replicates = 1000;
  std::uint64_t seed = 2018;
  int bins = 20;
  std::string which = "selective";
  int threads = 0;
  std::string out;
  std::string format = "csv";
};

std::vector<double> read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        if (lineno == 1 && out.empty()) break;  // header
        throw ParseError(path + ":" + std::to_string(lineno) + ": not a number: " + tok);
      }
      if (!(v >= 0.0 && v <= 1.0))
        throw ParseError(path + ":" + std::to_string(lineno) + ": p-value outside [0, 1]");
      out.push_back(v);
    }
  }
  if (out.empty()) throw ParseError(path + ": no values");
  return out;
}

int run_hist(const HistArgs& a) {
  if (a.bins < 1) throw ArgumentError("--bins must be positive");
  json source;
  std::vector<double> p;
  if (!a.input.empty()) {
    p = read_values(a.input);
    source = {{"source", "file"}, {"path", a.input}};
  } else {
    NullCell cell{a.dims, a.length, a.xi, a.sigma, a.agg.spec(), a.replicates, a.seed};
    auto both = null_p_values(cell, a.threads);
    p = a.which == "naive" ? std::move(both.naive) : std::move(both.selective);
    source = {{"source", "simulation"},
              {"N", a.dims},
              {"T", a.length},
              {"xi", a.xi},
              {"sigma", a.sigma},
              {"aggregation", report::aggregation(cell.spec)},
              {"replicates", a.replicates},
              {"seed", a.seed},
              {"which", a.which}};
  }
  const auto res = pvalue_histogram(p, a.bins);
  std::cerr << "ks statistic=" << fmt(res.ks.statistic) << " p_value=" << fmt(res.ks.p_value)
            << " n=" << res.ks.n << "\n";
  if (a.format == "json") {
    emit(a.out, dump({{"command", "pvalue-hist"},
                      {"input", source},
                      {"bins", report::histogram(res.hist)},
                      {"ks", report::ks(res.ks)}}));
  } else {
    std::string csv = "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < res.hist.counts.size(); ++b)
      csv += fmt(res.hist.edges[b]) + "," + fmt(res.hist.edges[b + 1]) + "," +
             std::to_string(res.hist.counts[b]) + "\n";
    emit(a.out, csv);
  }
  return 0;
}

// ---- power-curve

struct PowerArgs {
  DetectArgs detect;
  std::optional<double> lower, upper, scale;
  double mu_max = 1.0;  // in units of the scale
  int points = 11;
};

int run_power(const PowerArgs& a) {
  const double alpha = a.detect.alpha;
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("--alpha must lie in (0, 1)");
  if (a.points < 2) throw ArgumentError("--points must be at least 2");
  if (!(a.mu_max > 0.0)) throw ArgumentError("--mu-max must be positive");

  TruncationInterval in;
  json source;
  const bool explicit_interval = a.lower || a.upper || a.scale;
  if (explicit_interval == !a.detect.input.empty())
    throw ArgumentError("give either an input CSV or --lower/--upper/--scale");
  if (explicit_interval) {
    in.lower = a.lower.value_or(-kUnbounded);
    in.upper = a.upper.value_or(kUnbounded);
    in.scale = a.scale.value_or(1.0);
    if (!(in.lower < in.upper) || !(in.scale > 0.0)) throw ArgumentError("need lower < upper and scale > 0");
    in.theta = std::isfinite(in.lower) ? in.lower : 0.0;
    source = {{"source", "interval"}};
  } else {
    const auto data = load_input(a.detect);
    const SequenceMatrix y(data.values);
    const auto spec = a.detect.agg.spec();
    spec.validate(y.dims());
    const auto cov = resolve_covariance(a.detect.cov, y.dims(), y.length(), delimiter_of(a.detect.delimiter));
    const auto test = run_selective_test(y, spec, cov.cov);
    in = test.interval;
    source = {{"source", "detection"},
              {"path", a.detect.input},
              {"aggregation", report::aggregation(spec)},
              {"covariance", cov.info},
              {"t_hat", test.t_hat()},
              {"theta", test.detection.theta}};
  }

  json rows = json::array();
  std::string csv = "mu,power_quadratic,power_lower_bound\n";
  double kappa = 0.0, z = 0.0;
  for (int i = 0; i < a.points; ++i) {
    const double mu = a.mu_max * in.scale * i / (a.points - 1);
    const auto pe = power_estimate(in, alpha, mu);
    kappa = pe.kappa;
    z = pe.z_alpha;
    rows.push_back({{"mu", mu}, {"power_quadratic", pe.power_quadratic}, {"power_lower_bound", pe.power_lower_bound}});
    csv += fmt(mu) + "," + fmt(pe.power_quadratic) + "," + fmt(pe.power_lower_bound) + "\n";
  }
  if (a.detect.format == "json") {
    emit(a.detect.out, dump({{"command", "power-curve"},
                             {"input", source},
                             {"alpha", alpha},
                             {"interval",
                              {{"lower", report::number(in.lower)},
                               {"upper", report::number(in.upper)},
                               {"scale", in.scale}}},
                             {"z_alpha", report::number(z)},
                             {"kappa", kappa},
                             {"rows", rows}}));
  } else {
    emit(a.detect.out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective inference for change points in multi-dimensional sequences"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cpsi 0.1.0");

  DetectArgs det;
  auto* cmd_detect = app.add_subcommand("detect", "detect a change point and test it");
  cmd_detect->add_option("input", det.input, "sequence CSV, rows = dimensions, columns = time")->required();
  det.agg.add(cmd_detect);
  det.cov.add(cmd_detect);
  cmd_detect->add_option("--alpha", det.alpha, "test level");
  cmd_detect->add_option("--window-h", det.window_h, "half window width; enables windowed mode");
  cmd_detect->add_flag("--bonferroni", det.bonferroni, "scale windowed p-values by the number of estimates");
  add_csv_flags(cmd_detect, det);
  cmd_detect->add_option("--out", det.out, "output path (default stdout)");
  cmd_detect->add_option("--format", det.format)->check(CLI::IsMember({"json", "csv"}));

  SimArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate-fpr", "null rejection rates over a grid");
  cmd_sim->add_option("--config", sim.config, "grid file (key = value lines)")->check(CLI::ExistingFile);
  cmd_sim->add_option("--replicates", sim.replicates);
  cmd_sim->add_option("--seed", sim.seed);
  cmd_sim->add_option("--threads", sim.threads, "worker threads (default CPSI_THREADS or 1)");
  cmd_sim->add_option("--out", sim.out);
  cmd_sim->add_option("--format", sim.format)->check(CLI::IsMember({"json", "csv"}));

  HistArgs hist;
  auto* cmd_hist = app.add_subcommand("pvalue-hist", "histogram and KS test of p-values");
  cmd_hist->add_option("--input", hist.input, "file of p-values; otherwise a null cell is simulated");
  cmd_hist->add_option("--N", hist.dims);
  cmd_hist->add_option("--T", hist.length);
  cmd_hist->add_option("--xi", hist.xi);
  cmd_hist->add_option("--sigma", hist.sigma);
  hist.agg.add(cmd_hist);
  cmd_hist->add_option("--replicates", hist.replicates);
  cmd_hist->add_option("--seed", hist.seed);
  cmd_hist->add_option("--bins", hist.bins);
  cmd_hist->add_option("--which", hist.which)->check(CLI::IsMember({"selective", "naive"}));
  cmd_hist->add_option("--threads", hist.threads);
  cmd_hist->add_option("--out", hist.out);
  cmd_hist->add_option("--format", hist.format)->check(CLI::IsMember({"json", "csv"}));

  PowerArgs pow;
  pow.detect.format = "csv";
  auto* cmd_pow = app.add_subcommand("power-curve", "local power expansion of the selective test");
  cmd_pow->add_option("input", pow.detect.input, "sequence CSV");
  pow.detect.agg.add(cmd_pow);
  pow.detect.cov.add(cmd_pow);
  add_csv_flags(cmd_pow, pow.detect);
  cmd_pow->add_option("--alpha", pow.detect.alpha);
  cmd_pow->add_option("--lower", pow.lower, "truncation lower bound");
  cmd_pow->add_option("--upper", pow.upper, "truncation upper bound");
  cmd_pow->add_option("--scale", pow.scale, "null standard deviation");
  cmd_pow->add_option("--mu-max", pow.mu_max, "largest mu, in units of the scale");
  cmd_pow->add_option("--points", pow.points);
  cmd_pow->add_option("--out", pow.detect.out);
  cmd_pow->add_option("--format", pow.detect.format)->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_detect) return run_detect(det);
    if (*cmd_sim) return run_simulate(sim);
    if (*cmd_hist) return run_hist(hist);
    if (*cmd_pow) return run_power(pow);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ConsistencyError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
