#include "report.hpp"

#include <cmath>

namespace cpsi::report {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json aggregation(const AggregationSpec& spec) {
  json j = {{"name", spec.name()}};
  switch (spec.kind) {
    case AggregationKind::LInf:
      j["kind"] = "linf";
      break;
    case AggregationKind::L1:
      j["kind"] = "l1";
      break;
    case AggregationKind::TopK:
      j["kind"] = "topk";
      j["k"] = spec.k;
      break;
    case AggregationKind::DoubleCusum:
      j["kind"] = "dc";
      j["phi"] = spec.phi;
      break;
    case AggregationKind::CustomWrag:
      j["kind"] = "custom";
      break;
  }
  return j;
}

namespace {

json interval(const TruncationInterval& in) {
  return {{"lower", number(in.lower)},
          {"upper", number(in.upper)},
          {"scale", in.scale},
          {"snapped", in.snapped}};
}

}  // namespace

json single_test(const SelectiveTest& test, double alpha) {
  const auto& d = test.detection;
  return {{"t_hat", d.t_hat},
          {"k_hat", d.k_hat},
          {"weight_row", d.weight_row},
          {"theta", d.theta},
          {"selected_dimensions", d.selected_dimensions()},
          {"interval", interval(test.interval)},
          {"p_selective", test.p_selective},
          {"p_naive", test.p_naive},
          {"reject", test.p_selective <= alpha},
          {"low_precision", test.low_precision}};
}

json local_test(const LocalTest& e, double alpha) {
  const auto& d = e.test.detection;
  return {{"t", e.t},
          {"window_first", e.window_first + 1},
          {"k_hat", d.k_hat},
          {"theta", d.theta},
          {"selected_dimensions", e.selected_dimensions},
          {"interval", interval(e.test.interval)},
          {"p_selective", e.test.p_selective},
          {"p_naive", e.test.p_naive},
          {"reject", e.test.p_selective <= alpha},
          {"low_precision", e.test.low_precision}};
}

json fpr_table(const FprTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"xi", r.xi},
                    {"sigma", r.sigma},
                    {"spec", r.spec.name()},
                    {"k", r.k},
                    {"fpr_selective", r.fpr_selective},
                    {"fpr_naive", r.fpr_naive},
                    {"stderr", r.mc_stderr},
                    {"replicates", r.replicates}});
  return rows;
}

json histogram(const Histogram& hist) {
  json bins = json::array();
  for (std::size_t b = 0; b < hist.counts.size(); ++b)
    bins.push_back({{"bin_left", hist.edges[b]},
                    {"bin_right", hist.edges[b + 1]},
                    {"count", hist.counts[b]}});
  return bins;
}

json ks(const KsResult& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"n", r.n}};
}

}  // namespace cpsi::report
