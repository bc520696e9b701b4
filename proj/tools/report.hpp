#pragma once

#include <json.hpp>

#include "cpsi/multi_cp.hpp"
#include "cpsi/selective.hpp"
#include "cpsi/simulation.hpp"

namespace cpsi::report {

using nlohmann::json;

// Non-finite numbers become null.
json number(double v);

json aggregation(const AggregationSpec& spec);
json single_test(const SelectiveTest& test, double alpha);
json local_test(const LocalTest& test, double alpha);
json fpr_table(const FprTable& table);
json histogram(const Histogram& hist);
json ks(const KsResult& ks);

}  // namespace cpsi::report
