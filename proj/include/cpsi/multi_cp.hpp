#pragma once

#include <vector>

#include "cpsi/aggregation.hpp"
#include "cpsi/core_model.hpp"
#include "cpsi/selective.hpp"

namespace cpsi {

// Sliding windows W_h(t) = columns t-h+1 .. t+h (1-based), length 2h.
struct WindowConfig {
  int h = 2;
  bool bonferroni = false;

  // h = nearest integer to log(T), at least 2.
  static WindowConfig for_length(int length, bool bonferroni = false);
  void validate(int length) const;
};

// Splits t in [h, T-h] that are the first argmax of F(S(u)) over
// u in [t-h+1, t+h-1]; F is evaluated on the full sequence.
std::vector<int> local_estimates(const Vector& aggregate_scores, int length, int h);
std::vector<int> local_estimates(const SequenceMatrix& y, const AggregationSpec& spec,
                                 const WindowConfig& cfg);

struct LocalTest {
  int t = 0;             // global split point
  int window_first = 0;  // first window column (0-based)
  // Window-local statistic at the window centre; its t_hat is h.
  SelectiveTest test;
  std::vector<int> selected_dimensions;
};

// Selective test of the window-centred statistic at a local estimate t,
// conditioned on t being a local estimate. Throws ArgumentError when t is
// not in local_estimates().
LocalTest test_local(const SequenceMatrix& y, const AggregationSpec& spec,
                     const KroneckerCovariance& cov, int t, const WindowConfig& cfg);

struct MultiCpReport {
  WindowConfig window;
  std::vector<LocalTest> estimates;  // sorted by t
};

MultiCpReport detect_multiple(const SequenceMatrix& y, const AggregationSpec& spec,
                              const KroneckerCovariance& cov, const WindowConfig& cfg);

}  // namespace cpsi
