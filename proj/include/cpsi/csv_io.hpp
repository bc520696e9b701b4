#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpsi/core_model.hpp"

namespace cpsi {

struct CsvOptions {
  char delimiter = ',';
  // Unset: detected from the content (a non-numeric cell marks a header row
  // or a label column).
  std::optional<bool> header;
  std::optional<bool> row_labels;
};

// Rows = dimensions, columns = time points.
struct LabeledSequence {
  Matrix values;
  std::vector<std::string> time_labels;  // empty without a header row
  std::vector<std::string> dim_labels;   // empty without a label column
};

LabeledSequence read_sequence_csv(std::istream& in, const CsvOptions& opts = {});
LabeledSequence load_sequence_csv(const std::string& path, const CsvOptions& opts = {});

// Square numeric matrix (covariance files); no header or labels.
Matrix read_matrix_csv(std::istream& in, char delimiter = ',');
Matrix load_matrix_csv(const std::string& path, char delimiter = ',');

// Writes with 17 significant digits so that reading back is lossless.
void write_sequence_csv(std::ostream& out, const LabeledSequence& seq, char delimiter = ',');

}  // namespace cpsi
