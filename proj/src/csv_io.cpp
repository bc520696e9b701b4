#include "cpsi/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "cpsi/errors.hpp"

namespace cpsi {

namespace {

using Rows = std::vector<std::vector<std::string>>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Rows split_rows(std::istream& in, char delimiter) {
  Rows rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(delimiter, start);
      cells.push_back(trim(line.substr(start, pos - start)));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool numeric(const std::string& s) { return parse_number(s).has_value(); }

}  // namespace

LabeledSequence read_sequence_csv(std::istream& in, const CsvOptions& opts) {
  const Rows rows = split_rows(in, opts.delimiter);
  if (rows.empty()) throw ParseError("CSV input is empty");

  bool labels = false;
  if (opts.row_labels) {
    labels = *opts.row_labels;
  } else {
    for (std::size_t r = 1; r < rows.size() && !labels; ++r) labels = !numeric(rows[r][0]);
    if (rows.size() == 1) labels = !numeric(rows[0][0]);
  }
  bool header = false;
  if (opts.header) {
    header = *opts.header;
  } else {
    for (std::size_t c = labels ? 1 : 0; c < rows[0].size() && !header; ++c)
      header = !numeric(rows[0][c]);
  }

  const std::size_t first_row = header ? 1 : 0;
  const std::size_t first_col = labels ? 1 : 0;
  if (rows.size() <= first_row) throw ParseError("CSV input has no data rows");
  const std::size_t width = rows[first_row].size();
  if (width <= first_col) throw ParseError("CSV input has no data columns");

  LabeledSequence out;
  out.values.resize(static_cast<Eigen::Index>(rows.size() - first_row),
                    static_cast<Eigen::Index>(width - first_col));
  if (header)
    for (std::size_t c = first_col; c < rows[0].size(); ++c) out.time_labels.push_back(rows[0][c]);
  for (std::size_t r = first_row; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != width)
      throw ParseError("CSV line " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                       " fields, expected " + std::to_string(width));
    if (labels) out.dim_labels.push_back(row[0]);
    for (std::size_t c = first_col; c < width; ++c) {
      const auto v = parse_number(row[c]);
      if (!v)
        throw ParseError("CSV line " + std::to_string(r + 1) + ", field " + std::to_string(c + 1) +
                         ": '" + row[c] + "' is not a number");
      out.values(static_cast<Eigen::Index>(r - first_row), static_cast<Eigen::Index>(c - first_col)) = *v;
    }
  }
  if (header && out.time_labels.size() != static_cast<std::size_t>(out.values.cols()))
    throw ParseError("CSV header has a different number of fields than the data rows");
  return out;
}

LabeledSequence load_sequence_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_sequence_csv(in, opts);
}

Matrix read_matrix_csv(std::istream& in, char delimiter) {
  CsvOptions opts;
  opts.delimiter = delimiter;
  opts.header = false;
  opts.row_labels = false;
  Matrix m = read_sequence_csv(in, opts).values;
  if (m.rows() != m.cols()) throw ParseError("matrix file is not square");
  return m;
}

Matrix load_matrix_csv(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_matrix_csv(in, delimiter);
}

void write_sequence_csv(std::ostream& out, const LabeledSequence& seq, char delimiter) {
  const bool labels = !seq.dim_labels.empty();
  if (!seq.time_labels.empty()) {
    if (labels) out << delimiter;
    for (std::size_t c = 0; c < seq.time_labels.size(); ++c)
      out << (c ? std::string(1, delimiter) : "") << seq.time_labels[c];
    out << '\n';
  }
  char buf[32];
  for (Eigen::Index r = 0; r < seq.values.rows(); ++r) {
    if (labels) out << seq.dim_labels[static_cast<std::size_t>(r)] << delimiter;
    for (Eigen::Index c = 0; c < seq.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", seq.values(r, c));
      if (c) out << delimiter;
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace cpsi
