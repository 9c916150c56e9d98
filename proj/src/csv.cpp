#include "ospca/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace ospca {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw InputError(fmt::format("line {}: cannot parse '{}' as a number",
                                 line, field));
  }
  return value;
}

}  // namespace

Matrix read_matrix_csv(std::istream& in, bool skip_header) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_header && line_no == 1) continue;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      values.push_back(parse_field(view.substr(start, comma - start), line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw InputError(fmt::format("line {}: expected {} fields, found {}",
                                   line_no, cols, count));
    }
    ++rows;
  }
  if (rows == 0) throw InputError("CSV input contains no data rows");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * cols + j];
  require_finite(m, "CSV input");
  return m;
}

Matrix read_matrix_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  try {
    return read_matrix_csv(in, skip_header);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::Ref<const Matrix>& m) {
  std::string buf;
  for (Index i = 0; i < m.rows(); ++i) {
    buf.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) buf.push_back(',');
      fmt::format_to(std::back_inserter(buf), "{:.17g}", m(i, j));
    }
    buf.push_back('\n');
    out << buf;
  }
}

void write_matrix_csv(const std::string& path,
                      const Eigen::Ref<const Matrix>& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_matrix_csv(out, m);
}

}  // namespace ospca
