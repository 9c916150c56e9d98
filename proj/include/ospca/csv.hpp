#pragma once

// Plain matrix CSV: one row per line, comma separated decimals, row-major,
// no header unless requested.

#include <iosfwd>
#include <string>

#include "ospca/matrix.hpp"

namespace ospca {

Matrix read_matrix_csv(std::istream& in, bool skip_header = false);
Matrix read_matrix_csv(const std::string& path, bool skip_header = false);

/// Writes with 17 significant digits so values round-trip exactly.
void write_matrix_csv(std::ostream& out, const Eigen::Ref<const Matrix>& m);
void write_matrix_csv(const std::string& path,
                      const Eigen::Ref<const Matrix>& m);

}  // namespace ospca
