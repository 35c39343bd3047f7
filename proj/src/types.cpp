#include "knockoff/types.hpp"

#include <algorithm>

namespace knockoff {

std::string to_string(ColumnKind k) {
  return k == ColumnKind::Continuous ? "continuous" : "binary";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::Continuous;
  if (s == "binary") return ColumnKind::Binary;
  throw ParseError("unknown column kind: " + s);
}

std::string to_string(Family f) {
  return f == Family::Gaussian ? "gaussian" : "binomial";
}

Family family_from_string(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "binomial") return Family::Binomial;
  throw ParseError("unknown family: " + s);
}

bool DataMatrix::all_binary() const {
  return std::all_of(kinds.begin(), kinds.end(),
                     [](ColumnKind k) { return k == ColumnKind::Binary; });
}

bool DataMatrix::all_continuous() const {
  return std::all_of(kinds.begin(), kinds.end(),
                     [](ColumnKind k) { return k == ColumnKind::Continuous; });
}

void DataMatrix::check_consistent() const {
  if (static_cast<Index>(kinds.size()) != values.cols())
    throw DimensionError("DataMatrix: kinds length != column count");
  if (!col_names.empty() && static_cast<Index>(col_names.size()) != values.cols())
    throw DimensionError("DataMatrix: col_names length != column count");
}

DataMatrix DataMatrix::continuous(Matrix m) {
  DataMatrix d;
  d.kinds.assign(static_cast<std::size_t>(m.cols()), ColumnKind::Continuous);
  d.values = std::move(m);
  return d;
}

DataMatrix DataMatrix::binary(Matrix m) {
  DataMatrix d;
  d.kinds.assign(static_cast<std::size_t>(m.cols()), ColumnKind::Binary);
  d.values = std::move(m);
  return d;
}

Matrix concat_columns(const Matrix& x, const Matrix& xk) {
  if (x.rows() != xk.rows() || x.cols() != xk.cols())
    throw DimensionError("concat_columns: shape mismatch between X and knockoff");
  Matrix out(x.rows(), x.cols() + xk.cols());
  out.leftCols(x.cols()) = x;
  out.rightCols(xk.cols()) = xk;
  return out;
}

}  // namespace knockoff
