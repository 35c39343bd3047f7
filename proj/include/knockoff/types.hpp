#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace knockoff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or width mismatch between matrices/vectors.
struct DimensionError : Error {
  using Error::Error;
};

// API used out of contract (stale trace, untrained model, ...).
struct ContractError : Error {
  using Error::Error;
};

// Numerical failure during training (non-finite loss).
struct TrainingDivergence : Error {
  using Error::Error;
};

// Requested method is not applicable to the given problem (e.g. fixed-X
// knockoffs with n < 2p); the message names an alternative.
struct UnsupportedError : Error {
  using Error::Error;
};

// Malformed input file; message carries the line number where known.
struct ParseError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Data containers
// ---------------------------------------------------------------------------

enum class ColumnKind { Continuous, Binary };

std::string to_string(ColumnKind k);
ColumnKind column_kind_from_string(const std::string& s);

// Outcome family, shared by the simulators, the lasso solver and the
// experiment runner.
enum class Family { Gaussian, Binomial };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// n x p feature matrix, rows are samples. Column kinds drive the choice of
// reconstruction likelihood and knockoff output mode downstream.
struct DataMatrix {
  Matrix values;                       // n x p
  std::vector<ColumnKind> kinds;       // length p
  std::vector<std::string> col_names;  // optional, length p when present

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  bool all_binary() const;
  bool all_continuous() const;
  void check_consistent() const;

  static DataMatrix continuous(Matrix m);
  static DataMatrix binary(Matrix m);
};

// Original matrix plus its knockoff copy, tagged by the generator that
// produced it.
struct KnockoffPair {
  Matrix original;   // n x p
  Matrix knockoff;   // n x p
  std::string generator;               // e.g. "second_order", "vae:s1-vae"
  std::map<std::string, std::string> provenance;  // seed, config hash, ...

  Index rows() const { return original.rows(); }
  Index cols() const { return original.cols(); }
};

// [X, Xk] side by side; the lasso solver consumes this layout (originals in
// columns 0..p-1, knockoffs in p..2p-1).
Matrix concat_columns(const Matrix& x, const Matrix& xk);

}  // namespace knockoff
