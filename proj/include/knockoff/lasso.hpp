#pragma once

#include <filesystem>
#include <vector>

#include "knockoff/types.hpp"

// L1-penalized linear and logistic regression over a descending lambda grid,
// solved by coordinate descent with warm starts and active sets. The grid is
// what the entry lambdas Z_j = sup{lambda: beta_j(lambda) != 0} are read from,
// so grid density is a first-class parameter.
namespace knockoff::lasso {

using knockoff::Family;

struct LassoProblem {
  Matrix design;    // n x m (typically m = 2p, originals then knockoffs)
  Vector response;  // Gaussian: any finite reals; Binomial: {0,1}
  Family family = Family::Gaussian;
  bool standardize = true;
};

struct PathOptions {
  Index grid_size = 200;
  double lambda_min_ratio = 1e-3;
  double tol = 1e-7;
  long max_iterations = 200000;  // coordinate sweeps per grid point
};

struct LassoPath {
  Vector lambdas;            // strictly decreasing, lambdas(0) = lambda_max
  Matrix coefficients;       // m x |grid|, original scale
  Matrix std_coefficients;   // m x |grid|, standardized scale (solver scale)
  Vector intercepts;         // per-lambda intercept, original scale
  std::vector<long> iterations;  // coordinate sweeps used per grid point
  Family family = Family::Gaussian;
  Vector column_center;      // standardization offsets (zero when off)
  Vector column_scale;       // standardization scales (one when off)
};

// Solves the full path. Loss scaling is pinned: (1/2n)*RSS for gaussian,
// (1/n)*negative log-likelihood for binomial; the intercept is never
// penalized. Every returned grid point satisfies the KKT conditions within
// options.tol. Throws Error naming the lambda if a grid point fails to
// converge within max_iterations.
LassoPath solve_path(const LassoProblem& problem, const PathOptions& options = {});

// Z_j = largest grid lambda at which column j is nonzero; 0 if never active.
Vector entry_lambdas(const LassoPath& path);

// Exact KKT residual of grid point k in the solver's (standardized) scale:
// max over coordinates of the subgradient violation. Exposed for tests and
// diagnostics.
double kkt_residual(const LassoProblem& problem, const LassoPath& path, Index k);

// Debug dump: one row per lambda, columns = intercept then coefficients.
void write_path_csv(const std::filesystem::path& file, const LassoPath& path);

}  // namespace knockoff::lasso
