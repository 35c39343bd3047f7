#pragma once

#include <cstdint>
#include <set>

#include "knockoff/rng.hpp"
#include "knockoff/types.hpp"

// Seeded generators for the two simulation designs and for outcomes with
// alternating +-rho coefficients. Same spec => bit-identical output.
namespace knockoff::simdata {

enum class Setting { S1, S2, HivSignal };

std::string to_string(Setting s);
Setting setting_from_string(const std::string& s);

// Lower-triangular Cholesky factor C of the equicorrelation matrix
// (C C' = R). The designs mix as Z = U * C, so latent rows carry covariance
// C'C (numpy convention; this is what reproduces the documented correlation
// statistics, not R itself).
Matrix equicorrelation_factor(Index dim, double off_diagonal);

// C'C: the exact covariance of the latent rows produced by the mixing above.
Matrix latent_covariance(Index dim, double off_diagonal);

// Setting 1, continuous predictors in [0,1]. Steps, with 0-based column
// indexing (p must be even; Z has 2p columns):
//   a) U: n x 2p iid Uniform(0,1)
//   b) Z = U * C, C = cholesky(equicorrelation(off_diagonal))
//   c) for i = 0..p/2-1:
//        X[:,2i]   = Z[:,4i]   + 0.5 * Z[:,4i+1]^3
//        X[:,2i+1] = Z[:,4i+2] - 0.5 * Z[:,4i+2]^2 + 0.5 * exp(Z[:,4i+3])
//      (i = 0: X0 from Z0,Z1 / X1 from Z2,Z3; i = 1: X2 from Z4,Z5 / X3 from
//       Z6,Z7; ...; i = 49: X98 from Z196,Z197 / X99 from Z198,Z199)
//   d) min-max rescale every column to [0,1]
// off_diagonal is a test hook; the design value is 0.1.
DataMatrix generate_setting1(Index n, Index p, std::uint64_t seed,
                             double off_diagonal = 0.1);

// Setting 2, binary predictors: U n x p iid N(0,1), Z = U * C as above,
// X = indicator(Z > 0).
DataMatrix generate_setting2(Index n, Index p, std::uint64_t seed,
                             double off_diagonal = 0.1);

// The continuous Z matrix underlying setting 2 before thresholding; rows are
// exactly N(0, latent_covariance(p, off_diagonal)). Test hook for studies
// that need a truly Gaussian design with known parameters.
Matrix setting2_latent(Index n, Index p, std::uint64_t seed,
                       double off_diagonal = 0.1);

enum class SupportKind { Leading, Random };

struct Outcome {
  Vector y;
  std::set<Index> true_set;  // empty when m == 0 or rho == 0
  Vector beta;               // length p, alternating +rho/-rho on the support
};

// beta carries +rho, -rho, +rho, ... over the support in ascending index
// order (starting with +rho), zero elsewhere. Gaussian: y = X*beta + N(0,1);
// binomial: y ~ Bernoulli(1/(1+exp(-X*beta))). rho = 0 yields pure noise and
// an empty true_set.
Outcome generate_outcome(const Matrix& x, Index m, double rho, Family family,
                         std::uint64_t seed, SupportKind support = SupportKind::Leading);

struct SimulationSpec {
  Setting setting = Setting::S1;
  Index n = 200;
  Index p = 100;
  Index m = 10;
  double rho = 0.0;
  Family family = Family::Gaussian;
  std::uint64_t seed = 0;
};

DataMatrix generate_design(const SimulationSpec& spec);

}  // namespace knockoff::simdata
