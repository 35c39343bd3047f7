#pragma once

#include <optional>

#include "knockoff/rng.hpp"
#include "knockoff/types.hpp"

// Baseline knockoff generators: second-order model-X knockoffs (first two
// moments of (X, Xk) invariant under coordinate swaps) and the deterministic
// fixed-X construction with its Gram identities.
namespace knockoff::gaussian {

struct SecondOrderModel {
  Vector mean;        // p
  Matrix covariance;  // p x p, symmetric PSD
  Vector s;           // p, equicorrelated rule, 2*Sigma - diag(s) PSD

  // Sampler pieces, fixed at construction:
  Matrix cond_gain;   // Sigma^-1 * diag(s): Xk_mean = X - (X - mu) * cond_gain
  Matrix cond_chol;   // lower L with L L' = 2D - D Sigma^-1 D (zero when s = 0)
};

// Known-parameter constructor: s from the equicorrelated rule
// s_j = min(2*lambda_min(corr(Sigma)), 1) rescaled to covariance units.
SecondOrderModel make_second_order(Vector mean, Matrix covariance);

// Sample-moment fit; throws naming the column if one has zero variance.
SecondOrderModel fit_second_order(const DataMatrix& data);

// Row-wise conditional Gaussian sampling:
//   Xk | X = x  ~  N(mu + (Sigma - D) Sigma^-1 (x - mu), 2D - D Sigma^-1 D).
KnockoffPair sample_second_order(const SecondOrderModel& model, const Matrix& x,
                                 Rng& rng);

struct FixedXModel {
  Matrix x_std;        // n x p, columns centered and scaled to unit norm
  Matrix gram;         // X'X of the standardized design
  Vector s;            // equicorrelated
  Matrix u_basis;      // n x p orthonormal, u_basis' * x_std = 0
  Matrix gain;         // G^-1 * diag(s)
  Matrix chol_upper;   // C with C'C = 2D - D G^-1 D
  Vector center, scale;
};

// Deterministic construction Xk = X (I - G^-1 D) + U C. Requires n >= 2p
// (UnsupportedError otherwise, telling the caller to use another generator)
// and a full-rank design. The random matrix behind the orthonormal complement
// basis comes from `rng`, so the fit is seed-reproducible.
// `s_override` replaces the equicorrelated s (test hook).
FixedXModel fit_fixed_x(const DataMatrix& data, Rng& rng,
                        const std::optional<Vector>& s_override = std::nullopt);

// Applies the fit; `data` must be the matrix the model was fitted on (same
// shape). The returned pair holds the standardized original, so the Gram
// identities Xk'Xk = X'X and Xk'X = X'X - D hold on pair.original directly.
KnockoffPair sample_fixed_x(const FixedXModel& model, const DataMatrix& data);

// Cholesky with the documented ridge repair: if LLT fails, retry on
// M + (max(0,-lambda_min) + 1e-8) I; throws if still not PD.
Matrix ridge_repaired_cholesky(const Matrix& m);

}  // namespace knockoff::gaussian
