#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "knockoff/types.hpp"

// Knockoff-quality checks: swap-moment gaps, residual independence, and the
// per-coordinate observed KL in the known-Gaussian regime.
namespace knockoff::diag {

struct SwapDiagnostics {
  Vector mean_gap;        // |mean(X_j) - mean(Xk_j)|
  Vector mean_gap_limit;  // 3 * (se_x + se_xk) per coordinate
  Matrix cov_gap;         // |cov(X) - cov(Xk)| entrywise
  Matrix cov_gap_limit;
  Matrix cross_symmetry_gap;  // |cov(X,Xk) - cov(X,Xk)'|
  Matrix cross_symmetry_gap_limit;
  std::vector<Index> flagged_means;                    // gap > limit
  std::vector<std::pair<Index, Index>> flagged_cov;    // (row, col)
  std::vector<std::pair<Index, Index>> flagged_cross;  // (row, col), row < col

  bool any_flag() const {
    return !flagged_means.empty() || !flagged_cov.empty() || !flagged_cross.empty();
  }
};

// Necessary moment conditions of the swap property, with Monte-Carlo error
// limits evaluated from the sample itself.
SwapDiagnostics swap_moment_report(const KnockoffPair& pair);

void write_swap_report_csv(const std::filesystem::path& path,
                           const SwapDiagnostics& d);

struct ResidualReport {
  Matrix correlation;  // p x p, unit diagonal
  std::vector<std::pair<Index, Index>> flagged;  // |corr| > 3/sqrt(n)
};

// Pairwise correlations of residual columns (X - decoded mean, or
// Xk - decoded mean); under element-wise independence every off-diagonal
// entry sits within Monte-Carlo error of zero.
ResidualReport residual_cross_correlation(const Matrix& residuals);

// Observed per-coordinate KL statistic under the exact joint Gaussian of
// (X, Xk) with mean (mu, mu) and covariance [[S, S-D], [S-D, S]], D=diag(s):
//   KLhat_j = sum_i [ log phi(w_i) - log phi(swap_j(w_i)) ],
// w_i the concatenated i-th rows. Antisymmetric under exchanging the roles of
// X_j and Xk_j; s_j = 0 coordinates are no-op swaps and contribute exactly 0.
// Throws on a singular joint covariance (other than the all-degenerate s = 0
// case).
//
// Note: that joint density is itself invariant under every coordinate swap
// (permuting j and p+j maps the covariance to itself), so this evaluation is
// zero up to roundoff for ANY input; it certifies exactness rather than
// measuring violations. The quantity that detects a misspecified generator
// is the variant below, which pairs the true marginal with the sampler's
// conditional.
Vector gaussian_kl_hat(const Matrix& x, const Matrix& x_tilde, const Vector& mu,
                       const Matrix& sigma, const Vector& s);

struct SamplerSpec {
  Vector mean;        // parameters the knockoff sampler actually used
  Matrix covariance;
  Vector s;
};

// Same displayed sum, evaluated under the joint that actually generated the
// pair when X ~ N(true_mu, true_sigma) rows feed a conditional-Gaussian
// sampler with (possibly different) parameters:
//   f(x, xk) = phi(x; true) * phi(xk; cond_mean(x; sampler), cond_cov(sampler)).
// Zero in expectation iff that joint is exchangeable (sampler == truth);
// positive drift flags misspecification.
Vector gaussian_kl_hat_misspecified(const Matrix& x, const Matrix& x_tilde,
                                    const Vector& true_mu, const Matrix& true_sigma,
                                    const SamplerSpec& sampler);

}  // namespace knockoff::diag
