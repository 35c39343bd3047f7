#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "knockoff/diagnostics.hpp"
#include "knockoff/gaussian_knockoffs.hpp"
#include "knockoff/rng.hpp"
#include "oracles.hpp"

using namespace knockoff;
using namespace knockoff::diag;

namespace {

Matrix mvn_sample(Rng& rng, const Vector& mu, const Matrix& sigma, Index n) {
  Eigen::LLT<Matrix> llt(sigma);
  REQUIRE(llt.info() == Eigen::Success);
  Matrix x = rng.normal_matrix(n, mu.size()) * Matrix(llt.matrixL()).transpose();
  x.rowwise() += mu.transpose();
  return x;
}

}  // namespace

TEST_CASE("swap report on degenerate copies has zero gaps") {
  Rng rng(81);
  Matrix x = rng.normal_matrix(500, 4);
  KnockoffPair pair{x, x, "copy", {}};
  SwapDiagnostics d = swap_moment_report(pair);
  CHECK(d.mean_gap.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(d.cov_gap.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(d.cross_symmetry_gap.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_FALSE(d.any_flag());
}

TEST_CASE("swap report accepts exact second-order knockoffs") {
  Rng rng(82);
  const Index p = 4, n = 10000;
  Matrix sigma = Matrix::Constant(p, p, 0.3);
  sigma.diagonal().setConstant(1.5);
  Vector mu = Vector::LinSpaced(p, -1.0, 2.0);
  auto model = gaussian::make_second_order(mu, sigma);
  Matrix x = mvn_sample(rng, mu, sigma, n);
  KnockoffPair pair = gaussian::sample_second_order(model, x, rng);
  SwapDiagnostics d = swap_moment_report(pair);
  CHECK_FALSE(d.any_flag());
}

TEST_CASE("swap report flags column-permuted pseudo-knockoffs") {
  Rng rng(83);
  const Index n = 5000;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.2, 0.2, 4.0;  // unequal variances make the permutation visible
  Matrix x = mvn_sample(rng, Vector::Zero(2), sigma, n);
  Matrix xk(n, 2);
  xk.col(0) = x.col(1);
  xk.col(1) = x.col(0);
  SwapDiagnostics d = swap_moment_report({x, xk, "permuted", {}});
  CHECK(!d.flagged_cov.empty());
}

TEST_CASE("residual cross-correlation accepts independent noise") {
  Rng rng(84);
  Matrix resid = rng.normal_matrix(10000, 5);
  ResidualReport rep = residual_cross_correlation(resid);
  CHECK(rep.flagged.empty());
  for (Index j = 0; j < 5; ++j) CHECK(rep.correlation(j, j) == 1.0);
}

TEST_CASE("residual cross-correlation flags a planted dependence") {
  Rng rng(85);
  Matrix resid = rng.normal_matrix(10000, 3);
  resid.col(2) = 0.5 * resid.col(0) + 0.87 * resid.col(2);
  ResidualReport rep = residual_cross_correlation(resid);
  bool found = false;
  for (auto [a, b] : rep.flagged)
    if (a == 0 && b == 2) found = true;
  CHECK(found);
}

TEST_CASE("kl-hat vanishes for exact knockoffs") {
  // The exchangeable joint density is pointwise invariant under every
  // coordinate swap, so the statistic is zero to roundoff term by term (a
  // stronger statement than mean-zero across replications).
  Rng rng(86);
  const Index p = 3, n = 400;
  Matrix sigma = Matrix::Constant(p, p, 0.25);
  sigma.diagonal().setConstant(1.0);
  Vector mu = Vector::Zero(p);
  auto model = gaussian::make_second_order(mu, sigma);

  for (int rep = 0; rep < 20; ++rep) {
    Matrix x = mvn_sample(rng, mu, sigma, n);
    KnockoffPair pair = gaussian::sample_second_order(model, x, rng);
    Vector kl = gaussian_kl_hat(pair.original, pair.knockoff, mu, sigma, model.s);
    CHECK(kl.lpNorm<Eigen::Infinity>() <= 1e-8);

    // The marginal-times-sampler evaluation agrees when the sampler is exact.
    SamplerSpec exact{mu, sigma, model.s};
    Vector kl2 = gaussian_kl_hat_misspecified(pair.original, pair.knockoff, mu,
                                              sigma, exact);
    CHECK(kl2.lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("kl-hat of identical copies is exactly zero by swap cancellation") {
  // The spec sketch expects a flag here, but the displayed statistic
  // evaluates the same density at the same point after a no-op swap, so it is
  // identically zero: copies are swap-symmetric, just degenerate. The
  // moment report (not kl-hat) is what catches X = Xk with claimed s > 0.
  Rng rng(87);
  const Index p = 2, n = 300;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 1.0;
  Vector s = Vector::Constant(p, 0.5);  // claimed decorrelation that is a lie
  Matrix x = mvn_sample(rng, Vector::Zero(p), sigma, n);
  Vector kl = gaussian_kl_hat(x, x, Vector::Zero(p), sigma, s);
  CHECK(kl.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("kl-hat drifts positive under a misspecified sampler") {
  Rng rng(88);
  const Index p = 3, n = 400;
  Matrix true_sigma = Matrix::Constant(p, p, 0.4);
  true_sigma.diagonal().setConstant(1.0);
  Vector mu = Vector::Zero(p);

  // Sampler fitted on a tiny independent sample: close but wrong.
  Matrix fit_data = mvn_sample(rng, mu, true_sigma, 25);
  auto wrong = gaussian::fit_second_order(DataMatrix::continuous(fit_data));
  SamplerSpec sampler{wrong.mean, wrong.covariance, wrong.s};

  std::vector<std::vector<double>> kls(static_cast<std::size_t>(p));
  for (int rep = 0; rep < 100; ++rep) {
    Matrix x = mvn_sample(rng, mu, true_sigma, n);
    KnockoffPair pair = gaussian::sample_second_order(wrong, x, rng);
    Vector kl =
        gaussian_kl_hat_misspecified(pair.original, pair.knockoff, mu, true_sigma,
                                     sampler);
    for (Index j = 0; j < p; ++j) kls[static_cast<std::size_t>(j)].push_back(kl(j));
  }
  for (Index j = 0; j < p; ++j) {
    const auto& v = kls[static_cast<std::size_t>(j)];
    CHECK(oracles::mean(v) > 3.0 * oracles::se_mean(v));  // positive drift, flagged
  }
}

TEST_CASE("kl-hat antisymmetry under exchanging roles") {
  Rng rng(89);
  const Index p = 3, n = 50;
  Matrix true_sigma = Matrix::Constant(p, p, 0.2);
  true_sigma.diagonal().setConstant(1.0);
  Matrix fit_data = mvn_sample(rng, Vector::Zero(p), true_sigma, 30);
  auto wrong = gaussian::fit_second_order(DataMatrix::continuous(fit_data));
  SamplerSpec sampler{wrong.mean, wrong.covariance, wrong.s};

  Matrix x = mvn_sample(rng, Vector::Zero(p), true_sigma, n);
  KnockoffPair pair = gaussian::sample_second_order(wrong, x, rng);
  Vector kl = gaussian_kl_hat_misspecified(pair.original, pair.knockoff,
                                           Vector::Zero(p), true_sigma, sampler);
  REQUIRE(kl.lpNorm<Eigen::Infinity>() > 1e-4);  // nontrivial values

  const Index j = 1;
  Matrix x2 = pair.original, xk2 = pair.knockoff;
  x2.col(j) = pair.knockoff.col(j);
  xk2.col(j) = pair.original.col(j);
  Vector kl2 = gaussian_kl_hat_misspecified(x2, xk2, Vector::Zero(p), true_sigma,
                                            sampler);
  CHECK(kl2(j) == -kl(j));  // identical evaluations, reversed difference
}

TEST_CASE("kl-hat degenerate handling") {
  Rng rng(90);
  Matrix x = rng.normal_matrix(50, 2);

  SUBCASE("all s = 0 is a no-op and returns zeros") {
    Vector kl = gaussian_kl_hat(x, x, Vector::Zero(2), Matrix::Identity(2, 2),
                                Vector::Zero(2));
    CHECK(kl.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("mixed degenerate coordinates are rejected") {
    Vector s(2);
    s << 0.0, 0.5;
    CHECK_THROWS_AS(
        gaussian_kl_hat(x, x, Vector::Zero(2), Matrix::Identity(2, 2), s), Error);
  }
}
