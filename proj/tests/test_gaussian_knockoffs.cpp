#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "knockoff/gaussian_knockoffs.hpp"
#include "knockoff/rng.hpp"
#include "oracles.hpp"

using namespace knockoff;
using namespace knockoff::gaussian;

namespace {

Matrix sample_cov(const Matrix& x) {
  Vector mu = x.colwise().mean();
  Matrix c = x.rowwise() - mu.transpose();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

Matrix cross_cov(const Matrix& a, const Matrix& b) {
  Vector ma = a.colwise().mean(), mb = b.colwise().mean();
  Matrix ca = a.rowwise() - ma.transpose();
  Matrix cb = b.rowwise() - mb.transpose();
  return ca.transpose() * cb / static_cast<double>(a.rows() - 1);
}

// Per-entry Monte-Carlo standard error of cov(a_col, b_col): sd of the
// centered products over sqrt(n).
double cov_entry_se(const Matrix& a, Index ja, const Matrix& b, Index jb) {
  const auto n = static_cast<double>(a.rows());
  Vector ca = a.col(ja).array() - a.col(ja).mean();
  Vector cb = b.col(jb).array() - b.col(jb).mean();
  Vector prod = ca.array() * cb.array();
  const double m = prod.mean();
  const double var = (prod.array() - m).square().sum() / (n - 1.0);
  return std::sqrt(var / n);
}

Matrix random_spd(Rng& rng, Index p) {
  Matrix a = rng.normal_matrix(p, p);
  Matrix s = a * a.transpose() / static_cast<double>(p);
  s += 0.5 * Matrix::Identity(p, p);
  return s;
}

Matrix mvn_sample(Rng& rng, const Vector& mu, const Matrix& sigma, Index n) {
  Eigen::LLT<Matrix> llt(sigma);
  REQUIRE(llt.info() == Eigen::Success);
  Matrix e = rng.normal_matrix(n, mu.size());
  Matrix x = e * Matrix(llt.matrixL()).transpose();
  x.rowwise() += mu.transpose();
  return x;
}

}  // namespace

TEST_CASE("identity sample covariance gives s = 1") {
  Rng rng(41);
  const Index n = 60, p = 5;
  // Orthonormalize centered columns, then rescale: sample covariance = I.
  Matrix r = rng.normal_matrix(n, p);
  r.rowwise() -= r.colwise().mean().eval();
  Eigen::HouseholderQR<Matrix> qr(r);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  q.rowwise() -= q.colwise().mean().eval();  // re-center (nearly a no-op)
  Eigen::HouseholderQR<Matrix> qr2(q);
  q = qr2.householderQ() * Matrix::Identity(n, p);
  Matrix x = q * std::sqrt(static_cast<double>(n - 1));

  SecondOrderModel model = fit_second_order(DataMatrix::continuous(x));
  for (Index j = 0; j < p; ++j) CHECK(model.s(j) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("duplicated column collapses s to zero and knockoffs to copies") {
  Rng rng(42);
  Matrix x = rng.normal_matrix(50, 4);
  x.col(3) = x.col(0);
  SecondOrderModel model = fit_second_order(DataMatrix::continuous(x));
  CHECK(model.s.lpNorm<Eigen::Infinity>() == 0.0);
  KnockoffPair pair = sample_second_order(model, x, rng);
  CHECK((pair.knockoff - x).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("2x2 correlation 0.5 gives s = 1") {
  Matrix sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 1.0;
  SecondOrderModel model = make_second_order(Vector::Zero(2), sigma);
  CHECK(model.s(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.s(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-variance column is reported by index") {
  Rng rng(43);
  Matrix x = rng.normal_matrix(40, 3);
  x.col(2).setConstant(1.0);
  try {
    fit_second_order(DataMatrix::continuous(x));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
}

TEST_CASE("identity covariance with s=1 yields independent N(0,I) knockoffs") {
  Rng rng(44);
  const Index n = 10000, p = 4;
  SecondOrderModel model = make_second_order(Vector::Zero(p), Matrix::Identity(p, p));
  CHECK(model.s.minCoeff() == doctest::Approx(1.0).epsilon(1e-7));
  Matrix x = rng.normal_matrix(n, p);
  KnockoffPair pair = sample_second_order(model, x, rng);

  Matrix cxx = cross_cov(pair.original, pair.knockoff);
  Matrix ckk = sample_cov(pair.knockoff);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      const double se_x = cov_entry_se(pair.original, a, pair.knockoff, b);
      CHECK(std::abs(cxx(a, b)) <= 3.0 * se_x + 1e-4);
      const double want = a == b ? 1.0 : 0.0;
      const double se_k = cov_entry_se(pair.knockoff, a, pair.knockoff, b);
      CHECK(std::abs(ckk(a, b) - want) <= 3.0 * se_k + 1e-4);
    }
  }
}

TEST_CASE("second-order moments match the construction targets") {
  Rng rng(45);
  const Index p = 4, n = 10000;
  Matrix sigma = random_spd(rng, p);
  Vector mu(p);
  mu << 1.0, -2.0, 0.5, 3.0;
  SecondOrderModel model = make_second_order(mu, sigma);
  Matrix x = mvn_sample(rng, mu, sigma, n);
  KnockoffPair pair = sample_second_order(model, x, rng);

  Matrix ckk = sample_cov(pair.knockoff);
  Matrix cxk = cross_cov(pair.original, pair.knockoff);
  Matrix target_xk = sigma - Matrix(model.s.asDiagonal());
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      CHECK(std::abs(ckk(a, b) - sigma(a, b)) <=
            3.0 * cov_entry_se(pair.knockoff, a, pair.knockoff, b) + 1e-3);
      CHECK(std::abs(cxk(a, b) - target_xk(a, b)) <=
            3.0 * cov_entry_se(pair.original, a, pair.knockoff, b) + 1e-3);
    }
  }

  // Mean gap per coordinate.
  for (Index j = 0; j < p; ++j) {
    const double se = oracles::sample_sd(std::vector<double>(
                          pair.knockoff.col(j).data(),
                          pair.knockoff.col(j).data() + n)) /
                      std::sqrt(static_cast<double>(n));
    CHECK(std::abs(pair.knockoff.col(j).mean() - mu(j)) <= 3.0 * se + 1e-3);
  }
}

TEST_CASE("single-swap exchangeability of first two moments") {
  Rng rng(46);
  const Index p = 3, n = 10000;
  Matrix sigma = random_spd(rng, p);
  SecondOrderModel model = make_second_order(Vector::Zero(p), sigma);
  Matrix x = mvn_sample(rng, Vector::Zero(p), sigma, n);
  KnockoffPair pair = sample_second_order(model, x, rng);

  const Index j = 1;  // swap coordinate
  Matrix w(n, 2 * p), ws(n, 2 * p);
  w << pair.original, pair.knockoff;
  ws = w;
  ws.col(j).swap(ws.col(p + j));

  for (Index a = 0; a < 2 * p; ++a) {
    const double se_m =
        oracles::sample_sd(std::vector<double>(w.col(a).data(), w.col(a).data() + n)) /
        std::sqrt(static_cast<double>(n));
    CHECK(std::abs(w.col(a).mean() - ws.col(a).mean()) <= 2.0 * 3.0 * se_m + 1e-6);
  }
  Matrix cw = sample_cov(w), cs = sample_cov(ws);
  for (Index a = 0; a < 2 * p; ++a)
    for (Index b = 0; b < 2 * p; ++b) {
      const double se = cov_entry_se(w, a, w, b) + cov_entry_se(ws, a, ws, b);
      CHECK(std::abs(cw(a, b) - cs(a, b)) <= 3.0 * se + 1e-3);
    }
}

TEST_CASE("fixed-X with orthonormal design: zero alignment, identity Gram") {
  Rng rng(47);
  const Index n = 24, p = 5;
  // Centered orthonormal columns so standardization is a no-op and G = I.
  Matrix r = rng.normal_matrix(n, p);
  r.rowwise() -= r.colwise().mean().eval();
  Eigen::HouseholderQR<Matrix> qr(r);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  q.rowwise() -= q.colwise().mean().eval();
  Eigen::HouseholderQR<Matrix> qr2(q);
  q = qr2.householderQ() * Matrix::Identity(n, p);

  FixedXModel model = fit_fixed_x(DataMatrix::continuous(q), rng);
  CHECK((model.gram - Matrix::Identity(p, p)).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(model.s.minCoeff() == doctest::Approx(1.0).epsilon(1e-10));

  KnockoffPair pair = sample_fixed_x(model, DataMatrix::continuous(q));
  Matrix xtx = pair.knockoff.transpose() * pair.original;
  Matrix xtxt = pair.knockoff.transpose() * pair.knockoff;
  CHECK(xtx.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK((xtxt - Matrix::Identity(p, p)).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("fixed-X s=0 override returns the original matrix") {
  Rng rng(48);
  Matrix x = rng.normal_matrix(30, 6);
  DataMatrix d = DataMatrix::continuous(x);
  FixedXModel model = fit_fixed_x(d, rng, Vector::Zero(6));
  KnockoffPair pair = sample_fixed_x(model, d);
  CHECK((pair.knockoff - pair.original).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("fixed-X Gram identities at simulation scale") {
  Rng rng(49);
  const Index n = 200, p = 100;
  Matrix x = rng.normal_matrix(n, p);
  DataMatrix d = DataMatrix::continuous(x);
  FixedXModel model = fit_fixed_x(d, rng);
  KnockoffPair pair = sample_fixed_x(model, d);

  Matrix g = pair.original.transpose() * pair.original;
  Matrix lhs1 = pair.knockoff.transpose() * pair.knockoff;
  Matrix lhs2 = pair.knockoff.transpose() * pair.original;
  Matrix rhs2 = g - Matrix(model.s.asDiagonal());
  CHECK((lhs1 - g).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK((lhs2 - rhs2).lpNorm<Eigen::Infinity>() < 1e-6);

  // Complement basis orthogonal to the design.
  CHECK((model.u_basis.transpose() * model.x_std).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((model.u_basis.transpose() * model.u_basis - Matrix::Identity(p, p))
            .lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("fixed-X rejects n < 2p naming an alternative") {
  Rng rng(50);
  Matrix x = rng.normal_matrix(30, 20);
  try {
    fit_fixed_x(DataMatrix::continuous(x), rng);
    FAIL("expected throw");
  } catch (const UnsupportedError& e) {
    CHECK(std::string(e.what()).find("n >= 2p") != std::string::npos);
    CHECK(std::string(e.what()).find("generator") != std::string::npos);
  }
}

TEST_CASE("fixed-X rejects rank-deficient designs") {
  Rng rng(51);
  Matrix x = rng.normal_matrix(40, 6);
  x.col(5) = 2.0 * x.col(1);
  CHECK_THROWS_AS(fit_fixed_x(DataMatrix::continuous(x), rng), Error);
}

TEST_CASE("feasibility: cholesky of 2 Sigma - diag(s) succeeds after repair") {
  Rng rng(52);
  for (int rep = 0; rep < 20; ++rep) {
    const Index p = 2 + static_cast<Index>(rng.below(6));
    Matrix sigma = random_spd(rng, p);
    SecondOrderModel model = make_second_order(Vector::Zero(p), sigma);
    Matrix m = 2.0 * sigma - Matrix(model.s.asDiagonal());
    CHECK_NOTHROW(ridge_repaired_cholesky(m));
  }
}
