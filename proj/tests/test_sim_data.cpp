#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "knockoff/sim_data.hpp"
#include "oracles.hpp"

using namespace knockoff;
using namespace knockoff::simdata;

namespace {

double column_correlation(const Matrix& x, Index a, Index b) {
  const auto n = static_cast<double>(x.rows());
  const double ma = x.col(a).mean(), mb = x.col(b).mean();
  Vector ca = x.col(a).array() - ma, cb = x.col(b).array() - mb;
  return ca.dot(cb) / n / std::sqrt((ca.squaredNorm() / n) * (cb.squaredNorm() / n));
}

}  // namespace

TEST_CASE("setting 1 columns span exactly [0,1]") {
  DataMatrix d = generate_setting1(200, 100, 42);
  CHECK(d.rows() == 200);
  CHECK(d.cols() == 100);
  CHECK(d.all_continuous());
  for (Index j = 0; j < d.cols(); ++j) {
    CHECK(d.values.col(j).minCoeff() == 0.0);
    CHECK(d.values.col(j).maxCoeff() == 1.0);
  }
  CHECK_THROWS_AS(generate_setting1(50, 7, 1), ContractError);
}

TEST_CASE("setting 1 with zero off-diagonal gives uncorrelated columns") {
  // Test hook: identity mixing makes the transformed columns independent.
  std::vector<double> corrs;
  for (int rep = 0; rep < 60; ++rep) {
    DataMatrix d = generate_setting1(200, 20, 1000 + rep, 0.0);
    for (Index j = 0; j + 1 < d.cols(); j += 2)
      corrs.push_back(column_correlation(d.values, j, j + 1));
  }
  const double m = oracles::mean(corrs);
  CHECK(std::abs(m) <= 3.0 * oracles::se_mean(corrs) + 1e-12);
}

TEST_CASE("setting 1 mean absolute pairwise correlation is near 0.07") {
  // Loose check against the documented design property (tolerance 0.03).
  std::vector<double> means;
  for (int rep = 0; rep < 3; ++rep) {
    DataMatrix d = generate_setting1(200, 100, 7 + rep);
    double total = 0.0;
    int count = 0;
    for (Index a = 0; a < d.cols(); ++a)
      for (Index b = a + 1; b < d.cols(); ++b) {
        total += std::abs(column_correlation(d.values, a, b));
        ++count;
      }
    means.push_back(total / count);
  }
  CHECK(std::abs(oracles::mean(means) - 0.07) < 0.03);
}

TEST_CASE("setting 2 is binary with balanced columns") {
  DataMatrix d = generate_setting2(200, 100, 11);
  CHECK(d.all_binary());
  for (Index j = 0; j < d.cols(); ++j)
    for (Index i = 0; i < d.rows(); ++i)
      CHECK((d.values(i, j) == 0.0 || d.values(i, j) == 1.0));
  const double tol = 3.0 * std::sqrt(0.25 / 200.0);
  for (Index j = 0; j < d.cols(); ++j)
    CHECK(std::abs(d.values.col(j).mean() - 0.5) <= tol);
}

TEST_CASE("setting 2 pairwise correlation matches the arcsine identity") {
  // cor(1(Za>0), 1(Zb>0)) = (2/pi) arcsin(rho_ab) for centered bivariate
  // normals, evaluated at the exact latent correlations of the mixing. At
  // rho_ab = 0.1 the identity gives 0.06376856085851985.
  const Index p = 10;
  Matrix cov = latent_covariance(p, 0.1);
  Vector sd = cov.diagonal().array().sqrt();

  std::vector<std::vector<double>> corrs(static_cast<std::size_t>(p - 1));
  for (int rep = 0; rep < 300; ++rep) {
    DataMatrix d = generate_setting2(200, p, 5000 + rep);
    for (Index j = 0; j + 1 < p; ++j)
      corrs[static_cast<std::size_t>(j)].push_back(
          column_correlation(d.values, j, j + 1));
  }
  for (Index j = 0; j + 1 < p; ++j) {
    const double rho = cov(j, j + 1) / (sd(j) * sd(j + 1));
    const double target = 2.0 / M_PI * std::asin(rho);
    const auto& v = corrs[static_cast<std::size_t>(j)];
    CHECK(std::abs(oracles::mean(v) - target) <= 3.0 * oracles::se_mean(v) + 2e-3);
  }
}

TEST_CASE("setting 2 latent hook is the pre-threshold Gaussian") {
  Matrix z = setting2_latent(200, 30, 99);
  DataMatrix d = generate_setting2(200, 30, 99);
  CHECK(((z.array() > 0.0).cast<double>() - d.values.array()).abs().maxCoeff() ==
        0.0);

  // Latent columns carry exactly the mixing covariance C'C.
  const Index p = 6;
  Matrix cov = latent_covariance(p, 0.1);
  Matrix acc = Matrix::Zero(p, p);
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    Matrix zz = setting2_latent(400, p, 300 + rep);
    acc += zz.transpose() * zz / 400.0;
  }
  acc /= static_cast<double>(reps);
  CHECK((acc - cov).lpNorm<Eigen::Infinity>() < 0.01);
}

TEST_CASE("outcome coefficients alternate starting at +rho") {
  DataMatrix d = generate_setting2(100, 20, 3);
  Outcome out = generate_outcome(d.values, 6, 2.5, Family::Gaussian, 17);
  CHECK(out.true_set == std::set<Index>{0, 1, 2, 3, 4, 5});
  for (Index j = 0; j < 6; ++j)
    CHECK(out.beta(j) == (j % 2 == 0 ? 2.5 : -2.5));
  for (Index j = 6; j < 20; ++j) CHECK(out.beta(j) == 0.0);
}

TEST_CASE("zero-rho outcome is pure standard normal noise") {
  DataMatrix d = generate_setting1(200, 10, 4);
  std::vector<double> values;
  for (int rep = 0; rep < 50; ++rep) {
    Outcome out = generate_outcome(d.values, 5, 0.0, Family::Gaussian, 100 + rep);
    CHECK(out.true_set.empty());
    CHECK(out.beta.lpNorm<Eigen::Infinity>() == 0.0);
    for (Index i = 0; i < out.y.size(); ++i) values.push_back(out.y(i));
  }
  const auto n = static_cast<double>(values.size());
  CHECK(std::abs(oracles::mean(values)) < 3.0 / std::sqrt(n));
  CHECK(std::abs(oracles::sample_sd(values) - 1.0) < 0.02);
}

TEST_CASE("two-column identity-like design has mean x1 - x2") {
  Matrix x = Matrix::Identity(6, 2);
  Outcome out = generate_outcome(x, 2, 1.0, Family::Gaussian, 5);
  Vector mu = x * out.beta;
  for (Index i = 0; i < 6; ++i) CHECK(mu(i) == x(i, 0) - x(i, 1));
}

TEST_CASE("binomial outcome follows the logistic probabilities") {
  Matrix x = Matrix::Ones(20000, 1);
  Outcome out = generate_outcome(x, 1, 1.5, Family::Binomial, 8);
  const double p = 1.0 / (1.0 + std::exp(-1.5));
  CHECK(std::abs(out.y.mean() - p) < 3.0 * std::sqrt(p * (1 - p) / 20000.0));
  for (Index i = 0; i < out.y.size(); ++i)
    CHECK((out.y(i) == 0.0 || out.y(i) == 1.0));
}

TEST_CASE("setting 2 gaussian signal-to-noise is near 2 rho^2 for m=10") {
  const double rho = 3.0;
  std::vector<double> ratios;
  for (int rep = 0; rep < 40; ++rep) {
    DataMatrix d = generate_setting2(200, 100, 700 + rep);
    Outcome out = generate_outcome(d.values, 10, rho, Family::Gaussian, 800 + rep);
    Vector mu = d.values * out.beta;
    Vector c = mu.array() - mu.mean();
    ratios.push_back(c.squaredNorm() / 200.0);  // noise variance is 1
  }
  const double snr = oracles::mean(ratios);
  CHECK(snr > 0.7 * 2.0 * rho * rho);
  CHECK(snr < 1.3 * 2.0 * rho * rho);
}

TEST_CASE("random support draws m distinct indices") {
  DataMatrix d = generate_setting2(50, 30, 12);
  Outcome out =
      generate_outcome(d.values, 7, 1.0, Family::Gaussian, 21, SupportKind::Random);
  CHECK(out.true_set.size() == 7);
  // Alternation follows ascending support order.
  int k = 0;
  for (Index j : out.true_set) {
    CHECK(out.beta(j) == (k % 2 == 0 ? 1.0 : -1.0));
    ++k;
  }
}

TEST_CASE("generators are deterministic in the seed") {
  DataMatrix a = generate_setting1(100, 10, 33);
  DataMatrix b = generate_setting1(100, 10, 33);
  CHECK((a.values - b.values).lpNorm<Eigen::Infinity>() == 0.0);
  DataMatrix c = generate_setting1(100, 10, 34);
  CHECK((a.values - c.values).lpNorm<Eigen::Infinity>() != 0.0);

  Outcome o1 = generate_outcome(a.values, 4, 1.0, Family::Binomial, 9);
  Outcome o2 = generate_outcome(a.values, 4, 1.0, Family::Binomial, 9);
  CHECK((o1.y - o2.y).lpNorm<Eigen::Infinity>() == 0.0);
}
