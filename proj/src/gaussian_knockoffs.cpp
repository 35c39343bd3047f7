#include "knockoff/gaussian_knockoffs.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace knockoff::gaussian {

namespace {

// Equicorrelated rule on the correlation scale, rescaled to covariance units.
Vector equicorrelated_s(const Matrix& sigma) {
  const Index p = sigma.cols();
  Vector d = sigma.diagonal();
  for (Index j = 0; j < p; ++j)
    if (!(d(j) > 0.0))
      throw Error("second-order: column " + std::to_string(j) + " has zero variance");
  Vector inv_sd = d.array().rsqrt();
  Matrix corr = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr);
  if (eig.info() != Eigen::Success) throw Error("second-order: eigensolver failed");
  double lam_min = std::max(0.0, eig.eigenvalues().minCoeff());
  if (lam_min < 1e-10) lam_min = 0.0;  // exact degeneracy up to roundoff
  const double s_corr = std::min(2.0 * lam_min, 1.0);
  return s_corr * d;
}

Eigen::LLT<Matrix> ridge_llt(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const double delta = std::max(0.0, -eig.eigenvalues().minCoeff()) + 1e-8;
  llt.compute(m + delta * Matrix::Identity(m.rows(), m.cols()));
  if (llt.info() != Eigen::Success)
    throw Error("matrix not PSD even after ridge repair");
  return llt;
}

void finish_second_order(SecondOrderModel& model) {
  const Index p = model.covariance.cols();
  if (model.s.maxCoeff() == 0.0) {
    // Degenerate knockoffs: copies of the original.
    model.cond_gain = Matrix::Zero(p, p);
    model.cond_chol = Matrix::Zero(p, p);
    return;
  }
  // Documented repair: Sigma + (max(0,-lambda_min) + 1e-8) I before inversion;
  // sample covariances at n ~ 2p are near-singular.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(model.covariance);
  const double delta = std::max(0.0, -eig.eigenvalues().minCoeff()) + 1e-8;
  Eigen::LLT<Matrix> llt(model.covariance +
                         delta * Matrix::Identity(p, p));
  if (llt.info() != Eigen::Success)
    throw Error("second-order: covariance not PSD after ridge repair");
  model.cond_gain = llt.solve(Matrix(model.s.asDiagonal()));
  Matrix v = 2.0 * Matrix(model.s.asDiagonal()) -
             model.s.asDiagonal() * model.cond_gain;
  v = 0.5 * (v + v.transpose()).eval();
  model.cond_chol = ridge_repaired_cholesky(v);
}

}  // namespace

Matrix ridge_repaired_cholesky(const Matrix& m) {
  return Matrix(ridge_llt(m).matrixL());
}

SecondOrderModel make_second_order(Vector mean, Matrix covariance) {
  if (mean.size() != covariance.cols() || covariance.rows() != covariance.cols())
    throw DimensionError("second-order: mean/covariance shape mismatch");
  if ((covariance - covariance.transpose()).lpNorm<Eigen::Infinity>() > 1e-10)
    throw ContractError("second-order: covariance not symmetric");
  SecondOrderModel model;
  model.mean = std::move(mean);
  model.covariance = std::move(covariance);
  model.s = equicorrelated_s(model.covariance);
  finish_second_order(model);
  return model;
}

SecondOrderModel fit_second_order(const DataMatrix& data) {
  const Matrix& x = data.values;
  if (x.rows() < 2) throw ContractError("second-order: need n >= 2 to fit");
  Vector mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean.transpose();
  Matrix cov =
      centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return make_second_order(std::move(mean), std::move(cov));
}

KnockoffPair sample_second_order(const SecondOrderModel& model, const Matrix& x,
                                 Rng& rng) {
  if (x.cols() != model.mean.size())
    throw DimensionError("second-order: data width does not match fitted model");
  KnockoffPair pair;
  pair.original = x;
  pair.generator = "second_order";
  if (model.s.maxCoeff() == 0.0) {
    pair.knockoff = x;
    return pair;
  }
  Matrix centered = x.rowwise() - model.mean.transpose();
  Matrix cond_mean = x - centered * model.cond_gain;
  Matrix noise = rng.normal_matrix(x.rows(), x.cols());
  pair.knockoff = cond_mean + noise * model.cond_chol.transpose();
  return pair;
}

FixedXModel fit_fixed_x(const DataMatrix& data, Rng& rng,
                        const std::optional<Vector>& s_override) {
  const Matrix& x = data.values;
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 2 * p)
    throw UnsupportedError(
        "fixed-X knockoffs require n >= 2p (got n=" + std::to_string(n) +
        ", p=" + std::to_string(p) + "); use second-order or VAE generators");

  FixedXModel model;
  model.center = x.colwise().mean();
  model.scale.resize(p);
  model.x_std.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    Vector c = x.col(j).array() - model.center(j);
    const double norm = c.norm();
    if (!(norm > 0.0))
      throw Error("fixed-X: column " + std::to_string(j) + " is constant");
    model.scale(j) = norm;
    model.x_std.col(j) = c / norm;
  }

  model.gram = model.x_std.transpose() * model.x_std;
  model.gram = 0.5 * (model.gram + model.gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(model.gram);
  const double lam_min = eig.eigenvalues().minCoeff();
  if (lam_min <= 1e-10)
    throw Error("fixed-X: design is rank deficient (lambda_min = " +
                std::to_string(lam_min) + ")");
  if (s_override) {
    if (s_override->size() != p) throw DimensionError("fixed-X: bad s override");
    model.s = *s_override;
  } else {
    model.s = Vector::Constant(p, std::min(2.0 * lam_min, 1.0));
  }

  Eigen::LLT<Matrix> llt(model.gram);
  if (llt.info() != Eigen::Success) throw Error("fixed-X: Gram Cholesky failed");
  model.gain = llt.solve(Matrix(model.s.asDiagonal()));

  if (model.s.maxCoeff() == 0.0) {
    model.chol_upper = Matrix::Zero(p, p);
    model.u_basis = Matrix::Zero(n, p);
    return model;
  }

  Matrix v = 2.0 * Matrix(model.s.asDiagonal()) - model.s.asDiagonal() * model.gain;
  v = 0.5 * (v + v.transpose()).eval();
  model.chol_upper = ridge_repaired_cholesky(v).transpose();

  // Orthonormal basis of a p-dimensional subspace orthogonal to span(X):
  // project a seeded random matrix off the column space, orthonormalize,
  // re-project once to clean up roundoff.
  Matrix r = rng.normal_matrix(n, p);
  for (int pass = 0; pass < 2; ++pass) {
    r -= model.x_std * llt.solve(model.x_std.transpose() * r);
    Eigen::HouseholderQR<Matrix> qr(r);
    r = qr.householderQ() * Matrix::Identity(n, p);
  }
  model.u_basis = r;
  const double align =
      (model.u_basis.transpose() * model.x_std).lpNorm<Eigen::Infinity>();
  if (align > 1e-8)
    throw Error("fixed-X: complement basis not orthogonal to design");
  return model;
}

KnockoffPair sample_fixed_x(const FixedXModel& model, const DataMatrix& data) {
  if (data.values.rows() != model.x_std.rows() ||
      data.values.cols() != model.x_std.cols())
    throw DimensionError("fixed-X: data shape does not match fitted model");
  KnockoffPair pair;
  pair.original = model.x_std;
  pair.generator = "fixed_x";
  pair.provenance["standardized"] = "unit-norm columns";
  if (model.s.maxCoeff() == 0.0) {
    pair.knockoff = model.x_std;
    return pair;
  }
  pair.knockoff = model.x_std - model.x_std * model.gain +
                  model.u_basis * model.chol_upper;
  return pair;
}

}  // namespace knockoff::gaussian
