#include "knockoff/diagnostics.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "knockoff/io.hpp"

namespace knockoff::diag {

namespace {

double mean_se(const Vector& col) {
  const auto n = static_cast<double>(col.size());
  const double m = col.mean();
  const double var = (col.array() - m).square().sum() / (n - 1.0);
  return std::sqrt(var / n);
}

// Covariance estimate and its Monte-Carlo standard error for one entry.
std::pair<double, double> cov_entry(const Matrix& a, Index ja, const Matrix& b,
                                    Index jb) {
  const auto n = static_cast<double>(a.rows());
  Vector ca = a.col(ja).array() - a.col(ja).mean();
  Vector cb = b.col(jb).array() - b.col(jb).mean();
  Vector prod = ca.array() * cb.array();
  const double m = prod.sum() / (n - 1.0);
  const double pm = prod.mean();
  const double var = (prod.array() - pm).square().sum() / (n - 1.0);
  return {m, std::sqrt(var / n)};
}

}  // namespace

SwapDiagnostics swap_moment_report(const KnockoffPair& pair) {
  const Matrix& x = pair.original;
  const Matrix& xk = pair.knockoff;
  if (x.rows() != xk.rows() || x.cols() != xk.cols())
    throw DimensionError("swap_moment_report: shape mismatch");
  const Index p = x.cols();

  SwapDiagnostics d;
  d.mean_gap.resize(p);
  d.mean_gap_limit.resize(p);
  for (Index j = 0; j < p; ++j) {
    d.mean_gap(j) = std::abs(x.col(j).mean() - xk.col(j).mean());
    d.mean_gap_limit(j) = 3.0 * (mean_se(x.col(j)) + mean_se(xk.col(j)));
    if (d.mean_gap(j) > d.mean_gap_limit(j)) d.flagged_means.push_back(j);
  }

  d.cov_gap.resize(p, p);
  d.cov_gap_limit.resize(p, p);
  d.cross_symmetry_gap.resize(p, p);
  d.cross_symmetry_gap_limit.resize(p, p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) {
      auto [cx, sx] = cov_entry(x, a, x, b);
      auto [ck, sk] = cov_entry(xk, a, xk, b);
      d.cov_gap(a, b) = std::abs(cx - ck);
      d.cov_gap_limit(a, b) = 3.0 * (sx + sk);
      if (d.cov_gap(a, b) > d.cov_gap_limit(a, b) && a <= b)
        d.flagged_cov.emplace_back(a, b);

      auto [cab, sab] = cov_entry(x, a, xk, b);
      auto [cba, sba] = cov_entry(x, b, xk, a);
      d.cross_symmetry_gap(a, b) = std::abs(cab - cba);
      d.cross_symmetry_gap_limit(a, b) = 3.0 * (sab + sba);
      if (a < b && d.cross_symmetry_gap(a, b) > d.cross_symmetry_gap_limit(a, b))
        d.flagged_cross.emplace_back(a, b);
    }
  }
  return d;
}

void write_swap_report_csv(const std::filesystem::path& path,
                           const SwapDiagnostics& d) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "# flags: means=" << d.flagged_means.size()
      << " cov=" << d.flagged_cov.size() << " cross=" << d.flagged_cross.size()
      << "\n";
  out << "coordinate,mean_gap,mean_gap_limit,flagged\n";
  for (Index j = 0; j < d.mean_gap.size(); ++j) {
    const bool f = std::find(d.flagged_means.begin(), d.flagged_means.end(), j) !=
                   d.flagged_means.end();
    out << j << "," << io::format_double(d.mean_gap(j)) << ","
        << io::format_double(d.mean_gap_limit(j)) << "," << (f ? 1 : 0) << "\n";
  }
}

ResidualReport residual_cross_correlation(const Matrix& residuals) {
  const Index p = residuals.cols();
  const auto n = static_cast<double>(residuals.rows());
  ResidualReport rep;
  rep.correlation = Matrix::Identity(p, p);
  Matrix c = residuals.rowwise() - residuals.colwise().mean();
  Vector sd = (c.array().square().colwise().sum() / n).sqrt();
  const double limit = 3.0 / std::sqrt(n);
  for (Index a = 0; a < p; ++a) {
    for (Index b = a + 1; b < p; ++b) {
      double r = 0.0;
      if (sd(a) > 0.0 && sd(b) > 0.0)
        r = (c.col(a).dot(c.col(b)) / n) / (sd(a) * sd(b));
      rep.correlation(a, b) = rep.correlation(b, a) = r;
      if (std::abs(r) > limit) rep.flagged.emplace_back(a, b);
    }
  }
  return rep;
}

Vector gaussian_kl_hat(const Matrix& x, const Matrix& x_tilde, const Vector& mu,
                       const Matrix& sigma, const Vector& s) {
  const Index p = x.cols();
  const Index n = x.rows();
  if (x_tilde.rows() != n || x_tilde.cols() != p)
    throw DimensionError("gaussian_kl_hat: X and Xk shapes differ");
  if (mu.size() != p || sigma.rows() != p || sigma.cols() != p || s.size() != p)
    throw DimensionError("gaussian_kl_hat: parameter sizes do not match p");

  Vector kl = Vector::Zero(p);
  if (s.lpNorm<Eigen::Infinity>() == 0.0) return kl;  // all swaps are no-ops
  for (Index j = 0; j < p; ++j)
    if (s(j) == 0.0)
      throw Error(
          "gaussian_kl_hat: mixed degenerate coordinates (s_j = 0 with s_k > 0) "
          "make the joint covariance singular");

  // Joint precision of (X, Xk).
  Matrix joint(2 * p, 2 * p);
  Matrix cross = sigma - Matrix(s.asDiagonal());
  joint.topLeftCorner(p, p) = sigma;
  joint.bottomRightCorner(p, p) = sigma;
  joint.topRightCorner(p, p) = cross;
  joint.bottomLeftCorner(p, p) = cross;
  Eigen::LLT<Matrix> llt(joint);
  if (llt.info() != Eigen::Success)
    throw Error("gaussian_kl_hat: singular joint covariance");
  Matrix omega = llt.solve(Matrix::Identity(2 * p, 2 * p));

  // Per-row rank-two update of the quadratic form for each coordinate swap.
  Vector c(p);
  for (Index j = 0; j < p; ++j)
    c(j) = omega(j, j) + omega(p + j, p + j) - 2.0 * omega(j, p + j);
  Vector v(2 * p);
  for (Index i = 0; i < n; ++i) {
    v.head(p) = x.row(i).transpose() - mu;
    v.tail(p) = x_tilde.row(i).transpose() - mu;
    Vector r = omega * v;
    for (Index j = 0; j < p; ++j) {
      const double d = v(j) - v(p + j);
      if (d == 0.0) continue;  // swap is a no-op at this row
      kl(j) += d * (r(p + j) - r(j)) + 0.5 * d * d * c(j);
    }
  }
  return kl;
}

Vector gaussian_kl_hat_misspecified(const Matrix& x, const Matrix& x_tilde,
                                    const Vector& true_mu, const Matrix& true_sigma,
                                    const SamplerSpec& sampler) {
  const Index p = x.cols();
  const Index n = x.rows();
  if (x_tilde.rows() != n || x_tilde.cols() != p)
    throw DimensionError("gaussian_kl_hat_misspecified: X and Xk shapes differ");
  if (true_mu.size() != p || true_sigma.rows() != p || true_sigma.cols() != p)
    throw DimensionError("gaussian_kl_hat_misspecified: true parameter sizes");
  if (sampler.mean.size() != p || sampler.covariance.rows() != p ||
      sampler.s.size() != p)
    throw DimensionError("gaussian_kl_hat_misspecified: sampler parameter sizes");

  Eigen::LLT<Matrix> llt_true(true_sigma);
  if (llt_true.info() != Eigen::Success)
    throw Error("gaussian_kl_hat_misspecified: true covariance not PD");
  Matrix omega0 = llt_true.solve(Matrix::Identity(p, p));

  Eigen::LLT<Matrix> llt_s(sampler.covariance);
  if (llt_s.info() != Eigen::Success)
    throw Error("gaussian_kl_hat_misspecified: sampler covariance not PD");
  Matrix gain = llt_s.solve(Matrix(sampler.s.asDiagonal()));  // Sigma^-1 D
  Matrix cond_cov = 2.0 * Matrix(sampler.s.asDiagonal()) -
                    sampler.s.asDiagonal() * gain;
  cond_cov = 0.5 * (cond_cov + cond_cov.transpose()).eval();
  Eigen::LLT<Matrix> llt_v(cond_cov);
  if (llt_v.info() != Eigen::Success)
    throw Error("gaussian_kl_hat_misspecified: conditional covariance singular");
  Matrix omega_v = llt_v.solve(Matrix::Identity(p, p));

  // log f(x, xk) up to constants: -0.5 q0(x) - 0.5 qv(xk - m(x)),
  // m(x) = x - (x - mu_s)' gain.
  auto neg2_logf = [&](const Vector& xv, const Vector& xkv) {
    Vector cx = xv - true_mu;
    Vector m = xv - gain.transpose() * (xv - sampler.mean);
    Vector ck = xkv - m;
    return cx.dot(omega0 * cx) + ck.dot(omega_v * ck);
  };

  Vector kl = Vector::Zero(p);
  Vector xv(p), xkv(p), xs(p), xks(p);
  for (Index i = 0; i < n; ++i) {
    xv = x.row(i).transpose();
    xkv = x_tilde.row(i).transpose();
    const double base = neg2_logf(xv, xkv);
    for (Index j = 0; j < p; ++j) {
      if (xv(j) == xkv(j)) continue;
      xs = xv;
      xks = xkv;
      std::swap(xs(j), xks(j));
      kl(j) += 0.5 * (neg2_logf(xs, xks) - base);
    }
  }
  return kl;
}

}  // namespace knockoff::diag
