#include "knockoff/sim_data.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace knockoff::simdata {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::S1: return "s1";
    case Setting::S2: return "s2";
    case Setting::HivSignal: return "hiv_signal";
  }
  throw Error("unreachable setting tag");
}

Setting setting_from_string(const std::string& s) {
  if (s == "s1") return Setting::S1;
  if (s == "s2") return Setting::S2;
  if (s == "hiv_signal") return Setting::HivSignal;
  throw ParseError("unknown setting: " + s);
}

Matrix equicorrelation_factor(Index dim, double off_diagonal) {
  Matrix r = Matrix::Constant(dim, dim, off_diagonal);
  r.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success)
    throw Error("equicorrelation matrix is not positive definite");
  return Matrix(llt.matrixL());
}

Matrix latent_covariance(Index dim, double off_diagonal) {
  Matrix c = equicorrelation_factor(dim, off_diagonal);
  return c.transpose() * c;
}

DataMatrix generate_setting1(Index n, Index p, std::uint64_t seed,
                             double off_diagonal) {
  if (p % 2 != 0) throw ContractError("setting 1 requires even p");
  Rng rng(seed);
  Matrix u = rng.uniform_matrix(n, 2 * p);
  Matrix z = u * equicorrelation_factor(2 * p, off_diagonal);
  Matrix x(n, p);
  for (Index i = 0; i < p / 2; ++i) {
    x.col(2 * i) = z.col(4 * i).array() + 0.5 * z.col(4 * i + 1).array().cube();
    x.col(2 * i + 1) = z.col(4 * i + 2).array() -
                       0.5 * z.col(4 * i + 2).array().square() +
                       0.5 * z.col(4 * i + 3).array().exp();
  }
  for (Index j = 0; j < p; ++j) {
    const double lo = x.col(j).minCoeff();
    const double hi = x.col(j).maxCoeff();
    if (!(hi > lo)) throw Error("setting 1: degenerate column " + std::to_string(j));
    x.col(j) = (x.col(j).array() - lo) / (hi - lo);
  }
  return DataMatrix::continuous(std::move(x));
}

Matrix setting2_latent(Index n, Index p, std::uint64_t seed, double off_diagonal) {
  Rng rng(seed);
  Matrix u = rng.normal_matrix(n, p);
  return u * equicorrelation_factor(p, off_diagonal);
}

DataMatrix generate_setting2(Index n, Index p, std::uint64_t seed,
                             double off_diagonal) {
  Matrix z = setting2_latent(n, p, seed, off_diagonal);
  Matrix x = (z.array() > 0.0).cast<double>();
  return DataMatrix::binary(std::move(x));
}

Outcome generate_outcome(const Matrix& x, Index m, double rho, Family family,
                         std::uint64_t seed, SupportKind support) {
  const Index p = x.cols();
  if (m > p) throw ContractError("generate_outcome: m > p");
  Rng rng(seed);

  Outcome out;
  out.beta = Vector::Zero(p);
  std::vector<Index> idx;
  if (support == SupportKind::Leading) {
    for (Index j = 0; j < m; ++j) idx.push_back(j);
  } else {
    idx = rng.sample_without_replacement(p, m);
  }
  if (rho != 0.0) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.beta(idx[k]) = (k % 2 == 0) ? rho : -rho;
      out.true_set.insert(idx[k]);
    }
  }

  Vector mu = x * out.beta;
  out.y.resize(x.rows());
  if (family == Family::Gaussian) {
    for (Index i = 0; i < x.rows(); ++i) out.y(i) = mu(i) + rng.normal();
  } else {
    for (Index i = 0; i < x.rows(); ++i)
      out.y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-mu(i)))) ? 1.0 : 0.0;
  }
  return out;
}

DataMatrix generate_design(const SimulationSpec& spec) {
  switch (spec.setting) {
    case Setting::S1: return generate_setting1(spec.n, spec.p, spec.seed);
    case Setting::S2: return generate_setting2(spec.n, spec.p, spec.seed);
    case Setting::HivSignal:
      throw ContractError("hiv_signal design comes from the HIV dataset, not a simulator");
  }
  throw Error("unreachable setting tag");
}

}  // namespace knockoff::simdata
