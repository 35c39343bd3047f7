#include "knockoff/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "knockoff/io.hpp"

namespace knockoff::lasso {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct Standardized {
  Matrix z;
  Vector center;
  Vector scale;
};

Standardized standardize(const Matrix& x, bool on) {
  const auto n = static_cast<double>(x.rows());
  Standardized s;
  s.center = Vector::Zero(x.cols());
  s.scale = Vector::Ones(x.cols());
  if (!on) {
    s.z = x;
    return s;
  }
  s.z.resize(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double m = x.col(j).mean();
    Vector c = x.col(j).array() - m;
    const double var = c.squaredNorm() / n;
    if (var <= 0.0)
      throw Error("lasso: column " + std::to_string(j) +
                  " is constant after standardization");
    s.center(j) = m;
    s.scale(j) = std::sqrt(var);
    s.z.col(j) = c / s.scale(j);
  }
  return s;
}

// Groups of exactly identical columns (bitwise). The lasso objective cannot
// distinguish members of a group, so the solver canonicalizes each group to
// the symmetric (equal-split) minimizer; this makes entry lambdas of
// duplicated original/knockoff pairs tie instead of depending on sweep order.
std::vector<std::vector<Index>> duplicate_groups(const Matrix& z) {
  std::map<std::string, std::vector<Index>> by_content;
  for (Index j = 0; j < z.cols(); ++j) {
    std::string key(reinterpret_cast<const char*>(z.col(j).data()),
                    sizeof(double) * static_cast<std::size_t>(z.rows()));
    by_content[key].push_back(j);
  }
  std::vector<std::vector<Index>> groups;
  for (auto& [k, v] : by_content)
    if (v.size() > 1) groups.push_back(std::move(v));
  return groups;
}

void equalize_duplicates(const std::vector<std::vector<Index>>& groups, Vector& b) {
  for (const auto& g : groups) {
    double total = 0.0;
    for (Index j : g) total += b(j);
    const double share = total / static_cast<double>(g.size());
    for (Index j : g) b(j) = share;
  }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct FitState {
  Vector b;    // coefficients, solver scale
  double b0 = 0.0;
  long sweeps = 0;
};

// Exact KKT violation for the current (b, b0); gradient is of the pinned
// loss: gaussian (1/2n)RSS, binomial (1/n)NLL.
double exact_kkt(const Matrix& z, const Vector& y, Family family, const FitState& st,
                 double lambda, Vector* grad_out = nullptr) {
  const auto n = static_cast<double>(z.rows());
  Vector g;
  double intercept_viol = 0.0;
  if (family == Family::Gaussian) {
    Vector r = y - Vector::Constant(y.size(), st.b0) - z * st.b;
    g = -(z.transpose() * r) / n;
    intercept_viol = std::abs(r.mean());
  } else {
    Vector eta = Vector::Constant(y.size(), st.b0) + z * st.b;
    Vector mu = eta.unaryExpr([](double v) { return sigmoid(v); });
    g = (z.transpose() * (mu - y)) / n;
    intercept_viol = std::abs((mu - y).mean());
  }
  double worst = intercept_viol;
  for (Index j = 0; j < g.size(); ++j) {
    const double viol = st.b(j) != 0.0
                            ? std::abs(g(j) + lambda * (st.b(j) > 0 ? 1.0 : -1.0))
                            : std::max(0.0, std::abs(g(j)) - lambda);
    worst = std::max(worst, viol);
  }
  if (grad_out) *grad_out = std::move(g);
  return worst;
}

}  // namespace

LassoPath solve_path(const LassoProblem& problem, const PathOptions& options) {
  if (options.grid_size < 2) throw ContractError("lasso: grid_size must be >= 2");
  if (options.tol <= 0.0) throw ContractError("lasso: tol must be positive");
  if (problem.design.rows() != problem.response.size())
    throw DimensionError("lasso: design rows != response length");
  if (!problem.response.allFinite()) throw Error("lasso: non-finite response");
  if (problem.family == Family::Binomial)
    for (Index i = 0; i < problem.response.size(); ++i)
      if (problem.response(i) != 0.0 && problem.response(i) != 1.0)
        throw Error("lasso: binomial response must be 0/1");

  const Index m = problem.design.cols();
  const auto n = static_cast<double>(problem.design.rows());
  Standardized sd = standardize(problem.design, problem.standardize);
  const Matrix& z = sd.z;
  const Vector& y = problem.response;
  const auto groups = duplicate_groups(z);

  // Null-model intercept and lambda_max from the gradient at beta = 0.
  double b0_null;
  Vector g0;
  if (problem.family == Family::Gaussian) {
    b0_null = y.mean();
    g0 = -(z.transpose() * (y.array() - b0_null).matrix()) / n;
  } else {
    const double pbar = std::clamp(y.mean(), 1e-12, 1.0 - 1e-12);
    b0_null = std::log(pbar / (1.0 - pbar));
    g0 = (z.transpose() * (Vector::Constant(y.size(), pbar) - y)) / n;
  }
  double lambda_max = g0.lpNorm<Eigen::Infinity>();
  if (!(lambda_max > 0.0)) lambda_max = 1.0;  // degenerate null response

  LassoPath path;
  path.family = problem.family;
  path.column_center = sd.center;
  path.column_scale = sd.scale;
  path.lambdas.resize(options.grid_size);
  const double lr = std::log(options.lambda_min_ratio);
  for (Index k = 0; k < options.grid_size; ++k)
    path.lambdas(k) = lambda_max * std::exp(lr * static_cast<double>(k) /
                                            static_cast<double>(options.grid_size - 1));
  path.std_coefficients = Matrix::Zero(m, options.grid_size);
  path.coefficients = Matrix::Zero(m, options.grid_size);
  path.intercepts.resize(options.grid_size);
  path.iterations.assign(static_cast<std::size_t>(options.grid_size), 0);

  // Per-column quadratic terms; recomputed per outer IRLS pass for binomial.
  Vector vq = z.array().square().colwise().sum().transpose() / n;

  FitState st;
  st.b = Vector::Zero(m);
  st.b0 = b0_null;

  const double kkt_margin = 0.5 * options.tol;

  for (Index k = 0; k < options.grid_size; ++k) {
    const double lambda = path.lambdas(k);
    st.sweeps = 0;
    std::vector<char> active(static_cast<std::size_t>(m), 0);
    for (Index j = 0; j < m; ++j) active[static_cast<std::size_t>(j)] = st.b(j) != 0.0;

    auto fail = [&](const char* why) {
      throw Error(std::string("lasso: ") + why + " at lambda=" +
                  io::format_double(lambda));
    };

    if (problem.family == Family::Gaussian) {
      Vector r = y - Vector::Constant(y.size(), st.b0) - z * st.b;
      auto sweep = [&](bool full) {
        double max_change = 0.0;
        for (Index j = 0; j < m; ++j) {
          if (!full && !active[static_cast<std::size_t>(j)]) continue;
          if (vq(j) <= 0.0) continue;
          const double c = z.col(j).dot(r) / n + vq(j) * st.b(j);
          const double bn = soft_threshold(c, lambda) / vq(j);
          const double delta = bn - st.b(j);
          if (delta != 0.0) {
            r -= z.col(j) * delta;
            st.b(j) = bn;
            if (bn != 0.0) active[static_cast<std::size_t>(j)] = 1;
            max_change = std::max(max_change, std::abs(delta));
          }
        }
        const double d0 = r.mean();
        if (d0 != 0.0) {
          st.b0 += d0;
          r.array() -= d0;
          max_change = std::max(max_change, std::abs(d0));
        }
        ++st.sweeps;
        return max_change;
      };

      for (;;) {
        const double inner_tol =
            0.1 * options.tol * std::max(1.0, st.b.lpNorm<Eigen::Infinity>());
        while (sweep(false) > inner_tol)
          if (st.sweeps > options.max_iterations) fail("no convergence");
        // Full-gradient KKT scan; re-activate violators.
        r = y - Vector::Constant(y.size(), st.b0) - z * st.b;  // refresh drift
        Vector g;
        const double worst = exact_kkt(z, y, Family::Gaussian, st, lambda, &g);
        if (worst <= kkt_margin) break;
        bool added = false;
        for (Index j = 0; j < m; ++j)
          if (!active[static_cast<std::size_t>(j)] &&
              std::abs(g(j)) > lambda + kkt_margin) {
            active[static_cast<std::size_t>(j)] = 1;
            added = true;
          }
        if (!added) {
          // Violation inside the active set: keep sweeping.
          if (sweep(true) <= 1e-300 || st.sweeps > options.max_iterations)
            fail("KKT not reachable");
        }
        if (st.sweeps > options.max_iterations) fail("no convergence");
      }
    } else {
      // IRLS outer loop with weighted coordinate descent inner loop.
      long outer = 0;
      for (;;) {
        Vector eta = Vector::Constant(y.size(), st.b0) + z * st.b;
        Vector mu = eta.unaryExpr([](double v) { return sigmoid(v); });
        Vector w = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-5);
        Vector r = (y - mu).array() / w.array();  // working residual
        Vector vw = (z.array().square().colwise() * w.array()).colwise().sum() / n;
        const double wsum = w.sum();

        Vector b_before = st.b;
        const double b0_before = st.b0;
        auto wsweep = [&](bool full) {
          double max_change = 0.0;
          for (Index j = 0; j < m; ++j) {
            if (!full && !active[static_cast<std::size_t>(j)]) continue;
            if (vw(j) <= 0.0) continue;
            const double c =
                (z.col(j).array() * w.array() * r.array()).sum() / n + vw(j) * st.b(j);
            const double bn = soft_threshold(c, lambda) / vw(j);
            const double delta = bn - st.b(j);
            if (delta != 0.0) {
              r -= z.col(j) * delta;
              st.b(j) = bn;
              if (bn != 0.0) active[static_cast<std::size_t>(j)] = 1;
              max_change = std::max(max_change, std::abs(delta));
            }
          }
          const double d0 = (w.array() * r.array()).sum() / wsum;
          if (d0 != 0.0) {
            st.b0 += d0;
            r.array() -= d0;
            max_change = std::max(max_change, std::abs(d0));
          }
          ++st.sweeps;
          return max_change;
        };

        const double inner_tol =
            0.1 * options.tol * std::max(1.0, st.b.lpNorm<Eigen::Infinity>());
        while (wsweep(false) > inner_tol)
          if (st.sweeps > options.max_iterations) fail("no convergence (inner)");
        wsweep(true);

        ++outer;
        const double outer_change = std::max(
            (st.b - b_before).lpNorm<Eigen::Infinity>(), std::abs(st.b0 - b0_before));
        Vector g;
        const double worst = exact_kkt(z, y, Family::Binomial, st, lambda, &g);
        if (worst <= kkt_margin && outer_change <= options.tol) break;
        if (worst <= kkt_margin && outer > 3) break;
        for (Index j = 0; j < m; ++j)
          if (std::abs(g(j)) > lambda + kkt_margin)
            active[static_cast<std::size_t>(j)] = 1;
        if (outer > 2000 || st.sweeps > options.max_iterations)
          fail("IRLS no convergence");
      }
    }

    equalize_duplicates(groups, st.b);
    path.std_coefficients.col(k) = st.b;
    path.coefficients.col(k) = st.b.array() / sd.scale.array();
    path.intercepts(k) = st.b0 - path.coefficients.col(k).dot(sd.center);
    path.iterations[static_cast<std::size_t>(k)] = st.sweeps;
  }
  return path;
}

Vector entry_lambdas(const LassoPath& path) {
  Vector z = Vector::Zero(path.coefficients.rows());
  for (Index j = 0; j < path.coefficients.rows(); ++j) {
    for (Index k = 0; k < path.lambdas.size(); ++k) {
      if (path.std_coefficients(j, k) != 0.0) {
        z(j) = path.lambdas(k);  // grid is descending: first hit is the sup
        break;
      }
    }
  }
  return z;
}

double kkt_residual(const LassoProblem& problem, const LassoPath& path, Index k) {
  Standardized sd = standardize(problem.design, problem.standardize);
  FitState st;
  st.b = path.std_coefficients.col(k);
  st.b0 = path.intercepts(k) + path.coefficients.col(k).dot(path.column_center);
  return exact_kkt(sd.z, problem.response, problem.family, st, path.lambdas(k));
}

void write_path_csv(const std::filesystem::path& file, const LassoPath& path) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open for writing: " + file.string());
  out << "lambda,intercept";
  for (Index j = 0; j < path.coefficients.rows(); ++j) out << ",b" << j;
  out << "\n";
  for (Index k = 0; k < path.lambdas.size(); ++k) {
    out << io::format_double(path.lambdas(k)) << ","
        << io::format_double(path.intercepts(k));
    for (Index j = 0; j < path.coefficients.rows(); ++j)
      out << "," << io::format_double(path.coefficients(j, k));
    out << "\n";
  }
}

}  // namespace knockoff::lasso
