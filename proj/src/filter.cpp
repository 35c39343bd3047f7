#include "knockoff/filter.hpp"

#include <algorithm>
#include <cmath>

namespace knockoff::filter {

std::string to_string(Mode m) {
  return m == Mode::Knockoff ? "knockoff" : "knockoff_plus";
}

Mode mode_from_string(const std::string& s) {
  if (s == "knockoff") return Mode::Knockoff;
  if (s == "knockoff_plus") return Mode::KnockoffPlus;
  throw ParseError("unknown filter mode: " + s);
}

FeatureStatVector signed_max_lambda(const Vector& z, const Vector& z_tilde) {
  if (z.size() != z_tilde.size())
    throw DimensionError("signed_max_lambda: length mismatch");
  FeatureStatVector fs;
  fs.z = z;
  fs.z_tilde = z_tilde;
  fs.w.resize(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    const double mx = std::max(z(j), z_tilde(j));
    const double d = z(j) - z_tilde(j);
    fs.w(j) = d > 0.0 ? mx : (d < 0.0 ? -mx : 0.0);
  }
  return fs;
}

SelectionResult threshold(const Vector& w, double q, Mode mode) {
  if (!(q > 0.0 && q < 1.0)) throw ContractError("threshold: q must be in (0,1)");
  SelectionResult res;
  res.mode = mode;
  res.q = q;

  // The objective is piecewise constant in t; candidates are the observed
  // magnitudes of nonzero W, so the minimum over t > 0 is exact.
  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(w.size()));
  for (Index j = 0; j < w.size(); ++j)
    if (w(j) != 0.0) candidates.push_back(std::abs(w(j)));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  const double offset = mode == Mode::KnockoffPlus ? 1.0 : 0.0;
  for (double t : candidates) {
    Index neg = 0, pos = 0;
    for (Index j = 0; j < w.size(); ++j) {
      if (w(j) <= -t) ++neg;
      if (w(j) >= t) ++pos;
    }
    const double ratio = (offset + static_cast<double>(neg)) /
                         std::max(1.0, static_cast<double>(pos));
    if (ratio <= q) {
      res.threshold = t;
      break;
    }
  }
  if (std::isfinite(res.threshold))
    for (Index j = 0; j < w.size(); ++j)
      if (w(j) >= res.threshold) res.selected.insert(j);
  return res;
}

Score score(const std::set<Index>& selected, const std::set<Index>& truth) {
  Score s;
  if (selected.empty()) return s;  // fdp = 0 by the "or 1" guard, power = 0
  Index false_disc = 0, true_disc = 0;
  for (Index j : selected) {
    if (truth.count(j))
      ++true_disc;
    else
      ++false_disc;
  }
  s.fdp = static_cast<double>(false_disc) /
          std::max<double>(1.0, static_cast<double>(selected.size()));
  s.power = truth.empty() ? 0.0
                          : static_cast<double>(true_disc) /
                                static_cast<double>(truth.size());
  return s;
}

double fdr_bound(double q, Index n, Index p, double a_n) {
  if (a_n < 0.0) throw ContractError("fdr_bound: a_n must be nonnegative");
  if (n < 1 || p < 2) throw ContractError("fdr_bound: need n >= 1, p >= 2");
  const double nn = static_cast<double>(n);
  const double pp = static_cast<double>(p);
  return q * std::exp(8.0 * nn * a_n * a_n + 8.0 * std::sqrt(nn * std::log(pp)) * a_n);
}

}  // namespace knockoff::filter
