#pragma once

#include <limits>
#include <set>
#include <vector>

#include "knockoff/types.hpp"

// Signed-max-lambda feature statistics, Knockoff/Knockoff+ thresholds,
// FDP/power scoring, and the FDR inflation bound for approximate knockoffs.
namespace knockoff::filter {

struct FeatureStatVector {
  Vector w;        // length p, antisymmetric under swaps
  Vector z;        // entry lambdas of the originals
  Vector z_tilde;  // entry lambdas of the knockoffs
};

enum class Mode { Knockoff, KnockoffPlus };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct SelectionResult {
  double threshold = std::numeric_limits<double>::infinity();
  std::set<Index> selected;  // {j : W_j >= threshold}
  Mode mode = Mode::KnockoffPlus;
  double q = 0.1;
};

// W_j = max(Z_j, Zt_j) * sign(Z_j - Zt_j), with sign(0) = 0.
FeatureStatVector signed_max_lambda(const Vector& z, const Vector& z_tilde);

// Data-dependent threshold: the smallest t in {|W_j| : W_j != 0} satisfying
//   knockoff:   #{j : W_j <= -t} / max(1, #{j : W_j >= t}) <= q
//   knockoff+: (1 + #{j : W_j <= -t}) / max(1, #{j : W_j >= t}) <= q
// +infinity (empty selection) when no candidate qualifies.
SelectionResult threshold(const Vector& w, double q, Mode mode);

struct Score {
  double fdp = 0.0;
  double power = 0.0;
};

// fdp = |selected \ truth| / max(1, |selected|); power = |selected n truth|/|truth|
// (power reported as 0 when the truth is empty).
Score score(const std::set<Index>& selected, const std::set<Index>& truth);

// Theorem-style FDR inflation: q * exp(8*n*a^2 + 8*sqrt(n*log p)*a).
// Monotone nondecreasing in a; equals q at a = 0.
double fdr_bound(double q, Index n, Index p, double a_n);

}  // namespace knockoff::filter
