#pragma once

#include <string>
#include <vector>

namespace dynasto::stats {

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample (ties count half)
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Two-sided Mann-Whitney U test. Exact permutation enumeration when both
/// samples have fewer than eight values, tie-corrected normal
/// approximation with continuity correction otherwise.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a,
                                 const std::vector<double>& b);

/// Pairwise dominance effect size in [-1, 1].
double cliffs_delta(const std::vector<double>& a,
                    const std::vector<double>& b);

/// negligible / small / medium / large.
std::string effect_size_band(double delta);

/// "**" for p < 0.01, "*" for p < 0.05, "" otherwise.
std::string significance_stars(double p);

/// ".." for a large effect, "." for a medium one, "" otherwise.
std::string effect_dots(double delta);

}  // namespace dynasto::stats
