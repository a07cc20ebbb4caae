#pragma once

#include <functional>
#include <vector>

namespace ultraheat {

/// `points` log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int points);
std::vector<double> linear_grid(double lo, double hi, int points);

struct GridMax {
  double value = 0.0;
  double argmax = 0.0;
  int refinements = 0;
};

/// Maximizes `fn` over a sorted grid, then repeatedly resamples the bracket
/// around the best point on a finer log grid until the maximum changes by less
/// than `rel_tol` and the bracket is narrower than sqrt(rel_tol) relative.
/// Never returns less than the plain grid maximum. Throws
/// GridRefinementFailed if `max_rounds` is exhausted.
GridMax refine_max(const std::function<double(double)>& fn, const std::vector<double>& grid,
                   double rel_tol = 1e-9, int max_rounds = 60, int sub_points = 17);

}  // namespace ultraheat
