#include "ultraheat/grid.hpp"

#include <algorithm>
#include <cmath>

#include "ultraheat/error.hpp"

namespace ultraheat {

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) {
    throw Error(ErrorCode::InvalidArgument, "log grid needs 0 < lo <= hi and points >= 1");
  }
  if (points == 1) return {hi};
  std::vector<double> g(static_cast<std::size_t>(points));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (!(hi >= lo) || points < 1) throw Error(ErrorCode::InvalidArgument, "bad linear grid");
  if (points == 1) return {hi};
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

GridMax refine_max(const std::function<double(double)>& fn, const std::vector<double>& grid,
                   double rel_tol, int max_rounds, int sub_points) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  std::vector<double> xs = grid;
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = fn(xs[i]);

  GridMax best;
  for (int round = 0;; ++round) {
    const auto it = std::max_element(ys.begin(), ys.end());
    const std::size_t i = static_cast<std::size_t>(it - ys.begin());
    const double previous = best.value;
    best.value = *it;
    best.argmax = xs[i];
    best.refinements = round;
    if (xs.size() < 2) return best;
    const double lo = xs[i == 0 ? 0 : i - 1];
    const double hi = xs[std::min(i + 1, xs.size() - 1)];
    if (!(hi > lo) || (hi - lo) <= 1e-15 * hi) return best;
    // A round without gain only means the incumbent sits near the peak; near a
    // smooth maximum the value error shrinks like the bracket width squared.
    const bool settled = std::abs(best.value - previous) <= rel_tol * std::max(1e-300, std::abs(best.value));
    const bool narrow = (hi - lo) <= std::sqrt(rel_tol) * std::max(std::abs(lo), std::abs(hi));
    if (round > 0 && settled && narrow) return best;
    if (round >= max_rounds) {
      throw Error(ErrorCode::GridRefinementFailed,
                  "supremum did not stabilize after " + std::to_string(max_rounds) + " rounds");
    }
    const bool positive = lo > 0.0;
    std::vector<double> nx = positive ? log_grid(lo, hi, sub_points) : linear_grid(lo, hi, sub_points);
    std::vector<double> ny(nx.size());
    bool has_incumbent = false;
    for (std::size_t k = 0; k < nx.size(); ++k) {
      // Reuse the known endpoint values so the maximum never decreases.
      if (k == 0) ny[k] = ys[i == 0 ? 0 : i - 1];
      else if (k + 1 == nx.size()) ny[k] = ys[std::min(i + 1, xs.size() - 1)];
      else if (std::abs(nx[k] - xs[i]) <= 1e-12 * std::abs(xs[i])) {
        // the log midpoint is the incumbent up to rounding; a near-duplicate
        // would become the bracket edge next round
        nx[k] = xs[i];
        ny[k] = ys[i];
        has_incumbent = true;
      } else {
        ny[k] = fn(nx[k]);
      }
    }
    if (!has_incumbent) {
      nx.push_back(xs[i]);
      ny.push_back(ys[i]);
    }
    std::vector<std::size_t> order(nx.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nx[a] < nx[b]; });
    xs.clear();
    ys.clear();
    for (std::size_t k : order) {
      if (!xs.empty() && nx[k] == xs.back()) continue;
      xs.push_back(nx[k]);
      ys.push_back(ny[k]);
    }
  }
}

}  // namespace ultraheat
