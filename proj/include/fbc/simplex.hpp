#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fbc {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  long evaluations = 0;
  bool converged = false;
};

// Derivative-free Nelder-Mead descent. Stops when the spread of simplex
// values drops below `tolerance` or the evaluation budget runs out.
inline SimplexResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double> start, double step = 0.1, double tolerance = 1e-10,
    long max_evaluations = 200000) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("empty start point");

  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  long evals = 0;
  for (std::size_t i = 1; i <= n; ++i) pts[i][i - 1] += step;
  for (std::size_t i = 0; i <= n; ++i) {
    vals[i] = objective(pts[i]);
    ++evals;
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  };

  std::vector<double> centroid(n), trial(n);
  while (evals < max_evaluations) {
    sort_simplex();
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    if (vals[worst] - vals[best] < tolerance) {
      SimplexResult res{pts[best], vals[best], evals, true};
      return res;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coeff) {
      for (std::size_t d = 0; d < n; ++d)
        trial[d] = centroid[d] + coeff * (pts[worst][d] - centroid[d]);
      ++evals;
      return objective(trial);
    };

    const double reflected = blend(-1.0);
    if (reflected < vals[order[0]]) {
      const std::vector<double> refl = trial;
      const double expanded = blend(-2.0);
      if (expanded < reflected) {
        pts[worst] = trial;
        vals[worst] = expanded;
      } else {
        pts[worst] = refl;
        vals[worst] = reflected;
      }
    } else if (reflected < vals[second]) {
      pts[worst] = trial;
      vals[worst] = reflected;
    } else {
      const double contracted = blend(reflected < vals[worst] ? -0.5 : 0.5);
      if (contracted < std::min(reflected, vals[worst])) {
        pts[worst] = trial;
        vals[worst] = contracted;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < n; ++d)
            pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
          vals[i] = objective(pts[i]);
          ++evals;
        }
      }
    }
  }

  sort_simplex();
  return {pts[order[0]], vals[order[0]], evals, false};
}

}  // namespace fbc
