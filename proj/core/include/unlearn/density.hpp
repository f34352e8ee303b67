// Discretized 1-D probability densities on uniform grids.

#pragma once

#include <Eigen/Dense>

#include "unlearn/rng.hpp"

namespace unlearn {

// A uniform grid [lo, hi] with `points` nodes (spacing (hi-lo)/(points-1)).
struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int points = 1 << 14;

  void validate() const;  // throws std::invalid_argument
  double step() const { return (hi - lo) / (points - 1); }
  double x(int i) const { return lo + step() * i; }
};

// A nonnegative density sampled at the nodes of a uniform grid, normalized so
// its trapezoid integral is 1.
struct Density1D {
  GridSpec grid;
  Eigen::VectorXd values;  // size grid.points

  // Trapezoid integral of the stored values (1 after normalize()).
  double total_mass() const;
  void normalize();  // throws std::invalid_argument when mass is not positive

  // Inverse-CDF draw (piecewise-linear CDF on the grid).  O(points) per
  // draw; use DensitySampler for bulk sampling.
  double sample(DeterministicRng& rng) const;
};

// Precomputed piecewise-linear CDF for O(log points) inverse-CDF draws.
class DensitySampler {
 public:
  explicit DensitySampler(const Density1D& density);
  double sample(DeterministicRng& rng) const;

 private:
  GridSpec grid_;
  Eigen::VectorXd values_;
  Eigen::VectorXd cdf_;  // cdf_[i] = mass of [lo, x_i]
};

// Bins samples onto `grid` as a piecewise-constant density (count / (N h),
// assigned to the node whose cell contains the sample; out-of-range samples
// are clamped to the boundary cells).
Density1D histogram_density(const Eigen::VectorXd& samples,
                            const GridSpec& grid);

}  // namespace unlearn
