#include "unlearn/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unlearn {

void GridSpec::validate() const {
  if (!(hi > lo)) throw std::invalid_argument("grid: requires hi > lo");
  if (points < 2) throw std::invalid_argument("grid: requires >= 2 points");
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("grid: non-finite bounds");
  }
}

namespace {

double trapezoid_mass(const GridSpec& grid, const Eigen::VectorXd& v) {
  const double interior = v.sum() - 0.5 * (v(0) + v(v.size() - 1));
  return interior * grid.step();
}

}  // namespace

double Density1D::total_mass() const { return trapezoid_mass(grid, values); }

void Density1D::normalize() {
  if (values.size() != grid.points) {
    throw std::invalid_argument("density: value count does not match grid");
  }
  if (values.minCoeff() < 0.0) {
    throw std::invalid_argument("density: negative values");
  }
  const double mass = total_mass();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("density: total mass must be positive finite");
  }
  values /= mass;
}

double Density1D::sample(DeterministicRng& rng) const {
  return DensitySampler(*this).sample(rng);
}

DensitySampler::DensitySampler(const Density1D& density)
    : grid_(density.grid), values_(density.values) {
  grid_.validate();
  if (values_.size() != grid_.points) {
    throw std::invalid_argument("sampler: value count does not match grid");
  }
  cdf_.resize(grid_.points);
  cdf_(0) = 0.0;
  const double h = grid_.step();
  for (int i = 1; i < grid_.points; ++i) {
    cdf_(i) = cdf_(i - 1) + 0.5 * (values_(i - 1) + values_(i)) * h;
  }
  const double total = cdf_(grid_.points - 1);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("sampler: density mass must be positive");
  }
  cdf_ /= total;
}

double DensitySampler::sample(DeterministicRng& rng) const {
  const double u = rng.uniform01_open();
  // First node with cdf >= u; the draw lies in cell [idx-1, idx].
  const double* begin = cdf_.data();
  const double* end = begin + cdf_.size();
  const double* it = std::lower_bound(begin, end, u);
  if (it == begin) return grid_.lo;
  if (it == end) return grid_.hi;
  const int idx = static_cast<int>(it - begin);
  const double c0 = cdf_(idx - 1);
  const double c1 = cdf_(idx);
  const double x0 = grid_.x(idx - 1);
  const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.5;
  // Piecewise-linear CDF within the cell (density treated as flat at the
  // cell's trapezoid average); sub-cell linear interpolation is accurate to
  // O(h^2), which is below every tolerance used against sampled output.
  return x0 + frac * grid_.step();
}

Density1D histogram_density(const Eigen::VectorXd& samples,
                            const GridSpec& grid) {
  grid.validate();
  if (samples.size() == 0) {
    throw std::invalid_argument("histogram: empty sample set");
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(grid.points);
  const double h = grid.step();
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double pos = (samples(i) - grid.lo) / h;
    const long long cell = std::llround(pos);
    const long long idx =
        std::clamp<long long>(cell, 0, static_cast<long long>(grid.points) - 1);
    counts(static_cast<int>(idx)) += 1.0;
  }
  Density1D out;
  out.grid = grid;
  out.values = counts / (static_cast<double>(samples.size()) * h);
  out.normalize();
  return out;
}

}  // namespace unlearn
