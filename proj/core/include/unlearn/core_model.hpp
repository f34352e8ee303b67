// Core operations on databases, objectives, and risks.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "unlearn/types.hpp"

namespace unlearn {

// Applies an edit request (batch of index-distinct replacements).
// Throws std::invalid_argument on duplicate or out-of-range indices.
Database apply_edit(const Database& db, const EditRequest& u);

// Clip_L(v) = v / max(1, |v|/L).  Output norm <= L, parallel to v, and equal
// to v whenever |v| <= L.  Throws std::invalid_argument for L <= 0.
Eigen::VectorXd clip_gradient(const Eigen::VectorXd& v, double L);

// rL_D(theta) = (1/n) sum_x l(theta;x) + (lambda/2)|theta|^2.
double regularized_objective(const Objective& obj, const Database& db,
                             const ModelParams& theta);

// (1/n) sum_x Clip_L(grad l(theta;x)) + lambda * theta.  When no clip bound
// is set, raw per-record gradients are averaged.
Eigen::VectorXd objective_gradient(const Objective& obj, const Database& db,
                                   const ModelParams& theta);

// Allocation-free variant for hot loops: accumulates the objective gradient
// into `out` (resized by caller), using `scratch` as a per-record buffer.
void objective_gradient_into(const Objective& obj, const Database& db,
                             const ModelParams& theta, Eigen::VectorXd& out,
                             Eigen::VectorXd& scratch);

// Exact minimizer of the regularized objective for the quadratic family:
// theta* = (A + lambda I)^-1 A xbar.  Requires that clipping is not active at
// the optimum; throws std::invalid_argument for non-quadratic losses.
ModelParams quadratic_minimizer(const Objective& obj, const Database& db);

// Monte-Carlo excess empirical risk estimate
//   err(Theta; D) = E[rL_D(Theta) - rL_D(theta*)]
// over a finite sample of model draws, with the standard error of the mean.
struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long count = 0;
};

RiskEstimate excess_empirical_risk(const std::vector<ModelParams>& samples,
                                   const Objective& obj, const Database& db,
                                   const ModelParams& theta_star);

}  // namespace unlearn
