// Renyi-divergence calculus: closed forms, theorem-backed budgets,
// composition, conversion, the adaptive reduction, and numeric 1-D
// divergence estimation.
//
// Conventions:
//   * Orders are tracked explicitly; operations that mix different orders
//     throw rather than silently converting.
//   * q <= 1 is rejected everywhere (KL is out of scope).
//   * Infinity is a first-class epsilon value (absolute-continuity
//     violations), not an error.
//   * An all-orders bound (one valid for every q > 1, i.e. a sup-divergence
//     bound) is represented with order_q = +infinity.

#pragma once

#include <string>
#include <vector>

#include "unlearn/density.hpp"
#include "unlearn/noisy_gd.hpp"

namespace unlearn {

// An order-epsilon pair (q, eps) with the rule that produced it.
struct RenyiBound {
  double order_q = 2.0;
  double epsilon = 0.0;
  std::string provenance;
};

// An (eps, delta)-indistinguishability bound.  Renyi conversion is one-sided
// (Renyi divergence is asymmetric), so the direction is recorded instead of
// claiming a symmetric guarantee.
struct DPBound {
  double epsilon = 0.0;
  double delta = 0.0;
  bool one_sided = true;
  std::string provenance;
};

// R_q(N(mu1, sigma2 I) || N(mu2, sigma2 I)) = q |mu1-mu2|^2 / (2 sigma2).
// sigma2 = 0 with mu1 != mu2 yields epsilon = +infinity.
RenyiBound gaussian_renyi(double q, const Eigen::VectorXd& mu1,
                          const Eigen::VectorXd& mu2, double sigma2);

// General Gaussian closed form (distinct covariances):
//   R_q = (q/2) D^T S_q^-1 D - ln(det S_q / (det S1^(1-q) det S2^q)) / (2(q-1)),
// with D = mu1 - mu2 and S_q = q S2 + (1-q) S1.  Returns +infinity when S_q
// is not positive definite.
RenyiBound renyi_gaussian_general(double q, const GaussianLaw& law1,
                                  const GaussianLaw& law2);

// RDP of a K-step noisy-GD release under L-Lipschitz losses:
// eps = q L^2 eta K / (sigma2 n^2).
RenyiBound rdp_noisy_gd_lipschitz(double q, double L, double sigma2,
                                  long long n, double eta, long long K);

// RDP of a K-step noisy-GD release under lambda-strongly-convex smooth
// losses: eps = (4 q L^2 / (lambda sigma2 n^2)) (1 - exp(-lambda eta K / 2)),
// valid for eta < 1/(beta + lambda) (beta supplied for the check).
RenyiBound rdp_noisy_gd_convex(double q, double L, double lambda, double beta,
                               double sigma2, long long n, double eta,
                               long long K);

// Certified per-step deletion budget in the convex regime: the worst-case
// initial divergence 4 q L^2/(lambda sigma2 n^2) contracted by K_U noisy-GD
// steps, exp(-lambda eta K_U / 2).  This is the quantity the convex recipe's
// K_U floor was sized against.
RenyiBound convex_deletion_bound(double q, double L, double lambda,
                                 double sigma2, long long n, double eta,
                                 long long k_delete);

// (eps_q, q) -> (eps_q + log(1/delta)/(q-1), delta), one-sided.
DPBound rdp_to_dp(const RenyiBound& bound, double delta);

// Adaptive composition at a common order: eps = sum eps_i.  All inputs must
// share the same q (all-orders inputs, order_q = +infinity, adapt to any q).
// An empty sequence composes to a zero budget with order_q = +infinity.
RenyiBound compose(const std::vector<RenyiBound>& bounds);

// Reduction from adaptive to non-adaptive data deletion: a (q, eps_dd)
// deletion guarantee plus (q, eps_dp) release privacy gives
// (q, eps_dd + p * eps_dp) against a p-adaptive requester.
RenyiBound adaptive_deletion_bound(double q, double eps_dd, double eps_dp,
                                   long long p);

// Indistinguishability under bounded potential perturbation: two Gibbs laws
// whose potentials differ by at most c satisfy R_q <= 2c/sigma2 for every
// q > 1 (returned with order_q = +infinity).
RenyiBound bounded_perturbation_renyi(double c, double sigma2);

// Weak triangle inequality: R_q(a||b) <= R_q(a||mid) + R_inf(mid||b).
RenyiBound weak_triangle(const RenyiBound& a_to_mid, double mid_to_b_sup);

// Trapezoid estimate of R_q(p || r) on a shared grid, computed in log space
// (safe for epsilon values of order 10^2).  Reports +infinity when p has mass
// where r is zero.
double grid_renyi_1d(const Density1D& p, const Density1D& r, double q);

// Grid estimate of R_inf(p || r) = sup log(p/r) over nodes where p > 0.
double grid_renyi_sup(const Density1D& p, const Density1D& r);

// Convergence of noisy-GD to the Gibbs law in Renyi divergence:
//   q exp(-lambda eta K / (2B)) R0 + 32 d eta q B (beta+lambda)^2 / lambda,
// valid under the step-size cap eta <= lambda / (64 B q^2 (beta+lambda)^2).
double nonconvex_convergence_bound(double q, double lambda, double eta,
                                   long long K, double B, int d, double beta,
                                   double R0);

// Near-optimality of Gibbs sampling:
// excess risk <= (d sigma2 / 2)(log((beta+lambda)/lambda) + sqrt(B)).
double gibbs_excess_risk_bound(int d, double sigma2, double lambda,
                               double beta, double B);

}  // namespace unlearn
