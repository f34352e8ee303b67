// Noisy gradient descent: the learner/deleter pair, the convex and
// non-convex hyperparameter recipes, the exact Gaussian pushforward oracle
// for quadratic losses, and the 1-D Gibbs-density oracle.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "unlearn/density.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/types.hpp"

namespace unlearn {

// Privacy/deletion budgets: Renyi order q > 1, privacy budget eps_dp,
// deletion budget eps_dd with 0 < eps_dd <= eps_dp, optional delta for
// (eps, delta) conversion.
struct BudgetSpec {
  double q = 2.0;
  double eps_dp = 1.0;
  double eps_dd = 1.0;
  std::optional<double> delta;

  // Throws std::invalid_argument when a constraint is violated.
  void validate() const;
};

enum class Regime { kConvex, kNonconvex };

// Names the inequality that fixed a recipe output at its returned value,
// e.g. which of the two K_U lower bounds dominated.
struct BindingConstraint {
  std::string name;
  double value = 0.0;
};

// The full hyperparameter bundle produced by a recipe: step size eta,
// gradient-noise variance sigma2, iteration counts K_A (learn) and K_U
// (delete), and the variance of the Gaussian weight initialization.
struct RecipeParams {
  double eta = 0.0;
  double sigma2 = 0.0;
  long long k_learn = 0;
  long long k_delete = 0;
  double init_variance = 0.0;
  Regime regime = Regime::kConvex;

  // Derived constants recorded for reporting.
  double kappa = 0.0;                        // (lambda + beta) / lambda
  // Amplitude a = sigma2 log(B) / 4 certified compatible with the noise
  // level; set by the nonconvex recipe only.
  std::optional<double> nonconvex_amplitude;
  std::vector<BindingConstraint> binding;    // which floors/caps were active
};

// A (possibly degenerate) Gaussian law N(mean, cov); the analytic carrier for
// linear-Gaussian noisy-GD dynamics.
struct GaussianLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Runs exactly K noisy gradient steps
//   theta <- theta - eta * grad rL_D(theta) + sqrt(2 eta) * N(0, sigma2 I)
// from theta0.  sigma2 = 0 yields deterministic gradient descent.  Output is
// fully determined by the rng state.  Throws std::runtime_error naming the
// iteration index if an iterate becomes non-finite.
ModelParams noisy_gd_run(const Objective& obj, const Database& db,
                         const ModelParams& theta0, long long K, double eta,
                         double sigma2, DeterministicRng& rng);

// Learning algorithm: draws theta0 ~ N(0, init_variance * I_d) and runs
// noisy_gd_run for K_A steps.
ModelParams learn(const Objective& obj, const Database& db0,
                  const RecipeParams& recipe, DeterministicRng& rng);

// Deletion algorithm: applies the edit, then runs K_U noisy gradient steps on
// the edited database warm-started at theta_prev.  Stateless: uses nothing
// but (D_prev, u, theta_prev).
ModelParams delete_update(const Objective& obj, const Database& db_prev,
                          const EditRequest& u, const ModelParams& theta_prev,
                          const RecipeParams& recipe, DeterministicRng& rng);

// Convex-regime hyperparameter recipe.  With kappa = (lambda+beta)/lambda:
//   eta    = 1 / (2 (lambda + beta))
//   sigma2 = 4 q L^2 / (lambda eps_dp n^2)
//   K_U    = ceil(4 kappa max{log(eps_dp/eps_dd), log max{5 kappa,
//                                             8 eps_dp r^2 / (q d)}})
//   K_A    = ceil(max{4 kappa log(eps_dp n^2 / (4 q d)), K_U})
//   init   = N(0, sigma2 / (lambda (1 - eta lambda / 2)) I_d)
RecipeParams convex_recipe(double lambda, double beta, double L, long long n,
                           int d, long long edit_batch_size,
                           const BudgetSpec& budget);

// Non-convex-regime recipe (B > 1; requires eps_dp < d):
//   eta    = lambda eps_dd / (64 d q B (beta+lambda)^2)       (cap)
//   K_A    = ceil((2B/(lambda eta)) log(q log(B)/eps_dd))     (floor)
//   K_U    = ceil(K_A_raw - (2B/(lambda eta)) log(log(B) /
//                        (2 (eps_dd + (r/n) log(B)))))        (floor)
//   sigma2 = (q L^2/(eps_dp n^2)) eta max{K_A, K_U}           (floor)
//   init   = N(0, (sigma2/lambda) I_d)
// The returned bundle also records the implied loss amplitude
// a = sigma2 log(B)/4 for the bounded non-convex family.
RecipeParams nonconvex_recipe(double lambda, double beta, double L, double B,
                              long long n, int d, long long edit_batch_size,
                              const BudgetSpec& budget);

// Exact Gaussian pushforward of noisy-GD for quadratic losses:
//   mean <- (I - eta (A + lambda I)) mean + eta A xbar
//   cov  <- M cov M^T + 2 eta sigma2 I,  M = I - eta (A + lambda I)
// iterated K times.  Valid only while clipping stays inactive along the mean
// trajectory; throws std::invalid_argument if a per-record gradient at some
// mean iterate would exceed clip_L.
GaussianLaw gaussian_pushforward(const Objective& obj, const Database& db,
                                 const GaussianLaw& init, long long K,
                                 double eta, double sigma2);

// Gibbs density pi(D)(theta) proportional to exp(-rL_D(theta)/sigma2) on a
// uniform 1-D grid (trapezoid-normalized).  Requires d = 1 and
// obj.reg_lambda > 0 (integrable tails).  The default grid covers +/- 12
// standard deviations of the Gaussian envelope N(0, sigma2/lambda).
Density1D gibbs_oracle_1d(const Objective& obj, const Database& db,
                          double sigma2, const GridSpec& grid);
GridSpec default_gibbs_grid(const Objective& obj, double sigma2,
                            int points = 1 << 14);

}  // namespace unlearn
