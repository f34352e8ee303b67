#include "unlearn/noisy_gd.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "unlearn/core_model.hpp"

namespace unlearn {

namespace {

// The convex recipes place eta at half the stability threshold 1/(beta+lambda).
constexpr const char* kEtaHalfStability = "eta.half_stability_1_over_2(lambda+beta)";
constexpr const char* kSigmaPrivacyFloor = "sigma2.privacy_floor_4qL2_over_lambda_eps_n2";
constexpr const char* kDeleteDeletionTerm = "k_delete.deletion_term_4k_log(eps_dp/eps_dd)";
constexpr const char* kDeleteUtilityTerm = "k_delete.utility_term_4k_log_max(5k,8eps_r2/qd)";
constexpr const char* kLearnPrivacyTerm = "k_learn.privacy_term_4k_log(eps_n2/4qd)";
constexpr const char* kLearnDeleteFloor = "k_learn.k_delete_floor";
constexpr const char* kEtaNonconvexCap = "eta.cap_lambda_eps_dd_over_64dqB(beta+lambda)2";
constexpr const char* kLearnMixingFloor = "k_learn.mixing_floor_2B_log(q_logB/eps_dd)";
constexpr const char* kDeleteMixingFloor = "k_delete.mixing_floor_k_learn_minus_savings";
constexpr const char* kSigmaNonconvexFloor = "sigma2.privacy_floor_qL2_eta_maxK_over_eps_n2";

void require_positive(double value, const char* what) {
  if (!(value > 0.0)) {
    throw std::invalid_argument(std::string("recipe: ") + what +
                                " must be > 0");
  }
}

}  // namespace

void BudgetSpec::validate() const {
  if (!(q > 1.0)) {
    throw std::invalid_argument("budget: Renyi order q must be > 1");
  }
  if (!(eps_dd > 0.0) || !(eps_dd <= eps_dp)) {
    throw std::invalid_argument("budget: requires 0 < eps_dd <= eps_dp");
  }
  if (delta.has_value() && !(*delta > 0.0 && *delta < 1.0)) {
    throw std::invalid_argument("budget: delta must lie in (0, 1)");
  }
}

ModelParams noisy_gd_run(const Objective& obj, const Database& db,
                         const ModelParams& theta0, long long K, double eta,
                         double sigma2, DeterministicRng& rng) {
  if (K < 0) throw std::invalid_argument("noisy_gd_run: K must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("noisy_gd_run: eta must be > 0");
  if (sigma2 < 0.0) {
    throw std::invalid_argument("noisy_gd_run: sigma2 must be >= 0");
  }
  const int d = static_cast<int>(theta0.size());
  ModelParams theta = theta0;
  Eigen::VectorXd grad(d);
  Eigen::VectorXd scratch(d);
  const double noise_scale = std::sqrt(2.0 * eta * sigma2);
  for (long long k = 0; k < K; ++k) {
    objective_gradient_into(obj, db, theta, grad, scratch);
    theta.noalias() -= eta * grad;
    if (noise_scale > 0.0) {
      for (int j = 0; j < d; ++j) theta(j) += noise_scale * rng.normal01();
    }
    if (!theta.allFinite()) {
      std::ostringstream msg;
      msg << "noisy_gd_run: non-finite iterate at step " << k;
      throw std::runtime_error(msg.str());
    }
  }
  return theta;
}

ModelParams learn(const Objective& obj, const Database& db0,
                  const RecipeParams& recipe, DeterministicRng& rng) {
  const int d = obj.loss.dimension;
  ModelParams theta0(d);
  const double init_scale = std::sqrt(std::max(recipe.init_variance, 0.0));
  for (int j = 0; j < d; ++j) theta0(j) = init_scale * rng.normal01();
  return noisy_gd_run(obj, db0, theta0, recipe.k_learn, recipe.eta,
                      recipe.sigma2, rng);
}

ModelParams delete_update(const Objective& obj, const Database& db_prev,
                          const EditRequest& u, const ModelParams& theta_prev,
                          const RecipeParams& recipe, DeterministicRng& rng) {
  const Database edited = apply_edit(db_prev, u);
  return noisy_gd_run(obj, edited, theta_prev, recipe.k_delete, recipe.eta,
                      recipe.sigma2, rng);
}

RecipeParams convex_recipe(double lambda, double beta, double L, long long n,
                           int d, long long edit_batch_size,
                           const BudgetSpec& budget) {
  budget.validate();
  require_positive(lambda, "lambda");
  require_positive(beta, "beta");
  require_positive(L, "L");
  if (n <= 0) throw std::invalid_argument("recipe: n must be > 0");
  if (d <= 0) throw std::invalid_argument("recipe: d must be > 0");
  if (edit_batch_size < 1 || edit_batch_size > n) {
    throw std::invalid_argument("recipe: edit batch size must be in [1, n]");
  }

  const double q = budget.q;
  const double kappa = (lambda + beta) / lambda;
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const double r = static_cast<double>(edit_batch_size);

  RecipeParams p;
  p.regime = Regime::kConvex;
  p.kappa = kappa;
  p.eta = 1.0 / (2.0 * (lambda + beta));
  p.sigma2 = 4.0 * q * L * L / (lambda * budget.eps_dp * nn);
  p.binding.push_back({kEtaHalfStability, p.eta});
  p.binding.push_back({kSigmaPrivacyFloor, p.sigma2});

  const double deletion_term =
      4.0 * kappa * std::log(budget.eps_dp / budget.eps_dd);
  const double utility_inner =
      std::max(5.0 * kappa, 8.0 * budget.eps_dp * r * r / (q * d));
  const double utility_term = 4.0 * kappa * std::log(utility_inner);
  const double ku_raw = std::max(deletion_term, utility_term);
  p.k_delete = static_cast<long long>(std::ceil(std::max(ku_raw, 0.0)));
  p.binding.push_back(deletion_term >= utility_term
                          ? BindingConstraint{kDeleteDeletionTerm, deletion_term}
                          : BindingConstraint{kDeleteUtilityTerm, utility_term});

  const double ka_privacy =
      4.0 * kappa * std::log(budget.eps_dp * nn / (4.0 * q * d));
  const double ka_raw = std::max(ka_privacy, static_cast<double>(p.k_delete));
  p.k_learn = static_cast<long long>(std::ceil(std::max(ka_raw, 0.0)));
  p.binding.push_back(ka_privacy >= static_cast<double>(p.k_delete)
                          ? BindingConstraint{kLearnPrivacyTerm, ka_privacy}
                          : BindingConstraint{kLearnDeleteFloor,
                                              static_cast<double>(p.k_delete)});

  p.init_variance = p.sigma2 / (lambda * (1.0 - p.eta * lambda / 2.0));
  return p;
}

RecipeParams nonconvex_recipe(double lambda, double beta, double L, double B,
                              long long n, int d, long long edit_batch_size,
                              const BudgetSpec& budget) {
  budget.validate();
  require_positive(lambda, "lambda");
  require_positive(beta, "beta");
  require_positive(L, "L");
  if (!(B > 1.0)) throw std::invalid_argument("recipe: B must be > 1");
  if (n <= 0) throw std::invalid_argument("recipe: n must be > 0");
  if (d <= 0) throw std::invalid_argument("recipe: d must be > 0");
  if (edit_batch_size < 1 || edit_batch_size > n) {
    throw std::invalid_argument("recipe: edit batch size must be in [1, n]");
  }
  if (!(budget.eps_dp < static_cast<double>(d))) {
    throw std::invalid_argument(
        "nonconvex_recipe: requires 0 < eps_dd <= eps_dp < d "
        "(tradeoff theorem precondition)");
  }

  const double q = budget.q;
  const double logB = std::log(B);
  const double sum2 = (beta + lambda) * (beta + lambda);
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const double r = static_cast<double>(edit_batch_size);

  RecipeParams p;
  p.regime = Regime::kNonconvex;
  p.kappa = (lambda + beta) / lambda;
  p.eta = lambda * budget.eps_dd / (64.0 * d * q * B * sum2);
  p.binding.push_back({kEtaNonconvexCap, p.eta});

  const double steps_per_relax = 2.0 * B / (lambda * p.eta);
  const double ka_raw = steps_per_relax * std::log(q * logB / budget.eps_dd);
  p.k_learn = static_cast<long long>(std::ceil(std::max(ka_raw, 0.0)));
  p.binding.push_back({kLearnMixingFloor, ka_raw});

  const double savings_log =
      std::log(logB / (2.0 * (budget.eps_dd + (r / static_cast<double>(n)) * logB)));
  const double ku_raw = ka_raw - steps_per_relax * savings_log;
  p.k_delete = static_cast<long long>(std::ceil(std::max(ku_raw, 0.0)));
  p.binding.push_back({kDeleteMixingFloor, ku_raw});

  const double k_max = static_cast<double>(std::max(p.k_learn, p.k_delete));
  p.sigma2 = (q * L * L / (budget.eps_dp * nn)) * p.eta * k_max;
  p.binding.push_back({kSigmaNonconvexFloor, p.sigma2});

  p.init_variance = p.sigma2 / lambda;
  p.nonconvex_amplitude = p.sigma2 * logB / 4.0;
  return p;
}

GaussianLaw gaussian_pushforward(const Objective& obj, const Database& db,
                                 const GaussianLaw& init, long long K,
                                 double eta, double sigma2) {
  if (obj.loss.kind != LossKind::kQuadraticAnisotropic) {
    throw std::invalid_argument("gaussian_pushforward: loss is not quadratic");
  }
  if (K < 0) throw std::invalid_argument("gaussian_pushforward: K >= 0");
  const int d = obj.loss.dimension;
  if (init.mean.size() != d || init.cov.rows() != d || init.cov.cols() != d) {
    throw std::invalid_argument("gaussian_pushforward: dimension mismatch");
  }
  const Eigen::VectorXd a = obj.loss.quadratic_diag();
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(d);
  for (const Record& x : db.records) xbar += x;
  xbar /= static_cast<double>(db.n());

  // M = I - eta (A + lambda I) is diagonal; the recursion stays closed-form.
  Eigen::VectorXd m(d);
  for (int j = 0; j < d; ++j) m(j) = 1.0 - eta * (a(j) + obj.reg_lambda);

  GaussianLaw law = init;
  for (long long k = 0; k < K; ++k) {
    if (obj.clip_L.has_value()) {
      // The oracle is exact only while clipping is inactive: verify every
      // per-record gradient norm along the mean trajectory.
      for (const Record& x : db.records) {
        const double norm = a.cwiseProduct(law.mean - x).norm();
        if (norm > *obj.clip_L) {
          std::ostringstream msg;
          msg << "gaussian_pushforward: clipping would bind at step " << k
              << " (record gradient norm " << norm << " > clip_L "
              << *obj.clip_L << ")";
          throw std::invalid_argument(msg.str());
        }
      }
    }
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        law.cov(i, j) *= m(i) * m(j);
      }
      law.cov(i, i) += 2.0 * eta * sigma2;
    }
    law.mean = m.cwiseProduct(law.mean) + eta * a.cwiseProduct(xbar);
  }
  return law;
}

GridSpec default_gibbs_grid(const Objective& obj, double sigma2, int points) {
  if (!(obj.reg_lambda > 0.0)) {
    throw std::invalid_argument(
        "gibbs grid: requires reg_lambda > 0 (integrable tails)");
  }
  const double envelope_sd = std::sqrt(sigma2 / obj.reg_lambda);
  GridSpec grid;
  grid.lo = -12.0 * envelope_sd;
  grid.hi = 12.0 * envelope_sd;
  grid.points = points;
  return grid;
}

Density1D gibbs_oracle_1d(const Objective& obj, const Database& db,
                          double sigma2, const GridSpec& grid) {
  if (obj.loss.dimension != 1) {
    throw std::invalid_argument("gibbs_oracle_1d: requires d = 1");
  }
  if (!(obj.reg_lambda > 0.0)) {
    throw std::invalid_argument(
        "gibbs_oracle_1d: requires reg_lambda > 0 (non-normalizable risk)");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("gibbs_oracle_1d: requires sigma2 > 0");
  }
  grid.validate();
  const double envelope_sd = std::sqrt(sigma2 / obj.reg_lambda);
  if (grid.lo > -12.0 * envelope_sd + 1e-9 * envelope_sd ||
      grid.hi < 12.0 * envelope_sd - 1e-9 * envelope_sd) {
    throw std::invalid_argument(
        "gibbs_oracle_1d: grid must cover 12 envelope standard deviations");
  }

  Density1D out;
  out.grid = grid;
  out.values.resize(grid.points);
  // Potential U = rL_D(theta)/sigma2, shifted by its minimum before
  // exponentiation so the unnormalized values stay in range.
  Eigen::VectorXd potential(grid.points);
  ModelParams theta(1);
  for (int i = 0; i < grid.points; ++i) {
    theta(0) = grid.x(i);
    potential(i) = regularized_objective(obj, db, theta) / sigma2;
  }
  const double shift = potential.minCoeff();
  for (int i = 0; i < grid.points; ++i) {
    out.values(i) = std::exp(-(potential(i) - shift));
  }
  out.normalize();
  return out;
}

}  // namespace unlearn
