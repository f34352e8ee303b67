#include "unlearn/core_model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace unlearn {

namespace {

void check_dimensions(const Objective& obj, const Database& db,
                      const ModelParams& theta) {
  const int d = obj.loss.dimension;
  if (theta.size() != d) {
    throw std::invalid_argument("objective: theta dimension mismatch");
  }
  for (const Record& x : db.records) {
    if (x.size() != d) {
      throw std::invalid_argument("objective: record dimension mismatch");
    }
  }
}

}  // namespace

double LossModel::loss(const ModelParams& theta, const Record& x) const {
  switch (kind) {
    case LossKind::kQuadraticAnisotropic: {
      const Eigen::VectorXd diff = theta - x;
      const Eigen::VectorXd a = quadratic_diag();
      return 0.5 * diff.cwiseProduct(a).dot(diff);
    }
    case LossKind::kRidge: {
      const double margin = theta.dot(x) - 1.0;
      return 0.5 * margin * margin;
    }
    case LossKind::kLogistic: {
      // log(1 + exp(-t)) computed stably for both signs of t.
      const double t = theta.dot(x);
      return (t > 0.0) ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    }
    case LossKind::kBoundedNonconvex: {
      const double t = theta.dot(x) + 1.0;
      return amplitude * std::sin(t) / (1.0 + x.norm());
    }
  }
  throw std::logic_error("loss: unknown kind");
}

Eigen::VectorXd LossModel::loss_gradient(const ModelParams& theta,
                                         const Record& x) const {
  switch (kind) {
    case LossKind::kQuadraticAnisotropic:
      return quadratic_diag().cwiseProduct(theta - x);
    case LossKind::kRidge:
      return (theta.dot(x) - 1.0) * x;
    case LossKind::kLogistic: {
      // d/dtheta log(1+exp(-t)) = -sigmoid(-t) * x, computed stably.
      const double t = theta.dot(x);
      const double s = (t > 0.0) ? std::exp(-t) / (1.0 + std::exp(-t))
                                 : 1.0 / (1.0 + std::exp(t));
      return -s * x;
    }
    case LossKind::kBoundedNonconvex: {
      const double t = theta.dot(x) + 1.0;
      return (amplitude * std::cos(t) / (1.0 + x.norm())) * x;
    }
  }
  throw std::logic_error("loss_gradient: unknown kind");
}

Eigen::VectorXd LossModel::quadratic_diag() const {
  if (kind != LossKind::kQuadraticAnisotropic) {
    throw std::invalid_argument("quadratic_diag: loss is not quadratic");
  }
  Eigen::VectorXd a(dimension);
  if (dimension >= 1) a(0) = lam_loss;
  for (int j = 1; j < dimension; ++j) a(j) = beta_loss;
  return a;
}

LossModel make_quadratic_anisotropic(double lam_loss, double beta_loss,
                                     int dimension, double lipschitz_L) {
  if (!(lam_loss > 0.0) || !(beta_loss >= lam_loss)) {
    throw std::invalid_argument(
        "quadratic_anisotropic requires 0 < lam_loss <= beta_loss");
  }
  LossModel m;
  m.kind = LossKind::kQuadraticAnisotropic;
  m.dimension = dimension;
  m.lam_loss = lam_loss;
  m.beta_loss = beta_loss;
  m.lipschitz_L = lipschitz_L;
  m.smooth_beta = (dimension == 1) ? lam_loss : beta_loss;
  return m;
}

LossModel make_ridge(int dimension, double lipschitz_L, double smooth_beta) {
  LossModel m;
  m.kind = LossKind::kRidge;
  m.dimension = dimension;
  m.lipschitz_L = lipschitz_L;
  m.smooth_beta = smooth_beta;
  return m;
}

LossModel make_logistic(int dimension, double lipschitz_L, double smooth_beta) {
  LossModel m;
  m.kind = LossKind::kLogistic;
  m.dimension = dimension;
  m.lipschitz_L = lipschitz_L;
  m.smooth_beta = smooth_beta;
  return m;
}

LossModel make_bounded_nonconvex(double amplitude, int dimension, double log_B) {
  if (!(amplitude >= 0.0)) {
    throw std::invalid_argument("bounded_nonconvex requires amplitude >= 0");
  }
  LossModel m;
  m.kind = LossKind::kBoundedNonconvex;
  m.dimension = dimension;
  m.amplitude = amplitude;
  m.lipschitz_L = amplitude;
  m.smooth_beta = amplitude;
  m.log_B = log_B;
  return m;
}

Database apply_edit(const Database& db, const EditRequest& u) {
  const long long n = db.n();
  if (u.replacements.empty() || u.batch_size() > n) {
    throw std::invalid_argument("apply_edit: batch size must be in [1, n]");
  }
  std::unordered_set<long long> seen;
  for (const Replacement& rep : u.replacements) {
    if (rep.index < 0 || rep.index >= n) {
      throw std::invalid_argument("apply_edit: index out of range");
    }
    if (!seen.insert(rep.index).second) {
      throw std::invalid_argument("apply_edit: duplicate index in batch");
    }
  }
  Database out = db;
  for (const Replacement& rep : u.replacements) {
    out.records[static_cast<std::size_t>(rep.index)] = rep.record;
  }
  return out;
}

Eigen::VectorXd clip_gradient(const Eigen::VectorXd& v, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("clip_gradient: L must be > 0");
  const double norm = v.norm();
  if (norm <= L) return v;
  return v * (L / norm);
}

double regularized_objective(const Objective& obj, const Database& db,
                             const ModelParams& theta) {
  check_dimensions(obj, db, theta);
  if (db.records.empty()) {
    throw std::invalid_argument("regularized_objective: empty database");
  }
  double total = 0.0;
  for (const Record& x : db.records) total += obj.loss.loss(theta, x);
  return total / static_cast<double>(db.n()) +
         0.5 * obj.reg_lambda * theta.squaredNorm();
}

void objective_gradient_into(const Objective& obj, const Database& db,
                             const ModelParams& theta, Eigen::VectorXd& out,
                             Eigen::VectorXd& scratch) {
  out.setZero();
  const bool quadratic = obj.loss.kind == LossKind::kQuadraticAnisotropic;
  // Hoisted so the per-record loop below stays allocation-free.
  static thread_local Eigen::VectorXd quad_diag;
  if (quadratic) quad_diag = obj.loss.quadratic_diag();
  for (const Record& x : db.records) {
    if (quadratic) {
      scratch.noalias() = quad_diag.cwiseProduct(theta - x);
    } else if (obj.loss.kind == LossKind::kBoundedNonconvex) {
      const double t = theta.dot(x) + 1.0;
      scratch.noalias() =
          (obj.loss.amplitude * std::cos(t) / (1.0 + x.norm())) * x;
    } else {
      scratch = obj.loss.loss_gradient(theta, x);
    }
    if (obj.clip_L.has_value()) {
      const double norm = scratch.norm();
      if (norm > *obj.clip_L) scratch *= (*obj.clip_L / norm);
    }
    out += scratch;
  }
  out /= static_cast<double>(db.n());
  out += obj.reg_lambda * theta;
}

Eigen::VectorXd objective_gradient(const Objective& obj, const Database& db,
                                   const ModelParams& theta) {
  check_dimensions(obj, db, theta);
  if (db.records.empty()) {
    throw std::invalid_argument("objective_gradient: empty database");
  }
  if (obj.clip_L.has_value() && !(*obj.clip_L > 0.0)) {
    throw std::invalid_argument("objective_gradient: clip_L must be > 0");
  }
  Eigen::VectorXd out(theta.size());
  Eigen::VectorXd scratch(theta.size());
  objective_gradient_into(obj, db, theta, out, scratch);
  return out;
}

ModelParams quadratic_minimizer(const Objective& obj, const Database& db) {
  if (obj.loss.kind != LossKind::kQuadraticAnisotropic) {
    throw std::invalid_argument("quadratic_minimizer: loss is not quadratic");
  }
  if (db.records.empty()) {
    throw std::invalid_argument("quadratic_minimizer: empty database");
  }
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(obj.loss.dimension);
  for (const Record& x : db.records) xbar += x;
  xbar /= static_cast<double>(db.n());
  const Eigen::VectorXd a = obj.loss.quadratic_diag();
  // (A + lambda I)^-1 A xbar with diagonal A.
  const Eigen::VectorXd shifted = (a.array() + obj.reg_lambda).matrix();
  return a.cwiseProduct(xbar).cwiseQuotient(shifted);
}

RiskEstimate excess_empirical_risk(const std::vector<ModelParams>& samples,
                                   const Objective& obj, const Database& db,
                                   const ModelParams& theta_star) {
  if (samples.empty()) {
    throw std::invalid_argument("excess_empirical_risk: empty sample set");
  }
  const double base = regularized_objective(obj, db, theta_star);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const ModelParams& theta : samples) {
    const double gap = regularized_objective(obj, db, theta) - base;
    sum += gap;
    sum_sq += gap * gap;
  }
  const double n = static_cast<double>(samples.size());
  RiskEstimate est;
  est.count = static_cast<long long>(samples.size());
  est.mean = sum / n;
  if (samples.size() > 1) {
    const double var = (sum_sq - n * est.mean * est.mean) / (n - 1.0);
    est.std_error = std::sqrt(std::max(var, 0.0) / n);
  }
  return est;
}

}  // namespace unlearn
