// Shared vocabulary: records, databases, edit requests, loss models,
// objectives, and model parameters.
//
// All numerics are dense 64-bit floating point; records and parameters are
// low-dimensional dense vectors.  Types are immutable values in practice
// (operations return new values rather than mutating), so they are safe to
// share across threads.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace unlearn {

// A data record x: a real vector of dimension m.  This library assumes the
// record dimension equals the parameter dimension (m = d), matching all the
// constructions it verifies.
using Record = Eigen::VectorXd;

// Model parameters theta, dimension d.
using ModelParams = Eigen::VectorXd;

// A database D: fixed-length sequence of records.  Length n is fixed for the
// lifetime of an edit stream (edits are replacement-only).
struct Database {
  std::vector<Record> records;

  long long n() const { return static_cast<long long>(records.size()); }
  int dimension() const {
    return records.empty() ? 0 : static_cast<int>(records.front().size());
  }
};

// One replacement operation: database index `index` receives `record`.
struct Replacement {
  long long index = 0;
  Record record;
};

// An edit request u: an atomic batch of r replacement operations with
// pairwise-distinct indices, 1 <= r <= n.
struct EditRequest {
  std::vector<Replacement> replacements;

  long long batch_size() const {
    return static_cast<long long>(replacements.size());
  }
};

// Per-record loss families.
//
//   kQuadraticAnisotropic  l(theta;x) = 1/2 (theta-x)^T A (theta-x),
//                          A = diag(lam_loss, beta_loss, beta_loss, ...).
//                          (d = 1 uses A = (lam_loss).)
//   kRidge                 l(theta;x) = 1/2 (<theta,x> - 1)^2
//                          (label folded into the record; keeps m = d).
//   kLogistic              l(theta;x) = log(1 + exp(-<theta,x>))
//                          (label folded into the record; keeps m = d).
//   kBoundedNonconvex      l(theta;x) = a sin(<theta,x> + 1) / (1 + |x|),
//                          which is a-bounded and a-Lipschitz everywhere and
//                          a-smooth on the record domain |x| <= (1+sqrt(5))/2.
enum class LossKind {
  kQuadraticAnisotropic,
  kRidge,
  kLogistic,
  kBoundedNonconvex,
};

// A differentiable per-record loss with its declared constants.  The declared
// constants are contracts used by recipes and bounds: lipschitz_L bounds the
// per-record gradient norm on the intended domain, smooth_beta bounds the
// gradient's Lipschitz constant, and log_B (present only for the bounded
// non-convex family) is log(B) for the boundedness witness a = sigma^2 log(B)/4.
struct LossModel {
  LossKind kind = LossKind::kQuadraticAnisotropic;
  int dimension = 1;

  // kQuadraticAnisotropic curvature diag(lam_loss, beta_loss, ...).
  double lam_loss = 1.0;
  double beta_loss = 1.0;

  // kBoundedNonconvex amplitude a.
  double amplitude = 0.0;

  double lipschitz_L = 1.0;
  double smooth_beta = 1.0;
  std::optional<double> log_B;

  // Per-record loss value and gradient (both finite on finite inputs).
  double loss(const ModelParams& theta, const Record& x) const;
  Eigen::VectorXd loss_gradient(const ModelParams& theta, const Record& x) const;

  // Curvature matrix A for the quadratic family (throws otherwise).
  Eigen::VectorXd quadratic_diag() const;
};

LossModel make_quadratic_anisotropic(double lam_loss, double beta_loss,
                                     int dimension, double lipschitz_L);
LossModel make_ridge(int dimension, double lipschitz_L, double smooth_beta);
LossModel make_logistic(int dimension, double lipschitz_L, double smooth_beta);
LossModel make_bounded_nonconvex(double amplitude, int dimension, double log_B);

// The regularized objective
//   rL_D(theta) = (1/n) sum_x l(theta;x) + (reg_lambda/2) |theta|^2,
// with optional per-record gradient clipping at clip_L (clipping applies to
// gradients only; the objective value is the unclipped average).
struct Objective {
  LossModel loss;
  double reg_lambda = 0.0;
  std::optional<double> clip_L;
};

}  // namespace unlearn
