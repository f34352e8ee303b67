#include "unlearn/accountant.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace unlearn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_order(double q) {
  if (!(q > 1.0)) {
    throw std::invalid_argument(
        "accountant: Renyi order q must be > 1 (q <= 1 is out of scope)");
  }
}

// log det of a positive-definite matrix via its Cholesky factor; nullopt when
// the factorization fails (matrix not PD).
std::optional<double> log_det_pd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double diag = l(i, i);
    if (!(diag > 0.0)) return std::nullopt;
    log_det += 2.0 * std::log(diag);
  }
  return log_det;
}

}  // namespace

RenyiBound gaussian_renyi(double q, const Eigen::VectorXd& mu1,
                          const Eigen::VectorXd& mu2, double sigma2) {
  require_order(q);
  if (mu1.size() != mu2.size()) {
    throw std::invalid_argument("gaussian_renyi: mean dimension mismatch");
  }
  if (sigma2 < 0.0) {
    throw std::invalid_argument("gaussian_renyi: sigma2 must be >= 0");
  }
  const double gap2 = (mu1 - mu2).squaredNorm();
  RenyiBound b;
  b.order_q = q;
  b.provenance = "gaussian closed form";
  if (sigma2 == 0.0) {
    b.epsilon = gap2 == 0.0 ? 0.0 : kInf;
  } else {
    b.epsilon = q * gap2 / (2.0 * sigma2);
  }
  return b;
}

RenyiBound renyi_gaussian_general(double q, const GaussianLaw& law1,
                                  const GaussianLaw& law2) {
  require_order(q);
  if (!std::isfinite(q)) {
    throw std::invalid_argument(
        "renyi_gaussian_general: finite order required (R_inf between "
        "distinct Gaussians is infinite)");
  }
  const Eigen::Index d = law1.mean.size();
  if (law2.mean.size() != d || law1.cov.rows() != d || law1.cov.cols() != d ||
      law2.cov.rows() != d || law2.cov.cols() != d) {
    throw std::invalid_argument("renyi_gaussian_general: dimension mismatch");
  }
  const auto log_det1 = log_det_pd(law1.cov);
  const auto log_det2 = log_det_pd(law2.cov);
  if (!log_det1 || !log_det2) {
    throw std::invalid_argument(
        "renyi_gaussian_general: covariances must be positive definite");
  }

  RenyiBound b;
  b.order_q = q;
  b.provenance = "gaussian closed form (general covariance)";

  const Eigen::MatrixXd sq = q * law2.cov + (1.0 - q) * law1.cov;
  Eigen::LLT<Eigen::MatrixXd> llt(sq);
  const auto log_det_q = log_det_pd(sq);
  if (llt.info() != Eigen::Success || !log_det_q) {
    b.epsilon = kInf;  // blended covariance not PD: divergence diverges
    return b;
  }
  const Eigen::VectorXd gap = law1.mean - law2.mean;
  const double quad = gap.dot(llt.solve(gap));
  b.epsilon = 0.5 * q * quad -
              (*log_det_q - (1.0 - q) * *log_det1 - q * *log_det2) /
                  (2.0 * (q - 1.0));
  return b;
}

RenyiBound rdp_noisy_gd_lipschitz(double q, double L, double sigma2,
                                  long long n, double eta, long long K) {
  require_order(q);
  if (!(L > 0.0)) throw std::invalid_argument("rdp lipschitz: L must be > 0");
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("rdp lipschitz: sigma2 must be > 0");
  }
  if (n <= 0) throw std::invalid_argument("rdp lipschitz: n must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("rdp lipschitz: eta must be > 0");
  if (K < 0) throw std::invalid_argument("rdp lipschitz: K must be >= 0");
  RenyiBound b;
  b.order_q = q;
  b.epsilon = q * L * L * eta * static_cast<double>(K) /
              (sigma2 * static_cast<double>(n) * static_cast<double>(n));
  b.provenance = "lipschitz composition";
  return b;
}

RenyiBound rdp_noisy_gd_convex(double q, double L, double lambda, double beta,
                               double sigma2, long long n, double eta,
                               long long K) {
  require_order(q);
  if (!(L > 0.0) || !(lambda > 0.0) || !(beta > 0.0) || !(sigma2 > 0.0) ||
      !(eta > 0.0)) {
    throw std::invalid_argument("rdp convex: parameters must be positive");
  }
  if (n <= 0) throw std::invalid_argument("rdp convex: n must be > 0");
  if (K < 0) throw std::invalid_argument("rdp convex: K must be >= 0");
  if (!(eta < 1.0 / (beta + lambda))) {
    std::ostringstream msg;
    msg << "rdp convex: requires eta < 1/(beta+lambda) = "
        << 1.0 / (beta + lambda) << ", got eta = " << eta;
    throw std::invalid_argument(msg.str());
  }
  RenyiBound b;
  b.order_q = q;
  const double limit = 4.0 * q * L * L /
                       (lambda * sigma2 * static_cast<double>(n) *
                        static_cast<double>(n));
  b.epsilon =
      limit * (1.0 - std::exp(-lambda * eta * static_cast<double>(K) / 2.0));
  b.provenance = "convex contraction";
  return b;
}

RenyiBound convex_deletion_bound(double q, double L, double lambda,
                                 double sigma2, long long n, double eta,
                                 long long k_delete) {
  require_order(q);
  if (!(L > 0.0) || !(lambda > 0.0) || !(sigma2 > 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("deletion bound: parameters must be positive");
  }
  if (n <= 0) throw std::invalid_argument("deletion bound: n must be > 0");
  if (k_delete < 0) {
    throw std::invalid_argument("deletion bound: k_delete must be >= 0");
  }
  RenyiBound b;
  b.order_q = q;
  const double start = 4.0 * q * L * L /
                       (lambda * sigma2 * static_cast<double>(n) *
                        static_cast<double>(n));
  b.epsilon =
      start * std::exp(-lambda * eta * static_cast<double>(k_delete) / 2.0);
  b.provenance = "deletion contraction";
  return b;
}

DPBound rdp_to_dp(const RenyiBound& bound, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("rdp_to_dp: delta must lie in (0, 1)");
  }
  require_order(bound.order_q);
  DPBound out;
  out.delta = delta;
  out.one_sided = true;
  if (std::isinf(bound.order_q)) {
    out.epsilon = bound.epsilon;  // conversion term vanishes as q -> inf
  } else {
    out.epsilon = bound.epsilon + std::log(1.0 / delta) / (bound.order_q - 1.0);
  }
  out.provenance = "conversion(" + bound.provenance + ")";
  return out;
}

RenyiBound compose(const std::vector<RenyiBound>& bounds) {
  RenyiBound out;
  out.order_q = kInf;  // a zero budget holds at every order
  out.epsilon = 0.0;
  out.provenance = "composition";
  for (const RenyiBound& b : bounds) {
    require_order(b.order_q);
    if (std::isfinite(b.order_q)) {
      if (std::isfinite(out.order_q) && out.order_q != b.order_q) {
        std::ostringstream msg;
        msg << "compose: mixing Renyi orders " << out.order_q << " and "
            << b.order_q << "; convert explicitly before composing";
        throw std::invalid_argument(msg.str());
      }
      out.order_q = b.order_q;
    }
    out.epsilon += b.epsilon;
  }
  return out;
}

RenyiBound adaptive_deletion_bound(double q, double eps_dd, double eps_dp,
                                   long long p) {
  require_order(q);
  if (eps_dd < 0.0 || eps_dp < 0.0) {
    throw std::invalid_argument(
        "adaptive_deletion_bound: budgets must be >= 0");
  }
  if (p < 0) {
    throw std::invalid_argument(
        "adaptive_deletion_bound: adaptivity degree p must be >= 0");
  }
  RenyiBound b;
  b.order_q = q;
  b.epsilon = eps_dd + static_cast<double>(p) * eps_dp;
  b.provenance = "adaptive-to-nonadaptive reduction";
  return b;
}

RenyiBound bounded_perturbation_renyi(double c, double sigma2) {
  if (c < 0.0) {
    throw std::invalid_argument(
        "bounded_perturbation_renyi: perturbation c must be >= 0");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument(
        "bounded_perturbation_renyi: sigma2 must be > 0");
  }
  RenyiBound b;
  b.order_q = kInf;  // holds uniformly over all orders
  b.epsilon = 2.0 * c / sigma2;
  b.provenance = "bounded potential perturbation";
  return b;
}

RenyiBound weak_triangle(const RenyiBound& a_to_mid, double mid_to_b_sup) {
  require_order(a_to_mid.order_q);
  if (mid_to_b_sup < 0.0) {
    throw std::invalid_argument("weak_triangle: sup divergence must be >= 0");
  }
  RenyiBound b;
  b.order_q = a_to_mid.order_q;
  b.epsilon = a_to_mid.epsilon + mid_to_b_sup;
  b.provenance = "weak triangle(" + a_to_mid.provenance + ")";
  return b;
}

double grid_renyi_1d(const Density1D& p, const Density1D& r, double q) {
  require_order(q);
  if (!std::isfinite(q)) {
    throw std::invalid_argument("grid_renyi_1d: use grid_renyi_sup for q=inf");
  }
  if (p.grid.lo != r.grid.lo || p.grid.hi != r.grid.hi ||
      p.grid.points != r.grid.points) {
    throw std::invalid_argument("grid_renyi_1d: densities on different grids");
  }
  p.grid.validate();
  const double h = p.grid.step();
  // log-sum-exp of q ln p_i - (q-1) ln r_i + ln w_i over nodes with p_i > 0,
  // trapezoid weights w (h inside, h/2 at the ends).
  double max_term = -kInf;
  std::vector<double> terms;
  terms.reserve(static_cast<size_t>(p.grid.points));
  for (int i = 0; i < p.grid.points; ++i) {
    const double pi = p.values(i);
    if (!(pi > 0.0)) continue;
    const double ri = r.values(i);
    if (!(ri > 0.0)) return kInf;  // p has mass where r vanishes
    const double w = (i == 0 || i == p.grid.points - 1) ? h / 2.0 : h;
    const double t =
        q * std::log(pi) - (q - 1.0) * std::log(ri) + std::log(w);
    terms.push_back(t);
    if (t > max_term) max_term = t;
  }
  if (terms.empty()) {
    throw std::invalid_argument("grid_renyi_1d: p carries no mass on the grid");
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return (max_term + std::log(acc)) / (q - 1.0);
}

double grid_renyi_sup(const Density1D& p, const Density1D& r) {
  if (p.grid.lo != r.grid.lo || p.grid.hi != r.grid.hi ||
      p.grid.points != r.grid.points) {
    throw std::invalid_argument("grid_renyi_sup: densities on different grids");
  }
  p.grid.validate();
  double sup_log_ratio = -kInf;
  bool any = false;
  for (int i = 0; i < p.grid.points; ++i) {
    const double pi = p.values(i);
    if (!(pi > 0.0)) continue;
    any = true;
    const double ri = r.values(i);
    if (!(ri > 0.0)) return kInf;
    sup_log_ratio = std::max(sup_log_ratio, std::log(pi) - std::log(ri));
  }
  if (!any) {
    throw std::invalid_argument("grid_renyi_sup: p carries no mass on the grid");
  }
  return sup_log_ratio;
}

double nonconvex_convergence_bound(double q, double lambda, double eta,
                                   long long K, double B, int d, double beta,
                                   double R0) {
  require_order(q);
  if (!(lambda > 0.0) || !(eta > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument(
        "nonconvex_convergence_bound: parameters must be positive");
  }
  if (!(B > 1.0)) {
    throw std::invalid_argument("nonconvex_convergence_bound: B must be > 1");
  }
  if (d <= 0) {
    throw std::invalid_argument("nonconvex_convergence_bound: d must be > 0");
  }
  if (K < 0) {
    throw std::invalid_argument("nonconvex_convergence_bound: K must be >= 0");
  }
  if (R0 < 0.0) {
    throw std::invalid_argument("nonconvex_convergence_bound: R0 must be >= 0");
  }
  const double sum2 = (beta + lambda) * (beta + lambda);
  const double cap = lambda / (64.0 * B * q * q * sum2);
  if (!(eta <= cap)) {
    std::ostringstream msg;
    msg << "nonconvex_convergence_bound: step-size cap violated: requires "
           "eta <= lambda/(64 B q^2 (beta+lambda)^2) = "
        << cap << ", got eta = " << eta;
    throw std::invalid_argument(msg.str());
  }
  const double decay =
      std::exp(-lambda * eta * static_cast<double>(K) / (2.0 * B));
  return q * decay * R0 + 32.0 * d * eta * q * B * sum2 / lambda;
}

double gibbs_excess_risk_bound(int d, double sigma2, double lambda, double beta,
                               double B) {
  if (d <= 0 || !(sigma2 > 0.0) || !(lambda > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument(
        "gibbs_excess_risk_bound: parameters must be positive");
  }
  if (!(B > 1.0)) {
    throw std::invalid_argument("gibbs_excess_risk_bound: B must be > 1");
  }
  return (d * sigma2 / 2.0) *
         (std::log((beta + lambda) / lambda) + std::sqrt(B));
}

}  // namespace unlearn
