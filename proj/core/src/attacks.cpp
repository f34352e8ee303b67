#include "unlearn/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "unlearn/accountant.hpp"
#include "unlearn/core_model.hpp"

namespace unlearn {

void PgdConfig::validate() const {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("pgd config: lambda must be > 0");
  }
  if (!(beta > lambda)) {
    throw std::invalid_argument(
        "pgd config: beta must exceed lambda (contraction rate in (0,1))");
  }
  if (!(lipschitz_L > 0.0)) {
    throw std::invalid_argument("pgd config: L must be > 0");
  }
  if (n <= 0) throw std::invalid_argument("pgd config: n must be > 0");
  if (k_unlearn < 1) {
    throw std::invalid_argument("pgd config: k_unlearn must be >= 1");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("pgd config: eps must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("pgd config: delta must lie in (0, 1)");
  }
}

long long PgdConfig::k_learn() const {
  validate();
  // Contract from W = 0 until the remaining gap to the empirical minimizer is
  // below the publication accuracy floor L/(lambda n).
  const double target = ball_radius() * lambda * static_cast<double>(n) /
                        lipschitz_L;
  const double steps = std::log(target) / std::log(1.0 / gamma());
  const long long extra =
      std::max<long long>(0, static_cast<long long>(std::ceil(steps)));
  return k_unlearn + extra;
}

ModelParams pgd_run(const Objective& obj, const Database& db,
                    const ModelParams& W, long long K, double eta,
                    double ball_radius) {
  if (K < 0) throw std::invalid_argument("pgd_run: K must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("pgd_run: eta must be > 0");
  if (!(ball_radius > 0.0)) {
    throw std::invalid_argument("pgd_run: ball_radius must be > 0");
  }
  if (W.norm() > ball_radius * (1.0 + 1e-12)) {
    throw std::invalid_argument("pgd_run: start point outside the ball");
  }
  const int d = static_cast<int>(W.size());
  ModelParams theta = W;
  Eigen::VectorXd grad(d);
  Eigen::VectorXd scratch(d);
  for (long long k = 0; k < K; ++k) {
    objective_gradient_into(obj, db, theta, grad, scratch);
    theta.noalias() -= eta * grad;
    const double norm = theta.norm();
    if (norm > ball_radius) theta *= ball_radius / norm;
  }
  return theta;
}

double neel_noise_sigma(const PgdConfig& cfg) {
  cfg.validate();
  const double gT = std::pow(cfg.gamma(), static_cast<double>(cfg.k_unlearn));
  const double log_inv_delta = std::log(1.0 / cfg.delta);
  const double gauss_gap =
      std::sqrt(log_inv_delta + cfg.eps) - std::sqrt(log_inv_delta);
  return 4.0 * std::sqrt(2.0) * cfg.lipschitz_L * gT /
         (cfg.lambda * static_cast<double>(cfg.n) * (1.0 - gT) * gauss_gap);
}

PgdStreamResult pgd_stream_divergence(const PgdConfig& cfg, double q,
                                      long long num_releases) {
  cfg.validate();
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw std::invalid_argument(
        "pgd_stream_divergence: finite Renyi order q > 1 required");
  }
  if (num_releases < 1) {
    throw std::invalid_argument(
        "pgd_stream_divergence: num_releases must be >= 1");
  }

  const double sigma = neel_noise_sigma(cfg);
  const double sigma2 = sigma * sigma;
  const double gamma = cfg.gamma();
  const double r = cfg.ball_radius();
  const long long kl = cfg.k_learn();
  const long long T = cfg.k_unlearn;
  const double n = static_cast<double>(cfg.n);
  const double gap0 = 2.0 * r * (1.0 - std::pow(gamma, static_cast<double>(kl))) / n;

  PgdStreamResult out;
  out.single_release_budget = cfg.eps + std::log(1.0 / cfg.delta) / (q - 1.0);

  // Simulated counterpart: two worlds whose databases differ by x vs -x at
  // index 0 (x along the slow axis so the contraction factor is exactly
  // gamma); the first edit zeroes that record in both.
  const LossModel loss =
      make_quadratic_anisotropic(cfg.lambda, cfg.beta, 2, cfg.lipschitz_L);
  Objective obj{loss, 0.0, std::nullopt};
  Database db_plus, db_minus;
  Record x = Record::Zero(2);
  x(0) = r;
  db_plus.records.assign(static_cast<size_t>(cfg.n), Record::Zero(2));
  db_minus.records.assign(static_cast<size_t>(cfg.n), Record::Zero(2));
  db_plus.records[0] = x;
  db_minus.records[0] = -x;

  ModelParams w0 = ModelParams::Zero(2);
  ModelParams theta_plus = pgd_run(obj, db_plus, w0, kl, cfg.eta(), r);
  ModelParams theta_minus = pgd_run(obj, db_minus, w0, kl, cfg.eta(), r);
  Database db_zero = db_plus;
  db_zero.records[0] = Record::Zero(2);

  out.closed_form_terms.reserve(static_cast<size_t>(num_releases));
  out.empirical_terms.reserve(static_cast<size_t>(num_releases));
  double total = 0.0;
  for (long long i = 1; i <= num_releases; ++i) {
    const double gap = gap0 * std::pow(gamma, static_cast<double>(i * T));
    const double term = q * gap * gap / (2.0 * sigma2);
    out.closed_form_terms.push_back(term);
    total += term;
    if (!out.crossing_release && total > out.single_release_budget) {
      out.crossing_release = i;
    }

    theta_plus = pgd_run(obj, db_zero, theta_plus, T, cfg.eta(), r);
    theta_minus = pgd_run(obj, db_zero, theta_minus, T, cfg.eta(), r);
    out.empirical_terms.push_back(
        gaussian_renyi(q, theta_plus, theta_minus, sigma2).epsilon);
  }
  out.closed_form_total = total;
  const double rho = std::pow(gamma, 2.0 * static_cast<double>(T));
  out.limit_total = out.closed_form_terms.front() / (1.0 - rho);
  return out;
}

// ---------------------------------------------------------------------------
// Counting attack.

namespace {

int checked_query(const RecordQuery& query, const Record& x) {
  const int v = query(x);
  if (v != 0 && v != 1) {
    throw std::invalid_argument("counting: query must return 0 or 1");
  }
  return v;
}

}  // namespace

CountingState counting_init(const Database& db0, const RecordQuery& query) {
  CountingState s;
  for (const Record& x : db0.records) s.cnt += checked_query(query, x);
  return s;
}

CountingState counting_update(const CountingState& state,
                              const Database& db_prev, const Replacement& u,
                              const RecordQuery& query) {
  if (u.index < 0 || static_cast<size_t>(u.index) >= db_prev.records.size()) {
    throw std::invalid_argument("counting_update: replacement index out of range");
  }
  const int q_old =
      checked_query(query, db_prev.records[static_cast<size_t>(u.index)]);
  const int q_new = checked_query(query, u.record);
  CountingState s = state;
  s.cnt += q_new - q_old;
  s.del += q_old;
  s.step_i += 1;
  return s;
}

double counting_publish_noiseless(const CountingState& state) {
  const double offset =
      state.step_i == 0
          ? 0.0
          : static_cast<double>(state.del) / static_cast<double>(state.step_i);
  return static_cast<double>(state.cnt) + offset;
}

double counting_publish(const CountingState& state, double eps,
                        DeterministicRng& rng) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("counting_publish: eps must be > 0");
  }
  return counting_publish_noiseless(state) + rng.laplace(1.0 / eps);
}

CountingDecision counting_adversary(const std::vector<double>& observations,
                                    long long first_step, int cand_q0,
                                    int cand_q1,
                                    const std::vector<double>& h0_means,
                                    double eps, DeterministicRng& rng) {
  if (first_step < 1) {
    throw std::invalid_argument("counting_adversary: first_step must be >= 1");
  }
  if ((cand_q0 != 0 && cand_q0 != 1) || (cand_q1 != 0 && cand_q1 != 1)) {
    throw std::invalid_argument(
        "counting_adversary: candidate query values must be 0 or 1");
  }
  if (observations.size() > h0_means.size()) {
    throw std::invalid_argument(
        "counting_adversary: fewer hypothesis means than observations");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("counting_adversary: eps must be > 0");
  }

  CountingDecision out;
  if (observations.empty()) return out;

  const double q_gap = static_cast<double>(cand_q1 - cand_q0);
  for (size_t k = 0; k < observations.size(); ++k) {
    const double j = static_cast<double>(first_step + static_cast<long long>(k));
    const double mu0 = h0_means[k];
    const double mu1 = mu0 + q_gap / j;
    const double y = observations[k];
    // Laplace(1/eps) log-likelihood ratio of h1 against h0.
    out.llr += eps * (std::abs(y - mu0) - std::abs(y - mu1));
    out.cumulative_divergence += eps * std::abs(q_gap) / j;
  }
  if (out.llr > 0.0) {
    out.decision = 1;
  } else if (out.llr < 0.0) {
    out.decision = 0;
  } else {
    out.decision = static_cast<int>(rng.next_u64() & 1u);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Median attack.

AttackReport median_attack_run(const Database& db0, long long target_step,
                               long long trials, DeterministicRng& rng) {
  const long long n = db0.n();
  if (n < 5 || n % 2 == 0) {
    throw std::invalid_argument(
        "median_attack_run: database size must be odd and >= 5");
  }
  if (db0.dimension() != 1) {
    throw std::invalid_argument("median_attack_run: records must be scalars");
  }
  if (target_step < 4) {
    throw std::invalid_argument(
        "median_attack_run: target_step must be >= 4 (the bound is vacuous "
        "below that)");
  }
  if (target_step - 1 > n) {
    throw std::invalid_argument(
        "median_attack_run: target_step - 1 replacement indices exceed n");
  }
  if (trials < 1) {
    throw std::invalid_argument("median_attack_run: trials must be >= 1");
  }

  std::vector<double> base(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i) {
    base[static_cast<size_t>(i)] = db0.records[static_cast<size_t>(i)](0);
  }
  {
    std::vector<double> sorted = base;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument(
          "median_attack_run: database values must be distinct");
    }
  }

  const size_t mid = static_cast<size_t>(n / 2);
  std::vector<double> work = base;
  std::nth_element(work.begin(), work.begin() + static_cast<long>(mid),
                   work.end());
  const double pub0 = work[mid];
  const size_t idx_med = static_cast<size_t>(
      std::find(base.begin(), base.end(), pub0) - base.begin());
  const double below_min =
      *std::min_element(base.begin(), base.end()) - 1.0;

  const size_t picks = static_cast<size_t>(target_step - 1);
  std::vector<size_t> indices(static_cast<size_t>(n));
  AttackReport report;
  report.trials = trials;
  report.theoretical_bound =
      1.0 - std::pow(0.5, static_cast<double>(target_step - 3));

  for (long long t = 0; t < trials; ++t) {
    // Partial Fisher-Yates draw of target_step-1 indices without replacement.
    std::iota(indices.begin(), indices.end(), size_t{0});
    for (size_t j = 0; j < picks; ++j) {
      const size_t pick =
          j + static_cast<size_t>(rng.uniform_below(
                  static_cast<std::uint64_t>(indices.size() - j)));
      std::swap(indices[j], indices[pick]);
    }
    work = base;
    for (size_t j = 0; j < picks; ++j) work[indices[j]] = pub0;
    work[idx_med] = below_min;  // the owner deletes the original median holder
    std::nth_element(work.begin(), work.begin() + static_cast<long>(mid),
                     work.end());
    if (work[mid] == pub0) ++report.successes;
  }
  report.success_rate =
      static_cast<double>(report.successes) / static_cast<double>(trials);
  return report;
}

}  // namespace unlearn
