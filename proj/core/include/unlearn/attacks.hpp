// Constructive reproductions of three negative results:
//   * the projected-gradient-descent streaming violation (an exactly
//     (eps, delta)-unlearning publisher whose stream of releases leaks more
//     than any single release),
//   * the stateful counting unlearner (per-release unlearning holds, yet the
//     deleted record's query value remains inferable from later releases),
//   * the adaptive median-duplication attack (a 1-adaptive requester makes
//     exact deletion fail with high probability).

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "unlearn/rng.hpp"
#include "unlearn/types.hpp"

namespace unlearn {

// Configuration of the PGD construction.  The loss is the anisotropic
// quadratic 1/2 (theta-x)^T diag(lambda, beta) (theta-x) with records on the
// ball |x| <= L/beta; PGD runs at step size 2/(beta+lambda), contracting at
// rate gamma = (beta-lambda)/(beta+lambda) per step.  Publishing adds
// N(0, sigma^2 I) noise with sigma calibrated so each single release is
// exactly (eps, delta)-unlearning.
struct PgdConfig {
  double lambda = 1.0;
  double beta = 3.0;
  double lipschitz_L = 3.0;
  long long n = 10;
  long long k_unlearn = 2;  // T: maintenance steps run after each edit
  double eps = 1.0;
  double delta = 0.36787944117144233;  // exp(-1)

  void validate() const;  // throws std::invalid_argument

  double gamma() const { return (beta - lambda) / (beta + lambda); }
  double eta() const { return 2.0 / (beta + lambda); }
  double ball_radius() const { return lipschitz_L / beta; }
  // Learn-phase step count: T plus enough contraction steps to reach the
  // publication accuracy floor, ceil(log(ball_radius lambda n / L)/log(1/gamma)).
  long long k_learn() const;
};

// K deterministic projected-gradient steps on the (unregularized) average
// loss; projection clips onto the centered ball of radius ball_radius.
// Requires |W| <= ball_radius.
ModelParams pgd_run(const Objective& obj, const Database& db,
                    const ModelParams& W, long long K, double eta,
                    double ball_radius);

// Publication noise scale making one PGD release (eps, delta)-unlearning:
//   sigma = 4 sqrt(2) L gamma^T / (lambda n (1-gamma^T)
//             (sqrt(log(1/delta)+eps) - sqrt(log(1/delta)))).
double neel_noise_sigma(const PgdConfig& cfg);

// The streaming leak.  Two neighbouring initial databases hold x and -x at
// one index (|x| = ball_radius); the first edit zeroes that record in both.
// Releases i = 1..m then follow the exact contraction trajectories
//   theta_i = (x/n)(1 - gamma^k_learn) gamma^(iT)   (and its negation),
// and each release's Renyi divergence is q |2 theta_i|^2 / (2 sigma^2).
struct PgdStreamResult {
  std::vector<double> closed_form_terms;   // per release i = 1..m
  std::vector<double> empirical_terms;     // from simulated pgd_run trajectories
  double closed_form_total = 0.0;
  double limit_total = 0.0;                // m -> infinity geometric limit
  double single_release_budget = 0.0;      // eps + log(1/delta)/(q-1)
  std::optional<long long> crossing_release;  // smallest m with total > budget
};

PgdStreamResult pgd_stream_divergence(const PgdConfig& cfg, double q,
                                      long long num_releases);

// ---------------------------------------------------------------------------
// Counting attack.

// Internal state of the stateful counting unlearner after edit step i:
// cnt = current number of query-positive records, del = number of
// query-positive records deleted so far, step_i = edits processed.
struct CountingState {
  long long cnt = 0;
  long long del = 0;
  long long step_i = 0;
};

using RecordQuery = std::function<int(const Record&)>;  // record -> {0, 1}

// Initializes state at step 0: cnt = sum of query values over D0.
CountingState counting_init(const Database& db0, const RecordQuery& query);

// State update for one replacement:
//   cnt += query(new) - query(old),  del += query(old),  step += 1.
CountingState counting_update(const CountingState& state,
                              const Database& db_prev, const Replacement& u,
                              const RecordQuery& query);

// Published statistic: cnt + del/step + Lap(1/eps), with del/step taken as 0
// at step 0.  The noiseless offset del/step always lies in [0, 1], so each
// release is (eps, 0)-unlearning by the Laplace mechanism.
double counting_publish_noiseless(const CountingState& state);
double counting_publish(const CountingState& state, double eps,
                        DeterministicRng& rng);

// Likelihood-ratio distinguisher for the identity of a record deleted at
// step `first_step`.  Hypothesis h in {0, 1} says the deleted record had
// query value cand_q[h]; under h the mean of release j is
// h0_means[j - first_step] + (cand_q1 - cand_q0) * (h == 1) / j.
// Decides by LLR sign (ties resolved by a fair deterministic coin drawn from
// rng).  Also reports the cumulative max-divergence sum eps*|shift_j|.
struct CountingDecision {
  int decision = -1;      // 0 or 1; -1 when there are no observations
  double llr = 0.0;
  double cumulative_divergence = 0.0;
};

CountingDecision counting_adversary(const std::vector<double>& observations,
                                    long long first_step, int cand_q0,
                                    int cand_q1,
                                    const std::vector<double>& h0_means,
                                    double eps, DeterministicRng& rng);

// ---------------------------------------------------------------------------
// Median attack.

// Outcome summary shared by the attack drivers.
struct AttackReport {
  long long trials = 0;
  long long successes = 0;
  double success_rate = 0.0;
  double theoretical_bound = 0.0;
  std::vector<double> divergence_series;  // attacks that track one
};

// The 1-adaptive median-duplication attack.  D0 holds n (odd) distinct
// scalars; pub0 is the exact median.  The requester replaces target_step-1
// indices (sampled without replacement) with pub0; at step target_step the
// owner deletes the original median holder (replacing it with a value below
// the database minimum).  Success: the median is still pub0.  Aggregates
// `trials` independent runs against the bound 1 - (1/2)^(target_step-3).
AttackReport median_attack_run(const Database& db0, long long target_step,
                               long long trials, DeterministicRng& rng);

}  // namespace unlearn
