// Batch experiment runner: every verification and attack as a subcommand.
//
//   unlearn recipe          --config cfg.json --out DIR
//   unlearn verify-deletion --config cfg.json --out DIR [--seed U64]
//   unlearn attack          --config cfg.json --out DIR [--seed U64] [--trials N]
//   unlearn risk            --config cfg.json --out DIR [--seed U64] [--trials N]
//   unlearn accountant      --config cfg.json --out DIR
//
// Configs are JSON with "schema": "unlearn-config/1".  Every subcommand is a
// pure function of (config, seed): reruns write byte-identical outputs.
// Exit codes: 0 success, 2 validation error, 3 assertion failure.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "unlearn/accountant.hpp"
#include "unlearn/attacks.hpp"
#include "unlearn/core_model.hpp"
#include "unlearn/noisy_gd.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/stream_engine.hpp"

namespace {

using unlearn::Json;

constexpr const char* kConfigSchema = "unlearn-config/1";

// A config problem: reported with the JSON field path, exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A violated internal consistency check: exit code 3.
struct AssertionError : std::runtime_error {
  explicit AssertionError(const std::string& msg) : std::runtime_error(msg) {}
};

const Json& require_field(const Json& j, const std::string& path,
                          const std::string& key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError("missing field: " + (path.empty() ? key : path + "." + key));
  }
  return j.at(key);
}

double get_double(const Json& j, const std::string& path,
                  const std::string& key) {
  const Json& v = require_field(j, path, key);
  if (!v.is_number()) {
    throw ConfigError("field " + path + "." + key + " must be a number");
  }
  return v.get<double>();
}

long long get_int(const Json& j, const std::string& path,
                  const std::string& key) {
  const Json& v = require_field(j, path, key);
  if (!v.is_number_integer()) {
    throw ConfigError("field " + path + "." + key + " must be an integer");
  }
  return v.get<long long>();
}

std::string get_string(const Json& j, const std::string& path,
                       const std::string& key) {
  const Json& v = require_field(j, path, key);
  if (!v.is_string()) {
    throw ConfigError("field " + path + "." + key + " must be a string");
  }
  return v.get<std::string>();
}

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (get_string(cfg, "", "schema") != kConfigSchema) {
    throw ConfigError(std::string("field schema: expected \"") + kConfigSchema +
                      "\"");
  }
  return cfg;
}

unlearn::BudgetSpec parse_budget(const Json& cfg) {
  const Json& b = require_field(cfg, "", "budget");
  unlearn::BudgetSpec spec;
  spec.q = get_double(b, "budget", "q");
  spec.eps_dp = get_double(b, "budget", "eps_dp");
  spec.eps_dd = get_double(b, "budget", "eps_dd");
  if (b.contains("delta")) spec.delta = get_double(b, "budget", "delta");
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("budget: ") + e.what());
  }
  return spec;
}

// Serializes a double for JSON output; JSON has no infinity literal.
Json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "infinity" : "-infinity";
  if (std::isnan(v)) return "nan";
  return v;
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? std::filesystem::path(".")
                                          : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AssertionError("cannot write output file: " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------
// Shared instance plumbing for verify-deletion / risk: a quadratic instance
// with deterministically generated small-norm records so gradient clipping
// never binds and the exact Gaussian law calculus applies.

struct QuadraticInstance {
  unlearn::Objective objective;
  long long n = 0;
  int d = 0;
  double lambda = 0.0;
  double record_scale = 0.0;
  unlearn::Database db0;
  std::vector<unlearn::EditRequest> edits;
};

unlearn::Record bounded_record(int d, double scale,
                               unlearn::DeterministicRng& rng) {
  unlearn::Record x(d);
  for (int j = 0; j < d; ++j) x(j) = scale * (2.0 * rng.uniform01() - 1.0);
  return x;
}

QuadraticInstance parse_quadratic_instance(const Json& cfg, long long steps,
                                           std::uint64_t seed) {
  const Json& inst = require_field(cfg, "", "instance");
  QuadraticInstance q;
  q.d = static_cast<int>(get_int(inst, "instance", "d"));
  q.n = get_int(inst, "instance", "n");
  q.lambda = get_double(inst, "instance", "lambda");
  q.record_scale = get_double(inst, "instance", "record_scale");
  if (q.d <= 0) throw ConfigError("field instance.d must be > 0");
  if (q.n <= 0) throw ConfigError("field instance.n must be > 0");
  if (!(q.lambda > 0.0)) throw ConfigError("field instance.lambda must be > 0");
  if (!(q.record_scale > 0.0)) {
    throw ConfigError("field instance.record_scale must be > 0");
  }

  const Json& loss = require_field(inst, "instance", "loss");
  if (get_string(loss, "instance.loss", "kind") != "quadratic_anisotropic") {
    throw ConfigError(
        "field instance.loss.kind: only quadratic_anisotropic instances "
        "support the exact Gaussian-law calculus");
  }
  const double lam_loss = get_double(loss, "instance.loss", "lam_loss");
  const double beta_loss = get_double(loss, "instance.loss", "beta_loss");
  const double L = get_double(loss, "instance.loss", "L");
  if (!(lam_loss > 0.0) || !(beta_loss >= lam_loss)) {
    throw ConfigError(
        "field instance.loss: requires 0 < lam_loss <= beta_loss");
  }
  if (!(L > 0.0)) throw ConfigError("field instance.loss.L must be > 0");

  q.objective.loss =
      unlearn::make_quadratic_anisotropic(lam_loss, beta_loss, q.d, L);
  q.objective.reg_lambda = q.lambda;
  q.objective.clip_L = L;

  // Deterministic data and edit stream: records from the config seed, edits
  // replacing index (k-1) mod n with a fresh record of the same scale.
  unlearn::DeterministicRng rng(unlearn::derive_seed(seed, 0xDA7Aull));
  q.db0.records.reserve(static_cast<size_t>(q.n));
  for (long long i = 0; i < q.n; ++i) {
    q.db0.records.push_back(bounded_record(q.d, q.record_scale, rng));
  }
  q.edits.reserve(static_cast<size_t>(steps));
  for (long long k = 1; k <= steps; ++k) {
    unlearn::EditRequest u;
    u.replacements.push_back(
        {(k - 1) % q.n, bounded_record(q.d, q.record_scale, rng)});
    q.edits.push_back(std::move(u));
  }
  return q;
}

unlearn::RecipeParams instance_recipe(const QuadraticInstance& inst,
                                      const unlearn::BudgetSpec& budget,
                                      const Json& cfg) {
  unlearn::RecipeParams recipe = unlearn::convex_recipe(
      inst.lambda, inst.objective.loss.smooth_beta,
      inst.objective.loss.lipschitz_L, inst.n, inst.d, 1, budget);
  if (cfg.contains("k_delete_override")) {
    const long long k = get_int(cfg, "", "k_delete_override");
    if (k < 0) throw ConfigError("field k_delete_override must be >= 0");
    recipe.k_delete = k;
  }
  if (cfg.contains("sigma2_override")) {
    const double s = get_double(cfg, "", "sigma2_override");
    if (s < 0.0) throw ConfigError("field sigma2_override must be >= 0");
    recipe.sigma2 = s;
    recipe.init_variance =
        s / (inst.lambda * (1.0 - recipe.eta * inst.lambda / 2.0));
  }
  return recipe;
}

// ---------------------------------------------------------------------------
// recipe

int cmd_recipe(const Json& cfg, const std::filesystem::path& out_dir) {
  const std::string regime = get_string(cfg, "", "regime");
  const unlearn::BudgetSpec budget = parse_budget(cfg);
  const double lambda = get_double(cfg, "", "lambda");
  const double beta = get_double(cfg, "", "beta");
  const double L = get_double(cfg, "", "L");
  const long long n = get_int(cfg, "", "n");
  const int d = static_cast<int>(get_int(cfg, "", "d"));
  const long long batch = get_int(cfg, "", "edit_batch_size");

  unlearn::RecipeParams recipe;
  try {
    if (regime == "convex") {
      recipe = unlearn::convex_recipe(lambda, beta, L, n, d, batch, budget);
    } else if (regime == "nonconvex") {
      const double B = get_double(cfg, "", "B");
      recipe = unlearn::nonconvex_recipe(lambda, beta, L, B, n, d, batch, budget);
    } else {
      throw ConfigError("field regime must be \"convex\" or \"nonconvex\"");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  Json report;
  report["schema"] = "unlearn-recipe/1";
  Json inputs = cfg;
  inputs.erase("schema");
  report["inputs"] = std::move(inputs);
  report["recipe"] = unlearn::recipe_to_json(recipe);
  write_file(out_dir / "recipe.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify-deletion

int cmd_verify_deletion(const Json& cfg, std::uint64_t seed,
                        const std::filesystem::path& out_dir) {
  const long long steps = get_int(cfg, "", "steps");
  if (steps < 1) throw ConfigError("field steps must be >= 1");
  const unlearn::BudgetSpec budget = parse_budget(cfg);
  QuadraticInstance inst = parse_quadratic_instance(cfg, steps, seed);
  if (steps > inst.n) {
    throw ConfigError(
        "field steps: must be <= instance.n (each edited index may be "
        "touched once)");
  }
  unlearn::RecipeParams recipe;
  try {
    recipe = instance_recipe(inst, budget, cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto laws_a =
      unlearn::stream_gaussian_laws(inst.objective, inst.db0, recipe, inst.edits);
  const double certified =
      unlearn::convex_deletion_bound(budget.q, inst.objective.loss.lipschitz_L,
                                     inst.lambda, recipe.sigma2, inst.n,
                                     recipe.eta, recipe.k_delete)
          .epsilon;

  std::ostringstream csv;
  std::ostringstream jsonl;
  csv << "step,exact_divergence,certified_budget,eps_dd,slack,pass\n";
  bool all_pass = true;
  for (long long k = 1; k <= steps; ++k) {
    // Neighbour world: the record edited at step k already held its
    // post-edit value, so edit k repairs the one-record difference.
    unlearn::Database db0_nb = inst.db0;
    const auto& rep = inst.edits[static_cast<size_t>(k - 1)].replacements[0];
    db0_nb.records[static_cast<size_t>(rep.index)] = rep.record;
    const std::vector<unlearn::EditRequest> prefix(
        inst.edits.begin(), inst.edits.begin() + static_cast<long>(k));
    const auto laws_b =
        unlearn::stream_gaussian_laws(inst.objective, db0_nb, recipe, prefix);
    const double exact =
        unlearn::renyi_gaussian_general(budget.q, laws_a[static_cast<size_t>(k)],
                                        laws_b[static_cast<size_t>(k)])
            .epsilon;
    const bool pass = certified <= budget.eps_dd && exact <= budget.eps_dd;
    all_pass = all_pass && pass;
    csv << k << ',' << format_double(exact) << ',' << format_double(certified)
        << ',' << format_double(budget.eps_dd) << ','
        << format_double(budget.eps_dd - certified) << ','
        << (pass ? "true" : "false") << '\n';
    Json line;
    line["step"] = k;
    line["exact_divergence"] = json_number(exact);
    line["certified_budget"] = json_number(certified);
    line["eps_dd"] = budget.eps_dd;
    line["pass"] = pass;
    jsonl << line.dump() << '\n';
  }
  write_file(out_dir / "verify_deletion.csv", csv.str());
  write_file(out_dir / "verify_deletion.jsonl", jsonl.str());
  std::cout << (all_pass ? "verify-deletion: all steps within eps_dd"
                         : "verify-deletion: BUDGET EXCEEDED at some step")
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// attack

int attack_median(const Json& cfg, std::uint64_t seed, long long trials,
                  const std::filesystem::path& out_dir) {
  const long long n = get_int(cfg, "", "n");
  const long long target_step = get_int(cfg, "", "target_step");
  unlearn::Database db0;
  for (long long i = 1; i <= n; ++i) {
    unlearn::Record x(1);
    x(0) = static_cast<double>(i);
    db0.records.push_back(x);
  }
  unlearn::DeterministicRng rng(unlearn::derive_seed(seed, 0x3Dull));
  unlearn::AttackReport report;
  try {
    report = unlearn::median_attack_run(db0, target_step, trials, rng);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double stderr_hat =
      std::sqrt(report.success_rate * (1.0 - report.success_rate) /
                static_cast<double>(report.trials));

  std::ostringstream csv;
  csv << "attack,n,target_step,trials,successes,success_rate,"
         "theoretical_bound,binomial_stderr\n";
  csv << "median," << n << ',' << target_step << ',' << report.trials << ','
      << report.successes << ',' << format_double(report.success_rate) << ','
      << format_double(report.theoretical_bound) << ','
      << format_double(stderr_hat) << '\n';
  write_file(out_dir / "attack_summary.csv", csv.str());

  Json line;
  line["attack"] = "median";
  line["n"] = n;
  line["target_step"] = target_step;
  line["trials"] = report.trials;
  line["successes"] = report.successes;
  line["success_rate"] = report.success_rate;
  line["theoretical_bound"] = report.theoretical_bound;
  write_file(out_dir / "attack_transcript.jsonl", line.dump() + "\n");
  std::cout << "median attack: success_rate=" << report.success_rate
            << " bound=" << report.theoretical_bound << "\n";
  return 0;
}

int attack_counting(const Json& cfg, std::uint64_t seed, long long trials,
                    const std::filesystem::path& out_dir) {
  const long long n = get_int(cfg, "", "n");
  const double eps = get_double(cfg, "", "eps");
  const long long first_step = get_int(cfg, "", "first_step");
  const long long releases = get_int(cfg, "", "releases");
  if (n < 2) throw ConfigError("field n must be >= 2");
  if (!(eps > 0.0)) throw ConfigError("field eps must be > 0");
  if (first_step < 1) throw ConfigError("field first_step must be >= 1");
  if (releases < first_step) {
    throw ConfigError("field releases must be >= first_step");
  }
  if (trials < 1) throw ConfigError("field trials must be >= 1");

  const unlearn::RecordQuery query = [](const unlearn::Record& x) {
    return x(0) > 0.5 ? 1 : 0;
  };
  unlearn::Record zero(1), one(1);
  zero(0) = 0.0;
  one(0) = 1.0;

  long long correct = 0;
  double cumulative_divergence = 0.0;
  std::ostringstream jsonl;
  for (long long t = 0; t < trials; ++t) {
    unlearn::DeterministicRng rng(unlearn::derive_seed(seed, 0xC0u,
                                                       static_cast<std::uint64_t>(t)));
    const int world = static_cast<int>(rng.next_u64() & 1u);

    // World `world`: the record deleted at first_step has query value
    // `world`; every other record is query-0.
    unlearn::Database db;
    db.records.assign(static_cast<size_t>(n), zero);
    db.records[0] = world == 1 ? one : zero;
    unlearn::CountingState state = unlearn::counting_init(db, query);

    std::vector<double> observations;
    for (long long j = 1; j <= releases; ++j) {
      unlearn::Replacement u;
      if (j == first_step) {
        u.index = 0;  // the owner deletes the target record
        u.record = zero;
      } else {
        u.index = 1 + (j - 1) % (n - 1);  // self-replacement of a query-0 record
        u.record = zero;
      }
      const unlearn::CountingState next =
          unlearn::counting_update(state, db, u, query);
      db.records[static_cast<size_t>(u.index)] = u.record;
      state = next;
      const double offset = unlearn::counting_publish_noiseless(state) -
                            static_cast<double>(state.cnt);
      if (offset < 0.0 || offset > 1.0) {
        throw AssertionError(
            "counting attack: per-release deletion offset left [0, 1]");
      }
      const double y = unlearn::counting_publish(state, eps, rng);
      if (j >= first_step) observations.push_back(y);
    }

    const std::vector<double> h0_means(observations.size(), 0.0);
    const unlearn::CountingDecision decision = unlearn::counting_adversary(
        observations, first_step, 0, 1, h0_means, eps, rng);
    if (decision.decision == world) ++correct;
    cumulative_divergence = decision.cumulative_divergence;

    Json line;
    line["trial"] = t;
    line["world"] = world;
    line["decision"] = decision.decision;
    line["llr"] = json_number(decision.llr);
    jsonl << line.dump() << '\n';
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(trials);

  std::ostringstream csv;
  csv << "attack,n,eps,first_step,releases,trials,correct,accuracy,"
         "cumulative_divergence\n";
  csv << "counting," << n << ',' << format_double(eps) << ',' << first_step
      << ',' << releases << ',' << trials << ',' << correct << ','
      << format_double(accuracy) << ',' << format_double(cumulative_divergence)
      << '\n';
  write_file(out_dir / "attack_summary.csv", csv.str());
  write_file(out_dir / "attack_transcript.jsonl", jsonl.str());
  std::cout << "counting attack: accuracy=" << accuracy
            << " cumulative_divergence=" << cumulative_divergence << "\n";
  return 0;
}

int attack_pgd(const Json& cfg, const std::filesystem::path& out_dir) {
  unlearn::PgdConfig pc;
  pc.lambda = get_double(cfg, "", "lambda");
  pc.beta = get_double(cfg, "", "beta");
  pc.lipschitz_L = get_double(cfg, "", "L");
  pc.n = get_int(cfg, "", "n");
  pc.k_unlearn = get_int(cfg, "", "k_unlearn");
  pc.eps = get_double(cfg, "", "eps");
  pc.delta = get_double(cfg, "", "delta");
  const double q = get_double(cfg, "", "q");
  const long long releases = get_int(cfg, "", "releases");

  unlearn::PgdStreamResult result;
  try {
    result = unlearn::pgd_stream_divergence(pc, q, releases);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::ostringstream jsonl;
  double cumulative = 0.0;
  for (size_t i = 0; i < result.closed_form_terms.size(); ++i) {
    const double gap =
        std::abs(result.closed_form_terms[i] - result.empirical_terms[i]);
    if (gap > 1e-10) {
      throw AssertionError(
          "pgd attack: closed-form and simulated divergence disagree at "
          "release " +
          std::to_string(i + 1) + " by " + format_double(gap));
    }
    cumulative += result.closed_form_terms[i];
    Json line;
    line["release"] = i + 1;
    line["closed_form"] = json_number(result.closed_form_terms[i]);
    line["empirical"] = json_number(result.empirical_terms[i]);
    line["cumulative"] = json_number(cumulative);
    jsonl << line.dump() << '\n';
  }

  std::ostringstream csv;
  csv << "attack,q,releases,sigma,closed_form_total,limit_total,"
         "single_release_budget,crossing_release\n";
  csv << "pgd," << format_double(q) << ',' << releases << ','
      << format_double(unlearn::neel_noise_sigma(pc)) << ','
      << format_double(result.closed_form_total) << ','
      << format_double(result.limit_total) << ','
      << format_double(result.single_release_budget) << ','
      << (result.crossing_release ? std::to_string(*result.crossing_release)
                                  : std::string("none"))
      << '\n';
  write_file(out_dir / "attack_summary.csv", csv.str());
  write_file(out_dir / "attack_transcript.jsonl", jsonl.str());
  std::cout << "pgd attack: cumulative=" << result.closed_form_total
            << " budget=" << result.single_release_budget << " crossing="
            << (result.crossing_release
                    ? std::to_string(*result.crossing_release)
                    : std::string("none"))
            << "\n";
  return 0;
}

int cmd_attack(const Json& cfg, std::uint64_t seed,
               std::optional<long long> trials_override,
               const std::filesystem::path& out_dir) {
  const std::string kind = get_string(cfg, "", "attack");
  long long trials = 0;
  if (kind != "pgd") {
    trials = trials_override ? *trials_override : get_int(cfg, "", "trials");
    if (trials < 1) throw ConfigError("field trials must be >= 1");
  }
  if (kind == "median") return attack_median(cfg, seed, trials, out_dir);
  if (kind == "counting") return attack_counting(cfg, seed, trials, out_dir);
  if (kind == "pgd") return attack_pgd(cfg, out_dir);
  throw ConfigError(
      "field attack must be \"counting\", \"median\", or \"pgd\"");
}

// ---------------------------------------------------------------------------
// risk

int cmd_risk(const Json& cfg, std::uint64_t seed,
             std::optional<long long> trials_override,
             const std::filesystem::path& out_dir) {
  const long long steps = get_int(cfg, "", "steps");
  if (steps < 0) throw ConfigError("field steps must be >= 0");
  const long long trials =
      trials_override ? *trials_override : get_int(cfg, "", "trials");
  if (trials < 1) throw ConfigError("field trials must be >= 1");
  const unlearn::BudgetSpec budget = parse_budget(cfg);
  QuadraticInstance inst = parse_quadratic_instance(cfg, steps, seed);
  if (steps > inst.n) {
    throw ConfigError("field steps: must be <= instance.n");
  }
  unlearn::RecipeParams recipe;
  try {
    recipe = instance_recipe(inst, budget, cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  // The edit sequence is deterministic, so the database trajectory (and each
  // step's exact minimizer and base risk) is shared by every trial.
  std::vector<unlearn::Database> dbs;
  dbs.push_back(inst.db0);
  for (const auto& u : inst.edits) {
    dbs.push_back(unlearn::apply_edit(dbs.back(), u));
  }
  std::vector<double> base_risk;
  for (const auto& db : dbs) {
    const unlearn::ModelParams star =
        unlearn::quadratic_minimizer(inst.objective, db);
    base_risk.push_back(
        unlearn::regularized_objective(inst.objective, db, star));
  }

  const unlearn::Requester requester = unlearn::Requester::fixed(inst.edits);
  std::vector<double> sum(static_cast<size_t>(steps + 1), 0.0);
  std::vector<double> sum_sq(static_cast<size_t>(steps + 1), 0.0);
  for (long long t = 0; t < trials; ++t) {
    const unlearn::Transcript transcript = unlearn::run_stream(
        inst.objective, inst.db0, recipe, requester, steps,
        unlearn::derive_seed(seed, 1, static_cast<std::uint64_t>(t)));
    for (long long k = 0; k <= steps; ++k) {
      const double gap =
          unlearn::regularized_objective(
              inst.objective, dbs[static_cast<size_t>(k)],
              transcript.entries[static_cast<size_t>(k)].released) -
          base_risk[static_cast<size_t>(k)];
      sum[static_cast<size_t>(k)] += gap;
      sum_sq[static_cast<size_t>(k)] += gap * gap;
    }
  }

  const double bound = 10.0 * recipe.kappa * budget.q * inst.d *
                       inst.objective.loss.lipschitz_L *
                       inst.objective.loss.lipschitz_L /
                       (inst.lambda * budget.eps_dp *
                        static_cast<double>(inst.n) *
                        static_cast<double>(inst.n));

  std::ostringstream csv;
  csv << "step,mean_excess,std_error,bound,pass\n";
  for (long long k = 0; k <= steps; ++k) {
    const double mean = sum[static_cast<size_t>(k)] / static_cast<double>(trials);
    const double var =
        (sum_sq[static_cast<size_t>(k)] -
         static_cast<double>(trials) * mean * mean) /
        std::max(1.0, static_cast<double>(trials - 1));
    const double se = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
    const bool pass = mean <= bound + 3.0 * se;
    csv << k << ',' << format_double(mean) << ',' << format_double(se) << ','
        << format_double(bound) << ',' << (pass ? "true" : "false") << '\n';
  }
  write_file(out_dir / "risk.csv", csv.str());
  std::cout << "risk: wrote " << (steps + 1) << " steps x " << trials
            << " trials (bound " << bound << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// accountant

Eigen::VectorXd parse_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("field " + path + " must be a nonempty numeric array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError("field " + path + ": numbers only");
    v(i++) = x.get<double>();
  }
  return v;
}

Eigen::MatrixXd parse_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("field " + path + " must be a nonempty array of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row =
        parse_vector(j.at(static_cast<size_t>(r)),
                     path + "[" + std::to_string(r) + "]");
    if (r == 0) {
      m.resize(rows, row.size());
    } else if (row.size() != m.cols()) {
      throw ConfigError("field " + path + ": ragged rows");
    }
    m.row(r) = row;
  }
  return m;
}

Json run_accountant_query(const Json& query, const std::string& path) {
  const std::string rule = get_string(query, path, "rule");
  Json inputs = query;
  inputs.erase("rule");
  Json out;
  out["rule"] = rule;
  out["inputs"] = inputs;

  try {
    if (rule == "gaussian_renyi") {
      const unlearn::RenyiBound b = unlearn::gaussian_renyi(
          get_double(query, path, "q"),
          parse_vector(require_field(query, path, "mu1"), path + ".mu1"),
          parse_vector(require_field(query, path, "mu2"), path + ".mu2"),
          get_double(query, path, "sigma2"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "gaussian_general") {
      unlearn::GaussianLaw l1, l2;
      l1.mean = parse_vector(require_field(query, path, "mean1"), path + ".mean1");
      l1.cov = parse_matrix(require_field(query, path, "cov1"), path + ".cov1");
      l2.mean = parse_vector(require_field(query, path, "mean2"), path + ".mean2");
      l2.cov = parse_matrix(require_field(query, path, "cov2"), path + ".cov2");
      const unlearn::RenyiBound b =
          unlearn::renyi_gaussian_general(get_double(query, path, "q"), l1, l2);
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "rdp_noisy_gd_lipschitz") {
      const unlearn::RenyiBound b = unlearn::rdp_noisy_gd_lipschitz(
          get_double(query, path, "q"), get_double(query, path, "L"),
          get_double(query, path, "sigma2"), get_int(query, path, "n"),
          get_double(query, path, "eta"), get_int(query, path, "K"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "rdp_noisy_gd_convex") {
      const unlearn::RenyiBound b = unlearn::rdp_noisy_gd_convex(
          get_double(query, path, "q"), get_double(query, path, "L"),
          get_double(query, path, "lambda"), get_double(query, path, "beta"),
          get_double(query, path, "sigma2"), get_int(query, path, "n"),
          get_double(query, path, "eta"), get_int(query, path, "K"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "convex_deletion_bound") {
      const unlearn::RenyiBound b = unlearn::convex_deletion_bound(
          get_double(query, path, "q"), get_double(query, path, "L"),
          get_double(query, path, "lambda"), get_double(query, path, "sigma2"),
          get_int(query, path, "n"), get_double(query, path, "eta"),
          get_int(query, path, "k_delete"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "rdp_to_dp") {
      unlearn::RenyiBound b;
      b.order_q = get_double(query, path, "q");
      b.epsilon = get_double(query, path, "epsilon");
      b.provenance = "cli";
      const unlearn::DPBound dp =
          unlearn::rdp_to_dp(b, get_double(query, path, "delta"));
      out["epsilon"] = json_number(dp.epsilon);
      out["q"] = nullptr;
      out["delta"] = dp.delta;
      out["one_sided"] = dp.one_sided;
    } else if (rule == "compose") {
      const Json& list = require_field(query, path, "bounds");
      std::vector<unlearn::RenyiBound> bounds;
      for (size_t i = 0; i < list.size(); ++i) {
        const std::string bp = path + ".bounds[" + std::to_string(i) + "]";
        unlearn::RenyiBound b;
        const Json& item = list.at(i);
        const Json& qv = require_field(item, bp, "q");
        b.order_q = qv.is_string() ? std::numeric_limits<double>::infinity()
                                   : qv.get<double>();
        b.epsilon = get_double(item, bp, "epsilon");
        b.provenance = "cli";
        bounds.push_back(std::move(b));
      }
      const unlearn::RenyiBound b = unlearn::compose(bounds);
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "adaptive_deletion_bound") {
      const unlearn::RenyiBound b = unlearn::adaptive_deletion_bound(
          get_double(query, path, "q"), get_double(query, path, "eps_dd"),
          get_double(query, path, "eps_dp"), get_int(query, path, "p"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "bounded_perturbation_renyi") {
      const unlearn::RenyiBound b = unlearn::bounded_perturbation_renyi(
          get_double(query, path, "c"), get_double(query, path, "sigma2"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "weak_triangle") {
      unlearn::RenyiBound a;
      a.order_q = get_double(query, path, "q");
      a.epsilon = get_double(query, path, "epsilon");
      a.provenance = "cli";
      const unlearn::RenyiBound b =
          unlearn::weak_triangle(a, get_double(query, path, "sup"));
      out["epsilon"] = json_number(b.epsilon);
      out["q"] = json_number(b.order_q);
    } else if (rule == "nonconvex_convergence_bound") {
      const double v = unlearn::nonconvex_convergence_bound(
          get_double(query, path, "q"), get_double(query, path, "lambda"),
          get_double(query, path, "eta"), get_int(query, path, "K"),
          get_double(query, path, "B"),
          static_cast<int>(get_int(query, path, "d")),
          get_double(query, path, "beta"), get_double(query, path, "R0"));
      out["epsilon"] = json_number(v);
      out["q"] = json_number(get_double(query, path, "q"));
    } else if (rule == "gibbs_excess_risk_bound") {
      const double v = unlearn::gibbs_excess_risk_bound(
          static_cast<int>(get_int(query, path, "d")),
          get_double(query, path, "sigma2"), get_double(query, path, "lambda"),
          get_double(query, path, "beta"), get_double(query, path, "B"));
      out["epsilon"] = json_number(v);
      out["q"] = nullptr;
    } else {
      throw ConfigError("field " + path + ".rule: unknown rule \"" + rule +
                        "\"");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return out;
}

int cmd_accountant(const Json& cfg, const std::filesystem::path& out_dir) {
  const Json& queries = require_field(cfg, "", "queries");
  if (!queries.is_array() || queries.empty()) {
    throw ConfigError("field queries must be a nonempty array");
  }
  std::ostringstream jsonl;
  for (size_t i = 0; i < queries.size(); ++i) {
    const Json report = run_accountant_query(
        queries.at(i), "queries[" + std::to_string(i) + "]");
    jsonl << report.dump() << '\n';
    std::cout << report.dump() << "\n";
  }
  write_file(out_dir / "accountant.jsonl", jsonl.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Machine-unlearning verification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  long long trials = 0;
  bool trials_set = false;

  auto add_common = [&](CLI::App* sub, bool with_seed, bool with_trials) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    if (with_seed) {
      sub->add_option("--seed", seed, "root seed override")
          ->each([&](const std::string&) { seed_set = true; });
    }
    if (with_trials) {
      sub->add_option("--trials", trials, "trial count override")
          ->each([&](const std::string&) { trials_set = true; });
    }
  };

  CLI::App* recipe = app.add_subcommand("recipe", "print a noisy-GD recipe");
  add_common(recipe, false, false);
  CLI::App* verify = app.add_subcommand(
      "verify-deletion", "exact per-step deletion divergences vs eps_dd");
  add_common(verify, true, false);
  CLI::App* attack =
      app.add_subcommand("attack", "run a counting/median/pgd attack");
  add_common(attack, true, true);
  CLI::App* risk =
      app.add_subcommand("risk", "excess-risk table vs theoretical bound");
  add_common(risk, true, true);
  CLI::App* accountant =
      app.add_subcommand("accountant", "evaluate divergence-budget queries");
  add_common(accountant, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const Json cfg = load_config(config_path);
    if (!seed_set && cfg.contains("seed")) {
      seed = cfg.at("seed").get<std::uint64_t>();
    }
    std::optional<long long> trials_override;
    if (trials_set) trials_override.emplace(trials);
    const std::filesystem::path out(out_dir);
    const std::string experiment = get_string(cfg, "", "experiment");

    if (recipe->parsed()) {
      if (experiment != "recipe") {
        throw ConfigError("field experiment: expected \"recipe\"");
      }
      return cmd_recipe(cfg, out);
    }
    if (verify->parsed()) {
      if (experiment != "verify-deletion") {
        throw ConfigError("field experiment: expected \"verify-deletion\"");
      }
      return cmd_verify_deletion(cfg, seed, out);
    }
    if (attack->parsed()) {
      if (experiment != "attack") {
        throw ConfigError("field experiment: expected \"attack\"");
      }
      return cmd_attack(cfg, seed, trials_override, out);
    }
    if (risk->parsed()) {
      if (experiment != "risk") {
        throw ConfigError("field experiment: expected \"risk\"");
      }
      return cmd_risk(cfg, seed, trials_override, out);
    }
    if (accountant->parsed()) {
      if (experiment != "accountant") {
        throw ConfigError("field experiment: expected \"accountant\"");
      }
      return cmd_accountant(cfg, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const AssertionError& e) {
    std::cerr << "assertion failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
