#include "unlearn/stream_engine.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

#include "unlearn/core_model.hpp"

namespace unlearn {

namespace {

// Fetches the requester's edit for `step`, exposing at most p_limit of the
// most recent releases to adaptive callbacks.
EditRequest next_edit(const Requester& requester, long long step,
                      const Database& db,
                      const std::vector<ModelParams>& releases) {
  if (const auto* fixed =
          std::get_if<std::vector<EditRequest>>(&requester.behavior)) {
    const size_t idx = static_cast<size_t>(step - 1);
    if (idx >= fixed->size()) {
      std::ostringstream msg;
      msg << "run_stream: fixed requester has no edit for step " << step;
      throw std::invalid_argument(msg.str());
    }
    return (*fixed)[idx];
  }
  const auto& fn = std::get<AdaptiveFn>(requester.behavior);
  VisibleHistory h;
  h.step = step;
  h.n = db.n();
  const size_t visible =
      std::min<size_t>(releases.size(), static_cast<size_t>(requester.p_limit));
  h.releases.assign(releases.end() - static_cast<long>(visible),
                    releases.end());
  return fn(h);
}

void validate_edit_or_throw(const Database& db, const EditRequest& u,
                            long long step) {
  try {
    (void)apply_edit(db, u);  // reuses the canonical validation
  } catch (const std::invalid_argument& e) {
    std::ostringstream msg;
    msg << "run_stream: invalid edit request at step " << step << ": "
        << e.what();
    throw std::invalid_argument(msg.str());
  }
}

Transcript run_stream_from(const Objective& obj, Database db,
                           std::optional<ModelParams> current,
                           const RecipeParams& recipe,
                           const Requester& requester, long long first_step,
                           long long steps, std::uint64_t root_seed,
                           std::uint64_t stream_id) {
  Transcript t;
  t.recipe = recipe;
  t.root_seed = root_seed;
  t.stream_id = stream_id;

  std::vector<ModelParams> releases;
  if (first_step == 0) {
    const std::uint64_t seed0 = derive_seed(root_seed, stream_id, 0);
    DeterministicRng rng(seed0);
    TranscriptEntry e;
    e.step = 0;
    e.released = learn(obj, db, recipe, rng);
    e.database_hash = hash_database(db);
    e.rng_seed = seed0;
    releases.push_back(e.released);
    current = e.released;
    t.entries.push_back(std::move(e));
    first_step = 1;
  } else if (current.has_value()) {
    releases.push_back(*current);
  }

  for (long long k = first_step; k <= steps; ++k) {
    EditRequest u = next_edit(requester, k, db, releases);
    validate_edit_or_throw(db, u, k);
    const std::uint64_t seed_k = derive_seed(root_seed, stream_id,
                                             static_cast<std::uint64_t>(k));
    DeterministicRng rng(seed_k);
    TranscriptEntry e;
    e.step = k;
    e.released = delete_update(obj, db, u, *current, recipe, rng);
    db = apply_edit(db, u);
    e.database_hash = hash_database(db);
    e.rng_seed = seed_k;
    e.edit = std::move(u);
    releases.push_back(e.released);
    current = e.released;
    t.entries.push_back(std::move(e));
  }
  return t;
}

}  // namespace

Requester Requester::fixed(std::vector<EditRequest> edits) {
  Requester r;
  r.behavior = std::move(edits);
  r.p_limit = 0;
  return r;
}

Requester Requester::adaptive(AdaptiveFn fn, std::uint64_t p_limit) {
  Requester r;
  r.behavior = std::move(fn);
  r.p_limit = p_limit;
  return r;
}

std::uint64_t hash_database(const Database& db) {
  // FNV-1a over the raw little-endian bytes of every coordinate in order.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint64_t n = static_cast<std::uint64_t>(db.n());
  mix(&n, sizeof(n));
  for (const Record& x : db.records) {
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double v = x(j);
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      mix(&bits, sizeof(bits));
    }
  }
  return h;
}

Transcript run_stream(const Objective& obj, const Database& db0,
                      const RecipeParams& recipe, const Requester& requester,
                      long long steps, std::uint64_t root_seed,
                      std::uint64_t stream_id) {
  if (steps < 0) throw std::invalid_argument("run_stream: steps must be >= 0");
  if (db0.n() == 0) throw std::invalid_argument("run_stream: empty database");
  return run_stream_from(obj, db0, std::nullopt, recipe, requester, 0, steps,
                         root_seed, stream_id);
}

Transcript resume_stream(const Objective& obj, const Database& db_current,
                         const ModelParams& released_current,
                         const RecipeParams& recipe,
                         const Requester& requester, long long done_steps,
                         long long steps, std::uint64_t root_seed,
                         std::uint64_t stream_id) {
  if (done_steps < 0 || steps < done_steps) {
    throw std::invalid_argument(
        "resume_stream: requires 0 <= done_steps <= steps");
  }
  return run_stream_from(obj, db_current, released_current, recipe, requester,
                         done_steps + 1, steps, root_seed, stream_id);
}

std::pair<Transcript, Transcript> counterfactual_pair(
    const Objective& obj, const Database& db0, const Database& db0_neighbour,
    const EditRequest& u_star, const RecipeParams& recipe,
    const Requester& requester, long long steps, std::uint64_t root_seed,
    bool coupled_seeds) {
  if (db0.n() != db0_neighbour.n()) {
    throw std::invalid_argument(
        "counterfactual_pair: databases differ in size");
  }
  long long diff_count = 0;
  for (size_t i = 0; i < db0.records.size(); ++i) {
    if (db0.records[i] != db0_neighbour.records[i]) ++diff_count;
  }
  if (diff_count != 1) {
    throw std::invalid_argument(
        "counterfactual_pair: databases must differ in exactly one record");
  }
  if (!std::holds_alternative<std::vector<EditRequest>>(requester.behavior)) {
    throw std::invalid_argument(
        "counterfactual_pair: requester must be non-adaptive (a fixed "
        "sequence); adaptive callbacks would break the coupling");
  }
  if (steps < 1) {
    throw std::invalid_argument(
        "counterfactual_pair: needs at least the repairing edit step");
  }
  {
    const Database a = apply_edit(db0, u_star);
    const Database b = apply_edit(db0_neighbour, u_star);
    if (hash_database(a) != hash_database(b)) {
      throw std::invalid_argument(
          "counterfactual_pair: u_star does not repair the difference");
    }
  }

  // Prepend u_star to the requester's fixed sequence for both worlds.
  std::vector<EditRequest> edits{u_star};
  const auto& rest = std::get<std::vector<EditRequest>>(requester.behavior);
  edits.insert(edits.end(), rest.begin(), rest.end());
  const Requester seq = Requester::fixed(std::move(edits));

  Transcript a = run_stream(obj, db0, recipe, seq, steps, root_seed, 0);
  Transcript b = run_stream(obj, db0_neighbour, recipe, seq, steps, root_seed,
                            coupled_seeds ? 0 : 1);
  return {std::move(a), std::move(b)};
}

GaussianLaw learn_gaussian_law(const Objective& obj, const Database& db,
                               const RecipeParams& recipe) {
  const int d = obj.loss.dimension;
  GaussianLaw init;
  init.mean = Eigen::VectorXd::Zero(d);
  init.cov = recipe.init_variance * Eigen::MatrixXd::Identity(d, d);
  return gaussian_pushforward(obj, db, init, recipe.k_learn, recipe.eta,
                              recipe.sigma2);
}

std::vector<GaussianLaw> stream_gaussian_laws(
    const Objective& obj, const Database& db0, const RecipeParams& recipe,
    const std::vector<EditRequest>& edits) {
  std::vector<GaussianLaw> laws;
  laws.reserve(edits.size() + 1);
  laws.push_back(learn_gaussian_law(obj, db0, recipe));
  Database db = db0;
  for (const EditRequest& u : edits) {
    db = apply_edit(db, u);
    laws.push_back(gaussian_pushforward(obj, db, laws.back(), recipe.k_delete,
                                        recipe.eta, recipe.sigma2));
  }
  return laws;
}

}  // namespace unlearn
