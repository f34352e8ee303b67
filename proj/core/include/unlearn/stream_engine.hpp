// The online edit-stream protocol: a controller running (learn, delete)
// against a pluggable update requester, recording a transcript of releases.
//
// Determinism: the step-k release uses the rng seed derive_seed(root_seed,
// stream_id, k), so streams of different lengths share prefixes, and a
// stream can be check-pointed mid-way and resumed bit-identically.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "unlearn/noisy_gd.hpp"
#include "unlearn/types.hpp"

namespace unlearn {

// What an adaptive requester is allowed to see: at most p_limit of the most
// recent releases (the canonical observation schedule), plus the public
// stream position.  Non-adaptive (fixed-sequence) requesters see nothing.
struct VisibleHistory {
  long long step = 0;                  // index of the edit being requested
  long long n = 0;                     // database size
  std::vector<ModelParams> releases;   // at most p_limit most recent
};

using AdaptiveFn = std::function<EditRequest(const VisibleHistory&)>;

struct Requester {
  // Fixed sequence (non-adaptive, 0-adaptive) or adaptive callback.
  std::variant<std::vector<EditRequest>, AdaptiveFn> behavior;
  // Maximum number of published models an adaptive callback may observe.
  // Ignored for fixed sequences.
  std::uint64_t p_limit = 0;

  static Requester fixed(std::vector<EditRequest> edits);
  static Requester adaptive(AdaptiveFn fn, std::uint64_t p_limit);
};

struct TranscriptEntry {
  long long step = 0;                    // 0 is the learn release
  std::optional<EditRequest> edit;       // absent at step 0
  ModelParams released;
  std::uint64_t database_hash = 0;       // FNV-1a over record bytes
  std::uint64_t rng_seed = 0;            // seed used for this release
};

struct Transcript {
  std::vector<TranscriptEntry> entries;
  RecipeParams recipe;
  std::uint64_t root_seed = 0;
  std::uint64_t stream_id = 0;
};

std::uint64_t hash_database(const Database& db);

// Runs the protocol: release 0 is learn(D0); for i = 1..steps the requester
// emits edit u_i, the database becomes D_{i-1} o u_i, and release i is the
// deletion update from release i-1.  The engine keeps no state besides the
// current (database, release) pair.  Throws std::invalid_argument naming the
// step when the requester emits an invalid request.
Transcript run_stream(const Objective& obj, const Database& db0,
                      const RecipeParams& recipe, const Requester& requester,
                      long long steps, std::uint64_t root_seed,
                      std::uint64_t stream_id = 0);

// Resumes a stream from its recorded state after `done_steps` edits,
// reproducing entries done_steps+1 .. steps exactly (same derived seeds).
Transcript resume_stream(const Objective& obj, const Database& db_current,
                         const ModelParams& released_current,
                         const RecipeParams& recipe,
                         const Requester& requester, long long done_steps,
                         long long steps, std::uint64_t root_seed,
                         std::uint64_t stream_id = 0);

// Runs two streams whose initial databases differ in exactly one record and
// whose first edit u_star repairs the difference (D0 o u_star equals
// D0_neighbour o u_star).  The requester must be non-adaptive.  When
// `coupled_seeds` is true both streams share the same derived seeds.
std::pair<Transcript, Transcript> counterfactual_pair(
    const Objective& obj, const Database& db0, const Database& db0_neighbour,
    const EditRequest& u_star, const RecipeParams& recipe,
    const Requester& requester, long long steps, std::uint64_t root_seed,
    bool coupled_seeds);

// Law-level mirror of run_stream for quadratic instances with inactive
// clipping: the exact Gaussian law of every release, via the pushforward
// oracle.  edits[i] is applied before the (i+1)-th released law.
std::vector<GaussianLaw> stream_gaussian_laws(
    const Objective& obj, const Database& db0, const RecipeParams& recipe,
    const std::vector<EditRequest>& edits);

// Law-level mirror of a fresh learn on the given database (counterfactual
// re-learning target for deletion verification).
GaussianLaw learn_gaussian_law(const Objective& obj, const Database& db,
                               const RecipeParams& recipe);

}  // namespace unlearn
