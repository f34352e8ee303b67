// JSON serialization for the exchange types.
//
// Formats:
//   database    {"n": 3, "records": [[...], ...]}
//   edit        {"replacements": [{"index": 0, "record": [...]}, ...]}
//   recipe      all fields plus kappa and binding-constraint names
//   transcript  JSONL, one entry per line, with a "schema" version field
//
// nlohmann::ordered_json is used throughout so key order (and therefore the
// serialized bytes) is deterministic.

#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "unlearn/noisy_gd.hpp"
#include "unlearn/stream_engine.hpp"
#include "unlearn/types.hpp"

namespace unlearn {

using Json = nlohmann::ordered_json;

inline constexpr const char* kTranscriptSchema = "unlearn-transcript/1";

Json database_to_json(const Database& db);
Database database_from_json(const Json& j);

Json edit_to_json(const EditRequest& u);
EditRequest edit_from_json(const Json& j);

Json recipe_to_json(const RecipeParams& p);
RecipeParams recipe_from_json(const Json& j);

Json transcript_entry_to_json(const TranscriptEntry& e);

// Full transcript as JSONL: a header line (schema, seed, recipe) followed by
// one line per entry.
std::string transcript_to_jsonl(const Transcript& t);

}  // namespace unlearn
