#include "unlearn/serialization.hpp"

#include <sstream>
#include <stdexcept>

namespace unlearn {

namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) {
    throw std::invalid_argument("serialization: expected a numeric array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

const char* regime_name(Regime r) {
  return r == Regime::kConvex ? "convex" : "nonconvex";
}

Regime regime_from_name(const std::string& s) {
  if (s == "convex") return Regime::kConvex;
  if (s == "nonconvex") return Regime::kNonconvex;
  throw std::invalid_argument("serialization: unknown regime '" + s + "'");
}

}  // namespace

Json database_to_json(const Database& db) {
  Json j;
  j["n"] = db.n();
  Json records = Json::array();
  for (const Record& x : db.records) records.push_back(vector_to_json(x));
  j["records"] = std::move(records);
  return j;
}

Database database_from_json(const Json& j) {
  Database db;
  const auto& records = j.at("records");
  if (!records.is_array()) {
    throw std::invalid_argument("serialization: 'records' must be an array");
  }
  for (const auto& r : records) db.records.push_back(vector_from_json(r));
  if (j.contains("n") &&
      j.at("n").get<long long>() != static_cast<long long>(db.records.size())) {
    throw std::invalid_argument(
        "serialization: 'n' disagrees with the record count");
  }
  if (!db.records.empty()) {
    const Eigen::Index d = db.records.front().size();
    for (const Record& x : db.records) {
      if (x.size() != d) {
        throw std::invalid_argument(
            "serialization: records of mixed dimension");
      }
    }
  }
  return db;
}

Json edit_to_json(const EditRequest& u) {
  Json j;
  Json reps = Json::array();
  for (const Replacement& r : u.replacements) {
    Json one;
    one["index"] = r.index;
    one["record"] = vector_to_json(r.record);
    reps.push_back(std::move(one));
  }
  j["replacements"] = std::move(reps);
  return j;
}

EditRequest edit_from_json(const Json& j) {
  EditRequest u;
  for (const auto& one : j.at("replacements")) {
    Replacement r;
    r.index = one.at("index").get<long long>();
    r.record = vector_from_json(one.at("record"));
    u.replacements.push_back(std::move(r));
  }
  return u;
}

Json recipe_to_json(const RecipeParams& p) {
  Json j;
  j["regime"] = regime_name(p.regime);
  j["eta"] = p.eta;
  j["sigma2"] = p.sigma2;
  j["k_learn"] = p.k_learn;
  j["k_delete"] = p.k_delete;
  j["init_variance"] = p.init_variance;
  j["kappa"] = p.kappa;
  if (p.nonconvex_amplitude.has_value()) {
    j["nonconvex_amplitude"] = *p.nonconvex_amplitude;
  }
  Json binding = Json::array();
  for (const BindingConstraint& b : p.binding) {
    Json one;
    one["name"] = b.name;
    one["value"] = b.value;
    binding.push_back(std::move(one));
  }
  j["binding_constraints"] = std::move(binding);
  return j;
}

RecipeParams recipe_from_json(const Json& j) {
  RecipeParams p;
  p.regime = regime_from_name(j.at("regime").get<std::string>());
  p.eta = j.at("eta").get<double>();
  p.sigma2 = j.at("sigma2").get<double>();
  p.k_learn = j.at("k_learn").get<long long>();
  p.k_delete = j.at("k_delete").get<long long>();
  p.init_variance = j.at("init_variance").get<double>();
  p.kappa = j.at("kappa").get<double>();
  if (j.contains("nonconvex_amplitude")) {
    p.nonconvex_amplitude = j.at("nonconvex_amplitude").get<double>();
  }
  if (j.contains("binding_constraints")) {
    for (const auto& one : j.at("binding_constraints")) {
      p.binding.push_back(
          {one.at("name").get<std::string>(), one.at("value").get<double>()});
    }
  }
  return p;
}

Json transcript_entry_to_json(const TranscriptEntry& e) {
  Json j;
  j["step"] = e.step;
  if (e.edit.has_value()) {
    j["edit"] = edit_to_json(*e.edit);
  } else {
    j["edit"] = nullptr;
  }
  j["released"] = vector_to_json(e.released);
  j["database_hash"] = e.database_hash;
  j["rng_seed"] = e.rng_seed;
  return j;
}

std::string transcript_to_jsonl(const Transcript& t) {
  std::ostringstream out;
  Json header;
  header["schema"] = kTranscriptSchema;
  header["root_seed"] = t.root_seed;
  header["stream_id"] = t.stream_id;
  header["recipe"] = recipe_to_json(t.recipe);
  out << header.dump() << '\n';
  for (const TranscriptEntry& e : t.entries) {
    out << transcript_entry_to_json(e).dump() << '\n';
  }
  return out.str();
}

}  // namespace unlearn
