#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "unlearn/core_model.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/stream_engine.hpp"

using namespace unlearn;

namespace {

Record rec2(double a, double b) {
  Record r(2);
  r << a, b;
  return r;
}

// A small quadratic instance: curvature diag(1, 3), ridge weight 1, records
// of norm <= 0.3.  The clip threshold is far above any gradient the dynamics
// reach: the engine tests below (coupled-gap contraction, law mirrors) rely
// on the exactly linear drift an inactive clip guarantees, and the recipe's
// noise scale for n = 6 is large enough that a threshold at the recipe's L
// would bind constantly and mix coordinates through the radial projection.
struct Instance {
  Objective obj;
  Database db0;
  RecipeParams recipe;

  Instance() {
    obj.loss = make_quadratic_anisotropic(1.0, 3.0, 2, 1.0);
    obj.reg_lambda = 1.0;
    obj.clip_L = 50.0;
    db0.records = {rec2(0.2, 0.1), rec2(-0.1, 0.2), rec2(0.1, -0.2),
                   rec2(-0.2, -0.1), rec2(0.15, 0.05), rec2(0.0, 0.25)};
    BudgetSpec budget;
    budget.q = 2.0;
    budget.eps_dp = 1.0;
    budget.eps_dd = 0.1;
    recipe = convex_recipe(1.0, 3.0, 1.0, db0.n(), 2, 1, budget);
  }
};

EditRequest replace_at(long long index, const Record& x) {
  EditRequest u;
  u.replacements.push_back(Replacement{index, x});
  return u;
}

}  // namespace

TEST_CASE("hash_database is order- and value-sensitive") {
  Database a;
  a.records = {rec2(1.0, 2.0), rec2(3.0, 4.0)};
  Database b = a;
  CHECK(hash_database(a) == hash_database(b));

  std::swap(b.records[0], b.records[1]);
  CHECK(hash_database(a) != hash_database(b));

  Database c = a;
  c.records[1](0) += 1e-15;
  CHECK(hash_database(a) != hash_database(c));

  Database empty;
  CHECK(hash_database(empty) == hash_database(Database{}));
}

TEST_CASE("run_stream: determinism, seeds, and prefix sharing") {
  Instance in;
  std::vector<EditRequest> edits = {
      replace_at(0, rec2(0.0, 0.0)), replace_at(2, rec2(0.1, 0.1)),
      replace_at(4, rec2(-0.1, 0.0)), replace_at(1, rec2(0.2, -0.1)),
      replace_at(5, rec2(0.0, 0.1))};
  const Requester req = Requester::fixed(edits);

  const Transcript t5 = run_stream(in.obj, in.db0, in.recipe, req, 5, 99);
  REQUIRE(t5.entries.size() == 6);
  CHECK(t5.root_seed == 99);
  CHECK(t5.stream_id == 0);
  CHECK_FALSE(t5.entries[0].edit.has_value());
  CHECK(t5.entries[0].database_hash == hash_database(in.db0));
  CHECK(t5.entries[3].edit.has_value());

  SUBCASE("bit-identical rerun") {
    const Transcript again = run_stream(in.obj, in.db0, in.recipe, req, 5, 99);
    for (size_t i = 0; i < t5.entries.size(); ++i) {
      CHECK(t5.entries[i].released == again.entries[i].released);
      CHECK(t5.entries[i].database_hash == again.entries[i].database_hash);
      CHECK(t5.entries[i].rng_seed == again.entries[i].rng_seed);
    }
  }
  SUBCASE("per-step seeds follow the derivation scheme") {
    for (const TranscriptEntry& e : t5.entries) {
      CHECK(e.rng_seed ==
            derive_seed(99, 0, static_cast<std::uint64_t>(e.step)));
    }
    const Transcript other =
        run_stream(in.obj, in.db0, in.recipe, req, 2, 99, /*stream_id=*/7);
    CHECK(other.entries[1].rng_seed == derive_seed(99, 7, 1));
    CHECK(other.entries[1].released != t5.entries[1].released);
  }
  SUBCASE("shorter streams are prefixes of longer ones") {
    const Transcript t3 = run_stream(in.obj, in.db0, in.recipe, req, 3, 99);
    REQUIRE(t3.entries.size() == 4);
    for (size_t i = 0; i < t3.entries.size(); ++i) {
      CHECK(t3.entries[i].released == t5.entries[i].released);
      CHECK(t3.entries[i].database_hash == t5.entries[i].database_hash);
    }
  }
  SUBCASE("resume reproduces the suffix exactly") {
    // State after 2 edits: database and release from the prefix run.
    Database db2 = in.db0;
    db2 = apply_edit(db2, edits[0]);
    db2 = apply_edit(db2, edits[1]);
    const Transcript tail =
        resume_stream(in.obj, db2, t5.entries[2].released, in.recipe, req, 2,
                      5, 99);
    REQUIRE(tail.entries.size() == 3);
    for (size_t i = 0; i < tail.entries.size(); ++i) {
      const TranscriptEntry& full = t5.entries[i + 3];
      CHECK(tail.entries[i].step == full.step);
      CHECK(tail.entries[i].released == full.released);
      CHECK(tail.entries[i].database_hash == full.database_hash);
      CHECK(tail.entries[i].rng_seed == full.rng_seed);
    }
  }
  SUBCASE("fixed requester exhaustion names the step") {
    CHECK_THROWS_WITH_AS(run_stream(in.obj, in.db0, in.recipe, req, 6, 99),
                         doctest::Contains("step 6"), std::invalid_argument);
  }
  SUBCASE("invalid edits name the step") {
    std::vector<EditRequest> bad = edits;
    bad[1].replacements.push_back(bad[1].replacements[0]);  // duplicate index
    CHECK_THROWS_WITH_AS(
        run_stream(in.obj, in.db0, in.recipe, Requester::fixed(bad), 5, 99),
        doctest::Contains("step 2"), std::invalid_argument);
  }
}

TEST_CASE("adaptive requesters observe at most p_limit releases") {
  Instance in;
  std::vector<size_t> seen_sizes;
  std::vector<long long> seen_steps;
  const AdaptiveFn fn = [&](const VisibleHistory& h) {
    seen_sizes.push_back(h.releases.size());
    seen_steps.push_back(h.step);
    CHECK(h.n == 6);
    return replace_at(h.step % 6, rec2(0.05, -0.05));
  };
  run_stream(in.obj, in.db0, in.recipe, Requester::adaptive(fn, 2), 4, 5);
  CHECK(seen_sizes == std::vector<size_t>{1, 2, 2, 2});
  CHECK(seen_steps == std::vector<long long>{1, 2, 3, 4});

  seen_sizes.clear();
  run_stream(in.obj, in.db0, in.recipe, Requester::adaptive(fn, 0), 3, 5);
  CHECK(seen_sizes == std::vector<size_t>{0, 0, 0});
}

TEST_CASE("counterfactual_pair couples two neighbouring streams") {
  Instance in;
  Database neighbour = in.db0;
  neighbour.records[3] = rec2(0.25, -0.2);  // differs at exactly one index

  const Record repaired = rec2(0.0, 0.0);
  const EditRequest u_star = replace_at(3, repaired);
  std::vector<EditRequest> later = {replace_at(0, rec2(0.1, 0.0)),
                                    replace_at(2, rec2(-0.05, 0.1))};
  const Requester req = Requester::fixed(later);

  SUBCASE("coupled seeds: gap contracts by the exact linear factor") {
    auto [ta, tb] = counterfactual_pair(in.obj, in.db0, neighbour, u_star,
                                        in.recipe, req, 3, 321, true);
    REQUIRE(ta.entries.size() == 4);
    REQUIRE(tb.entries.size() == 4);
    // After the repairing edit both databases coincide.
    CHECK(ta.entries[1].database_hash == tb.entries[1].database_hash);
    CHECK(ta.entries[0].database_hash != tb.entries[0].database_hash);

    // With shared noise, the release gap evolves through the deterministic
    // linear map: per coordinate, gap_{k+1} = (1 - eta (a_j + lambda))^K_U gap_k.
    const double m0 = std::pow(1.0 - in.recipe.eta * 2.0,
                               static_cast<double>(in.recipe.k_delete));
    const double m1 = std::pow(1.0 - in.recipe.eta * 4.0,
                               static_cast<double>(in.recipe.k_delete));
    Eigen::VectorXd gap0 = ta.entries[0].released - tb.entries[0].released;
    CHECK(gap0.norm() > 0.0);
    for (int k = 1; k <= 3; ++k) {
      const Eigen::VectorXd gap =
          ta.entries[k].released - tb.entries[k].released;
      CHECK(gap(0) == doctest::Approx(gap0(0) * m0).epsilon(1e-10));
      CHECK(gap(1) == doctest::Approx(gap0(1) * m1).epsilon(1e-10));
      gap0(0) *= m0;
      gap0(1) *= m1;
    }
  }
  SUBCASE("independent seeds differ from coupled ones") {
    auto [ca, cb] = counterfactual_pair(in.obj, in.db0, neighbour, u_star,
                                        in.recipe, req, 1, 321, true);
    auto [ia, ib] = counterfactual_pair(in.obj, in.db0, neighbour, u_star,
                                        in.recipe, req, 1, 321, false);
    CHECK(ca.entries[0].released == ia.entries[0].released);
    CHECK(cb.entries[0].released != ib.entries[0].released);
  }
  SUBCASE("validation") {
    Database wrong_n = in.db0;
    wrong_n.records.pop_back();
    CHECK_THROWS_AS(counterfactual_pair(in.obj, in.db0, wrong_n, u_star,
                                        in.recipe, req, 1, 1, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(counterfactual_pair(in.obj, in.db0, in.db0, u_star,
                                        in.recipe, req, 1, 1, true),
                    std::invalid_argument);  // no differing record
    Database two_diff = neighbour;
    two_diff.records[0] = rec2(0.3, 0.3);
    CHECK_THROWS_AS(counterfactual_pair(in.obj, in.db0, two_diff, u_star,
                                        in.recipe, req, 1, 1, true),
                    std::invalid_argument);
    const EditRequest not_repairing = replace_at(0, rec2(0.0, 0.0));
    CHECK_THROWS_AS(counterfactual_pair(in.obj, in.db0, neighbour,
                                        not_repairing, in.recipe, req, 1, 1,
                                        true),
                    std::invalid_argument);
    const Requester adaptive = Requester::adaptive(
        [](const VisibleHistory& h) {
          return replace_at(h.step % 6, rec2(0.0, 0.0));
        },
        1);
    CHECK_THROWS_AS(counterfactual_pair(in.obj, in.db0, neighbour, u_star,
                                        in.recipe, adaptive, 1, 1, true),
                    std::invalid_argument);
  }
}

TEST_CASE("law-level mirrors agree with the pushforward oracle") {
  Instance in;
  const std::vector<EditRequest> edits = {replace_at(0, rec2(0.0, 0.0)),
                                          replace_at(3, rec2(0.1, 0.1))};
  const std::vector<GaussianLaw> laws =
      stream_gaussian_laws(in.obj, in.db0, in.recipe, edits);
  REQUIRE(laws.size() == 3);

  GaussianLaw init;
  init.mean = Eigen::VectorXd::Zero(2);
  init.cov = in.recipe.init_variance * Eigen::MatrixXd::Identity(2, 2);
  const GaussianLaw after_learn = gaussian_pushforward(
      in.obj, in.db0, init, in.recipe.k_learn, in.recipe.eta, in.recipe.sigma2);
  CHECK((laws[0].mean - after_learn.mean).norm() == doctest::Approx(0.0));
  CHECK((laws[0].cov - after_learn.cov).norm() == doctest::Approx(0.0));

  const GaussianLaw learn_law = learn_gaussian_law(in.obj, in.db0, in.recipe);
  CHECK((laws[0].mean - learn_law.mean).norm() == doctest::Approx(0.0));

  Database db1 = apply_edit(in.db0, edits[0]);
  const GaussianLaw after_first = gaussian_pushforward(
      in.obj, db1, laws[0], in.recipe.k_delete, in.recipe.eta,
      in.recipe.sigma2);
  CHECK((laws[1].mean - after_first.mean).norm() == doctest::Approx(0.0));
  CHECK((laws[1].cov - after_first.cov).norm() == doctest::Approx(0.0));

  Database db2 = apply_edit(db1, edits[1]);
  const GaussianLaw after_second = gaussian_pushforward(
      in.obj, db2, laws[1], in.recipe.k_delete, in.recipe.eta,
      in.recipe.sigma2);
  CHECK((laws[2].mean - after_second.mean).norm() == doctest::Approx(0.0));
}

TEST_CASE("serialization round trips") {
  SUBCASE("database") {
    Database db;
    db.records = {rec2(1.5, -2.25), rec2(0.0, 1e-17)};
    const Json j = database_to_json(db);
    CHECK(j["n"] == 2);
    const Database back = database_from_json(j);
    REQUIRE(back.n() == 2);
    CHECK(back.records[0] == db.records[0]);
    CHECK(back.records[1] == db.records[1]);

    Json bad = j;
    bad["n"] = 3;
    CHECK_THROWS_AS(database_from_json(bad), std::invalid_argument);
    Json mixed = j;
    mixed["records"][1] = Json::array({1.0});
    CHECK_THROWS_AS(database_from_json(mixed), std::invalid_argument);
  }
  SUBCASE("edit request") {
    EditRequest u;
    u.replacements = {Replacement{0, rec2(0.5, 0.25)},
                      Replacement{4, rec2(-1.0, 2.0)}};
    const EditRequest back = edit_from_json(edit_to_json(u));
    REQUIRE(back.batch_size() == 2);
    CHECK(back.replacements[1].index == 4);
    CHECK(back.replacements[1].record == u.replacements[1].record);
  }
  SUBCASE("recipe, including the nonconvex amplitude") {
    BudgetSpec budget;
    budget.q = 2.0;
    budget.eps_dp = 0.9;
    budget.eps_dd = 0.1;
    const RecipeParams p =
        nonconvex_recipe(1.0, 1.0, 1.0, std::exp(1.0), 100, 1, 2, budget);
    const RecipeParams back = recipe_from_json(recipe_to_json(p));
    CHECK(back.eta == p.eta);
    CHECK(back.sigma2 == p.sigma2);
    CHECK(back.k_learn == p.k_learn);
    CHECK(back.k_delete == p.k_delete);
    CHECK(back.init_variance == p.init_variance);
    CHECK(back.regime == Regime::kNonconvex);
    REQUIRE(back.nonconvex_amplitude.has_value());
    CHECK(*back.nonconvex_amplitude == *p.nonconvex_amplitude);
    REQUIRE(back.binding.size() == p.binding.size());
    CHECK(back.binding[0].name == p.binding[0].name);

    const Json j = recipe_to_json(p);
    CHECK(j.contains("kappa"));
    CHECK(j.contains("binding_constraints"));
  }
  SUBCASE("transcript JSONL") {
    Instance in;
    const Transcript t = run_stream(
        in.obj, in.db0, in.recipe,
        Requester::fixed({replace_at(0, rec2(0.0, 0.0))}), 1, 7);
    const std::string jsonl = transcript_to_jsonl(t);

    std::istringstream lines(jsonl);
    std::string line;
    std::vector<Json> parsed;
    while (std::getline(lines, line)) parsed.push_back(Json::parse(line));
    REQUIRE(parsed.size() == 3);  // header + 2 entries
    CHECK(parsed[0]["schema"] == kTranscriptSchema);
    CHECK(parsed[0]["root_seed"] == 7);
    CHECK(parsed[0].contains("recipe"));
    CHECK(parsed[1]["step"] == 0);
    CHECK(parsed[1]["edit"].is_null());
    CHECK(parsed[2]["step"] == 1);
    CHECK_FALSE(parsed[2]["edit"].is_null());
    CHECK(parsed[2].contains("database_hash"));
    CHECK(parsed[2].contains("rng_seed"));
    CHECK(parsed[1]["released"].size() == 2);
  }
}
