// End-to-end tests of the command-line driver: each case writes a config,
// invokes the installed binary in a subprocess, and inspects exit code,
// stdout/stderr, and output files.

#include <doctest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "unlearn/serialization.hpp"

using unlearn::Json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(UNLEARN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = std::move(out);
  return r;
}

// A fresh scratch directory per test case.
fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("unlearn_cli_test_" + std::to_string(getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const Json& cfg) {
  const fs::path path = dir / "config.json";
  std::ofstream out(path);
  out << cfg.dump(2) << "\n";
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json convex_recipe_config() {
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "recipe";
  cfg["regime"] = "convex";
  cfg["lambda"] = 1.0;
  cfg["beta"] = 3.0;
  cfg["L"] = 1.0;
  cfg["n"] = 100;
  cfg["d"] = 2;
  cfg["edit_batch_size"] = 1;
  cfg["budget"] = Json{{"q", 2.0}, {"eps_dp", 1.0}, {"eps_dd", 0.1}};
  return cfg;
}

Json verify_deletion_config() {
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "verify-deletion";
  cfg["seed"] = 5;
  cfg["steps"] = 3;
  cfg["budget"] = Json{{"q", 2.0}, {"eps_dp", 1.0}, {"eps_dd", 0.1}};
  cfg["instance"] =
      Json{{"d", 2},
           {"n", 20},
           {"lambda", 1.0},
           {"record_scale", 0.2},
           {"loss",
            Json{{"kind", "quadratic_anisotropic"},
                 {"lam_loss", 1.0},
                 {"beta_loss", 3.0},
                 {"L", 1.0}}}};
  return cfg;
}

}  // namespace

TEST_CASE("cli recipe: pinned convex bundle") {
  const fs::path dir = scratch_dir("recipe_convex");
  const fs::path cfg = write_config(dir, convex_recipe_config());
  const RunResult r = run_cli("recipe --config " + cfg.string() + " --out " +
                              dir.string());
  CHECK(r.exit_code == 0);

  const Json report = Json::parse(slurp(dir / "recipe.json"));
  CHECK(report["schema"] == "unlearn-recipe/1");
  const Json& recipe = report["recipe"];
  CHECK(recipe["eta"].get<double>() == doctest::Approx(0.125));
  CHECK(recipe["sigma2"].get<double>() == doctest::Approx(8e-4));
  CHECK(recipe["k_learn"] == 104);
  CHECK(recipe["k_delete"] == 48);
  CHECK(recipe["kappa"].get<double>() == doctest::Approx(4.0));
  CHECK(recipe["init_variance"].get<double>() ==
        doctest::Approx(0.00085333333333333333).epsilon(1e-15));
  CHECK(recipe["regime"] == "convex");
  CHECK(recipe["binding_constraints"].is_array());
  CHECK_FALSE(recipe["binding_constraints"].empty());
}

TEST_CASE("cli recipe: config validation failures exit 2") {
  const fs::path dir = scratch_dir("recipe_bad");
  SUBCASE("missing field") {
    Json cfg = convex_recipe_config();
    cfg.erase("n");
    const fs::path p = write_config(dir, cfg);
    const RunResult r =
        run_cli("recipe --config " + p.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("missing field: n") != std::string::npos);
  }
  SUBCASE("budget ordering violated") {
    Json cfg = convex_recipe_config();
    cfg["budget"]["eps_dd"] = 2.0;  // > eps_dp
    const fs::path p = write_config(dir, cfg);
    const RunResult r =
        run_cli("recipe --config " + p.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
  }
  SUBCASE("wrong schema string") {
    Json cfg = convex_recipe_config();
    cfg["schema"] = "unlearn-config/0";
    const fs::path p = write_config(dir, cfg);
    const RunResult r =
        run_cli("recipe --config " + p.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
  }
  SUBCASE("experiment does not match subcommand") {
    const fs::path p = write_config(dir, convex_recipe_config());
    const RunResult r =
        run_cli("attack --config " + p.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("experiment") != std::string::npos);
  }
}

TEST_CASE("cli verify-deletion: certifies the recipe and flags a breach") {
  SUBCASE("recipe settings pass every step") {
    const fs::path dir = scratch_dir("vd_pass");
    const fs::path p = write_config(dir, verify_deletion_config());
    const RunResult r = run_cli("verify-deletion --config " + p.string() +
                                " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("all steps within eps_dd") != std::string::npos);

    const std::string csv = slurp(dir / "verify_deletion.csv");
    CHECK(csv.find("step,exact_divergence,certified_budget,eps_dd,slack,pass") !=
          std::string::npos);
    // Certified budget e^-3 at the recipe's K_U.
    CHECK(csv.find("0.049787068367863944") != std::string::npos);
    CHECK(csv.find("false") == std::string::npos);

    // JSONL mirror: one parseable line per step, all passing.
    std::istringstream lines(slurp(dir / "verify_deletion.jsonl"));
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
      const Json j = Json::parse(line);
      CHECK(j["pass"] == true);
      CHECK(j["exact_divergence"].get<double>() <= 0.1);
      ++rows;
    }
    CHECK(rows == 3);
  }
  SUBCASE("halved deletion steps breach the budget") {
    const fs::path dir = scratch_dir("vd_breach");
    Json cfg = verify_deletion_config();
    cfg["k_delete_override"] = 24;
    const fs::path p = write_config(dir, cfg);
    const RunResult r = run_cli("verify-deletion --config " + p.string() +
                                " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("BUDGET EXCEEDED") != std::string::npos);
    const std::string csv = slurp(dir / "verify_deletion.csv");
    CHECK(csv.find("0.22313016014842982") != std::string::npos);
    CHECK(csv.find("false") != std::string::npos);
  }
}

TEST_CASE("cli attack median: statistics and reruns") {
  const fs::path dir_a = scratch_dir("median_a");
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "attack";
  cfg["attack"] = "median";
  cfg["seed"] = 9;
  cfg["n"] = 101;
  cfg["target_step"] = 6;
  cfg["trials"] = 500;
  const fs::path pa = write_config(dir_a, cfg);
  const RunResult ra =
      run_cli("attack --config " + pa.string() + " --out " + dir_a.string());
  CHECK(ra.exit_code == 0);

  const std::string csv = slurp(dir_a / "attack_summary.csv");
  std::istringstream rows(csv);
  std::string header, data;
  std::getline(rows, header);
  std::getline(rows, data);
  CHECK(header ==
        "attack,n,target_step,trials,successes,success_rate,"
        "theoretical_bound,binomial_stderr");
  // success_rate is the 6th comma field; exact small-sample law ~0.9703.
  std::istringstream fields(data);
  std::string tok;
  std::vector<std::string> cols;
  while (std::getline(fields, tok, ',')) cols.push_back(tok);
  REQUIRE(cols.size() == 8);
  CHECK(cols[0] == "median");
  const double rate = std::stod(cols[5]);
  CHECK(rate > 0.9);
  CHECK(rate <= 1.0);
  CHECK(std::stod(cols[6]) == doctest::Approx(0.875));  // 1 - 2^(3-6)

  SUBCASE("same config and seed produce byte-identical outputs") {
    const fs::path dir_b = scratch_dir("median_b");
    const fs::path pb = write_config(dir_b, cfg);
    const RunResult rb =
        run_cli("attack --config " + pb.string() + " --out " + dir_b.string());
    CHECK(rb.exit_code == 0);
    CHECK(slurp(dir_b / "attack_summary.csv") == csv);
    CHECK(slurp(dir_b / "attack_transcript.jsonl") ==
          slurp(dir_a / "attack_transcript.jsonl"));
  }
  SUBCASE("--seed flag overrides the config seed") {
    const fs::path dir_c = scratch_dir("median_c");
    Json moved = cfg;
    moved["seed"] = 0;
    const fs::path pc = write_config(dir_c, moved);
    const RunResult rc = run_cli("attack --config " + pc.string() +
                                 " --seed 9 --out " + dir_c.string());
    CHECK(rc.exit_code == 0);
    CHECK(slurp(dir_c / "attack_summary.csv") == csv);
  }
  SUBCASE("--trials flag overrides the config trials") {
    const fs::path dir_d = scratch_dir("median_d");
    const fs::path pd = write_config(dir_d, cfg);
    const RunResult rd = run_cli("attack --config " + pd.string() +
                                 " --trials 50 --out " + dir_d.string());
    CHECK(rd.exit_code == 0);
    CHECK(slurp(dir_d / "attack_summary.csv").find(",50,") !=
          std::string::npos);
  }
}

TEST_CASE("cli attack counting: high-eps diagnostic identifies the record") {
  const fs::path dir = scratch_dir("counting");
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "attack";
  cfg["attack"] = "counting";
  cfg["seed"] = 3;
  cfg["n"] = 10;
  cfg["eps"] = 12.0;
  cfg["first_step"] = 4;
  cfg["releases"] = 40;
  cfg["trials"] = 60;
  const fs::path p = write_config(dir, cfg);
  const RunResult r =
      run_cli("attack --config " + p.string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);

  const std::string csv = slurp(dir / "attack_summary.csv");
  std::istringstream rows(csv);
  std::string header, data;
  std::getline(rows, header);
  std::getline(rows, data);
  std::istringstream fields(data);
  std::string tok;
  std::vector<std::string> cols;
  while (std::getline(fields, tok, ',')) cols.push_back(tok);
  REQUIRE(cols.size() == 9);
  CHECK(cols[0] == "counting");
  const double accuracy = std::stod(cols[7]);
  CHECK(accuracy >= 0.9);  // eps = 12 makes the shift plainly visible
  // Cumulative divergence: eps * sum_{j=4}^{40} 1/j.
  double harmonic = 0.0;
  for (int j = 4; j <= 40; ++j) harmonic += 1.0 / j;
  CHECK(std::stod(cols[8]) == doctest::Approx(12.0 * harmonic).epsilon(1e-12));

  // Per-trial transcript parses and matches the trial count.
  std::istringstream lines(slurp(dir / "attack_transcript.jsonl"));
  std::string line;
  int rows_n = 0;
  while (std::getline(lines, line)) {
    const Json j = Json::parse(line);
    CHECK((j["decision"] == 0 || j["decision"] == 1));
    ++rows_n;
  }
  CHECK(rows_n == 60);
}

TEST_CASE("cli attack pgd: crossing instance") {
  const fs::path dir = scratch_dir("pgd");
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "attack";
  cfg["attack"] = "pgd";
  cfg["lambda"] = 1.0;
  cfg["beta"] = 3.0;
  cfg["L"] = 3.0;
  cfg["n"] = 10;
  cfg["k_unlearn"] = 2;
  cfg["eps"] = 1.0;
  cfg["delta"] = 0.36787944117144233;
  cfg["q"] = 1650.0;
  cfg["releases"] = 8;
  const fs::path p = write_config(dir, cfg);
  const RunResult r =
      run_cli("attack --config " + p.string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("crossing=2") != std::string::npos);

  const std::string csv = slurp(dir / "attack_summary.csv");
  CHECK(csv.find("1.3656854249492378") != std::string::npos);  // sigma
  std::istringstream rows(csv);
  std::string header, data;
  std::getline(rows, header);
  std::getline(rows, data);
  CHECK(data.substr(data.rfind(',') + 1) == "2");  // crossing_release

  std::istringstream lines(slurp(dir / "attack_transcript.jsonl"));
  std::string line;
  int rows_n = 0;
  while (std::getline(lines, line)) {
    const Json j = Json::parse(line);
    CHECK(std::abs(j["closed_form"].get<double>() -
                   j["empirical"].get<double>()) <= 1e-10);
    ++rows_n;
  }
  CHECK(rows_n == 8);
}

TEST_CASE("cli attack: unknown kind exits 2") {
  const fs::path dir = scratch_dir("attack_bad");
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "attack";
  cfg["attack"] = "timing";
  cfg["trials"] = 1;
  const fs::path p = write_config(dir, cfg);
  const RunResult r =
      run_cli("attack --config " + p.string() + " --out " + dir.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli risk: mean excess stays under the bound") {
  const fs::path dir = scratch_dir("risk");
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "risk";
  cfg["seed"] = 11;
  cfg["steps"] = 2;
  cfg["trials"] = 40;
  cfg["budget"] = Json{{"q", 2.0}, {"eps_dp", 1.0}, {"eps_dd", 0.1}};
  cfg["instance"] =
      Json{{"d", 2},
           {"n", 50},
           {"lambda", 1.0},
           {"record_scale", 0.3},
           {"loss",
            Json{{"kind", "quadratic_anisotropic"},
                 {"lam_loss", 1.0},
                 {"beta_loss", 3.0},
                 {"L", 1.0}}}};
  const fs::path p = write_config(dir, cfg);
  const RunResult r =
      run_cli("risk --config " + p.string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);

  const std::string csv = slurp(dir / "risk.csv");
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "step,mean_excess,std_error,bound,pass");
  int data_rows = 0;
  while (std::getline(rows, line)) {
    CHECK(line.substr(line.rfind(',') + 1) == "true");
    ++data_rows;
  }
  CHECK(data_rows == 3);
}

TEST_CASE("cli accountant: query evaluation and determinism") {
  const fs::path dir = scratch_dir("accountant");
  Json cfg;
  cfg["schema"] = "unlearn-config/1";
  cfg["experiment"] = "accountant";
  cfg["queries"] = Json::array();
  cfg["queries"].push_back(Json{{"rule", "gaussian_renyi"},
                                {"q", 2.0},
                                {"mu1", Json::array({0.0})},
                                {"mu2", Json::array({1.0})},
                                {"sigma2", 1.0}});
  cfg["queries"].push_back(Json{
      {"rule", "rdp_to_dp"}, {"q", 2.0}, {"epsilon", 0.5}, {"delta", 0.01}});
  cfg["queries"].push_back(Json{{"rule", "compose"},
                                {"bounds",
                                 Json::array({Json{{"q", 2.0}, {"epsilon", 0.25}},
                                              Json{{"q", "inf"}, {"epsilon", 0.1}}})}});
  const fs::path p = write_config(dir, cfg);
  const RunResult r =
      run_cli("accountant --config " + p.string() + " --out " + dir.string());
  CHECK(r.exit_code == 0);

  std::istringstream lines(slurp(dir / "accountant.jsonl"));
  std::string line;
  std::vector<Json> out;
  while (std::getline(lines, line)) out.push_back(Json::parse(line));
  REQUIRE(out.size() == 3);
  CHECK(out[0]["epsilon"].get<double>() == doctest::Approx(1.0));
  CHECK(out[1]["epsilon"].get<double>() ==
        doctest::Approx(5.105170185988092).epsilon(1e-14));
  CHECK(out[1]["one_sided"] == true);
  CHECK(out[2]["epsilon"].get<double>() == doctest::Approx(0.35));
  CHECK(out[2]["q"].get<double>() == doctest::Approx(2.0));

  SUBCASE("rerun is byte-identical") {
    const fs::path dir2 = scratch_dir("accountant2");
    const fs::path p2 = write_config(dir2, cfg);
    const RunResult r2 = run_cli("accountant --config " + p2.string() +
                                 " --out " + dir2.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(dir2 / "accountant.jsonl") == slurp(dir / "accountant.jsonl"));
  }
  SUBCASE("unknown rule names the query path") {
    Json bad = cfg;
    bad["queries"][0]["rule"] = "laplace_renyi";
    const fs::path pb = write_config(dir, bad);
    const RunResult rb = run_cli("accountant --config " + pb.string() +
                                 " --out " + dir.string());
    CHECK(rb.exit_code == 2);
    CHECK(rb.output.find("queries[0].rule") != std::string::npos);
  }
}
