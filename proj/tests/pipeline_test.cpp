#include "doctest.h"

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "test_util.hpp"

using namespace netate;
using nlohmann::json;

namespace {

json sbm_config(const std::string& out_dir, std::uint64_t seed) {
  json j = json::parse(R"({
    "graph": {"sbm": {"block_sizes": [40, 40, 40], "within_prob": 0.1, "between_prob": 0.01}},
    "simulation": {"propensity_levels": [0.2, 0.5, 0.8], "beta": 1.0},
    "crossfit": {"k": 4, "oracle": true}
  })");
  j["out_dir"] = out_dir;
  j["seed"] = seed;
  return j;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    const auto line = text.substr(start, end == std::string::npos ? end : end - start);
    if (!line.empty()) lines.push_back(line);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return lines;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("strict config parsing rejects unknown and malformed keys") {
  CHECK_THROWS_AS(parse_config(json::parse(R"({"sneed": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"train": {"dim": 4}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"crossfit": {"folds": 5}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"([1, 2])")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"seed": -3})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"seed": "7"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"threads": 0})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"estimate": {"level": 1.0}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"estimate": {"baselines": ["ransac"]}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"estimate": {"estimators": []}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"crossfit": {"clip_epsilon": 0.5}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"graph": {"sbm": {"block_sizes": []}}})")),
                  ConfigError);

  // mutually exclusive inputs
  CHECK_THROWS_AS(
      parse_config(json::parse(
          R"({"graph": {"path": "e.tsv", "sbm": {"block_sizes": [3]}}})")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(json::parse(
          R"({"simulation": {"dataset": "d.csv", "from_propensities": "n.csv"}})")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(json::parse(
          R"({"graph": {"sbm": {"block_sizes": [3]}}, "attributes": {"path": "a.csv"}})")),
      ConfigError);

  CHECK_NOTHROW(parse_config(json::parse(R"({})")));
}

TEST_CASE("defaults materialize in the effective config") {
  const ExperimentConfig cfg = parse_config(json::object());
  const json eff = effective_config(cfg);
  CHECK(eff["seed"] == 0);
  CHECK(eff["threads"] == 1);
  CHECK(eff["crossfit"]["k"] == 10);
  CHECK(eff["crossfit"]["clip_epsilon"] == doctest::Approx(0.03));
  CHECK(eff["estimate"]["level"] == doctest::Approx(0.95));
  CHECK(eff["estimate"]["estimators"] == json::parse(R"(["q", "iptw", "aiptw", "tmle"])"));
  CHECK(eff["estimate"]["baselines"] == json::parse(R"(["unadjusted"])"));
  CHECK(eff["train"]["dimension"] == 128);
  CHECK(eff["train"]["learning_rate"] == doctest::Approx(0.025));
  CHECK(eff["simulation"]["beta"] == doctest::Approx(1.0));
  CHECK(eff["simulation"]["confounder_column"] == "block");
  CHECK(eff["simulation"]["propensity_levels"].size() == 3);
}

TEST_CASE("config hash is stable under reserialization and sensitive to content") {
  const json a = sbm_config("out", 9);
  const std::string h = config_hash(parse_config(a));
  CHECK(h.size() == 16);
  CHECK(config_hash(parse_config(effective_config(parse_config(a)))) == h);

  json b = a;
  b["seed"] = 10;
  CHECK(config_hash(parse_config(b)) != h);
  json c = a;
  c["crossfit"]["k"] = 5;
  CHECK(config_hash(parse_config(c)) != h);
}

TEST_CASE("run_command rejects unknown commands") {
  CHECK_THROWS_WITH_AS(run_command("transmogrify", json::object()),
                       doctest::Contains("unknown command"), ConfigError);
}

TEST_CASE("simulate writes a deterministic dataset with a manifest") {
  testutil::TempDir tmp;
  const json cfg_json = sbm_config((tmp.path() / "out").string(), 11);
  const ExperimentConfig cfg = parse_config(cfg_json);

  const json m = run_command("simulate", cfg_json);
  CHECK(m["command"] == "simulate");
  CHECK(m["seed"] == 11);
  CHECK(m["config_hash"] == config_hash(cfg));
  CHECK(m["n"] == 120);
  CHECK(m["true_ate"] == doctest::Approx(1.0));
  CHECK(m["graph"]["node_count"] == 120);
  CHECK(m["graph"]["isolated_nodes"].is_number());

  const auto dataset_path = std::filesystem::path(m["files"]["dataset"].get<std::string>());
  REQUIRE(std::filesystem::exists(dataset_path));
  REQUIRE(std::filesystem::exists(tmp.path() / "out" / "manifest_simulate.json"));

  const std::string first_pass = testutil::read_file(dataset_path);
  CHECK(first_pass.rfind("# command=simulate config_hash=", 0) == 0);

  // replaying into the same out_dir reproduces every byte
  run_command("simulate", cfg_json);
  CHECK(testutil::read_file(dataset_path) == first_pass);

  const json manifest_on_disk =
      json::parse(testutil::read_file(tmp.path() / "out" / "manifest_simulate.json"));
  CHECK(manifest_on_disk == m);
}

TEST_CASE("estimate from attributes equals estimate from the saved dataset") {
  testutil::TempDir tmp;
  json sim_cfg = sbm_config((tmp.path() / "sim").string(), 21);
  const json sim_m = run_command("simulate", sim_cfg);

  json direct_cfg = sbm_config((tmp.path() / "direct").string(), 21);
  const json direct = run_command("estimate", direct_cfg);

  json from_file_cfg = sbm_config((tmp.path() / "fromfile").string(), 21);
  from_file_cfg["simulation"]["dataset"] = sim_m["files"]["dataset"];
  const json from_file = run_command("estimate", from_file_cfg);

  for (const char* label : {"q", "iptw", "aiptw", "tmle", "unadjusted"}) {
    REQUIRE(direct["reports"].contains(label));
    REQUIRE(from_file["reports"].contains(label));
    CHECK(direct["reports"][label]["psi_hat"].get<double>() ==
          from_file["reports"][label]["psi_hat"].get<double>());
    CHECK(direct["reports"][label]["if_sigma"].get<double>() ==
          from_file["reports"][label]["if_sigma"].get<double>());
  }
}

TEST_CASE("summary.csv carries the documented header and one row per estimator") {
  testutil::TempDir tmp;
  const json cfg_json = sbm_config((tmp.path() / "out").string(), 31);
  const json m = run_command("estimate", cfg_json);

  const auto lines = data_lines(testutil::read_file(m["files"]["summary"].get<std::string>()));
  REQUIRE(lines.size() == 2 + 5);  // comment, header, 4 estimators + unadjusted
  CHECK(lines[0].rfind("# command=estimate", 0) == 0);
  CHECK(lines[1] == "estimator,beta,psi_hat,fold_std,if_sigma,ci_lo,ci_hi");
  CHECK(lines[2].rfind("q,", 0) == 0);
  CHECK(lines[3].rfind("iptw,", 0) == 0);
  CHECK(lines[4].rfind("aiptw,", 0) == 0);
  CHECK(lines[5].rfind("tmle,", 0) == 0);
  CHECK(lines[6].rfind("unadjusted,", 0) == 0);

  for (const char* label : {"q", "iptw", "aiptw", "tmle"}) {
    const auto report_path = tmp.path() / "out" / (std::string("report_") + label + ".json");
    REQUIRE(std::filesystem::exists(report_path));
    const json r = json::parse(testutil::read_file(report_path));
    CHECK(r["variant"] == "oracle");
  }
}

TEST_CASE("confidence level rescales intervals without moving the point estimate") {
  testutil::TempDir tmp;
  json wide = sbm_config((tmp.path() / "wide").string(), 41);
  json narrow = sbm_config((tmp.path() / "narrow").string(), 41);
  narrow["estimate"] = {{"level", 0.8}};

  const json mw = run_command("estimate", wide);
  const json mn = run_command("estimate", narrow);
  for (const char* label : {"aiptw", "unadjusted"}) {
    const double psi_w = mw["reports"][label]["psi_hat"].get<double>();
    const double psi_n = mn["reports"][label]["psi_hat"].get<double>();
    CHECK(psi_w == psi_n);
    const double span_w = mw["reports"][label]["ci"][1].get<double>() -
                          mw["reports"][label]["ci"][0].get<double>();
    const double span_n = mn["reports"][label]["ci"][1].get<double>() -
                          mn["reports"][label]["ci"][0].get<double>();
    CHECK(span_n < span_w);
    CHECK(span_n > 0.0);
  }
}

TEST_CASE("sweep replays the exogeneity ladder and matches a standalone run at p = 0") {
  testutil::TempDir tmp;
  json base_cfg = sbm_config((tmp.path() / "base").string(), 51);
  const json base_m = run_command("crossfit", base_cfg);
  const std::string nuisance = base_m["files"]["nuisance"].get<std::string>();
  CHECK(base_m["k"] == 4);
  CHECK(base_m["oracle"] == true);

  json sweep_cfg = sbm_config((tmp.path() / "sweep").string(), 51);
  sweep_cfg["sweep"] = {{"grid", {0.0, 0.6}}, {"base_nuisance", nuisance}};
  const json sm = run_command("sweep", sweep_cfg);

  const auto lines = data_lines(testutil::read_file(sm["files"]["sweep"].get<std::string>()));
  REQUIRE(lines.size() == 2 + 2 * 5);
  CHECK(lines[1] == "p,estimator,psi_hat,ci_lo,ci_hi");
  REQUIRE(sm["rows"].size() == 10);

  // the p = 0 leg is the same experiment as a standalone estimate run under
  // the first sweep sub-seed, reading its propensities from the same table
  json standalone = sbm_config((tmp.path() / "standalone").string(),
                               derive_seed(51, kSeedSweepBase + 0));
  standalone["simulation"]["from_propensities"] = nuisance;
  const json em = run_command("estimate", standalone);

  for (const auto& row : sm["rows"]) {
    if (row["p"].get<double>() != 0.0) continue;
    const std::string label = row["estimator"].get<std::string>();
    CHECK(row["psi_hat"].get<double>() ==
          em["reports"][label]["psi_hat"].get<double>());
  }
}

TEST_CASE("embed then diagnose round-trips a model checkpoint") {
  testutil::TempDir tmp;
  json cfg = sbm_config((tmp.path() / "out").string(), 61);
  cfg["train"] = {{"dimension", 4}, {"step_count", 50},   {"pretrain_steps", 0},
                  {"walk_edges", 20}, {"negatives_per_positive", 2},
                  {"w_outcome", 0.0}, {"w_treatment", 0.0}};
  const json em = run_command("embed", cfg);
  CHECK(em["node_count"] == 120);
  CHECK(em["dimension"] == 4);
  CHECK(em["supervised"] == false);
  const std::string model_path = em["files"]["model"].get<std::string>();
  REQUIRE(std::filesystem::exists(model_path));

  json diag = sbm_config((tmp.path() / "diag").string(), 61);
  diag["diagnose"] = {{"checkpoint", model_path}, {"pair_count", 500}};
  const json dm = run_command("diagnose", diag);
  CHECK(dm["node_count"] == 120);
  CHECK(dm["pair_count"] == 500);
  const double stat = dm["dependence_statistic"].get<double>();
  CHECK(std::isfinite(stat));
  CHECK(stat >= 0.0);
  CHECK(stat <= 1.0);
}

TEST_CASE("two_stage baseline appears alongside the cross-fitted estimators") {
  testutil::TempDir tmp;
  json cfg = sbm_config((tmp.path() / "out").string(), 71);
  cfg["graph"]["sbm"]["block_sizes"] = {30, 30};
  cfg["simulation"]["propensity_levels"] = {0.3, 0.7};
  cfg["crossfit"]["k"] = 3;
  cfg["train"] = {{"dimension", 2}, {"step_count", 40}, {"pretrain_steps", 10},
                  {"walk_edges", 10}, {"negatives_per_positive", 2}};
  cfg["estimate"] = {{"baselines", {"unadjusted", "two_stage"}}};

  const json m = run_command("estimate", cfg);
  REQUIRE(m["reports"].contains("two_stage"));
  REQUIRE(std::filesystem::exists(tmp.path() / "out" / "report_two_stage.json"));
  const json r = json::parse(testutil::read_file(tmp.path() / "out" / "report_two_stage.json"));
  CHECK(r["estimator"] == "aiptw");
  CHECK(r["variant"] == "two_stage");

  const auto lines = data_lines(testutil::read_file(m["files"]["summary"].get<std::string>()));
  REQUIRE(lines.size() == 2 + 6);
  CHECK(lines.back().rfind("two_stage,", 0) == 0);
}

TEST_CASE("pipeline errors carry the right kinds") {
  testutil::TempDir tmp;
  const std::string out = (tmp.path() / "out").string();

  json no_graph;
  no_graph["out_dir"] = out;
  CHECK_THROWS_AS(run_command("estimate", no_graph), ConfigError);

  json sim_with_dataset = sbm_config(out, 1);
  sim_with_dataset["simulation"]["dataset"] = "d.csv";
  CHECK_THROWS_AS(run_command("simulate", sim_with_dataset), ConfigError);

  json crossfit_with_table = sbm_config(out, 1);
  crossfit_with_table["crossfit"]["nuisance_path"] = "n.csv";
  CHECK_THROWS_AS(run_command("crossfit", crossfit_with_table), ConfigError);

  json oracle_and_file = sbm_config(out, 1);
  oracle_and_file["crossfit"]["nuisance_path"] = "n.csv";
  CHECK_THROWS_AS(run_command("estimate", oracle_and_file), ConfigError);

  json sweep_no_grid = sbm_config(out, 1);
  sweep_no_grid["sweep"] = {{"base_nuisance", "n.csv"}};
  CHECK_THROWS_AS(run_command("sweep", sweep_no_grid), ConfigError);

  json sweep_bad_grid = sbm_config(out, 1);
  sweep_bad_grid["sweep"] = {{"grid", {0.0, 1.5}}, {"base_nuisance", "n.csv"}};
  CHECK_THROWS_AS(run_command("sweep", sweep_bad_grid), ConfigError);

  json diag_no_checkpoint = sbm_config(out, 1);
  CHECK_THROWS_AS(run_command("diagnose", diag_no_checkpoint), ConfigError);

  // a loaded dataset must line up with the configured graph
  const auto small = tmp.path() / "small.csv";
  std::string csv = "node_id,t,y,true_g\n";
  for (int i = 0; i < 10; ++i)
    csv += std::to_string(i) + ",1,0.5,0.5\n";
  testutil::write_file(small, csv);
  json mismatched = sbm_config(out, 1);
  mismatched["simulation"]["dataset"] = small.string();
  CHECK_THROWS_AS(run_command("estimate", mismatched), DataError);
}

}  // TEST_SUITE
