// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mechlab/density.hpp"
#include "mechlab/lp.hpp"
#include "mechlab/optimizer.hpp"
#include "mechlab/phi.hpp"
#include "mechlab/report.hpp"
#include "schema_subset.hpp"

using nlohmann::json;

namespace {

json load_schema() {
  std::ifstream in(MECHLAB_SCHEMA_PATH);
  REQUIRE_MESSAGE(in.good(), "schema file must exist: " MECHLAB_SCHEMA_PATH);
  json schema;
  in >> schema;
  return schema;
}

json base_config() {
  return {{"family", "uniform"}, {"a", 1.0},     {"params", json::object()},
          {"density", "uniform(dmv,a=1)"},       {"format", "json"}};
}

/// Wraps a result the way the CLI does and validates against the schema.
std::vector<std::string> validate_report(const std::string& command,
                                         const json& config,
                                         const json& result) {
  static const schema_subset::Validator validator(load_schema());
  const std::string text = mechlab::report::render(command, config, result);
  return validator.validate(json::parse(text));
}

}  // namespace

// ---------------------------------------------------------------------------
// format_double and render
// ---------------------------------------------------------------------------

TEST_CASE("format_double emits shortest round-trip decimals") {
  using mechlab::report::format_double;
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-2.25) == "-2.25");
  for (const double x : {2.0 / 3.0, 0.1, 1e-9, -3.5, 0.549196, 6.02e23,
                         0.30000000000000004}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("render produces a stable, sorted, newline-terminated envelope") {
  const json config = base_config();
  const json result = {{"price", 0.5},
                       {"revenue", 0.25},
                       {"regular", true},
                       {"residual", 1e-12}};
  const std::string text = mechlab::report::render("imv-bundle", config, result);
  CHECK(text.back() == '\n');
  CHECK(text == mechlab::report::render("imv-bundle", config, result));

  const json parsed = json::parse(text);
  CHECK(parsed["version"] == mechlab::report::version());
  CHECK(parsed["command"] == "imv-bundle");
  CHECK(parsed["config"] == config);
  CHECK(parsed["result"] == result);

  // Keys are serialized in sorted order.
  CHECK(text.find("\"command\"") < text.find("\"config\""));
  CHECK(text.find("\"config\"") < text.find("\"result\""));
  CHECK(text.find("\"result\"") < text.find("\"version\""));
}

TEST_CASE("version string is a dotted triple") {
  const std::string v = mechlab::report::version();
  CHECK(v == "0.1.0");
}

// ---------------------------------------------------------------------------
// Schema conformance of every command's report
// ---------------------------------------------------------------------------

TEST_CASE("sc-check reports satisfy the schema") {
  const mechlab::Density d =
      mechlab::Density::uniform_triangle(mechlab::Orientation::DMV, 1.0);
  const mechlab::PhiEvaluator ev(d);
  json conds = json::array();
  bool all_hold = true;
  const auto add = [&](const char* name, const mechlab::CheckResult& r) {
    all_hold = all_hold && r.verdict == mechlab::Verdict::Holds;
    conds.push_back(mechlab::report::to_json(r, name));
  };
  add("sch", mechlab::check_sch(ev, 51));
  add("scv", mechlab::check_scv(ev, 51));
  add("scd", mechlab::check_scd(ev, 51));
  json cfg = base_config();
  cfg["n"] = 51;
  cfg["tol"] = 1e-10;
  cfg["conditions"] = "sch,scv,scd";
  const json result = {{"conditions", conds}, {"all_hold", all_hold}};
  CHECK(validate_report("sc-check", cfg, result).empty());
}

TEST_CASE("optimize reports satisfy the schema") {
  mechlab::OptResult res;
  res.best = {2.0 / 3.0, 0.195262};
  res.revenue = 0.549196;
  res.regime = mechlab::Regime::Interior;
  res.candidates.push_back(
      {res.best, res.revenue, mechlab::Regime::Interior});
  res.candidates.push_back(
      {{0.8165, 0.0}, 0.5443, mechlab::Regime::Bundle});
  res.foc_residuals = std::array<double, 2>{1e-9, -2e-9};
  CHECK(validate_report("optimize", base_config(),
                        mechlab::report::to_json(res))
            .empty());

  // Without residuals (bundle winner) it must still conform.
  res.foc_residuals.reset();
  res.regime = mechlab::Regime::Bundle;
  CHECK(validate_report("optimize", base_config(),
                        mechlab::report::to_json(res))
            .empty());
}

TEST_CASE("lp-verify reports satisfy the schema") {
  mechlab::GapResult gap;
  gap.lp_value = 0.5491;
  gap.best_det_on_grid = 0.5487;
  gap.gap = gap.lp_value - gap.best_det_on_grid;
  gap.best_prices = {0.6667, 0.1953};
  json cfg = base_config();
  cfg["n"] = 15;
  json result = mechlab::report::to_json(gap);
  result["n"] = 15;
  CHECK(validate_report("lp-verify", cfg, result).empty());
}

TEST_CASE("imv-bundle reports satisfy the schema") {
  mechlab::BundleResult res;
  res.price = 0.816497;
  res.revenue = 0.544331;
  res.regular = true;
  res.residual = 3e-13;
  json cfg = base_config();
  cfg["family"] = "ordered-inc";
  cfg["density"] = "ordered-increasing(uniform-power(1),a=1)";
  CHECK(validate_report("imv-bundle", cfg, mechlab::report::to_json(res))
            .empty());
}

TEST_CASE("sweep reports satisfy the schema") {
  std::vector<mechlab::SweepRow> rows = {
      {0.2, 0.6455, 0.0, mechlab::Regime::Bundle, 0.43},
      {0.5, 0.6667, 0.08, mechlab::Regime::Interior, 0.47}};
  json cfg = base_config();
  cfg.erase("a");
  cfg["param"] = "a";
  cfg["from"] = 0.2;
  cfg["to"] = 0.5;
  cfg["n"] = 2;
  CHECK(validate_report("sweep", cfg, mechlab::report::to_json(rows)).empty());
}

TEST_CASE("phi-dump reports satisfy the schema") {
  json arr = json::array();
  arr.push_back({{"v1", 0.5}, {"v2", 0.25}, {"phi", -1.0}});
  arr.push_back({{"v1", 1.0}, {"v2", 0.25}, {"phi", 2.0}});
  CHECK(validate_report("phi-dump", base_config(), arr).empty());
}

// ---------------------------------------------------------------------------
// Schema violations are caught
// ---------------------------------------------------------------------------

TEST_CASE("the validator flags structural violations") {
  const schema_subset::Validator validator(load_schema());
  const json good = json::parse(mechlab::report::render(
      "imv-bundle", base_config(),
      {{"price", 0.5}, {"revenue", 0.25}, {"regular", true},
       {"residual", 0.0}}));
  REQUIRE(validator.validate(good).empty());

  json missing = good;
  missing.erase("version");
  CHECK(!validator.validate(missing).empty());

  json bad_command = good;
  bad_command["command"] = "optimise";
  CHECK(!validator.validate(bad_command).empty());

  json bad_threads = good;
  bad_threads["config"]["threads"] = 0;  // minimum 1
  CHECK(!validator.validate(bad_threads).empty());
  bad_threads["config"]["threads"] = 2.5;  // not an integer
  CHECK(!validator.validate(bad_threads).empty());
  bad_threads["config"]["threads"] = 3.0;  // draft-07: 3.0 is an integer
  CHECK(validator.validate(bad_threads).empty());

  json no_format = good;
  no_format["config"].erase("format");
  CHECK(!validator.validate(no_format).empty());

  json bad_result = good;
  bad_result["result"] = {{"nonsense", 1}};  // matches none of the oneOf
  CHECK(!validator.validate(bad_result).empty());

  json empty_conditions = good;
  empty_conditions["command"] = "sc-check";
  empty_conditions["result"] = {{"conditions", json::array()},
                                {"all_hold", true}};  // minItems 1
  CHECK(!validator.validate(empty_conditions).empty());

  json cond = json::object();
  cond["condition"] = "sch";
  cond["verdict"] = "maybe";  // not a verdict
  cond["worst"] = 0.0;
  cond["witnesses"] = json::array();
  json bad_verdict = good;
  bad_verdict["command"] = "sc-check";
  bad_verdict["result"] =
      json{{"conditions", json::array({cond})}, {"all_hold", true}};
  CHECK(!validator.validate(bad_verdict).empty());

  json witness = json::object();
  witness["condition"] = "sch";
  witness["points"] = "zzz";  // must be an array of pairs
  witness["values"] = json::array();
  witness["note"] = "";
  cond["verdict"] = "fails";
  cond["worst"] = 0.7;
  cond["witnesses"] = json::array({witness});
  json bad_witness = good;
  bad_witness["command"] = "sc-check";
  bad_witness["result"] =
      json{{"conditions", json::array({cond})}, {"all_hold", false}};
  CHECK(!validator.validate(bad_witness).empty());
}

TEST_CASE("the validator refuses keywords outside its subset") {
  const schema_subset::Validator strict(json{{"maxLength", 3}});
  CHECK_THROWS_AS((void)strict.validate(json("abcd")), std::runtime_error);
}

// ---------------------------------------------------------------------------
// Serialization details
// ---------------------------------------------------------------------------

TEST_CASE("witness serialization keeps points as coordinate pairs") {
  mechlab::Witness w;
  w.condition = "sch";
  w.points = {{0.9, 0.1}, {0.95, 0.1}};
  w.values = {-0.5, -0.7};
  w.note = "phi decreasing in v1";
  const json j = mechlab::report::to_json(w);
  CHECK(j["condition"] == "sch");
  REQUIRE(j["points"].size() == 2);
  CHECK(j["points"][0][0] == 0.9);
  CHECK(j["points"][1][1] == 0.1);
  CHECK(j["values"].size() == 2);
  CHECK(j["note"] == "phi decreasing in v1");
}

TEST_CASE("SC report serialization aggregates the verdicts") {
  mechlab::SCReport rep;
  rep.sch = mechlab::Verdict::Holds;
  rep.scv = mechlab::Verdict::Holds;
  rep.scd = mechlab::Verdict::Fails;
  rep.grid_resolution = 401;
  rep.tolerance = 1e-10;
  const json j = mechlab::report::to_json(rep);
  CHECK(j["sch"] == "holds");
  CHECK(j["scd"] == "fails");
  CHECK(j["all_hold"] == false);
  CHECK(j["grid_resolution"] == 401);
}

TEST_CASE("necessary-condition serialization keeps optional fields optional") {
  mechlab::NecessaryReport interior;
  interior.regime = mechlab::Regime::Interior;
  interior.residuals = {1e-8, -1e-8};
  interior.phi_at_prices = -0.01;
  interior.phi_at_zero = 0.02;
  const json ji = mechlab::report::to_json(interior);
  CHECK(ji["regime"] == "interior");
  CHECK(ji.contains("phi_at_prices"));
  CHECK(ji.contains("phi_at_zero"));

  mechlab::NecessaryReport edge;
  edge.regime = mechlab::Regime::SeparateEdge;
  edge.residuals = {-0.65, 0.4};
  const json je = mechlab::report::to_json(edge);
  CHECK(je["regime"] == "separate-edge");
  CHECK_FALSE(je.contains("phi_at_prices"));
  CHECK_FALSE(je.contains("phi_at_zero"));
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

TEST_CASE("csv helpers emit stable headers and shortest decimals") {
  std::vector<mechlab::SweepRow> rows = {
      {0.2, 0.5, 0.0, mechlab::Regime::Bundle, 0.43},
      {0.35, 0.625, 0.125, mechlab::Regime::Interior, 0.47}};
  CHECK(mechlab::report::sweep_csv(rows) ==
        "param,p1,p2,regime,revenue\n"
        "0.2,0.5,0,bundle,0.43\n"
        "0.35,0.625,0.125,interior,0.47\n");

  std::vector<mechlab::MonotonicityRow> mono = {{0.0, 0.5}, {1.0, 0.625}};
  CHECK(mechlab::report::monotonicity_csv(mono) ==
        "theta,lp_value\n0,0.5\n1,0.625\n");

  std::vector<std::array<double, 3>> phis = {{0.5, 0.25, -1.0}};
  CHECK(mechlab::report::phi_csv(phis) == "v1,v2,phi\n0.5,0.25,-1\n");
}

TEST_CASE("verdict labels render for reports") {
  CHECK(mechlab::to_string(mechlab::Verdict::Holds) == "holds");
  CHECK(mechlab::to_string(mechlab::Verdict::Fails) == "fails");
  CHECK(mechlab::to_string(mechlab::Verdict::Inconclusive) == "inconclusive");
}
