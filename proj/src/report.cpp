// SPDX-License-Identifier: MIT
#include "mechlab/report.hpp"

#include <array>
#include <charconv>
#include <string>

namespace mechlab::report {

namespace {

nlohmann::json point_json(const std::array<double, 2>& p) {
  return nlohmann::json::array({p[0], p[1]});
}

}  // namespace

std::string version() { return "0.1.0"; }

std::string format_double(double x) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

nlohmann::json to_json(const Witness& witness) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : witness.points) points.push_back(point_json(p));
  return {{"condition", witness.condition},
          {"points", points},
          {"values", witness.values},
          {"note", witness.note}};
}

nlohmann::json to_json(const SCReport& report) {
  nlohmann::json witnesses = nlohmann::json::array();
  for (const auto& w : report.witnesses) witnesses.push_back(to_json(w));
  const bool all_hold = report.sch == Verdict::Holds &&
                        report.scv == Verdict::Holds &&
                        report.scd == Verdict::Holds;
  return {{"sch", to_string(report.sch)},
          {"scv", to_string(report.scv)},
          {"scd", to_string(report.scd)},
          {"all_hold", all_hold},
          {"grid_resolution", report.grid_resolution},
          {"tolerance", report.tolerance},
          {"witnesses", witnesses}};
}

nlohmann::json to_json(const CheckResult& result, const std::string& name) {
  nlohmann::json witnesses = nlohmann::json::array();
  for (const auto& w : result.witnesses) witnesses.push_back(to_json(w));
  return {{"condition", name},
          {"verdict", to_string(result.verdict)},
          {"worst", result.worst},
          {"witnesses", witnesses}};
}

nlohmann::json to_json(const OptResult& result) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : result.candidates) {
    candidates.push_back({{"p1", c.prices.p1},
                          {"p2", c.prices.p2},
                          {"revenue", c.revenue},
                          {"regime", to_string(c.regime)}});
  }
  nlohmann::json out = {{"p1", result.best.p1},
                        {"p2", result.best.p2},
                        {"revenue", result.revenue},
                        {"regime", to_string(result.regime)},
                        {"candidates", candidates}};
  if (result.foc_residuals) {
    out["foc_residuals"] = nlohmann::json::array(
        {(*result.foc_residuals)[0], (*result.foc_residuals)[1]});
  }
  return out;
}

nlohmann::json to_json(const NecessaryReport& report) {
  nlohmann::json out = {
      {"regime", to_string(report.regime)},
      {"residuals",
       nlohmann::json::array({report.residuals[0], report.residuals[1]})}};
  if (report.phi_at_prices) out["phi_at_prices"] = *report.phi_at_prices;
  if (report.phi_at_zero) out["phi_at_zero"] = *report.phi_at_zero;
  return out;
}

nlohmann::json to_json(const GapResult& result) {
  return {{"lp_value", result.lp_value},
          {"best_det_on_grid", result.best_det_on_grid},
          {"gap", result.gap},
          {"best_p1", result.best_prices.p1},
          {"best_p2", result.best_prices.p2}};
}

nlohmann::json to_json(const BundleResult& result) {
  return {{"price", result.price},
          {"revenue", result.revenue},
          {"regular", result.regular},
          {"residual", result.residual}};
}

nlohmann::json to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"param", r.param},
                   {"p1", r.p1},
                   {"p2", r.p2},
                   {"regime", to_string(r.regime)},
                   {"revenue", r.revenue}});
  }
  return out;
}

nlohmann::json to_json(const std::vector<MonotonicityRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"theta", r.theta}, {"lp_value", r.lp_value}});
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "param,p1,p2,regime,revenue\n";
  for (const auto& r : rows) {
    out += format_double(r.param) + "," + format_double(r.p1) + "," +
           format_double(r.p2) + "," + to_string(r.regime) + "," +
           format_double(r.revenue) + "\n";
  }
  return out;
}

std::string monotonicity_csv(const std::vector<MonotonicityRow>& rows) {
  std::string out = "theta,lp_value\n";
  for (const auto& r : rows) {
    out += format_double(r.theta) + "," + format_double(r.lp_value) + "\n";
  }
  return out;
}

std::string phi_csv(const std::vector<std::array<double, 3>>& rows) {
  std::string out = "v1,v2,phi\n";
  for (const auto& r : rows) {
    out += format_double(r[0]) + "," + format_double(r[1]) + "," +
           format_double(r[2]) + "\n";
  }
  return out;
}

std::string render(const std::string& command, const nlohmann::json& config,
                   const nlohmann::json& result) {
  nlohmann::json envelope = {{"version", version()},
                             {"command", command},
                             {"config", config},
                             {"result", result}};
  // nlohmann::json objects iterate in sorted key order, and dump() emits
  // shortest round-trip numbers, so this string is a pure function of the
  // values.
  return envelope.dump(2) + "\n";
}

}  // namespace mechlab::report
