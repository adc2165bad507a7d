// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "mechlab/lp.hpp"
#include "mechlab/optimizer.hpp"
#include "mechlab/phi.hpp"

/// Serialization of analysis results into the report envelope
///   { "version": ..., "command": ..., "config": {...}, "result": {...} }
/// shared by every CLI command. All output is deterministic: objects are
/// serialized with sorted keys, and floating point numbers use the shortest
/// round-trip decimal form, so repeated runs with the same config produce
/// byte-identical files.
namespace mechlab::report {

/// Library version embedded in every report.
std::string version();

/// Shortest round-trip decimal representation of x.
std::string format_double(double x);

nlohmann::json to_json(const Witness& witness);
nlohmann::json to_json(const SCReport& report);
nlohmann::json to_json(const CheckResult& result, const std::string& name);
nlohmann::json to_json(const OptResult& result);
nlohmann::json to_json(const NecessaryReport& report);
nlohmann::json to_json(const GapResult& result);
nlohmann::json to_json(const BundleResult& result);
nlohmann::json to_json(const std::vector<SweepRow>& rows);
nlohmann::json to_json(const std::vector<MonotonicityRow>& rows);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string monotonicity_csv(const std::vector<MonotonicityRow>& rows);
/// rows of (v1, v2, phi).
std::string phi_csv(const std::vector<std::array<double, 3>>& rows);

/// Assemble and serialize the envelope (2-space indent, sorted keys,
/// trailing newline).
std::string render(const std::string& command, const nlohmann::json& config,
                   const nlohmann::json& result);

}  // namespace mechlab::report
