#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "sublin/oracle.hpp"

namespace sublin {

// JSON formats:
//   set system: {"k": int, "sets": [[int, ...], ...], "meta": {...}?}
//   metric:     {"n": int, "coords": [[x, y, ...], ...] | "matrix": [[...], ...],
//                "terminals": [int, ...], "meta": {...}?}
// Loaders validate every container invariant and throw ContractViolation.

nlohmann::json to_json(const SetSystem& system);
SetSystem set_system_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricInstance& metric);
/// Also checks the triangle inequality exhaustively when n <= check_limit.
MetricInstance metric_from_json(const nlohmann::json& j, std::size_t check_limit = 400);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

SetSystem load_set_system(const std::string& path);
MetricInstance load_metric(const std::string& path);

}  // namespace sublin
