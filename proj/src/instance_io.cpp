#include "sublin/instance_io.hpp"

#include <fstream>
#include <stdexcept>

#include "sublin/errors.hpp"

namespace sublin {

using nlohmann::json;

json to_json(const SetSystem& system) {
  json sets = json::array();
  for (const auto& s : system.sets()) sets.push_back(s);
  return {{"k", system.universe_size()}, {"sets", std::move(sets)}};
}

SetSystem set_system_from_json(const json& j) {
  try {
    auto k = j.at("k").get<std::size_t>();
    auto sets = j.at("sets").get<std::vector<std::vector<ElementId>>>();
    return SetSystem(k, std::move(sets));
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed set system: ") + e.what());
  }
}

json to_json(const MetricInstance& metric) {
  json j{{"n", metric.size()},
         {"terminals", std::vector<PointId>(metric.terminals().begin(), metric.terminals().end())}};
  const std::size_t n = metric.size();
  if (metric.has_coords()) {
    const std::size_t d = metric.dim();
    json coords = json::array();
    for (std::size_t i = 0; i < n; ++i)
      coords.push_back(std::vector<double>(metric.coords().begin() + i * d,
                                           metric.coords().begin() + (i + 1) * d));
    j["coords"] = std::move(coords);
  } else {
    json rows = json::array();
    for (std::size_t i = 0; i < n; ++i)
      rows.push_back(std::vector<double>(metric.matrix().begin() + i * n,
                                         metric.matrix().begin() + (i + 1) * n));
    j["matrix"] = std::move(rows);
  }
  return j;
}

MetricInstance metric_from_json(const json& j, std::size_t check_limit) {
  MetricInstance m;
  try {
    auto n = j.at("n").get<std::size_t>();
    auto terminals = j.at("terminals").get<std::vector<PointId>>();
    if (j.contains("coords")) {
      auto rows = j.at("coords").get<std::vector<std::vector<double>>>();
      if (rows.size() != n) throw ContractViolation("coords row count differs from n");
      std::size_t dim = rows.empty() ? 1 : rows.front().size();
      std::vector<double> flat;
      flat.reserve(n * dim);
      for (const auto& r : rows) {
        if (r.size() != dim) throw ContractViolation("ragged coordinate rows");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      m = MetricInstance::from_coords(dim, std::move(flat), std::move(terminals));
    } else if (j.contains("matrix")) {
      auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
      if (rows.size() != n) throw ContractViolation("matrix row count differs from n");
      std::vector<double> flat;
      flat.reserve(n * n);
      for (const auto& r : rows) {
        if (r.size() != n) throw ContractViolation("matrix row length differs from n");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      m = MetricInstance::from_matrix(n, std::move(flat), std::move(terminals));
    } else {
      throw ContractViolation("metric needs either \"coords\" or \"matrix\"");
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed metric: ") + e.what());
  }
  if (m.size() <= check_limit && !m.satisfies_triangle_inequality())
    throw ContractViolation("metric violates the triangle inequality");
  return m;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

SetSystem load_set_system(const std::string& path) {
  return set_system_from_json(read_json_file(path));
}

MetricInstance load_metric(const std::string& path) { return metric_from_json(read_json_file(path)); }

}  // namespace sublin
