#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sublin::bench {

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double ci_low = 0.0;  // 95%, Student t with points − 2 degrees of freedom
  double ci_high = 0.0;
  std::size_t points = 0;
  std::size_t distinct_x = 0;
  double log_power = 3.0;

  nlohmann::json to_json() const;
};

/// Least squares of ln(y / ln(x)^log_power) on ln x. Throws ConfigError with
/// fewer than 4 distinct x, non-positive values, or x ≤ 1 when deflating.
ExponentFit fit_exponent(const std::vector<double>& x, const std::vector<double>& y,
                         double log_power = 3.0);

/// Same over two columns of a CSV file with a header row. Rows whose
/// `filter_col` differs from `filter_value` are skipped when a filter is
/// given, as are rows with a non-empty `status` other than "ok".
ExponentFit fit_exponent_csv(const std::string& path, const std::string& x_col,
                             const std::string& y_col, double log_power = 3.0,
                             const std::string& filter_col = "", const std::string& filter_value = "");

}  // namespace sublin::bench
