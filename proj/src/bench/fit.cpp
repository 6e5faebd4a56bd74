#include "sublin/bench/fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "sublin/errors.hpp"

namespace sublin::bench {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

nlohmann::json ExponentFit::to_json() const {
  return {{"slope", slope},         {"intercept", intercept}, {"stderr", stderr_slope},
          {"ci95", {ci_low, ci_high}}, {"points", points},     {"distinct_x", distinct_x},
          {"log_power", log_power}};
}

ExponentFit fit_exponent(const std::vector<double>& x, const std::vector<double>& y, double log_power) {
  if (x.size() != y.size()) throw ConfigError("x and y differ in length");
  std::set<double> distinct(x.begin(), x.end());
  if (distinct.size() < 4) throw ConfigError("exponent fit needs at least 4 distinct x values");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ConfigError("exponent fit needs positive data");
    if (log_power != 0.0 && !(x[i] > 1.0)) throw ConfigError("log deflation needs x > 1");
    lx.push_back(std::log(x[i]));
    double v = std::log(y[i]);
    if (log_power != 0.0) v -= log_power * std::log(std::log(x[i]));
    ly.push_back(v);
  }
  const auto m = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  ExponentFit f;
  f.log_power = log_power;
  f.points = lx.size();
  f.distinct_x = distinct.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double r = ly[i] - (f.intercept + f.slope * lx[i]);
    sse += r * r;
  }
  const double df = m - 2.0;
  f.stderr_slope = std::sqrt(sse / df / sxx);
  const double t = boost::math::quantile(boost::math::students_t(df), 0.975);
  f.ci_low = f.slope - t * f.stderr_slope;
  f.ci_high = f.slope + t * f.stderr_slope;
  return f;
}

ExponentFit fit_exponent_csv(const std::string& path, const std::string& x_col,
                             const std::string& y_col, double log_power,
                             const std::string& filter_col, const std::string& filter_value) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty csv: " + path);
  auto header = split_csv_line(line);
  auto col = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto xi = col(x_col), yi = col(y_col), si = col("status");
  const auto fi = filter_col.empty() ? -1 : col(filter_col);
  if (xi < 0 || yi < 0) throw ConfigError("csv lacks column " + (xi < 0 ? x_col : y_col));
  if (!filter_col.empty() && fi < 0) throw ConfigError("csv lacks column " + filter_col);
  std::vector<double> xs, ys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    auto at = [&](std::ptrdiff_t i) { return static_cast<std::size_t>(i) < cells.size() ? cells[i] : ""; };
    if (si >= 0 && !at(si).empty() && at(si) != "ok") continue;
    if (fi >= 0 && at(fi) != filter_value) continue;
    xs.push_back(std::stod(at(xi)));
    ys.push_back(std::stod(at(yi)));
  }
  return fit_exponent(xs, ys, log_power);
}

}  // namespace sublin::bench
