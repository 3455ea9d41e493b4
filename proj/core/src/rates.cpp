#include "ahr/error.hpp"
#include "ahr/experiments.hpp"
#include "ahr/stats.hpp"
#include "ahr/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

namespace ahr {

RateAxis parse_rate_axis(const std::string& name) {
  if (name == "n") return RateAxis::n;
  if (name == "n_eff") return RateAxis::n_eff;
  throw InvalidInput("unknown x axis '" + name + "' (expected n or n_eff)");
}

namespace {

const char* axis_name(RateAxis x) { return x == RateAxis::n ? "n" : "n_eff"; }

double axis_value(const ResultRow& row, RateAxis x) {
  const double n = static_cast<double>(row.n);
  return x == RateAxis::n ? n : n * effective_sample_factor(row.gamma);
}

}  // namespace

std::string row_field(const ResultRow& row, const std::string& key) {
  using text::format_real;
  if (key == "rep") return std::to_string(row.rep);
  if (key == "n") return std::to_string(row.n);
  if (key == "d") return std::to_string(row.d);
  if (key == "s") return std::to_string(row.s);
  if (key == "delta") return format_real(row.delta);
  if (key == "gamma") return format_real(row.gamma);
  if (key == "estimator") return to_string(row.estimator);
  if (key == "tau") return format_real(row.tau);
  if (key == "lambda") return format_real(row.lambda);
  if (key == "converged") return row.converged ? "1" : "0";
  if (key == "seed") return std::to_string(row.seed);
  return format_real(row_metric(row, key));
}

double row_metric(const ResultRow& row, const std::string& key) {
  if (key == "l1_error") return row.l1_error;
  if (key == "l2_error") return row.l2_error;
  if (key == "support_precision") return row.support_precision;
  if (key == "support_recall") return row.support_recall;
  if (key == "kkt_residual") return row.kkt_residual;
  if (key == "wall_time_ms") return row.wall_time_ms;
  if (key == "tau") return row.tau;
  if (key == "lambda") return row.lambda;
  throw InvalidInput("unknown metric '" + key + "'");
}

std::vector<SlopeRow> rate_fit(const std::vector<ResultRow>& rows, const std::vector<std::string>& group_keys,
                               RateAxis x, const std::string& y_metric, std::ostream* log) {
  std::vector<std::string> keys = group_keys;
  if (std::find(keys.begin(), keys.end(), "d") == keys.end()) keys.push_back("d");
  for (const auto& k : keys) {
    if (k == "n" || k == "rep" || k == "seed") throw InvalidInput("cannot group by '" + k + "'");
    if (!rows.empty()) (void)row_field(rows.front(), k);
  }
  if (!rows.empty()) (void)row_metric(rows.front(), y_metric);

  std::map<std::vector<std::string>, std::map<double, std::vector<double>>> groups;
  for (const auto& row : rows) {
    std::vector<std::string> g;
    g.reserve(keys.size());
    for (const auto& k : keys) g.push_back(row_field(row, k));
    const double y = row_metric(row, y_metric);
    if (std::isfinite(y)) groups[g][axis_value(row, x)].push_back(y);
  }

  std::vector<SlopeRow> out;
  for (const auto& [g, per_x] : groups) {
    std::vector<double> lx, ly;
    for (const auto& [xv, ys] : per_x) {
      const double med = stats::median(ys);
      if (med > 0.0 && xv > 0.0) {
        lx.push_back(std::log(xv));
        ly.push_back(std::log(med));
      }
    }
    if (lx.size() < 3) {
      if (log) {
        std::string label;
        for (std::size_t i = 0; i < keys.size(); ++i) label += fmt::format(" {}={}", keys[i], g[i]);
        *log << fmt::format("warning: group{} has {} usable x values; skipped\n", label, lx.size());
      }
      continue;
    }
    const auto fit = stats::ols(lx, ly);
    SlopeRow s;
    for (std::size_t i = 0; i < keys.size(); ++i) s.group.emplace_back(keys[i], g[i]);
    s.points = lx.size();
    s.slope = fit.slope;
    s.slope_stderr = fit.slope_stderr;
    s.intercept = fit.intercept;
    out.push_back(std::move(s));
  }
  return out;
}

void write_slopes(const std::vector<SlopeRow>& slopes, RateAxis x, const std::string& y_metric,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  std::string header;
  if (!slopes.empty()) {
    for (const auto& [k, v] : slopes.front().group) header += k + ",";
  }
  out << header << "x,y,points,slope,slope_stderr,intercept\n";
  for (const auto& s : slopes) {
    for (const auto& [k, v] : s.group) out << v << ',';
    out << fmt::format("{},{},{},{},{},{}\n", axis_name(x), y_metric, s.points, text::format_real(s.slope),
                       text::format_real(s.slope_stderr), text::format_real(s.intercept));
  }
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace ahr
