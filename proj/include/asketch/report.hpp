#pragma once

#include <asketch/sweep.hpp>

#include <nlohmann/json.hpp>

#include <iomanip>
#include <sstream>

namespace asketch {

enum class ReportFormat { Csv, Json, Svg };

inline ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  if (s == "svg") return ReportFormat::Svg;
  throw std::invalid_argument("unknown report format '" + s + "'");
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["n"] = config.n;
  j["d"] = config.d;
  switch (config.profile.kind) {
    case DecayKind::FiniteRank:
      j["profile"] = {{"kind", "finite-rank"}, {"rank", config.profile.rank},
                      {"scale", config.profile.scale}};
      break;
    case DecayKind::Exponential:
      j["profile"] = {{"kind", "exponential"}, {"decay_rate", config.profile.decay_rate},
                      {"scale", config.profile.scale}};
      break;
    case DecayKind::Polynomial:
      j["profile"] = {{"kind", "polynomial"}, {"exponent", config.profile.exponent},
                      {"scale", config.profile.scale}};
      break;
    case DecayKind::Explicit:
      j["profile"] = {{"kind", "explicit"}, {"values", config.profile.values}};
      break;
  }
  if (!config.matrix_path.empty()) j["matrix_path"] = config.matrix_path;
  j["objective"] = config.objective;
  j["lambda"] = config.lambda;
  j["sketch"] = to_string(config.sketch_kind);
  j["m_grid"] = config.m_grid;
  if (config.sketch_kind == SketchKind::Power) j["q"] = config.power_q;
  if (config.sketch_kind == SketchKind::LeverageScore) j["target_rank"] = config.target_rank;
  j["trials"] = config.trials;
  j["seed"] = config.seed;
  j["method"] = to_string(config.solver.method);
  j["tol"] = config.solver.tol;
  j["oracle_tol"] = config.oracle_tol;
  return j;
}

/// CSV rows "m,trial,rel_error"; flagged (non-converged) solves are omitted.
inline void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  if (result.empty()) throw std::invalid_argument("write_sweep_csv: empty sweep result");
  auto out = detail::open_out(path);
  out << "m,trial,rel_error\n";
  for (std::size_t j = 0; j < result.m_grid.size(); ++j)
    for (Index t = 0; t < result.errors.rows(); ++t) {
      const double e = result.errors(t, static_cast<Index>(j));
      if (!std::isfinite(e)) continue;
      out << result.m_grid[j] << ',' << t << ',' << detail::fmt(e) << '\n';
    }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Rebuilds per-m aggregates from a sweep CSV (slope is not recomputed).
inline SweepResult load_sweep_csv(const std::filesystem::path& path) {
  Matrix raw = [&] {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    if (header != "m,trial,rel_error")
      throw ParseError("load_sweep_csv: " + path.string() + ": bad header at line 1");
    std::vector<std::array<double, 3>> rows;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::array<double, 3> row{};
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &row[0], &row[1], &row[2]) != 3)
        throw ParseError("load_sweep_csv: " + path.string() + ": bad row at line " +
                         std::to_string(lineno));
      rows.push_back(row);
    }
    Matrix m(static_cast<Index>(rows.size()), 3);
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < 3; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
  }();

  SweepResult result;
  Index max_trial = -1;
  for (Index i = 0; i < raw.rows(); ++i) {
    const Index m = static_cast<Index>(raw(i, 0));
    if (result.m_grid.empty() || result.m_grid.back() != m) {
      if (std::find(result.m_grid.begin(), result.m_grid.end(), m) == result.m_grid.end())
        result.m_grid.push_back(m);
    }
    max_trial = std::max(max_trial, static_cast<Index>(raw(i, 1)));
  }
  std::sort(result.m_grid.begin(), result.m_grid.end());
  result.errors = Matrix::Constant(max_trial + 1, static_cast<Index>(result.m_grid.size()),
                                   std::nan(""));
  for (Index i = 0; i < raw.rows(); ++i) {
    const auto it = std::find(result.m_grid.begin(), result.m_grid.end(),
                              static_cast<Index>(raw(i, 0)));
    result.errors(static_cast<Index>(raw(i, 1)),
                  static_cast<Index>(it - result.m_grid.begin())) = raw(i, 2);
  }
  const Index cols = result.errors.cols();
  result.flagged.assign(static_cast<std::size_t>(cols), 0);
  result.mean_error.assign(static_cast<std::size_t>(cols), std::nan(""));
  result.std_error.assign(static_cast<std::size_t>(cols), std::nan(""));
  for (Index j = 0; j < cols; ++j) {
    double sum = 0;
    int count = 0;
    for (Index t = 0; t < result.errors.rows(); ++t)
      if (std::isfinite(result.errors(t, j))) {
        sum += result.errors(t, j);
        ++count;
      } else {
        ++result.flagged[static_cast<std::size_t>(j)];
      }
    if (count == 0) continue;
    const double mean = sum / count;
    double var = 0;
    for (Index t = 0; t < result.errors.rows(); ++t)
      if (std::isfinite(result.errors(t, j)))
        var += (result.errors(t, j) - mean) * (result.errors(t, j) - mean);
    result.mean_error[static_cast<std::size_t>(j)] = mean;
    result.std_error[static_cast<std::size_t>(j)] = count > 1 ? std::sqrt(var / (count - 1)) : 0.0;
  }
  return result;
}

inline void write_sweep_json(const SweepResult& result, const ExperimentConfig& config,
                             const std::filesystem::path& path) {
  if (result.empty()) throw std::invalid_argument("write_sweep_json: empty sweep result");
  nlohmann::json j;
  j["config"] = to_json(config);
  j["per_m"] = nlohmann::json::array();
  for (std::size_t i = 0; i < result.m_grid.size(); ++i) {
    j["per_m"].push_back({{"m", result.m_grid[i]},
                          {"mean", result.mean_error[i]},
                          {"std", result.std_error[i]},
                          {"flagged", result.flagged[i]}});
  }
  j["slope"] = result.slope;
  j["slope_fit"] = result.slope_fit;
  j["slope_points"] = result.slope_points;
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

struct SweepSeries {
  std::string name;
  std::vector<Index> m_grid;
  std::vector<double> mean;
  std::vector<double> stddev;  // bars at 2x this value
};

inline SweepSeries to_series(const SweepResult& result, std::string name) {
  return SweepSeries{std::move(name), result.m_grid, result.mean_error, result.std_error};
}

/// Line plot with a log-scaled y axis, one polyline per series, error bars at
/// twice the standard deviation.
inline void write_sweep_svg(const std::vector<SweepSeries>& series,
                            const std::filesystem::path& path) {
  if (series.empty()) throw std::invalid_argument("write_sweep_svg: no series");
  for (const auto& s : series)
    if (s.m_grid.empty()) throw std::invalid_argument("write_sweep_svg: empty series");

  const double width = 720, height = 480;
  const double left = 70, right = 20, top = 30, bottom = 50;
  double m_lo = std::numeric_limits<double>::infinity(), m_hi = 0;
  double y_lo = std::numeric_limits<double>::infinity(), y_hi = 0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.m_grid.size(); ++i) {
      if (!std::isfinite(s.mean[i]) || s.mean[i] <= 0) continue;
      m_lo = std::min(m_lo, static_cast<double>(s.m_grid[i]));
      m_hi = std::max(m_hi, static_cast<double>(s.m_grid[i]));
      y_lo = std::min(y_lo, s.mean[i]);
      y_hi = std::max(y_hi, s.mean[i] + 2.0 * s.stddev[i]);
    }
  if (!(y_lo > 0) || !(m_hi > 0))
    throw std::invalid_argument("write_sweep_svg: no positive data to plot");
  y_lo /= 2.0;
  y_hi *= 2.0;

  auto x_at = [&](double m) {
    return left + (m - m_lo) / std::max(m_hi - m_lo, 1.0) * (width - left - right);
  };
  auto y_at = [&](double v) {
    const double t = (std::log10(v) - std::log10(y_lo)) / (std::log10(y_hi) - std::log10(y_lo));
    return height - bottom - t * (height - top - bottom);
  };

  static const char* palette[] = {"#c0392b", "#27ae60", "#2980b9", "#8e44ad", "#d35400"};
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "  <line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  for (int decade = static_cast<int>(std::ceil(std::log10(y_lo)));
       decade <= static_cast<int>(std::floor(std::log10(y_hi))); ++decade) {
    const double v = std::pow(10.0, decade);
    svg << "  <line x1=\"" << left - 4 << "\" y1=\"" << y_at(v) << "\" x2=\"" << left
        << "\" y2=\"" << y_at(v) << "\" stroke=\"black\"/>\n"
        << "  <text x=\"" << left - 8 << "\" y=\"" << y_at(v) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">1e" << decade << "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 5];
    svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.m_grid.size(); ++i) {
      if (!std::isfinite(s.mean[i]) || s.mean[i] <= 0) continue;
      svg << x_at(static_cast<double>(s.m_grid[i])) << ',' << y_at(s.mean[i]) << ' ';
    }
    svg << "\"/>\n";
    for (std::size_t i = 0; i < s.m_grid.size(); ++i) {
      if (!std::isfinite(s.mean[i]) || s.mean[i] <= 0) continue;
      const double x = x_at(static_cast<double>(s.m_grid[i]));
      const double hi = s.mean[i] + 2.0 * s.stddev[i];
      const double lo = std::max(s.mean[i] - 2.0 * s.stddev[i], y_lo);
      svg << "  <line x1=\"" << x << "\" y1=\"" << y_at(lo) << "\" x2=\"" << x << "\" y2=\""
          << y_at(hi) << "\" stroke=\"" << color << "\"/>\n";
      svg << "  <text x=\"" << x << "\" y=\"" << height - bottom + 16
          << "\" font-size=\"11\" text-anchor=\"middle\">" << s.m_grid[i] << "</text>\n";
    }
    svg << "  <text x=\"" << width - right - 150 << "\" y=\"" << top + 16 * (si + 1)
        << "\" font-size=\"12\" fill=\"" << color << "\">" << s.name << "</text>\n";
  }
  svg << "  <text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">sketch dimension m</text>\n";
  svg << "</svg>\n";

  auto out = detail::open_out(path);
  out << svg.str();
}

/// One-call emission used by the CLI `report` path.
inline std::filesystem::path emit_report(const SweepResult& result,
                                         const ExperimentConfig& config, ReportFormat format,
                                         const std::filesystem::path& base) {
  switch (format) {
    case ReportFormat::Csv: {
      auto path = base;
      path += ".csv";
      write_sweep_csv(result, path);
      return path;
    }
    case ReportFormat::Json: {
      auto path = base;
      path += ".json";
      write_sweep_json(result, config, path);
      return path;
    }
    case ReportFormat::Svg: {
      auto path = base;
      path += ".svg";
      write_sweep_svg({to_series(result, to_string(config.sketch_kind))}, path);
      return path;
    }
  }
  throw std::invalid_argument("emit_report: unknown format");
}

/// CSV table "method,m,trial,test_error" plus "primal,,trial,error" rows.
inline void write_compare_csv(const CompareResult& result, const std::filesystem::path& path) {
  if (result.rows.empty()) throw std::invalid_argument("write_compare_csv: empty comparison");
  auto out = detail::open_out(path);
  out << "method,m,trial,test_error\n";
  for (std::size_t t = 0; t < result.primal_test_error.size(); ++t)
    out << "primal,," << t << ',' << detail::fmt(result.primal_test_error[t]) << '\n';
  for (const auto& row : result.rows)
    out << to_string(row.method) << ',' << row.m << ',' << row.trial << ','
        << detail::fmt(row.test_error) << '\n';
}

}  // namespace asketch
