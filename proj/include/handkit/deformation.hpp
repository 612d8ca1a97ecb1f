#pragma once

// Force-strain curves and the choice of tissue tube thickness whose curve is
// closest to a reference (human finger) curve.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "handkit/error.hpp"
#include "handkit/mesh_io.hpp"

namespace handkit {

struct CurveSample {
  double strain = 0.0;
  double force = 0.0;  // N
};

struct DeformationCurve {
  std::vector<CurveSample> samples;  // strictly increasing strain
  std::string label;

  double min_strain() const { return samples.front().strain; }
  double max_strain() const { return samples.back().strain; }
};

struct ThicknessCandidate {
  double sigma = 0.0;
  DeformationCurve curve;
};

inline void validate(const DeformationCurve& curve) {
  if (curve.samples.size() < 2) {
    throw Error(ErrorKind::MalformedTable, "curve '" + curve.label + "' needs at least 2 samples");
  }
  if (curve.samples.front().strain < 0.0) {
    throw Error(ErrorKind::MalformedTable, "curve '" + curve.label + "' has negative strain");
  }
  for (std::size_t i = 0; i < curve.samples.size(); ++i) {
    const auto& s = curve.samples[i];
    if (!std::isfinite(s.strain) || !std::isfinite(s.force) || s.force < 0.0) {
      throw Error(ErrorKind::MalformedTable, "curve '" + curve.label + "' has an invalid sample");
    }
    if (i > 0 && !(s.strain > curve.samples[i - 1].strain)) {
      throw Error(ErrorKind::NonMonotoneStrain, "curve '" + curve.label + "' strains are not strictly increasing");
    }
  }
}

/// Reads comma-separated `strain,force,label` rows under a header row (the
/// columns may appear in any order). Returns one curve per label in order
/// of first appearance, each sorted by strain.
inline std::vector<DeformationCurve> load_curves(std::string_view text) {
  const auto lines = detail::lines_of(text);
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      cells.push_back(detail::trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };

  std::size_t ln = 0;
  while (ln < lines.size() && detail::trim(lines[ln]).empty()) ++ln;
  if (ln == lines.size()) throw Error(ErrorKind::MalformedTable, "curve table is empty");
  const auto header = split(lines[ln]);
  int col_strain = -1, col_force = -1, col_label = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "strain") col_strain = static_cast<int>(c);
    if (header[c] == "force") col_force = static_cast<int>(c);
    if (header[c] == "label") col_label = static_cast<int>(c);
  }
  if (col_strain < 0 || col_force < 0 || col_label < 0) {
    throw Error(ErrorKind::MalformedTable, "header must name strain, force and label columns (line " +
                                               std::to_string(ln + 1) + ")");
  }

  std::vector<DeformationCurve> curves;
  std::map<std::string, std::size_t> index;
  for (++ln; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const auto cells = split(lines[ln]);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::MalformedTable, "line " + std::to_string(ln + 1) + " has " +
                                                 std::to_string(cells.size()) + " cells, expected " +
                                                 std::to_string(header.size()));
    }
    CurveSample s;
    if (!detail::parse_double(cells[col_strain], s.strain) || !detail::parse_double(cells[col_force], s.force)) {
      throw Error(ErrorKind::MalformedTable, "non-numeric value on line " + std::to_string(ln + 1));
    }
    const std::string label(cells[col_label]);
    if (label.empty()) throw Error(ErrorKind::MalformedTable, "empty label on line " + std::to_string(ln + 1));
    auto [it, fresh] = index.try_emplace(label, curves.size());
    if (fresh) curves.push_back(DeformationCurve{{}, label});
    curves[it->second].samples.push_back(s);
  }
  if (curves.empty()) throw Error(ErrorKind::MalformedTable, "curve table has no data rows");

  for (auto& curve : curves) {
    std::stable_sort(curve.samples.begin(), curve.samples.end(),
                     [](const CurveSample& a, const CurveSample& b) { return a.strain < b.strain; });
    for (std::size_t i = 1; i < curve.samples.size(); ++i) {
      if (curve.samples[i].strain == curve.samples[i - 1].strain) {
        throw Error(ErrorKind::NonMonotoneStrain,
                    "label '" + curve.label + "' repeats strain " + detail::format_float(curve.samples[i].strain, 17));
      }
    }
    validate(curve);
  }
  return curves;
}

inline std::string write_curves(const std::vector<DeformationCurve>& curves) {
  std::string out = "strain,force,label\n";
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      out += detail::format_float(s.strain, 17) + "," + detail::format_float(s.force, 17) + "," + c.label + "\n";
    }
  }
  return out;
}

/// Piecewise-linear force at each grid strain. Grid points equal to a
/// sample strain return that sample's force exactly.
inline DeformationCurve resample_curve(const DeformationCurve& curve, const std::vector<double>& grid) {
  validate(curve);
  DeformationCurve out;
  out.label = curve.label;
  out.samples.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    if (g > 0 && !(x > grid[g - 1])) throw Error(ErrorKind::InvalidArgument, "grid must be strictly increasing");
    if (!(x >= curve.min_strain() && x <= curve.max_strain())) {
      throw Error(ErrorKind::GridOutOfRange, "strain " + detail::format_float(x, 17) + " is outside [" +
                                                 detail::format_float(curve.min_strain(), 17) + ", " +
                                                 detail::format_float(curve.max_strain(), 17) + "] of '" +
                                                 curve.label + "'");
    }
    auto it = std::lower_bound(curve.samples.begin(), curve.samples.end(), x,
                               [](const CurveSample& s, double v) { return s.strain < v; });
    double force;
    if (it->strain == x) {
      force = it->force;
    } else {
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (x - lo.strain) / (hi.strain - lo.strain);
      force = lo.force + t * (hi.force - lo.force);
    }
    out.samples.push_back({x, force});
  }
  return out;
}

enum class CurveMetric { rms, max_abs };

inline CurveMetric curve_metric_from_string(std::string_view name) {
  if (name == "rms") return CurveMetric::rms;
  if (name == "max_abs") return CurveMetric::max_abs;
  throw Error(ErrorKind::InvalidArgument, "unknown curve metric '" + std::string(name) + "'");
}

/// Uniform grid of `points` strains over the overlap of both curves.
inline std::vector<double> common_grid(const DeformationCurve& a, const DeformationCurve& b, int points = 100) {
  validate(a);
  validate(b);
  if (points < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 points");
  const double lo = std::max(a.min_strain(), b.min_strain());
  const double hi = std::min(a.max_strain(), b.max_strain());
  if (!(hi > lo)) {
    throw Error(ErrorKind::EmptyOverlap, "strain ranges of '" + a.label + "' and '" + b.label + "' do not overlap");
  }
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) grid[k] = lo + (hi - lo) * k / (points - 1);
  grid.back() = hi;
  return grid;
}

/// RMS (or max-abs) force difference on the common grid, in newtons.
inline double curve_distance(const DeformationCurve& a, const DeformationCurve& b, int points = 100,
                             CurveMetric metric = CurveMetric::rms) {
  const auto grid = common_grid(a, b, points);
  const auto ra = resample_curve(a, grid);
  const auto rb = resample_curve(b, grid);
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double d = ra.samples[k].force - rb.samples[k].force;
    acc = metric == CurveMetric::rms ? acc + d * d : std::max(acc, std::abs(d));
  }
  return metric == CurveMetric::rms ? std::sqrt(acc / static_cast<double>(grid.size())) : acc;
}

struct ThicknessSelection {
  double sigma_star = 0.0;
  std::vector<std::pair<double, double>> distances;  // (sigma, distance), ascending sigma
};

struct SelectionOptions {
  int grid_points = 100;
  CurveMetric metric = CurveMetric::rms;
  /// Distances within this relative tolerance count as a tie.
  double tie_tolerance = 1e-12;
  bool prefer_smaller_sigma = true;
};

/// Picks the candidate closest to `human`; ties go to the smaller sigma
/// (or the larger, if so configured). Input order does not matter.
inline ThicknessSelection select_thickness(std::vector<ThicknessCandidate> candidates, const DeformationCurve& human,
                                           const SelectionOptions& options = {}) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no thickness candidates");
  std::sort(candidates.begin(), candidates.end(),
            [](const ThicknessCandidate& a, const ThicknessCandidate& b) { return a.sigma < b.sigma; });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i].sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "candidate sigma must be positive");
    if (i > 0 && candidates[i].sigma == candidates[i - 1].sigma) {
      throw Error(ErrorKind::InvalidArgument, "duplicate candidate sigma " + detail::format_float(candidates[i].sigma, 15));
    }
  }
  if (!options.prefer_smaller_sigma) std::reverse(candidates.begin(), candidates.end());

  ThicknessSelection result;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    double d;
    try {
      d = curve_distance(c.curve, human, options.grid_points, options.metric);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::EmptyOverlap) {
        throw Error(ErrorKind::EmptyOverlap, "sigma " + detail::format_float(c.sigma, 15) + ": " + e.message());
      }
      throw;
    }
    result.distances.emplace_back(c.sigma, d);
    if (result.distances.size() == 1 || d < best - options.tie_tolerance * std::max(1.0, std::abs(best))) {
      best = d;
      result.sigma_star = c.sigma;
    }
  }
  std::sort(result.distances.begin(), result.distances.end());
  return result;
}

/// Reads "sigma=<mm>" labels; returns nullopt for anything else.
inline std::optional<double> sigma_from_label(std::string_view label) {
  constexpr std::string_view prefix = "sigma=";
  if (label.substr(0, prefix.size()) != prefix) return std::nullopt;
  double v = 0.0;
  if (!detail::parse_double(label.substr(prefix.size()), v)) return std::nullopt;
  return v;
}

inline nlohmann::json to_json(const ThicknessSelection& s, CurveMetric metric) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [sigma, d] : s.distances) table.push_back({{"sigma_mm", sigma}, {"distance_N", d}});
  return {{"sigma_star_mm", s.sigma_star}, {"metric", metric == CurveMetric::rms ? "rms" : "max_abs"},
          {"distances", table}};
}

}  // namespace handkit
