#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ikf/geom/polytope.hpp"
#include "ikf/rules/rules.hpp"

namespace ikf::app {

// Two free dimensions drawn as axes; every other dimension is fixed.
struct SliceSpec {
  Eigen::Index x_dim = 1;
  Eigen::Index y_dim = 3;
  std::vector<std::pair<Eigen::Index, double>> fixed;

  void validate(Eigen::Index dim) const;
};

// Shepherding default: distances fixed at d_sheep and d_target metres
// (normalized by the field size), angles on the axes.
SliceSpec shepherd_slice(double field_size, double d_sheep = 20.0, double d_target = 80.0);

// The region restricted to the slice, as a 2-D polytope over (x_dim, y_dim).
// nullopt when the slice misses the region.
std::optional<geom::HPolytope> slice_polytope(const geom::HPolytope& p, const SliceSpec& spec);

// Vertices in counter-clockwise order; empty when the slice has no area.
std::vector<Eigen::Vector2d> slice_polygon(const geom::HPolytope& p, const SliceSpec& spec);

struct RenderOptions {
  std::string title;
  int width = 640;
  int height = 640;
  std::string x_label = "x";
  std::string y_label = "y";
  // Arrow direction per decision (north is up); text labels when empty.
  std::vector<Eigen::Vector2d> decision_arrows;
  // Per-rule shading in [0,1]; rule weakness_degree when empty.
  std::vector<double> shading;
};

struct RenderedPolygon {
  std::size_t rule = 0;
  std::vector<Eigen::Vector2d> vertices;  // data coordinates
  double shading = 0.0;
  std::string fill;  // "#rrggbb"
  int decision = 0;
};

struct Rendering {
  std::string svg;
  std::vector<RenderedPolygon> polygons;
};

// Stronger red means weaker knowledge: #ff{g}{g} with g = 255 (1 - s).
std::string shading_colour(double s);

Rendering render_polytopes(const rules::RuleSet& rs, const SliceSpec& spec, const RenderOptions& opt = {});

struct CurveSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 440;
};

struct CurvePlot {
  std::string svg;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

CurvePlot plot_curves(const std::vector<CurveSeries>& series, const PlotOptions& opt = {});

// Reads a CSV with a header row and averages y_col per (group_col, x_col);
// one series per group in first-seen order. An empty group_col gives a single
// series. Non-numeric cells are skipped.
std::vector<CurveSeries> curves_from_csv(const std::filesystem::path& path, const std::string& x_col,
                                         const std::string& y_col, const std::string& group_col = "");

void write_text_file(const std::string& text, const std::filesystem::path& path);

}  // namespace ikf::app
