#include "ikf/app/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ikf/common/error.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::app {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(h) +
         "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\" font-family=\"sans-serif\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

std::string text(double x, double y, const std::string& s, int size, const std::string& anchor = "middle",
                 const std::string& extra = "") {
  return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + std::to_string(size) + "\" text-anchor=\"" +
         anchor + "\"" + extra + ">" + escape(s) + "</text>\n";
}

// Linear map from a data interval onto a pixel interval.
struct Axis {
  double lo, hi, p0, p1;
  double operator()(double v) const { return p0 + (v - lo) / (hi - lo) * (p1 - p0); }
};

std::vector<double> ticks(double lo, double hi, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(lo + (hi - lo) * i / n);
  return t;
}

}  // namespace

void SliceSpec::validate(Eigen::Index dim) const {
  std::vector<bool> seen(static_cast<std::size_t>(dim), false);
  auto mark = [&](Eigen::Index d) {
    if (d < 0 || d >= dim) throw DimensionError("slice dimension " + std::to_string(d) + " out of range");
    if (seen[static_cast<std::size_t>(d)]) throw ConfigError("slice dimension " + std::to_string(d) + " used twice");
    seen[static_cast<std::size_t>(d)] = true;
  };
  mark(x_dim);
  mark(y_dim);
  for (const auto& [d, v] : fixed) {
    mark(d);
    if (!std::isfinite(v)) throw ConfigError("slice value must be finite");
  }
  if (static_cast<Eigen::Index>(fixed.size()) + 2 != dim)
    throw ConfigError("slice must fix every dimension except the two axes");
}

SliceSpec shepherd_slice(double field_size, double d_sheep, double d_target) {
  if (!(field_size > 0.0)) throw ConfigError("field size must be positive");
  SliceSpec s;
  s.x_dim = 1;
  s.y_dim = 3;
  s.fixed = {{0, d_sheep / field_size}, {2, d_target / field_size}};
  return s;
}

std::optional<geom::HPolytope> slice_polytope(const geom::HPolytope& p, const SliceSpec& spec) {
  spec.validate(p.box.dim());
  for (const auto& [d, v] : spec.fixed)
    if (v < p.box.lo[d] || v > p.box.hi[d]) return std::nullopt;
  geom::HPolytope out;
  out.box.lo = Eigen::Vector2d(p.box.lo[spec.x_dim], p.box.lo[spec.y_dim]);
  out.box.hi = Eigen::Vector2d(p.box.hi[spec.x_dim], p.box.hi[spec.y_dim]);
  constexpr double eps = 1e-12;
  for (const auto& h : p.halfspaces) {
    double b = h.offset;
    for (const auto& [d, v] : spec.fixed) b -= h.normal[d] * v;
    const Eigen::Vector2d a(h.normal[spec.x_dim], h.normal[spec.y_dim]);
    if (a.norm() <= eps * std::max(1.0, h.normal.norm())) {
      if (b < -1e-9) return std::nullopt;
      continue;
    }
    out.halfspaces.push_back({Eigen::VectorXd(a), b});
  }
  return out;
}

std::vector<Eigen::Vector2d> slice_polygon(const geom::HPolytope& p, const SliceSpec& spec) {
  const auto s = slice_polytope(p, spec);
  if (!s) return {};
  const auto v = geom::h_to_v(*s);
  if (!v || v->vertices.size() < 3) return {};
  std::vector<Eigen::Vector2d> pts;
  Eigen::Vector2d mid = Eigen::Vector2d::Zero();
  for (const auto& x : v->vertices) {
    pts.emplace_back(x[0], x[1]);
    mid += pts.back();
  }
  mid /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a.y() - mid.y(), a.x() - mid.x()) < std::atan2(b.y() - mid.y(), b.x() - mid.x());
  });
  double area = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  if (std::abs(area) <= 1e-14) return {};
  return pts;
}

std::string shading_colour(double s) {
  s = std::clamp(std::isfinite(s) ? s : 0.0, 0.0, 1.0);
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - s)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#ff%02x%02x", g, g);
  return buf;
}

Rendering render_polytopes(const rules::RuleSet& rs, const SliceSpec& spec, const RenderOptions& opt) {
  if (!opt.shading.empty() && opt.shading.size() != rs.size())
    throw DimensionError("shading has " + std::to_string(opt.shading.size()) + " entries for " +
                         std::to_string(rs.size()) + " rules");
  spec.validate(rs.state_box.dim());
  Rendering out;
  const double margin = 60.0;
  const Axis ax{rs.state_box.lo[spec.x_dim], rs.state_box.hi[spec.x_dim], margin, opt.width - margin / 2};
  const Axis ay{rs.state_box.lo[spec.y_dim], rs.state_box.hi[spec.y_dim], opt.height - margin, margin / 2 + 10};

  std::ostringstream body;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& r = rs.rules[i];
    auto poly = slice_polygon(r.region, spec);
    if (poly.empty()) continue;
    RenderedPolygon rp;
    rp.rule = i;
    rp.vertices = std::move(poly);
    rp.shading = std::clamp(opt.shading.empty() ? r.weakness_degree : opt.shading[i], 0.0, 1.0);
    rp.fill = shading_colour(rp.shading);
    rp.decision = r.decision;
    body << "<polygon data-rule=\"" << i << "\" points=\"";
    for (std::size_t k = 0; k < rp.vertices.size(); ++k)
      body << (k ? " " : "") << fmt(ax(rp.vertices[k].x())) << ',' << fmt(ay(rp.vertices[k].y()));
    body << "\" fill=\"" << rp.fill << "\" stroke=\"#555555\" stroke-width=\"0.6\"/>\n";
    out.polygons.push_back(std::move(rp));
  }
  for (const auto& rp : out.polygons) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& v : rp.vertices) c += v;
    c /= static_cast<double>(rp.vertices.size());
    const double cx = ax(c.x()), cy = ay(c.y());
    const auto d = static_cast<std::size_t>(rp.decision);
    if (d < opt.decision_arrows.size() && opt.decision_arrows[d].norm() > 0.0) {
      const Eigen::Vector2d u = opt.decision_arrows[d].normalized() * 9.0;
      body << "<line x1=\"" << fmt(cx - u.x()) << "\" y1=\"" << fmt(cy + u.y()) << "\" x2=\"" << fmt(cx + u.x())
           << "\" y2=\"" << fmt(cy - u.y()) << "\" stroke=\"#1a3c8c\" stroke-width=\"1.4\" marker-end=\"url(#arrow)\"/>\n";
    } else {
      body << text(cx, cy + 4, std::to_string(rp.decision), 10);
    }
  }

  std::ostringstream svg;
  svg << svg_open(opt.width, opt.height);
  svg << "<defs><marker id=\"arrow\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
         "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#1a3c8c\"/></marker></defs>\n";
  if (!opt.title.empty()) svg << text(opt.width / 2.0, 20, opt.title, 14);
  svg << body.str();
  svg << "<rect x=\"" << fmt(ax.p0) << "\" y=\"" << fmt(ay.p1) << "\" width=\"" << fmt(ax.p1 - ax.p0) << "\" height=\""
      << fmt(ay.p0 - ay.p1) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (double t : ticks(ax.lo, ax.hi, 4)) svg << text(ax(t), ay.p0 + 16, fmt(t), 10);
  for (double t : ticks(ay.lo, ay.hi, 4)) svg << text(ax.p0 - 6, ay(t) + 4, fmt(t), 10, "end");
  svg << text((ax.p0 + ax.p1) / 2, opt.height - 18, opt.x_label, 12);
  svg << text(16, (ay.p0 + ay.p1) / 2, opt.y_label, 12, "middle",
              " transform=\"rotate(-90 16 " + fmt((ay.p0 + ay.p1) / 2) + ")\"");
  if (out.polygons.empty()) svg << text((ax.p0 + ax.p1) / 2, (ay.p0 + ay.p1) / 2, "empty slice: no rule intersects it", 13);
  svg << "</svg>\n";
  out.svg = svg.str();
  return out;
}

CurvePlot plot_curves(const std::vector<CurveSeries>& series, const PlotOptions& opt) {
  CurvePlot plot;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("series '" + s.name + "' has mismatched x and y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  const double pad = y1 - y0 > 0 ? 0.05 * (y1 - y0) : 0.5;
  y0 -= pad;
  y1 += pad;
  plot.x_min = x0, plot.x_max = x1, plot.y_min = y0, plot.y_max = y1;

  const double left = 70, right = 150, top = 36, bottom = 50;
  const Axis ax{x0, x1, left, opt.width - right};
  const Axis ay{y0, y1, opt.height - bottom, top};
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  std::ostringstream svg;
  svg << svg_open(opt.width, opt.height);
  if (!opt.title.empty()) svg << text(opt.width / 2.0, 20, opt.title, 14);
  svg << "<rect x=\"" << fmt(ax.p0) << "\" y=\"" << fmt(ay.p1) << "\" width=\"" << fmt(ax.p1 - ax.p0) << "\" height=\""
      << fmt(ay.p0 - ay.p1) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (double t : ticks(x0, x1, 5)) svg << text(ax(t), ay.p0 + 16, fmt(t), 10);
  for (double t : ticks(y0, y1, 5)) svg << text(ax.p0 - 6, ay(t) + 4, fmt(t), 10, "end");
  svg << text((ax.p0 + ax.p1) / 2, opt.height - 12, opt.x_label, 12);
  svg << text(16, (ay.p0 + ay.p1) / 2, opt.y_label, 12, "middle",
              " transform=\"rotate(-90 16 " + fmt((ay.p0 + ay.p1) / 2) + ")\"");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::string colour = palette[k % (sizeof palette / sizeof *palette)];
    svg << "<polyline data-series=\"" << escape(series[k].name) << "\" fill=\"none\" stroke=\"" << colour
        << "\" stroke-width=\"1.3\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].x[i]) || !std::isfinite(series[k].y[i])) continue;
      svg << (first ? "" : " ") << fmt(ax(series[k].x[i])) << ',' << fmt(ay(series[k].y[i]));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << fmt(ax.p1 + 10) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(ax.p1 + 28) << "\" y2=\""
        << fmt(ly - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    svg << text(ax.p1 + 32, ly, series[k].name, 11, "start");
  }
  svg << "</svg>\n";
  plot.svg = svg.str();
  return plot;
}

std::vector<CurveSeries> curves_from_csv(const std::filesystem::path& path, const std::string& x_col,
                                         const std::string& y_col, const std::string& group_col) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  std::vector<std::string> header;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') {
      header = split(line);
      break;
    }
  auto col = [&](const std::string& name) -> long {
    if (name.empty()) return -1;
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(path.string(), "no column '" + name + "'");
    return it - header.begin();
  };
  const long xi = col(x_col), yi = col(y_col), gi = col(group_col);
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, long>>> acc;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    const auto need = static_cast<std::size_t>(std::max({xi, yi, gi}));
    if (cells.size() <= need) continue;
    auto number = [](const std::string& c) -> std::optional<double> {
      try {
        std::size_t used = 0;
        const double v = std::stod(c, &used);
        if (used == c.size() && std::isfinite(v)) return v;
      } catch (const std::exception&) {
      }
      return std::nullopt;
    };
    const auto x = number(cells[static_cast<std::size_t>(xi)]), y = number(cells[static_cast<std::size_t>(yi)]);
    if (!x || !y) continue;
    const std::string g = gi < 0 ? y_col : cells[static_cast<std::size_t>(gi)];
    if (!acc.count(g)) order.push_back(g);
    auto& slot = acc[g][*x];
    slot.first += *y;
    ++slot.second;
  }
  std::vector<CurveSeries> out;
  for (const auto& g : order) {
    CurveSeries s;
    s.name = g;
    for (const auto& [x, sum] : acc[g]) {
      s.x.push_back(x);
      s.y.push_back(sum.first / static_cast<double>(sum.second));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace ikf::app
