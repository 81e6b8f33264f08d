#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sasmate {

enum class SeriesKind { Curve, Points, Residuals };

inline std::string to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::Curve: return "curve";
    case SeriesKind::Points: return "points";
    case SeriesKind::Residuals: return "residuals";
  }
  return "curve";
}

inline SeriesKind series_kind_from_string(const std::string& s) {
  if (s == "curve") return SeriesKind::Curve;
  if (s == "points") return SeriesKind::Points;
  if (s == "residuals") return SeriesKind::Residuals;
  throw std::invalid_argument("unknown series kind " + s);
}

struct PlotSeries {
  std::string label;
  SeriesKind kind = SeriesKind::Curve;
  std::vector<double> x;
  std::vector<double> y;
  std::optional<std::vector<double>> yerr;
};

/// Structured plot document; residual series are drawn on a linear y axis.
struct PlotArtifact {
  std::string plot_id;
  std::string title;
  std::string x_label = "q (1/Å)";
  std::string y_label = "I(q) (1/cm)";
  bool x_log = true;
  bool y_log = true;
  std::vector<PlotSeries> series;

  bool has_residuals() const {
    return std::any_of(series.begin(), series.end(),
                       [](const PlotSeries& s) { return s.kind == SeriesKind::Residuals; });
  }

  void validate() const {
    if (series.empty()) throw std::invalid_argument("plot has no series");
    for (const auto& s : series) {
      if (s.x.size() != s.y.size()) throw std::invalid_argument("series " + s.label + ": x/y length mismatch");
      if (s.yerr && s.yerr->size() != s.y.size())
        throw std::invalid_argument("series " + s.label + ": yerr length mismatch");
      for (std::size_t i = 1; i < s.x.size(); ++i)
        if (!(s.x[i] > s.x[i - 1])) throw std::invalid_argument("series " + s.label + ": x not ascending");
    }
  }
};

inline void to_json(nlohmann::json& j, const PlotSeries& s) {
  j = nlohmann::json{{"label", s.label}, {"kind", to_string(s.kind)}, {"x", s.x}, {"y", s.y}};
  if (s.yerr) j["yerr"] = *s.yerr;
}

inline void from_json(const nlohmann::json& j, PlotSeries& s) {
  s.label = j.at("label").get<std::string>();
  s.kind = series_kind_from_string(j.at("kind").get<std::string>());
  s.x = j.at("x").get<std::vector<double>>();
  s.y = j.at("y").get<std::vector<double>>();
  if (j.contains("yerr")) s.yerr = j.at("yerr").get<std::vector<double>>();
}

inline void to_json(nlohmann::json& j, const PlotArtifact& p) {
  j = nlohmann::json{{"plot_id", p.plot_id}, {"title", p.title}, {"x_label", p.x_label},
                     {"y_label", p.y_label}, {"x_log", p.x_log}, {"y_log", p.y_log},
                     {"series", p.series}};
}

inline void from_json(const nlohmann::json& j, PlotArtifact& p) {
  p.plot_id = j.at("plot_id").get<std::string>();
  p.title = j.value("title", "");
  p.x_label = j.value("x_label", p.x_label);
  p.y_label = j.value("y_label", p.y_label);
  p.x_log = j.value("x_log", true);
  p.y_log = j.value("y_log", true);
  p.series = j.at("series").get<std::vector<PlotSeries>>();
}

namespace svgdetail {

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double map(double v, double px0, double px1) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return px0 + t * (px1 - px0);
  }
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline Axis fit_axis(const std::vector<const std::vector<double>*>& values, bool log) {
  Axis ax;
  ax.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* v : values)
    for (double x : *v) {
      if (!std::isfinite(x) || (log && x <= 0.0)) continue;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (!std::isfinite(lo)) lo = log ? 1e-3 : -1.0, hi = log ? 1.0 : 1.0;
  if (lo == hi) {
    lo = log ? lo / 2 : lo - 1;
    hi = log ? hi * 2 : hi + 1;
  }
  ax.lo = lo;
  ax.hi = hi;
  return ax;
}

}  // namespace svgdetail

/// Minimal SVG: log-log panel for curves/points plus a linear residual strip.
inline std::string render_svg(const PlotArtifact& plot) {
  using namespace svgdetail;
  const double width = 640, left = 70, right = 620, top = 40;
  const bool strip = plot.has_residuals();
  const double main_bottom = strip ? 330 : 420;
  const double height = strip ? 520 : 480;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::vector<const std::vector<double>*> xs, ys, rx, ry;
  for (const auto& s : plot.series) {
    if (s.kind == SeriesKind::Residuals) {
      rx.push_back(&s.x);
      ry.push_back(&s.y);
    } else {
      xs.push_back(&s.x);
      ys.push_back(&s.y);
    }
  }
  for (auto* v : rx) xs.push_back(v);
  const Axis xa = fit_axis(xs, plot.x_log);
  const Axis ya = fit_axis(ys, plot.y_log);

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                    num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(plot.title) + "</text>\n";
  auto frame = [&](double y0, double y1) {
    svg += "<rect x=\"" + num(left) + "\" y=\"" + num(y0) + "\" width=\"" + num(right - left) +
           "\" height=\"" + num(y1 - y0) + "\" fill=\"none\" stroke=\"black\"/>\n";
  };
  frame(top, main_bottom);
  svg += "<text x=\"" + num(left) + "\" y=\"" + num(main_bottom + 16) + "\" font-size=\"11\">" + tick(xa.lo) + "</text>\n";
  svg += "<text x=\"" + num(right) + "\" y=\"" + num(main_bottom + 16) + "\" font-size=\"11\" text-anchor=\"end\">" + tick(xa.hi) + "</text>\n";
  svg += "<text x=\"" + num(left - 4) + "\" y=\"" + num(top + 10) + "\" font-size=\"11\" text-anchor=\"end\">" + tick(ya.hi) + "</text>\n";
  svg += "<text x=\"" + num(left - 4) + "\" y=\"" + num(main_bottom) + "\" font-size=\"11\" text-anchor=\"end\">" + tick(ya.lo) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num((top + main_bottom) / 2) + "\" font-size=\"12\" transform=\"rotate(-90 16 " +
         num((top + main_bottom) / 2) + ")\" text-anchor=\"middle\">" + escape(plot.y_label) + "</text>\n";

  std::size_t color = 0;
  auto draw = [&](const PlotSeries& s, const Axis& y_axis, double y0, double y1) {
    const std::string c = colors[color++ % 5];
    if (s.kind == SeriesKind::Curve) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if ((xa.log && s.x[i] <= 0) || (y_axis.log && s.y[i] <= 0)) continue;
        pts += num(xa.map(s.x[i], left, right)) + "," + num(y_axis.map(s.y[i], y1, y0)) + " ";
      }
      svg += "<polyline fill=\"none\" stroke=\"" + c + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if ((xa.log && s.x[i] <= 0) || (y_axis.log && s.y[i] <= 0)) continue;
        const double px = xa.map(s.x[i], left, right);
        const double py = std::clamp(y_axis.map(s.y[i], y1, y0), y0, y1);
        svg += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"2\" fill=\"" + c + "\"/>\n";
      }
    }
    svg += "<text x=\"" + num(right - 4) + "\" y=\"" + num(y0 + 14 * color) + "\" font-size=\"11\" text-anchor=\"end\" fill=\"" +
           c + "\">" + escape(s.label) + "</text>\n";
  };
  for (const auto& s : plot.series)
    if (s.kind != SeriesKind::Residuals) draw(s, ya, top, main_bottom);

  if (strip) {
    const double r0 = main_bottom + 40, r1 = height - 40;
    frame(r0, r1);
    const Axis ra = fit_axis(ry, false);
    const double zero = ra.map(0.0, r1, r0);
    if (zero > r0 && zero < r1)
      svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(zero) + "\" x2=\"" + num(right) + "\" y2=\"" +
             num(zero) + "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (const auto& s : plot.series)
      if (s.kind == SeriesKind::Residuals) draw(s, ra, r0, r1);
  }
  svg += "<text x=\"" + num(width / 2) + "\" y=\"" + num(height - 8) + "\" font-size=\"12\" text-anchor=\"middle\">" +
         escape(plot.x_label) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace sasmate
