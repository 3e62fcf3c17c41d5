#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "modelyap/bit_block.hpp"
#include "modelyap/mode.hpp"

namespace modelyap {

struct PlotSeries {
  std::string label;
  ModeId mode = ModeId::ECB;
  std::vector<double> normalized;  // lambda(t) / lambda_m, t = 1..T
};

inline const char* mode_color(ModeId m) {
  switch (m) {
    case ModeId::ECB: return "#1f77b4";
    case ModeId::CBC: return "#d62728";
    case ModeId::OFB: return "#2ca02c";
    case ModeId::CFB: return "#9467bd";
    case ModeId::CTR: return "#ff7f0e";
    case ModeId::PCBC: return "#8c564b";
  }
  return "#000000";
}

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
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

}  // namespace detail

/// Normalized exponent against t on a fixed 800x500 canvas, y in [0, 1].
inline std::string render_svg(std::span<const PlotSeries> series, const std::string& title = "") {
  if (series.empty()) throw std::invalid_argument("nothing to plot");
  const std::size_t T = series.front().normalized.size();
  for (const auto& s : series) {
    if (s.normalized.size() != T) {
      throw DimensionError("series '" + s.label + "' has " + std::to_string(s.normalized.size()) +
                           " steps, expected " + std::to_string(T));
    }
  }
  if (T < 2) throw DimensionError("need at least two steps to plot");

  constexpr double width = 800, height = 500;
  constexpr double left = 70, right = 180, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  const auto x_of = [&](std::size_t t) {
    return left + pw * static_cast<double>(t - 1) / static_cast<double>(T - 1);
  };
  const auto y_of = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + detail::fmt2(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\">" +
           detail::xml_escape(title) + "</text>\n";
  }
  svg += "<rect x=\"" + detail::fmt2(left) + "\" y=\"" + detail::fmt2(top) + "\" width=\"" +
         detail::fmt2(pw) + "\" height=\"" + detail::fmt2(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = k / 5.0;
    const std::string y = detail::fmt2(y_of(v));
    svg += "<line x1=\"" + detail::fmt2(left - 5) + "\" y1=\"" + y + "\" x2=\"" +
           detail::fmt2(left) + "\" y2=\"" + y + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::fmt2(left - 8) + "\" y=\"" + detail::fmt2(y_of(v) + 4) +
           "\" text-anchor=\"end\">" + detail::fmt2(v) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const std::size_t t = 1 + (T - 1) * static_cast<std::size_t>(k) / 4;
    const std::string x = detail::fmt2(x_of(t));
    svg += "<line x1=\"" + x + "\" y1=\"" + detail::fmt2(top + ph) + "\" x2=\"" + x + "\" y2=\"" +
           detail::fmt2(top + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + x + "\" y=\"" + detail::fmt2(top + ph + 20) +
           "\" text-anchor=\"middle\">" + std::to_string(t) + "</text>\n";
  }
  svg += "<text x=\"" + detail::fmt2(left + pw / 2) + "\" y=\"" + detail::fmt2(height - 15) +
         "\" text-anchor=\"middle\">t</text>\n";
  svg += "<text x=\"20\" y=\"" + detail::fmt2(top + ph / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + detail::fmt2(top + ph / 2) +
         ")\">lambda / lambda_m</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string pts;
    for (std::size_t t = 1; t <= T; ++t) {
      if (t > 1) pts += ' ';
      pts += detail::fmt2(x_of(t)) + "," + detail::fmt2(y_of(s.normalized[t - 1]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(mode_color(s.mode)) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    svg += "<line x1=\"" + detail::fmt2(width - right + 15) + "\" y1=\"" + detail::fmt2(ly) +
           "\" x2=\"" + detail::fmt2(width - right + 40) + "\" y2=\"" + detail::fmt2(ly) +
           "\" stroke=\"" + mode_color(s.mode) + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + detail::fmt2(width - right + 46) + "\" y=\"" + detail::fmt2(ly + 4) +
           "\">" + detail::xml_escape(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace modelyap
