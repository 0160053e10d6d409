#include "uavfl/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace uavfl::harness {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string line_plot_svg(const std::vector<Series>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel) {
  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
         "viewBox=\"0 0 640 480\">\n";
  out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + title + "</text>\n";

  // axes and ticks
  out += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" + fmt(pw) +
         "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    out += "<line x1=\"" + fmt(sx(fx)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(sx(fx)) +
           "\" y2=\"" + fmt(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(sx(fx)) + "\" y=\"" + fmt(mt + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fx) +
           "</text>\n";
    out += "<line x1=\"" + fmt(ml - 5) + "\" y1=\"" + fmt(sy(fy)) + "\" x2=\"" + fmt(ml) +
           "\" y2=\"" + fmt(sy(fy)) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(ml - 9) + "\" y=\"" + fmt(sy(fy) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fy) +
           "</text>\n";
  }
  out += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(height - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xlabel +
         "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 " + fmt(mt + ph / 2) + ")\">" + ylabel + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % 8];
    std::string pts;
    for (const auto& [x, y] : series[si].points)
      pts += fmt(sx(x)) + "," + fmt(sy(y)) + " ";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    const double ly = mt + 16 + 16 * static_cast<double>(si);
    out += "<line x1=\"" + fmt(ml + 8) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(ml + 28) +
           "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    out += "<text x=\"" + fmt(ml + 33) + "\" y=\"" + fmt(ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + series[si].name + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace uavfl::harness
