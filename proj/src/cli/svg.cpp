#include <algorithm>
#include <cmath>
#include <fstream>

#include "pwapass/cli.hpp"

namespace pwapass::cli {

void write_svg_chart(const std::string& path, const std::vector<double>& series,
                     const std::string& title) {
  const double width = 720, height = 420;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double lo = 0.0, hi = 0.0;
  for (double v : series) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-300) {
    hi = lo + 1.0;
  }
  const double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto xpix = [&](std::size_t k) {
    return ml + pw * (series.size() > 1
                          ? static_cast<double>(k) / static_cast<double>(series.size() - 1)
                          : 0.5);
  };
  auto ypix = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_svg_chart: cannot open " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
     << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  // zero line
  if (lo < 0.0 && hi > 0.0) {
    os << "<line x1=\"" << ml << "\" y1=\"" << ypix(0.0) << "\" x2=\"" << ml + pw
       << "\" y2=\"" << ypix(0.0) << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << ypix(0.0) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n";
  }
  // y extremes
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", hi);
  os << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 4
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
     << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", lo);
  os << "<text x=\"" << ml - 8 << "\" y=\"" << mt + ph + 4
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
     << "</text>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">k</text>\n";

  os << "<polyline fill=\"none\" stroke=\"#1f6fb5\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < series.size(); ++k)
    os << xpix(k) << ',' << ypix(series[k]) << ' ';
  os << "\"/>\n</svg>\n";
}

}  // namespace pwapass::cli
