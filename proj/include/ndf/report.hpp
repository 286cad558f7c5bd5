#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ndf/harness.hpp"

namespace ndf {

/// Groups curve rows by strategy label and averages the runs of each.
inline std::map<std::string, AccuracyCurve> mean_curves_by_strategy(const std::vector<CurveRow>& rows) {
  std::map<std::string, std::map<std::size_t, AccuracyCurve>> grouped;
  for (const auto& r : rows) grouped[r.strategy][r.run_id].push_back(r.point);
  std::map<std::string, AccuracyCurve> out;
  for (auto& [name, runs] : grouped) {
    std::vector<AccuracyCurve> curves;
    for (auto& [id, c] : runs) curves.push_back(std::move(c));
    out[name] = average_runs(curves);
  }
  return out;
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

/// Line chart of test accuracy against effective training instances.
inline void write_svg_chart(std::ostream& out, const std::map<std::string, AccuracyCurve>& curves,
                            const std::string& title = "Test accuracy vs. effective training instances") {
  constexpr double kWidth = 720, kHeight = 440;
  constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
  constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                               "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  double x_max = 1.0, y_min = 1.0, y_max = 0.0;
  for (const auto& [name, c] : curves) {
    for (const auto& p : c) {
      x_max = std::max(x_max, static_cast<double>(p.effective_instances));
      y_min = std::min(y_min, p.test_accuracy);
      y_max = std::max(y_max, p.test_accuracy);
    }
  }
  if (y_min >= y_max) {
    y_min = 0.0;
    y_max = 1.0;
  }
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + plot_w * x / x_max; };
  auto sy = [&](double y) { return kTop + plot_h * (1.0 - (y - y_min) / (y_max - y_min)); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_max * i / 4.0;
    const double yv = y_min + (y_max - y_min) * i / 4.0;
    out << "<text x=\"" << sx(xv) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
        << fmt_real(xv) << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << fmt_real(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">effective training instances</text>\n";
  out << "<text transform=\"translate(16," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">test accuracy</text>\n";

  std::size_t k = 0;
  for (const auto& [name, c] : curves) {
    const char* color = kColors[k % kColors.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : c) out << sx(static_cast<double>(p.effective_instances)) << ',' << sy(p.test_accuracy) << ' ';
    out << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k);
    out << "<line x1=\"" << kLeft + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + plot_w + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + plot_w + 38 << "\" y=\"" << ly + 4 << "\">" << xml_escape(name) << "</text>\n";
    ++k;
  }
  out << "</svg>\n";
}

}  // namespace ndf
