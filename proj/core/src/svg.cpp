#include "pointcam/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pointcam::pipeline {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 56.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string score_histogram_svg(const std::vector<metrics::ScoreRecord>& dump,
                                int bins) {
  if (dump.empty()) throw std::invalid_argument("histogram of an empty dump");
  if (bins < 1) throw std::invalid_argument("bin count must be positive");

  double lo = dump[0].score;
  double hi = dump[0].score;
  std::size_t known_total = 0;
  std::size_t unknown_total = 0;
  for (const auto& r : dump) {
    if (!std::isfinite(r.score)) {
      throw std::invalid_argument("non-finite score for unit '" + r.unit_id + "'");
    }
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
    (r.is_unknown ? unknown_total : known_total) += 1;
  }
  if (hi == lo) hi = lo + 1.0;  // all-equal scores: one bin in a unit span

  std::vector<std::size_t> known(bins, 0);
  std::vector<std::size_t> unknown(bins, 0);
  for (const auto& r : dump) {
    int b = static_cast<int>((r.score - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    (r.is_unknown ? unknown : known)[b] += 1;
  }

  // Bars show per-class fractions so differently sized classes compare.
  double peak = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (known_total > 0) {
      peak = std::max(peak, static_cast<double>(known[b]) / known_total);
    }
    if (unknown_total > 0) {
      peak = std::max(peak, static_cast<double>(unknown[b]) / unknown_total);
    }
  }
  if (peak == 0.0) peak = 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const double bar_w = plot_w / bins;
  auto x_of = [&](int b) { return kMarginLeft + b * bar_w; };
  auto h_of = [&](std::size_t count, std::size_t total) {
    return total == 0 ? 0.0 : plot_h * (static_cast<double>(count) / total) / peak;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2
      << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">Unknown-score distribution</text>\n";

  for (int b = 0; b < bins; ++b) {
    const double hk = h_of(known[b], known_total);
    if (hk > 0.0) {
      out << "<rect x=\"" << num(x_of(b)) << "\" y=\""
          << num(kMarginTop + plot_h - hk) << "\" width=\"" << num(bar_w)
          << "\" height=\"" << num(hk)
          << "\" fill=\"#3366cc\" fill-opacity=\"0.55\"/>\n";
    }
    const double hu = h_of(unknown[b], unknown_total);
    if (hu > 0.0) {
      out << "<rect x=\"" << num(x_of(b)) << "\" y=\""
          << num(kMarginTop + plot_h - hu) << "\" width=\"" << num(bar_w)
          << "\" height=\"" << num(hu)
          << "\" fill=\"#cc3333\" fill-opacity=\"0.55\"/>\n";
    }
  }

  // Axes and labels.
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << num(lo) << "</text>\n";
  out << "<text x=\"" << kMarginLeft + plot_w << "\" y=\"" << kHeight - 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << num(hi) << "</text>\n";
  out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << kMarginTop + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << num(peak) << "</text>\n";
  out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << kMarginTop + plot_h
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">0</text>\n";

  // Legend with per-class counts.
  out << "<rect x=\"" << kMarginLeft + 10 << "\" y=\"" << kMarginTop + 8
      << "\" width=\"14\" height=\"14\" fill=\"#3366cc\" fill-opacity=\"0.55\"/>\n";
  out << "<text x=\"" << kMarginLeft + 30 << "\" y=\"" << kMarginTop + 20
      << "\" font-family=\"sans-serif\" font-size=\"12\">known (" << known_total
      << ")</text>\n";
  out << "<rect x=\"" << kMarginLeft + 130 << "\" y=\"" << kMarginTop + 8
      << "\" width=\"14\" height=\"14\" fill=\"#cc3333\" fill-opacity=\"0.55\"/>\n";
  out << "<text x=\"" << kMarginLeft + 150 << "\" y=\"" << kMarginTop + 20
      << "\" font-family=\"sans-serif\" font-size=\"12\">unknown (" << unknown_total
      << ")</text>\n";
  out << "</svg>\n";
  return out.str();
}

void write_score_histogram(const std::string& path,
                           const std::vector<metrics::ScoreRecord>& dump, int bins) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << score_histogram_svg(dump, bins);
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace pointcam::pipeline
