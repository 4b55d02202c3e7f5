// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/plot.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace multistyle {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void write_file(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void header(std::ostringstream& os, double w, double h, const PlotLabels& labels) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(labels.title) << "</text>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 6 << "\" text-anchor=\"middle\">" << xml_escape(labels.x_label)
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << h / 2
     << ")\">" << xml_escape(labels.y_label) << "</text>\n";
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

void write_heatmap_svg(const fs::path& path, const Matrix& values, const PlotLabels& labels,
                       const std::vector<std::string>& row_labels, const std::vector<std::string>& col_labels) {
  if (values.rows == 0 || values.cols == 0) throw std::invalid_argument("heatmap: empty matrix");
  const double cell = std::clamp(480.0 / static_cast<double>(std::max(values.rows, values.cols)), 6.0, 40.0);
  const double left = 110, top = 34, bottom = 50, right = 20;
  const double w = left + cell * values.cols + right, h = top + cell * values.rows + bottom;
  double hi = 0;
  for (double v : values.data) hi = std::max(hi, v);
  if (hi <= 0) hi = 1;

  std::ostringstream os;
  header(os, w, h, labels);
  for (std::size_t r = 0; r < values.rows; ++r) {
    for (std::size_t c = 0; c < values.cols; ++c) {
      const double t = std::clamp(values(r, c) / hi, 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255 * (1 - t)));
      os << "<rect x=\"" << left + cell * c << "\" y=\"" << top + cell * r << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"><title>"
         << fmt(values(r, c)) << "</title></rect>\n";
    }
    if (r < row_labels.size())
      os << "<text x=\"" << left - 4 << "\" y=\"" << top + cell * (r + 0.5) + 4 << "\" text-anchor=\"end\">"
         << xml_escape(row_labels[r]) << "</text>\n";
  }
  for (std::size_t c = 0; c < std::min(values.cols, col_labels.size()); ++c)
    os << "<text x=\"" << left + cell * (c + 0.5) << "\" y=\"" << top + cell * values.rows + 14
       << "\" text-anchor=\"middle\">" << xml_escape(col_labels[c]) << "</text>\n";
  os << "</svg>\n";
  write_file(path, os.str());
}

void write_line_plot_svg(const fs::path& path, const std::vector<Series>& series, const PlotLabels& labels,
                         double gap_below) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("line plot: x/y length mismatch in " + s.name);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.y[i] <= gap_below || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  }
  if (x0 > x1) throw std::invalid_argument("line plot: no drawable points");
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double w = 720, h = 400, left = 70, right = 140, top = 34, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  header(os, w, h, labels);
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4, xv = x0 + (x1 - x0) * k / 4;
    os << "<text x=\"" << left - 4 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv)
       << "</text>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 14 << "\" text-anchor=\"middle\">" << fmt(xv)
       << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    auto flush = [&] {
      if (!points.empty())
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
           << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.y[i] <= gap_below || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      points += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    }
    flush();
    const double ly = top + 14 + 16.0 * k;
    os << "<line x1=\"" << w - right + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << w - right + 30 << "\" y2=\""
       << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << w - right + 34 << "\" y=\"" << ly << "\">" << xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  write_file(path, os.str());
}

}  // namespace multistyle
