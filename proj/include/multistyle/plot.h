// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal SVG figure writers for attention matrices, pitch contours and loss
// curves. Output is static and self-contained.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "multistyle/matrix.h"

namespace multistyle {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

// Cell (r, c) shaded by value over [0, max]. Row and column labels are
// optional; missing labels are left blank.
void write_heatmap_svg(const std::filesystem::path& path, const Matrix& values, const PlotLabels& labels,
                       const std::vector<std::string>& row_labels = {},
                       const std::vector<std::string>& col_labels = {});

// Polylines sharing one pair of axes. Points with y <= gap_below break the
// line, so unvoiced pitch frames render as gaps.
void write_line_plot_svg(const std::filesystem::path& path, const std::vector<Series>& series,
                         const PlotLabels& labels, double gap_below = -1e300);

// Escapes text for inclusion in SVG/XML.
std::string xml_escape(const std::string& s);

}  // namespace multistyle
