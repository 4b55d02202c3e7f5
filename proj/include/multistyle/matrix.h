// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace multistyle {

// Row-major dense matrix of doubles used for features and model outputs.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw std::invalid_argument("Matrix: value count does not match shape");
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  bool empty() const { return rows == 0; }

  Matrix slice_rows(std::size_t start, std::size_t count) const {
    if (start + count > rows) throw std::out_of_range("Matrix::slice_rows");
    return Matrix(count, cols,
                  std::vector<double>(data.begin() + static_cast<long>(start * cols),
                                      data.begin() + static_cast<long>((start + count) * cols)));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace multistyle
