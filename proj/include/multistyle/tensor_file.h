// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// TensorFile: little-endian binary array container.
//
//   offset  size        field
//   0       4           magic "MSST"
//   4       4           version (u32, currently 1)
//   8       1           dtype code (1 = f32, 2 = f64)
//   9       1           ndim (<= 8)
//   10      8 * ndim    dims (u64 each)
//   ...     w * prod    payload, row-major (w = 4 or 8)

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "multistyle/matrix.h"

namespace multistyle {

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

inline constexpr std::uint32_t kTensorFileVersion = 1;
inline constexpr std::size_t kMaxTensorDims = 8;

struct NdArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
  DType dtype = DType::kFloat32;

  std::uint64_t element_count() const;
  static NdArray from_matrix(const Matrix& m, DType dtype = DType::kFloat32);
  static NdArray from_vector(const std::vector<double>& v, DType dtype = DType::kFloat32);
  // 2-D arrays map directly; 1-D arrays become a single row.
  Matrix to_matrix() const;
};

class TensorFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejects non-finite values (reporting the offending index) and more than
// kMaxTensorDims dimensions. f32 files store values rounded to float.
void write_tensor(const std::filesystem::path& path, const NdArray& array);
NdArray read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const NdArray& array);
NdArray decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

}  // namespace multistyle
