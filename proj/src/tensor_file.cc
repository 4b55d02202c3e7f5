// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/tensor_file.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace multistyle {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'S', 'T'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos, const std::string& origin) {
  if (pos + sizeof(T) > in.size()) throw TensorFileError(origin + ": truncated file");
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::string index_string(std::uint64_t flat, const std::vector<std::uint64_t>& dims) {
  std::vector<std::uint64_t> idx(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    idx[i] = flat % dims[i];
    flat /= dims[i];
  }
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << idx[i];
  os << "]";
  return os.str();
}

}  // namespace

std::uint64_t NdArray::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

NdArray NdArray::from_matrix(const Matrix& m, DType dtype) {
  return NdArray{{m.rows, m.cols}, m.data, dtype};
}

NdArray NdArray::from_vector(const std::vector<double>& v, DType dtype) {
  return NdArray{{v.size()}, v, dtype};
}

Matrix NdArray::to_matrix() const {
  if (dims.size() == 2) return Matrix(dims[0], dims[1], values);
  if (dims.size() == 1) return Matrix(1, dims[0], values);
  throw TensorFileError("expected a 1-D or 2-D array, got " + std::to_string(dims.size()) + "-D");
}

std::vector<std::uint8_t> encode_tensor(const NdArray& array) {
  if (array.dims.size() > kMaxTensorDims)
    throw TensorFileError("array has " + std::to_string(array.dims.size()) +
                          " dimensions; at most 8 are supported");
  if (array.element_count() != array.values.size())
    throw TensorFileError("array value count does not match its dims");
  for (std::size_t i = 0; i < array.values.size(); ++i)
    if (!std::isfinite(array.values[i]))
      throw TensorFileError("non-finite value at index " + index_string(i, array.dims));

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kTensorFileVersion);
  out.push_back(static_cast<std::uint8_t>(array.dtype));
  out.push_back(static_cast<std::uint8_t>(array.dims.size()));
  for (auto d : array.dims) put_le<std::uint64_t>(out, d);
  if (array.dtype == DType::kFloat32) {
    for (double v : array.values) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) throw TensorFileError("value overflows float32: " + std::to_string(v));
      put_le<float>(out, f);
    }
  } else if (array.dtype == DType::kFloat64) {
    for (double v : array.values) put_le<double>(out, v);
  } else {
    throw TensorFileError("unknown dtype code");
  }
  return out;
}

NdArray decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw TensorFileError(origin + ": bad magic");
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos, origin);
  if (version != kTensorFileVersion)
    throw TensorFileError(origin + ": unsupported version " + std::to_string(version));
  NdArray a;
  const std::uint8_t code = bytes[pos++];
  if (code != 1 && code != 2) throw TensorFileError(origin + ": unknown dtype code " + std::to_string(code));
  a.dtype = static_cast<DType>(code);
  const std::uint8_t ndim = bytes[pos++];
  if (ndim > kMaxTensorDims) throw TensorFileError(origin + ": too many dimensions");
  for (std::uint8_t i = 0; i < ndim; ++i) a.dims.push_back(get_le<std::uint64_t>(bytes, pos, origin));
  const std::uint64_t n = a.element_count();
  const std::size_t width = a.dtype == DType::kFloat32 ? 4 : 8;
  if (bytes.size() - pos != n * width)
    throw TensorFileError(origin + ": payload is " + std::to_string(bytes.size() - pos) +
                          " bytes, expected " + std::to_string(n * width));
  a.values.resize(n);
  for (std::uint64_t i = 0; i < n; ++i)
    a.values[i] = a.dtype == DType::kFloat32 ? static_cast<double>(get_le<float>(bytes, pos, origin))
                                             : get_le<double>(bytes, pos, origin);
  return a;
}

void write_tensor(const std::filesystem::path& path, const NdArray& array) {
  const auto bytes = encode_tensor(array);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw TensorFileError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw TensorFileError("write failed: " + path.string());
}

NdArray read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TensorFileError("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes, path.string());
}

}  // namespace multistyle
