// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/checkpoint.h"

#include <fstream>
#include <set>

#include "multistyle/tensor_file.h"

namespace multistyle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIndex = "checkpoint.json";

NdArray as_array(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  return NdArray{{rows, cols}, values, DType::kFloat64};
}

std::vector<double> read_values(const fs::path& p, std::size_t expected, const std::string& name) {
  NdArray a = read_tensor(p);
  if (a.values.size() != expected)
    throw CheckpointError("checkpoint entry " + name + " has " + std::to_string(a.values.size()) +
                          " values, expected " + std::to_string(expected));
  return std::move(a.values);
}

}  // namespace

bool is_checkpoint(const fs::path& dir) { return fs::exists(dir / kIndex); }

void save_checkpoint(const fs::path& dir, const ParamStore& store, const json& meta,
                     const AdamState* adam) {
  // Write into a sibling directory and swap, so a crash never leaves a
  // half-written checkpoint behind the final name.
  const fs::path tmp = dir.string() + ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "params");
  fs::create_directories(tmp / "buffers");
  json index = {{"version", 1}, {"meta", meta}};
  json params = json::array();
  for (const auto& p : store.params()) {
    write_tensor(tmp / "params" / (p->name() + ".mst"), as_array(p->values(), p->rows(), p->cols()));
    params.push_back({{"name", p->name()},
                      {"shape", {p->rows(), p->cols()}},
                      {"trainable", p->trainable()}});
  }
  index["params"] = params;
  json buffers = json::array();
  for (const auto& b : store.buffers()) {
    write_tensor(tmp / "buffers" / (b->name + ".mst"), as_array(b->values, 1, b->values.size()));
    buffers.push_back({{"name", b->name}, {"size", b->values.size()}});
  }
  index["buffers"] = buffers;
  if (adam) {
    fs::create_directories(tmp / "adam");
    json moments = json::array();
    for (const auto& [name, m] : adam->m) {
      write_tensor(tmp / "adam" / (name + ".m.mst"), as_array(m, 1, m.size()));
      write_tensor(tmp / "adam" / (name + ".v.mst"), as_array(adam->v.at(name), 1, m.size()));
      moments.push_back({{"name", name}, {"size", m.size()}});
    }
    index["adam"] = {{"step", adam->step}, {"moments", moments}};
  }
  {
    std::ofstream out(tmp / kIndex, std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint index in " + tmp.string());
    out << index.dump(2) << "\n";
  }
  fs::remove_all(dir);
  if (!dir.parent_path().empty()) fs::create_directories(dir.parent_path());
  fs::rename(tmp, dir);
}

json read_checkpoint_meta(const fs::path& dir) {
  std::ifstream in(dir / kIndex);
  if (!in) throw CheckpointError("not a checkpoint directory: " + dir.string());
  try {
    return json::parse(in).at("meta");
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint index in " + dir.string() + ": " + e.what());
  }
}

json load_checkpoint(const fs::path& dir, ParamStore& store, AdamState* adam) {
  std::ifstream in(dir / kIndex);
  if (!in) throw CheckpointError("not a checkpoint directory: " + dir.string());
  json index;
  try {
    index = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt checkpoint index in " + dir.string() + ": " + e.what());
  }
  std::set<std::string> seen;
  for (const auto& e : index.at("params")) {
    const std::string name = e.at("name");
    Param* p = store.find(name);
    if (!p) throw CheckpointError("checkpoint parameter " + name + " does not exist in the model");
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != p->rows() || shape[1] != p->cols())
      throw CheckpointError("checkpoint parameter " + name + " has a different shape");
    p->values() = read_values(dir / "params" / (name + ".mst"), p->values().size(), name);
    p->set_trainable(e.at("trainable").get<bool>());
    seen.insert(name);
  }
  for (const auto& p : store.params())
    if (!seen.count(p->name())) throw CheckpointError("checkpoint lacks parameter " + p->name());
  for (const auto& e : index.at("buffers")) {
    const std::string name = e.at("name");
    Buffer* b = store.find_buffer(name);
    if (!b) throw CheckpointError("checkpoint buffer " + name + " does not exist in the model");
    b->values = read_values(dir / "buffers" / (name + ".mst"), b->values.size(), name);
  }
  if (adam) {
    *adam = AdamState{};
    if (index.contains("adam")) {
      adam->step = index["adam"].at("step");
      for (const auto& e : index["adam"].at("moments")) {
        const std::string name = e.at("name");
        const std::size_t n = e.at("size");
        adam->m[name] = read_values(dir / "adam" / (name + ".m.mst"), n, name);
        adam->v[name] = read_values(dir / "adam" / (name + ".v.mst"), n, name);
      }
    }
  }
  return index.at("meta");
}

}  // namespace multistyle
