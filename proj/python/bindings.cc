// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Python module: corpus access, training, synthesis and evaluation, with
// matrices exchanged as float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "multistyle/checkpoint.h"
#include "multistyle/config.h"
#include "multistyle/corpus.h"
#include "multistyle/evaluation.h"
#include "multistyle/model.h"
#include "multistyle/optimizer.h"
#include "multistyle/pipeline.h"
#include "multistyle/synth_corpus.h"
#include "multistyle/tensor_file.h"

namespace py = pybind11;
namespace fs = std::filesystem;
using nlohmann::json;
using namespace multistyle;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Matrix& m) {
  Array a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

Array to_array(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Array to_array(const ag::Var& v) { return to_array(Matrix(v.rows(), v.cols(), v.value())); }

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) return Matrix(1, static_cast<std::size_t>(a.shape(0)), {a.data(), a.data() + a.size()});
  if (a.ndim() != 2) throw std::invalid_argument("expected a 1-D or 2-D array");
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                {a.data(), a.data() + a.size()});
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

json to_json(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object from_json(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

const AlignedUtterance& find(const Corpus& corpus, const std::string& key) {
  const auto [doc, idx] = parse_utterance_key(key);
  if (!corpus.contains(doc, idx)) throw py::key_error("unknown utterance " + key);
  return corpus.utterance(doc, idx);
}

py::dict contours(const FrameContours& f) {
  py::dict d;
  d["mel"] = to_array(f.mel);
  d["pitch"] = to_array(f.pitch);
  d["energy"] = to_array(f.energy);
  d["log_duration"] = to_array(f.log_duration);
  return d;
}

py::dict log_record(const TrainLogRecord& r) {
  py::dict d;
  d["stage"] = r.stage;
  d["step"] = r.step;
  d["lr"] = r.lr;
  d["loss"] = r.loss.total;
  d["mel"] = r.loss.mel;
  d["pitch"] = r.loss.pitch;
  d["energy"] = r.loss.energy;
  d["duration"] = r.loss.duration;
  d["style"] = r.loss.style;
  if (!r.level.empty()) d["level"] = r.level;
  return d;
}

}  // namespace

PYBIND11_MODULE(_multistyle, m) {
  m.doc() = "Multi-scale speaking-style modelling for expressive speech synthesis";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<CorpusError>(m, "CorpusError", PyExc_IOError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
  py::register_exception<TensorFileError>(m, "TensorFileError", PyExc_IOError);

  py::class_<Corpus>(m, "Corpus")
      .def_static("load", &Corpus::load, py::arg("manifest"))
      .def_property_readonly("document_ids", &Corpus::document_ids)
      .def_property_readonly("mel_bins", [](const Corpus& c) { return c.features().mel_bins; })
      .def("__len__", &Corpus::size)
      .def(
          "keys",
          [](const Corpus& c, const std::string& split) {
            std::vector<std::string> keys;
            for (const auto* u : c.utterances(split)) keys.push_back(u->key());
            return keys;
          },
          py::arg("split") = "")
      .def(
          "utterance",
          [](const Corpus& c, const std::string& key) {
            const auto& u = find(c, key);
            py::dict d;
            d["key"] = u.key();
            d["split"] = u.split;
            d["subwords"] = u.subwords;
            d["phonemes"] = u.phonemes;
            d["subword_phoneme_counts"] = u.subword_phoneme_counts;
            d["durations"] = u.durations;
            d["mel"] = to_array(u.mel);
            d["pitch"] = to_array(u.pitch_frame);
            d["energy"] = to_array(u.energy_frame);
            return d;
          },
          py::arg("key"));

  py::class_<MultiStyleModel>(m, "Model")
      .def_static(
          "load", [](const fs::path& dir) { return MultiStyleModel::load(dir); }, py::arg("directory"))
      .def_property_readonly("mode", [](const MultiStyleModel& mdl) { return to_string(mdl.config().mode); })
      .def(
          "styles",
          [](const MultiStyleModel& mdl, const Corpus& c, const std::string& key, const std::string& source) {
            const auto& u = find(c, key);
            py::dict d;
            if (parse_style_source(source) == StyleSource::kExtracted) {
              const auto s = mdl.extract(c, u, false);
              d["global"] = to_array(s.S_g);
              d["sentence"] = to_array(s.S_s);
              d["subword"] = to_array(s.S_w);
            } else {
              const auto s = mdl.predict(c, u);
              d["global"] = to_array(s.S_g);
              d["sentence"] = to_array(s.S_s);
              d["subword"] = to_array(s.S_w);
            }
            return d;
          },
          py::arg("corpus"), py::arg("key"), py::arg("source") = "predicted")
      .def(
          "synthesize",
          [](const MultiStyleModel& mdl, const Corpus& c, const std::string& key, bool use_extractor) {
            return contours(synthesize_utterance(mdl, c, find(c, key), use_extractor).frames);
          },
          py::arg("corpus"), py::arg("key"), py::arg("use_extractor") = false)
      .def(
          "synthesize_paragraph",
          [](const MultiStyleModel& mdl, const Corpus& c, const std::string& document, std::size_t count) {
            const auto p = synthesize_paragraph(mdl, c, document, count);
            py::list sentences;
            for (const auto& s : p.sentences) sentences.append(contours(s.frames));
            py::dict d;
            d["mel"] = to_array(p.mel);
            d["sentences"] = sentences;
            d["autoregressive"] = p.autoregressive;
            return d;
          },
          py::arg("corpus"), py::arg("document"), py::arg("count") = 0);

  m.def(
      "generate_corpus",
      [](const fs::path& out, std::uint64_t seed, const py::object& synth) {
        const SynthConfig config = synth.is_none() ? SynthConfig{} : synth_config_from_json(to_json(synth));
        return generate_synthetic_corpus(config, seed, out);
      },
      py::arg("out"), py::arg("seed") = 7, py::arg("synth") = py::none(),
      "Writes a synthetic corpus and returns the manifest path.");

  m.def(
      "train",
      [](const fs::path& config, const std::string& stage, const std::optional<fs::path>& resume,
         const std::optional<fs::path>& out) {
        RunConfig rc = RunConfig::load(config);
        if (out) rc.output_dir = *out;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = run_training(rc, parse_stages(stage), resume.value_or(fs::path()));
        }
        py::list log;
        for (const auto& rec : r.history) log.append(log_record(rec));
        return log;
      },
      py::arg("config"), py::arg("stage") = "all", py::arg("resume") = py::none(), py::arg("out") = py::none(),
      "Runs training stages and returns the log records they produced.");

  m.def(
      "evaluate",
      [](const Corpus& c, const MultiStyleModel* model, const std::string& split, const std::string& mode) {
        const StyleSource source = parse_style_source(mode);
        if (source != StyleSource::kCopy && model == nullptr)
          throw std::invalid_argument("a model is required unless mode is 'copy'");
        return from_json(evaluate_split(model, c, split, source).aggregate_json());
      },
      py::arg("corpus"), py::arg("model") = nullptr, py::arg("split") = "test", py::arg("mode") = "predicted");

  m.def(
      "attention",
      [](const MultiStyleModel& model, const Corpus& c, std::size_t samples, std::size_t window,
         std::uint64_t seed, const std::string& split) {
        const auto d = dump_attention(model, c, samples, window, seed, split);
        return py::make_tuple(to_array(d.weights), d.keys, d.current_offset);
      },
      py::arg("model"), py::arg("corpus"), py::arg("samples") = 32, py::arg("window") = 5, py::arg("seed") = 0,
      py::arg("split") = "");

  m.def(
      "dtw",
      [](const Array& a, const Array& b) {
        const auto p = dtw_align(to_matrix(a), to_matrix(b));
        return py::make_tuple(p.pairs, p.cost);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "mcd",
      [](const Array& a, const Array& b, std::size_t K) {
        const Matrix x = to_matrix(a), y = to_matrix(b);
        return mcd(x, y, dtw_align(x, y), K);
      },
      py::arg("a"), py::arg("b"), py::arg("cepstra") = kDefaultCepstra,
      "Mel cepstral distortion in dB over the DTW alignment of two log-mel matrices.");

  m.def(
      "linear_probe",
      [](const Array& x_train, const Array& y_train, const Array& x_test, const Array& y_test, double ridge) {
        const auto r = linear_probe(to_matrix(x_train), to_vector(y_train), to_matrix(x_test), to_vector(y_test),
                                    ridge);
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["r2"] = r.r2;
        d["chance"] = r.chance;
        return d;
      },
      py::arg("x_train"), py::arg("y_train"), py::arg("x_test"), py::arg("y_test"), py::arg("ridge") = 1e-3);

  m.def(
      "read_tensor",
      [](const fs::path& path) {
        const NdArray t = read_tensor(path);
        std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
        Array a(shape);
        std::copy(t.values.begin(), t.values.end(), a.mutable_data());
        return a;
      },
      py::arg("path"));

  m.def(
      "write_tensor",
      [](const fs::path& path, const Array& a, const std::string& dtype) {
        NdArray t;
        for (py::ssize_t i = 0; i < a.ndim(); ++i) t.dims.push_back(static_cast<std::uint64_t>(a.shape(i)));
        t.values.assign(a.data(), a.data() + a.size());
        if (dtype == "float32")
          t.dtype = DType::kFloat32;
        else if (dtype == "float64")
          t.dtype = DType::kFloat64;
        else
          throw std::invalid_argument("dtype must be 'float32' or 'float64'");
        write_tensor(path, t);
      },
      py::arg("path"), py::arg("array"), py::arg("dtype") = "float32");
}
