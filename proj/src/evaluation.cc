// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/evaluation.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "multistyle/training.h"

namespace multistyle {

using nlohmann::json;

DtwPath dtw_align(const Matrix& a, const Matrix& b) {
  if (a.rows == 0 || b.rows == 0) throw std::invalid_argument("dtw_align: empty input");
  if (a.cols != b.cols) throw std::invalid_argument("dtw_align: bin count mismatch");
  const std::size_t n = a.rows, m = b.rows;
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double d = a(i, k) - b(j, k);
      s += d * d;
    }
    return std::sqrt(s);
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  Matrix D(n, m, inf);
  // 0 = diagonal, 1 = from (i-1, j), 2 = from (i, j-1)
  std::vector<unsigned char> from(n * m, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == 0 && j == 0) {
        D(0, 0) = dist(0, 0);
        continue;
      }
      double best = inf;
      unsigned char dir = 0;
      if (i > 0 && j > 0) best = D(i - 1, j - 1);
      if (i > 0 && D(i - 1, j) < best) best = D(i - 1, j), dir = 1;
      if (j > 0 && D(i, j - 1) < best) best = D(i, j - 1), dir = 2;
      D(i, j) = best + dist(i, j);
      from[i * m + j] = dir;
    }
  DtwPath path;
  path.cost = D(n - 1, m - 1);
  std::size_t i = n - 1, j = m - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    switch (from[i * m + j]) {
      case 0: --i, --j; break;
      case 1: --i; break;
      default: --j;
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

std::vector<double> mel_cepstrum(std::span<const double> x) {
  const std::size_t N = x.size();
  std::vector<double> c(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    double s = 0;
    for (std::size_t n = 0; n < N; ++n)
      s += x[n] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * n + 1.0) / (2.0 * N));
    c[k] = s * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(N));
  }
  return c;
}

double mcd(const Matrix& a, const Matrix& b, const DtwPath& path, std::size_t K) {
  if (K >= a.cols) throw std::invalid_argument("mcd: K must be smaller than the bin count");
  if (a.cols != b.cols) throw std::invalid_argument("mcd: bin count mismatch");
  if (path.pairs.empty()) throw std::invalid_argument("mcd: empty path");
  std::vector<std::vector<double>> ca(a.rows), cb(b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) ca[i] = mel_cepstrum(a.row(i));
  for (std::size_t j = 0; j < b.rows; ++j) cb[j] = mel_cepstrum(b.row(j));
  const double scale = 10.0 / std::numbers::ln10;
  double total = 0;
  for (const auto& [i, j] : path.pairs) {
    if (i >= a.rows || j >= b.rows) throw std::out_of_range("mcd: path leaves the matrices");
    double s = 0;
    for (std::size_t k = 1; k <= K; ++k) {
      const double d = ca[i][k] - cb[j][k];
      s += d * d;
    }
    total += scale * std::sqrt(2.0 * s);
  }
  return total / static_cast<double>(path.pairs.size());
}

namespace {

double path_rmse(std::span<const double> a, std::span<const double> b, const DtwPath& path,
                 bool skip_unvoiced) {
  double s = 0;
  std::size_t n = 0;
  for (const auto& [i, j] : path.pairs) {
    if (i >= a.size() || j >= b.size()) throw std::invalid_argument("rmse: sequence shorter than path");
    if (skip_unvoiced && a[i] == 0.0 && b[j] == 0.0) continue;
    const double d = a[i] - b[j];
    s += d * d;
    ++n;
  }
  return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
}

}  // namespace

double f0_rmse(std::span<const double> a, std::span<const double> b, const DtwPath& path) {
  return path_rmse(a, b, path, true);
}

double energy_rmse(std::span<const double> a, std::span<const double> b, const DtwPath& path) {
  return path_rmse(a, b, path, false);
}

double duration_mse(std::span<const double> pred_log, std::span<const double> true_log) {
  if (pred_log.size() != true_log.size()) throw std::invalid_argument("duration_mse: length mismatch");
  if (pred_log.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < pred_log.size(); ++i) {
    const double d = pred_log[i] - true_log[i];
    s += d * d;
  }
  return s / static_cast<double>(pred_log.size());
}

std::vector<double> log_durations(std::span<const std::size_t> frames) {
  std::vector<double> out;
  for (auto f : frames) out.push_back(std::log(static_cast<double>(f) + 1.0));
  return out;
}

void MetricReport::finalize() {
  aggregate = UtteranceMetrics{};
  aggregate.key = "aggregate";
  if (utterances.empty()) return;
  double style = 0;
  std::size_t style_n = 0;
  for (const auto& u : utterances) {
    aggregate.mcd += u.mcd;
    aggregate.f0_rmse += u.f0_rmse;
    aggregate.energy_rmse += u.energy_rmse;
    aggregate.duration_mse += u.duration_mse;
    if (u.style_mse) style += *u.style_mse, ++style_n;
  }
  const double n = static_cast<double>(utterances.size());
  aggregate.mcd /= n;
  aggregate.f0_rmse /= n;
  aggregate.energy_rmse /= n;
  aggregate.duration_mse /= n;
  if (style_n) aggregate.style_mse = style / static_cast<double>(style_n);
}

namespace {

json metrics_json(const UtteranceMetrics& m) {
  json j = {{"key", m.key},
            {"mcd", m.mcd},
            {"f0_rmse", m.f0_rmse},
            {"energy_rmse", m.energy_rmse},
            {"duration_mse", m.duration_mse}};
  if (m.style_mse) j["style_mse"] = *m.style_mse;
  return j;
}

}  // namespace

json MetricReport::aggregate_json() const {
  json j = metrics_json(aggregate);
  j["kind"] = "aggregate";
  j["mode"] = mode;
  j["count"] = utterances.size();
  return j;
}

void MetricReport::write(const std::filesystem::path& jsonl, const std::filesystem::path& summary) const {
  if (jsonl.has_parent_path()) std::filesystem::create_directories(jsonl.parent_path());
  std::ofstream out(jsonl, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + jsonl.string());
  for (const auto& u : utterances) {
    json j = metrics_json(u);
    j["kind"] = "utterance";
    out << j.dump() << "\n";
  }
  out << aggregate_json().dump() << "\n";
  std::ofstream s(summary, std::ios::trunc);
  if (!s) throw std::runtime_error("cannot write " + summary.string());
  s << std::fixed << std::setprecision(6);
  s << "mode          " << mode << "\n";
  s << "utterances    " << utterances.size() << "\n";
  s << "MCD           " << aggregate.mcd << " dB\n";
  s << "F0 RMSE       " << aggregate.f0_rmse << " Hz\n";
  s << "Energy RMSE   " << aggregate.energy_rmse << "\n";
  s << "Duration MSE  " << aggregate.duration_mse << " (log frames)\n";
  if (aggregate.style_mse) s << "Style MSE     " << *aggregate.style_mse << "\n";
}

StyleSource parse_style_source(const std::string& s) {
  if (s == "predicted") return StyleSource::kPredicted;
  if (s == "extracted") return StyleSource::kExtracted;
  if (s == "copy") return StyleSource::kCopy;
  throw std::invalid_argument("style source must be predicted, extracted or copy");
}

const char* to_string(StyleSource s) {
  switch (s) {
    case StyleSource::kPredicted: return "predicted";
    case StyleSource::kExtracted: return "extracted";
    case StyleSource::kCopy: return "copy";
  }
  return "?";
}

FrameContours frame_contours(const MultiStyleModel& model, const AcousticOutput& out) {
  const auto pred = model.acoustic().denormalize(out.variance);
  FrameContours c;
  c.mel = Matrix(out.mel.rows(), out.mel.cols(), out.mel.value());
  c.log_duration = pred.log_duration;
  for (std::size_t p = 0; p < out.durations.size(); ++p)
    for (std::size_t k = 0; k < out.durations[p]; ++k) {
      c.pitch.push_back(pred.pitch[p] < kVoicingThresholdHz ? 0.0 : pred.pitch[p]);
      c.energy.push_back(std::max(0.0, pred.energy[p]));
    }
  return c;
}

MetricReport evaluate_split(const MultiStyleModel* model, const Corpus& corpus, const std::string& split,
                            StyleSource source) {
  MetricReport report;
  report.mode = to_string(source);
  if (source != StyleSource::kCopy && !model)
    throw std::invalid_argument("evaluate_split: a model is required unless in copy mode");
  for (const auto* u : corpus.utterances(split)) {
    UtteranceMetrics m;
    m.key = u->key();
    const auto true_log = log_durations(u->durations);
    if (source == StyleSource::kCopy) {
      const DtwPath path = dtw_align(u->mel, u->mel);
      m.mcd = mcd(u->mel, u->mel, path);
      m.f0_rmse = f0_rmse(u->pitch_frame, u->pitch_frame, path);
      m.energy_rmse = energy_rmse(u->energy_frame, u->energy_frame, path);
      m.duration_mse = duration_mse(true_log, true_log);
      report.utterances.push_back(m);
      continue;
    }
    const StyleEmbeddings ex = model->extract(corpus, *u, false);
    AcousticOutput out;
    if (source == StyleSource::kExtracted) {
      out = model->synthesize(*u, ex.S_g, ex.S_s, ex.S_w, false);
    } else {
      const PredictedStyles p = model->predict(corpus, *u);
      out = model->synthesize(*u, p.S_g, p.S_s, p.S_w, false);
      m.style_mse = style_loss(p, PredictedStyles{ex.S_g, ex.S_s, ex.S_w}, 1.0).total.item();
    }
    const FrameContours c = frame_contours(*model, out);
    const DtwPath path = dtw_align(u->mel, c.mel);
    m.mcd = mcd(u->mel, c.mel, path);
    m.f0_rmse = f0_rmse(u->pitch_frame, c.pitch, path);
    m.energy_rmse = energy_rmse(u->energy_frame, c.energy, path);
    m.duration_mse = duration_mse(c.log_duration, true_log);
    report.utterances.push_back(m);
  }
  report.finalize();
  return report;
}

AttentionDump dump_attention(const MultiStyleModel& model, const Corpus& corpus, std::size_t samples,
                             std::size_t window_size, std::uint64_t seed, const std::string& split) {
  if (window_size != 2 * model.config().context_radius + 1)
    throw std::invalid_argument("dump_attention: window size " + std::to_string(window_size) +
                                " does not match the model's context radius " +
                                std::to_string(model.config().context_radius));
  std::vector<const AlignedUtterance*> eligible;
  for (const auto* u : corpus.utterances(split))
    if (model.window(corpus, *u).size() == window_size) eligible.push_back(u);
  if (eligible.empty())
    throw std::invalid_argument("dump_attention: no utterance has a full window of " +
                                std::to_string(window_size));
  samples = std::min(samples, eligible.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(samples);
  AttentionDump dump;
  dump.weights = Matrix(samples, window_size);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto w = model.window(corpus, *eligible[i]);
    const auto ctx = model.context(w);
    for (std::size_t k = 0; k < window_size; ++k) dump.weights(i, k) = ctx.inter_sentence_weights.value()[k];
    dump.keys.push_back(eligible[i]->key());
    dump.current_offset.push_back(w.current_offset);
  }
  return dump;
}

ProbeResult linear_probe(const Matrix& x_train, std::span<const double> y_train, const Matrix& x_test,
                         std::span<const double> y_test, double ridge) {
  if (x_train.rows != y_train.size() || x_test.rows != y_test.size())
    throw std::invalid_argument("linear_probe: label count mismatch");
  if (x_train.rows == 0 || x_test.rows == 0) throw std::invalid_argument("linear_probe: empty set");
  if (x_train.cols != x_test.cols) throw std::invalid_argument("linear_probe: feature width mismatch");
  const std::size_t d = x_train.cols;
  // Standardize with training statistics, then solve the ridge normal equations.
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < x_train.rows; ++i)
    for (std::size_t k = 0; k < d; ++k) mean[k] += x_train(i, k);
  for (auto& m : mean) m /= static_cast<double>(x_train.rows);
  for (std::size_t i = 0; i < x_train.rows; ++i)
    for (std::size_t k = 0; k < d; ++k) sd[k] += std::pow(x_train(i, k) - mean[k], 2);
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(x_train.rows)), s = s > 1e-12 ? s : 1.0;
  auto design = [&](const Matrix& x) {
    Eigen::MatrixXd X(x.rows, d + 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
      for (std::size_t k = 0; k < d; ++k) X(i, k) = (x(i, k) - mean[k]) / sd[k];
      X(i, d) = 1.0;
    }
    return X;
  };
  const Eigen::MatrixXd X = design(x_train);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y_train.data(), y_train.size());
  Eigen::MatrixXd A = X.transpose() * X;
  A.diagonal().head(d).array() += ridge * static_cast<double>(x_train.rows);
  const Eigen::VectorXd w = A.ldlt().solve(X.transpose() * y);
  const Eigen::VectorXd pred = design(x_test) * w;

  ProbeResult r;
  r.train_count = x_train.rows;
  r.test_count = x_test.rows;
  std::size_t correct = 0, positive = 0;
  double y_mean = 0;
  for (double v : y_test) y_mean += v;
  y_mean /= static_cast<double>(y_test.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < y_test.size(); ++i) {
    if ((pred[static_cast<long>(i)] >= 0) == (y_test[i] >= 0)) ++correct;
    if (y_test[i] >= 0) ++positive;
    ss_res += std::pow(y_test[i] - pred[static_cast<long>(i)], 2);
    ss_tot += std::pow(y_test[i] - y_mean, 2);
  }
  const double n = static_cast<double>(y_test.size());
  r.accuracy = static_cast<double>(correct) / n;
  r.chance = std::max(static_cast<double>(positive), n - static_cast<double>(positive)) / n;
  r.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  return r;
}

json ScaleSeparation::to_json() const {
  auto one = [](const ProbeResult& p) {
    return json{{"accuracy", p.accuracy}, {"r2", p.r2}, {"chance", p.chance},
                {"train", p.train_count}, {"test", p.test_count}};
  };
  return {{"global_to_chapter", one(global_chapter)},
          {"sentence_to_chapter", one(sentence_chapter)},
          {"subword_to_chapter", one(subword_chapter)},
          {"sentence_to_factor", one(sentence_factor)},
          {"subword_to_stress", one(subword_stress)}};
}

ScaleSeparation scale_separation_probe(const MultiStyleModel& model, const Corpus& corpus,
                                       const PlantedFactors& factors, double ridge) {
  struct Set {
    std::vector<double> x, y;
    std::size_t rows = 0;
    void add(const double* row, std::size_t d, double label) {
      x.insert(x.end(), row, row + d);
      y.push_back(label);
      ++rows;
    }
    Matrix matrix(std::size_t d) const { return Matrix(rows, d, x); }
  };
  const std::size_t d = model.config().d_model;
  // [train, test] for each probe.
  Set g_chap[2], s_chap[2], w_chap[2], s_fac[2], w_str[2];
  for (const auto* u : corpus.utterances()) {
    const int part = u->split == "test" ? 1 : 0;
    const auto& doc = factors.document(u->document_id);
    const auto& sent = factors.sentence(u->document_id, u->sentence_index);
    const auto s = model.extract(corpus, *u, false);
    const double chapter = doc.chapter_sign;
    g_chap[part].add(s.S_g.value().data(), d, chapter);
    s_chap[part].add(s.S_s.value().data(), d, chapter);
    s_fac[part].add(s.S_s.value().data(), d, sent.factor);
    for (std::size_t i = 0; i < s.S_w.rows(); ++i) {
      w_chap[part].add(s.S_w.value().data() + i * d, d, chapter);
      w_str[part].add(s.S_w.value().data() + i * d, d, sent.stress.at(i) ? 1.0 : -1.0);
    }
  }
  auto run = [&](Set* sets) {
    return linear_probe(sets[0].matrix(d), sets[0].y, sets[1].matrix(d), sets[1].y, ridge);
  };
  ScaleSeparation out;
  out.global_chapter = run(g_chap);
  out.sentence_chapter = run(s_chap);
  out.subword_chapter = run(w_chap);
  out.sentence_factor = run(s_fac);
  out.subword_stress = run(w_str);
  return out;
}

}  // namespace multistyle
