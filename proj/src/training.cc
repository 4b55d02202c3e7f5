// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "multistyle/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace multistyle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stateless per-step stream so a resumed run draws the same batches.
class StepStream {
 public:
  StepStream(std::uint64_t seed, int stage, std::size_t step)
      : state_(mix(mix(seed) ^ mix(static_cast<std::uint64_t>(stage) << 32 ^ step))) {}
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(mix(state_++) % n); }

 private:
  std::uint64_t state_;
};

ag::Var constant_like(const ag::Var& v) { return v.detach(); }

PredictedStyles detach(const PredictedStyles& p) {
  return {constant_like(p.S_g), constant_like(p.S_s), constant_like(p.S_w)};
}

ag::Var clamp_const(const ag::Var& v, double c) {
  std::vector<double> x = v.value();
  for (auto& e : x) e = std::clamp(e, -c, c);
  return ag::Var::constant(v.rows(), v.cols(), std::move(x));
}

void check_finite(const LossComponents& l, int stage, std::size_t step, const std::string& where) {
  if (std::isfinite(l.total)) return;
  std::ostringstream os;
  os << "stage " << stage << " step " << step << ": non-finite loss on " << where << " (mel=" << l.mel
     << " pitch=" << l.pitch << " energy=" << l.energy << " duration=" << l.duration
     << " style=" << l.style << ")";
  throw DivergenceError(os.str());
}

void accumulate(LossComponents& acc, const LossComponents& l, double w) {
  acc.mel += w * l.mel;
  acc.pitch += w * l.pitch;
  acc.energy += w * l.energy;
  acc.duration += w * l.duration;
  acc.style += w * l.style;
  acc.total += w * l.total;
}

json record_json(const TrainLogRecord& r) {
  json j = {{"stage", r.stage}, {"step", r.step}, {"lr", r.lr},
            {"loss", r.loss.total}, {"mel", r.loss.mel}, {"pitch", r.loss.pitch},
            {"energy", r.loss.energy}, {"duration", r.loss.duration}, {"style", r.loss.style}};
  if (!r.level.empty()) j["level"] = r.level;
  return j;
}

}  // namespace

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* f) {
    if (v == 0) throw std::invalid_argument(std::string("train.") + f + " must be positive");
  };
  positive(batch_size, "batch_size");
  positive(stage1_per_level, "stage1_per_level");
  positive(stage2_steps, "stage2_steps");
  positive(stage3_steps, "stage3_steps");
  positive(paragraph_length, "paragraph_length");
  if (!(base_lr > 0)) throw std::invalid_argument("train.base_lr must be positive");
  if (!(stage3_lr_scale > 0)) throw std::invalid_argument("train.stage3_lr_scale must be positive");
  if (!(style_loss_weight >= 0)) throw std::invalid_argument("train.style_loss_weight must be >= 0");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1)) throw std::invalid_argument("train.beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0 && adam.beta2 < 1)) throw std::invalid_argument("train.beta2 must lie in [0, 1)");
  if (!(adam.epsilon > 0)) throw std::invalid_argument("train.epsilon must be positive");
  if (!(style_target_clamp > 0 && style_target_clamp < 1))
    throw std::invalid_argument("train.style_target_clamp must lie in (0, 1)");
}

json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"stage1_per_level", c.stage1_per_level},
          {"stage2_steps", c.stage2_steps},
          {"stage3_steps", c.stage3_steps},
          {"base_lr", c.base_lr},
          {"warmup_steps", c.warmup_steps},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"stage3_lr_scale", c.stage3_lr_scale},
          {"style_loss_weight", c.style_loss_weight},
          {"seed", c.seed},
          {"mel_loss", c.mel_loss_mae ? "mae" : "mse"},
          {"include_untrained_levels", c.include_untrained_levels},
          {"paragraph_length", c.paragraph_length},
          {"checkpoint_every", c.checkpoint_every},
          {"style_target_clamp", c.style_target_clamp}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("batch_size", c.batch_size);
  get("stage1_per_level", c.stage1_per_level);
  get("stage2_steps", c.stage2_steps);
  get("stage3_steps", c.stage3_steps);
  get("base_lr", c.base_lr);
  get("warmup_steps", c.warmup_steps);
  get("beta1", c.adam.beta1);
  get("beta2", c.adam.beta2);
  get("epsilon", c.adam.epsilon);
  get("stage3_lr_scale", c.stage3_lr_scale);
  get("style_loss_weight", c.style_loss_weight);
  get("seed", c.seed);
  get("include_untrained_levels", c.include_untrained_levels);
  get("paragraph_length", c.paragraph_length);
  get("checkpoint_every", c.checkpoint_every);
  get("style_target_clamp", c.style_target_clamp);
  if (j.contains("mel_loss")) {
    const std::string m = j.at("mel_loss");
    if (m != "mae" && m != "mse") throw std::invalid_argument("train.mel_loss must be 'mae' or 'mse'");
    c.mel_loss_mae = m == "mae";
  }
  return c;
}

AcousticLoss acoustic_loss(const MultiStyleModel& model, const AcousticOutput& out,
                           const AlignedUtterance& truth, bool mel_mae) {
  const auto& am = model.acoustic();
  if (out.mel.rows() != truth.mel.rows || out.mel.cols() != truth.mel.cols)
    throw std::invalid_argument("acoustic_loss: mel shape mismatch for " + truth.key());
  const std::size_t n = truth.phonemes.size();
  if (out.variance.pitch_z.rows() != n)
    throw std::invalid_argument("acoustic_loss: phoneme count mismatch for " + truth.key());
  const auto targets = model.variance_targets(truth);
  std::vector<double> p(n), e(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = am.normalize_pitch(targets.pitch[i]);
    e[i] = am.normalize_energy(targets.energy[i]);
    d[i] = std::log(static_cast<double>(targets.durations[i]) + 1.0);
  }
  const ag::Var mel_t = mel_var(truth.mel);
  AcousticLoss l;
  ag::Var mel = mel_mae ? ag::mae(out.mel, mel_t) : ag::mse(out.mel, mel_t);
  ag::Var pitch = ag::mse(out.variance.pitch_z, ag::Var::constant(n, 1, p));
  ag::Var energy = ag::mse(out.variance.energy_z, ag::Var::constant(n, 1, e));
  ag::Var dur = ag::mse(out.variance.log_duration, ag::Var::constant(n, 1, d));
  l.total = ag::add(ag::add(mel, pitch), ag::add(energy, dur));
  l.parts.mel = mel.item();
  l.parts.pitch = pitch.item();
  l.parts.energy = energy.item();
  l.parts.duration = dur.item();
  l.parts.total = l.total.item();
  return l;
}

StyleLoss style_loss(const PredictedStyles& pred, const PredictedStyles& target, double clamp) {
  auto check = [](const ag::Var& a, const ag::Var& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw std::invalid_argument(std::string("style_loss: shape mismatch at ") + what);
  };
  check(pred.S_g, target.S_g, "global");
  check(pred.S_s, target.S_s, "sentence");
  check(pred.S_w, target.S_w, "subword");
  StyleLoss l;
  ag::Var g = ag::mse(pred.S_g, clamp_const(target.S_g, clamp));
  ag::Var s = ag::mse(pred.S_s, clamp_const(target.S_s, clamp));
  // Rows share a width, so the mean of per-row errors is the overall mean.
  ag::Var w = ag::mse(pred.S_w, clamp_const(target.S_w, clamp));
  l.total = ag::add(ag::add(g, s), w);
  l.global = g.item();
  l.sentence = s.item();
  l.subword = w.item();
  return l;
}

std::array<StylePredictor::TargetStatistics, 3> target_statistics(
    const StyleTargets& targets, std::span<const AlignedUtterance* const> utterances, double clamp) {
  std::array<StylePredictor::TargetStatistics, 3> out;
  std::array<std::vector<std::vector<double>>, 3> rows;
  for (const auto* u : utterances) {
    const auto& t = targets.at(u->key());
    const ag::Var* levels[3] = {&t.S_g, &t.S_s, &t.S_w};
    for (std::size_t l = 0; l < 3; ++l)
      for (std::size_t r = 0; r < levels[l]->rows(); ++r) {
        std::vector<double> row(levels[l]->cols());
        for (std::size_t k = 0; k < row.size(); ++k)
          row[k] = std::atanh(std::clamp(levels[l]->at(r, k), -clamp, clamp));
        rows[l].push_back(std::move(row));
      }
  }
  for (std::size_t l = 0; l < 3; ++l) {
    if (rows[l].empty()) throw std::invalid_argument("target_statistics: no targets");
    const std::size_t d = rows[l].front().size();
    const double n = static_cast<double>(rows[l].size());
    auto& st = out[l];
    st.center.assign(d, 0.0);
    st.scale.assign(d, 0.0);
    for (const auto& row : rows[l])
      for (std::size_t k = 0; k < d; ++k) st.center[k] += row[k] / n;
    for (const auto& row : rows[l])
      for (std::size_t k = 0; k < d; ++k) st.scale[k] += (row[k] - st.center[k]) * (row[k] - st.center[k]) / n;
    for (auto& x : st.scale) x = std::max(std::sqrt(x), kMinTargetScale);
  }
  return out;
}

StyleTargets extract_targets(const MultiStyleModel& model, const Corpus& corpus) {
  StyleTargets t;
  for (const auto* u : corpus.utterances()) {
    auto s = model.extract(corpus, *u, false);
    t[u->key()] = detach(PredictedStyles{s.S_g, s.S_s, s.S_w});
  }
  return t;
}

Level active_level(std::size_t step, std::size_t per_level) {
  const std::size_t phase = std::min<std::size_t>(2, step / per_level);
  return kLevels[phase];
}

Trainer::Trainer(const Corpus& corpus, TrainConfig config, fs::path out_dir)
    : corpus_(corpus), config_(std::move(config)), out_(std::move(out_dir)) {
  config_.validate();
  train_ = corpus_.utterances("train");
  if (train_.empty()) throw std::invalid_argument("training split is empty");
  for (const auto& id : corpus_.document_ids()) {
    std::vector<const AlignedUtterance*> run;
    const auto& doc = corpus_.document(id);
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const bool contiguous = run.empty() || run.back()->sentence_index + 1 == doc[i].sentence_index;
      if (doc[i].split != "train" || !contiguous) {
        if (!run.empty()) runs_.push_back(run);
        run.clear();
      }
      if (doc[i].split == "train") run.push_back(&doc[i]);
    }
    if (!run.empty()) runs_.push_back(run);
  }
  log_path_ = out_ / "train_log.jsonl";
}

fs::path Trainer::stage_dir(int stage) const { return out_ / ("stage" + std::to_string(stage)); }
fs::path Trainer::resume_dir(int stage) const {
  return out_ / "resume" / ("stage" + std::to_string(stage));
}

std::vector<const AlignedUtterance*> Trainer::sample_batch(int stage, std::size_t step) const {
  StepStream s(config_.seed, stage, step);
  std::vector<const AlignedUtterance*> batch;
  for (std::size_t i = 0; i < config_.batch_size; ++i) batch.push_back(train_[s.index(train_.size())]);
  return batch;
}

std::vector<std::vector<const AlignedUtterance*>> Trainer::sample_paragraphs(int stage,
                                                                             std::size_t step) const {
  StepStream s(config_.seed, stage, step);
  const std::size_t count = std::max<std::size_t>(1, config_.batch_size / config_.paragraph_length);
  std::vector<std::vector<const AlignedUtterance*>> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& run = runs_[s.index(runs_.size())];
    const std::size_t len = std::min(config_.paragraph_length, run.size());
    const std::size_t start = s.index(run.size() - len + 1);
    out.emplace_back(run.begin() + static_cast<long>(start), run.begin() + static_cast<long>(start + len));
  }
  return out;
}

void Trainer::record(const TrainLogRecord& r) {
  history_.push_back(r);
  if (log_path_.empty()) return;
  if (log_path_.has_parent_path()) fs::create_directories(log_path_.parent_path());
  std::ofstream out(log_path_, std::ios::app);
  out << record_json(r).dump() << "\n";
}

void Trainer::maybe_snapshot(const MultiStyleModel& model, const Adam& adam, int stage,
                             std::size_t step, std::size_t total) {
  if (config_.checkpoint_every == 0 || step % config_.checkpoint_every != 0 || step == total) return;
  model.save(resume_dir(stage), {{"stage", stage}, {"step", step}, {"complete", false}},
             &adam.state());
}

void Trainer::ensure_targets(const MultiStyleModel& model) {
  if (!targets_) targets_ = extract_targets(model, corpus_);
}

void Trainer::configure_stage1(MultiStyleModel& model, Level active) {
  auto& store = model.store();
  store.set_all_trainable(false);
  store.set_trainable(std::string(kAcousticPrefix) + ".", true);
  store.set_trainable(model.extractor().level_prefix(active) + ".", true);
}

void Trainer::configure_stage2(MultiStyleModel& model) {
  auto& store = model.store();
  store.set_all_trainable(false);
  store.set_trainable("predictor.", true);
  if (model.config().provider.kind == "trainable" && model.config().provider.trainable)
    store.set_trainable(std::string(kSemanticPrefix) + ".", true);
}

void Trainer::configure_stage3(MultiStyleModel& model) {
  configure_stage2(model);
  model.store().set_trainable(std::string(kAcousticPrefix) + ".", true);
}

void Trainer::stage1(MultiStyleModel& model, Adam& adam, std::size_t start) {
  const std::size_t total = config_.stage1_steps();
  const double w = 1.0 / static_cast<double>(config_.batch_size);
  for (std::size_t step = start; step < total; ++step) {
    const Level level = active_level(step, config_.stage1_per_level);
    configure_stage1(model, level);
    model.store().zero_grad();
    LossComponents acc;
    for (const auto* u : sample_batch(1, step)) {
      StyleEmbeddings s = model.extract(corpus_, *u, true);
      if (!config_.include_untrained_levels) {
        if (level < Level::kSentence) s.S_s = ag::Var::zeros(1, s.S_s.cols());
        if (level < Level::kSubword) s.S_w = ag::Var::zeros(s.S_w.rows(), s.S_w.cols());
      }
      auto out = model.synthesize(*u, s.S_g, s.S_s, s.S_w, true);
      auto loss = acoustic_loss(model, out, *u, config_.mel_loss_mae);
      check_finite(loss.parts, 1, step + 1, u->key());
      ag::backward(loss.total, w);
      accumulate(acc, loss.parts, w);
    }
    const double lr = scheduled_lr(config_.base_lr, config_.warmup_steps, step + 1);
    adam.step(model.store(), lr);
    model.store().zero_grad();
    record({1, step + 1, level_name(level), lr, acc});
    if ((step + 1) % config_.stage1_per_level == 0) {
      model.save(stage_dir(1) / "subphases" / level_name(level),
                 {{"stage", 1}, {"step", step + 1}, {"complete", false}}, &adam.state());
      if (subphase_hook_) subphase_hook_(level, model);
    }
    maybe_snapshot(model, adam, 1, step + 1, total);
  }
  model.save(stage_dir(1), {{"stage", 1}, {"step", total}, {"complete", true}}, &adam.state());
}

void Trainer::stage2(MultiStyleModel& model, Adam& adam, std::size_t start) {
  ensure_targets(model);
  const auto& targets = *targets_;
  const double clamp = config_.style_target_clamp;
  if (start == 0) model.predictor().set_target_statistics(target_statistics(targets, train_, clamp));
  for (std::size_t step = start; step < config_.stage2_steps; ++step) {
    configure_stage2(model);
    model.store().zero_grad();
    LossComponents acc;
    if (model.config().mode == PredictorMode::kHierarchical) {
      const double w = 1.0 / static_cast<double>(config_.batch_size);
      for (const auto* u : sample_batch(2, step)) {
        auto pred = model.predict(corpus_, *u);
        auto loss = style_loss(pred, targets.at(u->key()), clamp);
        LossComponents c;
        c.style = c.total = loss.total.item();
        check_finite(c, 2, step + 1, u->key());
        ag::backward(loss.total, w);
        accumulate(acc, c, w);
      }
    } else {
      const auto paragraphs = sample_paragraphs(2, step);
      const double w = 1.0 / static_cast<double>(paragraphs.size());
      for (const auto& para : paragraphs) {
        std::vector<ContextEmbeddings> ctx;
        std::vector<PredictedStyles> teacher;
        for (const auto* u : para) {
          ctx.push_back(model.context(model.window(corpus_, *u)));
          teacher.push_back(targets.at(u->key()));
        }
        auto preds = model.predictor().predict_paragraph(ctx, &teacher);
        std::vector<ag::Var> terms;
        for (std::size_t t = 0; t < para.size(); ++t)
          terms.push_back(style_loss(preds[t], teacher[t], clamp).total);
        ag::Var total = ag::sum(ag::concat_rows(terms));
        LossComponents c;
        c.style = c.total = total.item();
        check_finite(c, 2, step + 1, para.front()->key());
        ag::backward(total, w);
        accumulate(acc, c, w);
      }
    }
    const double lr = scheduled_lr(config_.base_lr, config_.warmup_steps, step + 1);
    adam.step(model.store(), lr);
    model.store().zero_grad();
    record({2, step + 1, "", lr, acc});
    maybe_snapshot(model, adam, 2, step + 1, config_.stage2_steps);
  }
  model.save(stage_dir(2), {{"stage", 2}, {"step", config_.stage2_steps}, {"complete", true}},
             &adam.state());
}

void Trainer::stage3(MultiStyleModel& model, Adam& adam, std::size_t start) {
  ensure_targets(model);
  const auto& targets = *targets_;
  const double clamp = config_.style_target_clamp;
  const double lambda = config_.style_loss_weight;
  auto sentence_loss = [&](const AlignedUtterance& u, const PredictedStyles& pred, LossComponents& c) {
    auto out = model.synthesize(u, pred.S_g, pred.S_s, pred.S_w, true);
    auto a = acoustic_loss(model, out, u, config_.mel_loss_mae);
    auto s = style_loss(pred, targets.at(u.key()), clamp);
    c = a.parts;
    c.style = lambda * s.total.item();
    c.total = a.parts.total + c.style;
    return ag::add(a.total, ag::scale(s.total, lambda));
  };
  for (std::size_t step = start; step < config_.stage3_steps; ++step) {
    configure_stage3(model);
    model.store().zero_grad();
    LossComponents acc;
    if (model.config().mode == PredictorMode::kHierarchical) {
      const double w = 1.0 / static_cast<double>(config_.batch_size);
      for (const auto* u : sample_batch(3, step)) {
        LossComponents c;
        ag::Var total = sentence_loss(*u, model.predict(corpus_, *u), c);
        check_finite(c, 3, step + 1, u->key());
        ag::backward(total, w);
        accumulate(acc, c, w);
      }
    } else {
      const auto paragraphs = sample_paragraphs(3, step);
      const double w = 1.0 / static_cast<double>(paragraphs.size());
      for (const auto& para : paragraphs) {
        std::vector<ContextEmbeddings> ctx;
        for (const auto* u : para) ctx.push_back(model.context(model.window(corpus_, *u)));
        auto preds = model.predictor().predict_paragraph(ctx);
        std::vector<ag::Var> terms;
        LossComponents sum;
        for (std::size_t t = 0; t < para.size(); ++t) {
          LossComponents c;
          terms.push_back(sentence_loss(*para[t], preds[t], c));
          accumulate(sum, c, 1.0);
        }
        check_finite(sum, 3, step + 1, para.front()->key());
        ag::backward(ag::sum(ag::concat_rows(terms)), w);
        accumulate(acc, sum, w);
      }
    }
    const double lr =
        scheduled_lr(config_.base_lr, config_.warmup_steps, step + 1) * config_.stage3_lr_scale;
    adam.step(model.store(), lr);
    model.store().zero_grad();
    record({3, step + 1, "", lr, acc});
    maybe_snapshot(model, adam, 3, step + 1, config_.stage3_steps);
  }
  model.save(stage_dir(3), {{"stage", 3}, {"step", config_.stage3_steps}, {"complete", true}},
             &adam.state());
}

void truncate_log(const fs::path& log, int stage, std::size_t step) {
  std::ifstream in(log);
  if (!in) return;
  std::vector<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const int s = j.at("stage");
    const std::size_t k = j.at("step");
    if (s < stage || (s == stage && k <= step)) keep.push_back(line);
  }
  in.close();
  std::ofstream out(log, std::ios::trunc);
  for (const auto& l : keep) out << l << "\n";
}

}  // namespace multistyle
