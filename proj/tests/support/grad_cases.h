// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference checks for every layer kind and the composed stacks,
// shared by the unit tests and the acceptance run.

#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "multistyle/acoustic_model.h"
#include "multistyle/autograd.h"
#include "multistyle/context_encoder.h"
#include "multistyle/grad_check.h"
#include "multistyle/model.h"
#include "multistyle/neural.h"
#include "multistyle/semantic.h"
#include "multistyle/style_extractor.h"
#include "multistyle/style_predictor.h"
#include "multistyle/synth_corpus.h"
#include "multistyle/training.h"

namespace multistyle::testing {

inline std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline ag::Var random_leaf(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return ag::Var::leaf(r, c, random_values(r * c, rng, lo, hi), true);
}

inline ag::Var random_constant(std::size_t r, std::size_t c, Rng& rng) {
  return ag::Var::constant(r, c, random_values(r * c, rng));
}

// Weighted sum with fixed random weights, so no output gradient is uniform.
inline ag::Var probe(const ag::Var& y, const ag::Var& w) { return ag::sum(ag::mul(y, w)); }

// Tiny corpus for end-to-end checks.
inline Corpus tiny_corpus(std::size_t documents = 2, std::size_t sentences = 4, std::uint64_t seed = 3) {
  SynthConfig c;
  c.documents = documents;
  c.sentences_per_document = sentences;
  c.min_subwords = 2;
  c.max_subwords = 3;
  c.max_phonemes_per_subword = 2;
  c.mel_bins = 6;
  c.phoneme_inventory = 8;
  c.common_vocab = 6;
  c.topic_vocab = 3;
  c.test_every = 3;
  auto s = synthesize_corpus(c, seed);
  return Corpus(s.features, std::move(s.utterances));
}

inline ModelConfig tiny_model_config(PredictorMode mode = PredictorMode::kHierarchical) {
  ModelConfig m;
  m.mel_bins = 6;
  m.d_model = 8;
  m.d_ctx = 8;
  m.conv_channels = {2, 2};
  m.style_tokens = 4;
  m.token_heads = 2;
  m.acoustic_heads = 2;
  m.encoder_layers = 1;
  m.decoder_layers = 1;
  m.d_ffn = 8;
  m.variance_channels = 4;
  m.variance_bins = 8;
  m.context_radius = 1;
  m.reference_radius = 1;
  m.mode = mode;
  m.provider.d_sem = 8;
  return m;
}

struct GradCase {
  std::string name;
  std::function<GradCheckReport()> run;
};

inline GradCheckOptions strict_options(std::size_t max_per_tensor = 0) {
  GradCheckOptions o;
  o.eps = 1e-4;
  o.tol = 1e-4;
  o.max_per_tensor = max_per_tensor;
  return o;
}

inline std::vector<GradCase> grad_cases() {
  std::vector<GradCase> cases;

  cases.push_back({"linear", [] {
    Rng rng(1);
    ParamStore store;
    Linear lin(store, "lin", 4, 3, rng, Activation::kTanh);
    auto x = random_leaf(2, 4, rng);
    auto w = random_constant(2, 3, rng);
    std::vector<GradTarget> t{{"x", x}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(lin(x), w); }, t, strict_options());
  }});

  cases.push_back({"embedding", [] {
    Rng rng(2);
    ParamStore store;
    Embedding emb(store, "emb", 5, 3, rng);
    const std::vector<std::size_t> ids{0, 2, 1, 2, 4};
    auto w = random_constant(5, 3, rng);
    return grad_check([&] { return probe(emb(ids), w); }, store, strict_options());
  }});

  cases.push_back({"gru", [] {
    Rng rng(3);
    ParamStore store;
    Gru gru(store, "gru", 3, 4, rng);
    auto x = random_leaf(5, 3, rng);
    auto h0 = random_leaf(1, 4, rng);
    auto w = random_constant(5, 4, rng);
    std::vector<GradTarget> t{{"x", x}, {"h0", h0}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(gru.forward(x, Direction::kBackward, &h0), w); }, t, strict_options());
  }});

  cases.push_back({"bigru", [] {
    Rng rng(4);
    ParamStore store;
    BiGru gru(store, "bigru", 3, 2, rng);
    auto x = random_leaf(4, 3, rng);
    auto w = random_constant(4, 4, rng);
    std::vector<GradTarget> t{{"x", x}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(gru(x), w); }, t, strict_options());
  }});

  cases.push_back({"scaled_dot_attention", [] {
    Rng rng(5);
    auto q = random_leaf(2, 4, rng), k = random_leaf(5, 4, rng), v = random_leaf(5, 3, rng);
    auto w = random_constant(2, 3, rng);
    std::vector<GradTarget> t{{"q", q}, {"k", k}, {"v", v}};
    return grad_check([&] { return probe(scaled_dot_attention(q, k, v).context, w); }, t, strict_options());
  }});

  cases.push_back({"multi_head_attention", [] {
    Rng rng(6);
    ParamStore store;
    MultiHeadAttention mha(store, "mha", 4, 6, 8, 2, rng, true);
    auto q = random_leaf(3, 4, rng), k = random_leaf(5, 6, rng);
    auto w = random_constant(3, 8, rng);
    std::vector<GradTarget> t{{"q", q}, {"k", k}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(mha(q, k, k).out, w); }, t, strict_options());
  }});

  cases.push_back({"conv_stack", [] {
    Rng rng(7);
    ParamStore store;
    ConvStack conv(store, "conv", 6, {2, 3}, rng);
    auto mel = random_leaf(7, 6, rng);
    const auto out_frames = conv.out_frames(7);
    auto w = random_constant(out_frames, conv.out_width(), rng);
    std::vector<GradTarget> t{{"mel", mel}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(conv(mel), w); }, t, strict_options());
  }});

  cases.push_back({"conv1d", [] {
    Rng rng(8);
    ParamStore store;
    Conv1d conv(store, "conv1d", 3, 4, 3, rng);
    auto x = random_leaf(5, 3, rng);
    auto w = random_constant(5, 4, rng);
    std::vector<GradTarget> t{{"x", x}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(conv(x), w); }, t, strict_options());
  }});

  cases.push_back({"layer_norm", [] {
    Rng rng(9);
    auto x = random_leaf(3, 5, rng), g = random_leaf(1, 5, rng), b = random_leaf(1, 5, rng);
    auto w = random_constant(3, 5, rng);
    std::vector<GradTarget> t{{"x", x}, {"gamma", g}, {"beta", b}};
    return grad_check([&] { return probe(ag::layer_norm_rows(x, g, b), w); }, t, strict_options());
  }});

  cases.push_back({"fft_block", [] {
    Rng rng(10);
    ParamStore store;
    FftBlock block(store, "fft", 4, 2, 6, rng);
    auto x = random_leaf(5, 4, rng);
    auto w = random_constant(5, 4, rng);
    std::vector<GradTarget> t{{"x", x}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(block(x), w); }, t, strict_options());
  }});

  cases.push_back({"style_token_layer", [] {
    Rng rng(11);
    ParamStore store;
    StyleTokenLayer gst(store, "gst", 6, 8, 4, 2, rng);
    auto r = random_leaf(3, 6, rng);
    auto w = random_constant(3, 8, rng);
    std::vector<GradTarget> t{{"residual", r}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(gst(r).style, w); }, t, strict_options());
  }});

  cases.push_back({"reference_encoder", [] {
    Rng rng(12);
    ParamStore store;
    ReferenceEncoder enc(store, "ref", 6, {2, 2}, 4, rng);
    auto mel = random_leaf(9, 6, rng);
    auto w = random_constant(1, 4, rng);
    std::vector<GradTarget> t{{"mel", mel}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(enc(mel), w); }, t, strict_options());
  }});

  cases.push_back({"context_encoder", [] {
    Rng rng(13);
    ParamStore store;
    ContextEncoder enc(store, "ctx", 5, 6, rng);
    auto a = random_leaf(3, 5, rng), b = random_leaf(2, 5, rng), c = random_leaf(4, 5, rng);
    auto wg = random_constant(1, 6, rng), ws = random_constant(3, 6, rng), ww = random_constant(2, 6, rng);
    std::vector<GradTarget> t{{"sem0", a}, {"sem1", b}, {"sem2", c}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check(
        [&] {
          std::vector<ag::Var> vecs;
          std::vector<ag::Var> cw;
          for (const auto& s : {a, b, c}) {
            auto e = enc.encode_subwords(s);
            vecs.push_back(e.sentence_vector);
            cw.push_back(e.C_w);
          }
          auto sent = enc.encode_sentences(ag::concat_rows(vecs), 1);
          return ag::add(ag::add(probe(sent.C_g, wg), probe(sent.C_s, ws)), probe(cw[1], ww));
        },
        t, strict_options());
  }});

  auto predictor_case = [](bool ar) {
    return [ar] {
      Rng rng(ar ? 15 : 14);
      ParamStore store;
      StylePredictor pred(store, "pred", 6, 4, ar, rng);
      std::vector<ContextEmbeddings> seq;
      std::vector<GradTarget> t;
      for (std::size_t i = 0; i < 3; ++i) {
        ContextEmbeddings c;
        c.C_w = {random_leaf(2 + i, 6, rng)};
        c.C_s = random_leaf(1, 6, rng);
        c.C_g = random_leaf(1, 6, rng);
        c.current = 0;
        t.push_back({"C_w" + std::to_string(i), c.C_w[0]});
        t.push_back({"C_s" + std::to_string(i), c.C_s});
        t.push_back({"C_g" + std::to_string(i), c.C_g});
        seq.push_back(c);
      }
      for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
      auto w = random_constant(4, 4, rng);
      return grad_check(
          [&] {
            auto out = pred.predict_paragraph(seq);
            ag::Var total = ag::Var::zeros(1, 1);
            for (std::size_t i = 0; i < out.size(); ++i) {
              total = ag::add(total, probe(out[i].S_g, ag::slice_rows(w, 0, 1)));
              total = ag::add(total, probe(out[i].S_s, ag::slice_rows(w, 1, 1)));
              total = ag::add(total, ag::scale(ag::sum(ag::mul(out[i].S_w, out[i].S_w)), 0.5));
            }
            return total;
          },
          t, strict_options());
    };
  };
  cases.push_back({"hierarchical_predictor", predictor_case(false)});
  cases.push_back({"autoregressive_predictor", predictor_case(true)});

  cases.push_back({"variance_predictor", [] {
    Rng rng(16);
    ParamStore store;
    VariancePredictor vp(store, "vp", 4, 3, rng);
    auto h = random_leaf(6, 4, rng);
    auto w = random_constant(6, 1, rng);
    std::vector<GradTarget> t{{"hidden", h}};
    for (const auto& p : store.params()) t.push_back({p->name(), p->var()});
    return grad_check([&] { return probe(vp(h), w); }, t, strict_options());
  }});

  cases.push_back({"end_to_end_mel_loss", [] {
    const Corpus corpus = tiny_corpus();
    auto model = MultiStyleModel::create(tiny_model_config(), corpus);
    model->store().set_all_trainable(false);
    model->store().set_trainable("acoustic.", true);
    model->store().set_trainable("extractor.", true);
    const auto& u = corpus.utterance(corpus.document_ids()[0], 1);
    return grad_check(
        [&] {
          const auto s = model->extract(corpus, u, false);
          const auto out = model->synthesize(u, s.S_g, s.S_s, s.S_w, true);
          return acoustic_loss(*model, out, u, false).total;
        },
        model->store(), strict_options(6));
  }});

  cases.push_back({"distillation_loss", [] {
    const Corpus corpus = tiny_corpus();
    auto model = MultiStyleModel::create(tiny_model_config(), corpus);
    model->store().set_all_trainable(false);
    model->store().set_trainable("predictor.", true);
    const auto& u = corpus.utterance(corpus.document_ids()[1], 2);
    const auto s = model->extract(corpus, u, false);
    const PredictedStyles target{s.S_g.detach(), s.S_s.detach(), s.S_w.detach()};
    return grad_check([&] { return style_loss(model->predict(corpus, u), target).total; }, model->store(),
                      strict_options(6));
  }});

  return cases;
}

}  // namespace multistyle::testing
