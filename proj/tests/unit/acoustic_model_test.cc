// Copyright 2026 The multistyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "grad_cases.h"
#include "multistyle/acoustic_model.h"

using namespace multistyle;
using multistyle::testing::random_leaf;
using multistyle::testing::random_values;

namespace {

AcousticConfig tiny_acoustic() {
  AcousticConfig c;
  c.phoneme_count = 6;
  c.mel_bins = 5;
  c.d_model = 8;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.d_ffn = 8;
  c.variance_channels = 4;
  c.variance_bins = 8;
  c.energy_max = 2.0;
  return c;
}

double l2_diff(const ag::Var& a, const ag::Var& b) {
  if (a.size() != b.size()) return INFINITY;
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.value()[i] - b.value()[i]) * (a.value()[i] - b.value()[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("style rows add the three levels per phoneme", "[acoustic]") {
  const std::vector<std::size_t> owner{0, 0, 1};
  const auto rows = replicate_styles(ag::Var::constant(1, 1, {1}), ag::Var::constant(1, 1, {2}),
                                     ag::Var::constant(2, 1, {3, 5}), owner);
  CHECK(rows.value() == std::vector<double>{6, 6, 8});
  const auto zero = replicate_styles(ag::Var::zeros(1, 3), ag::Var::zeros(1, 3), ag::Var::zeros(2, 3), owner);
  CHECK(zero.rows() == 3);
  for (double v : zero.value()) CHECK(v == 0.0);
}

TEST_CASE("style replication is linear in each level", "[acoustic]") {
  Rng rng(1);
  const std::vector<std::size_t> owner{0, 1, 1, 2};
  const auto g = random_leaf(1, 4, rng), s = random_leaf(1, 4, rng), w1 = random_leaf(3, 4, rng),
             w2 = random_leaf(3, 4, rng);
  const auto base = replicate_styles(g, s, w1, owner);
  const auto sum = replicate_styles(g, s, ag::add(w1, w2), owner);
  const auto only = replicate_styles(ag::Var::zeros(1, 4), ag::Var::zeros(1, 4), w2, owner);
  for (std::size_t i = 0; i < sum.size(); ++i)
    CHECK(sum.value()[i] == Catch::Approx(base.value()[i] + only.value()[i]).margin(1e-12));
  const auto scaled = replicate_styles(ag::scale(g, 3.0), ag::Var::zeros(1, 4), ag::Var::zeros(3, 4), owner);
  const auto unit = replicate_styles(g, ag::Var::zeros(1, 4), ag::Var::zeros(3, 4), owner);
  for (std::size_t i = 0; i < scaled.size(); ++i)
    CHECK(scaled.value()[i] == Catch::Approx(3.0 * unit.value()[i]).margin(1e-12));
}

TEST_CASE("length regulation repeats rows by duration", "[acoustic]") {
  const auto h = ag::Var::constant(3, 1, {10, 20, 30});
  CHECK(length_regulate(ag::slice_rows(h, 0, 2), std::vector<std::size_t>{2, 3}).value() ==
        std::vector<double>{10, 10, 20, 20, 20});
  CHECK(length_regulate(h, std::vector<std::size_t>{2, 0, 3}).value() == std::vector<double>{10, 10, 30, 30, 30});
  CHECK(length_regulate(h, std::vector<std::size_t>{1, 1, 1}).value() == h.value());
  Rng rng(2);
  std::uniform_int_distribution<std::size_t> d(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> dur(7);
    for (auto& x : dur) x = d(rng);
    if (std::accumulate(dur.begin(), dur.end(), std::size_t{0}) == 0) dur[0] = 1;
    CHECK(length_regulate(random_leaf(7, 2, rng), dur).rows() ==
          std::accumulate(dur.begin(), dur.end(), std::size_t{0}));
  }
}

TEST_CASE("variance bins cover the configured range end to end", "[acoustic]") {
  CHECK(bucketize(0.0, 0.0, 600.0, 64) == 0);
  CHECK(bucketize(600.0, 0.0, 600.0, 64) == 63);
  CHECK(bucketize(-5.0, 0.0, 600.0, 64) == 0);
  CHECK(bucketize(1e6, 0.0, 600.0, 64) == 63);
  CHECK(bucketize(300.0, 0.0, 600.0, 2) == 1);
}

TEST_CASE("log durations map back to frames", "[acoustic]") {
  CHECK(duration_from_log(std::log(3.0)) == 2);
  CHECK(duration_from_log(0.0) == 0);
  CHECK(duration_from_log(-4.0) == 0);
  CHECK(duration_from_log(std::log(5.4)) == 4);
}

TEST_CASE("phoneme encoding is position sensitive", "[acoustic]") {
  ParamStore store;
  Rng rng(3);
  AcousticModel m(store, "acoustic", tiny_acoustic(), rng);
  const std::vector<std::size_t> ab{1, 2, 3}, ba{3, 2, 1};
  const auto x = m.encode_phonemes(ab), y = m.encode_phonemes(ba);
  CHECK(x.rows() == 3);
  CHECK(x.cols() == 8);
  CHECK(l2_diff(ag::slice_rows(x, 0, 1), ag::slice_rows(y, 2, 1)) > 1e-9);
  CHECK(m.encode_phonemes(ab).value() == x.value());
}

TEST_CASE("decoder keeps the frame count and maps zeros to zeros", "[acoustic]") {
  ParamStore store;
  Rng rng(4);
  AcousticModel m(store, "acoustic", tiny_acoustic(), rng);
  CHECK(m.decode_mel(random_leaf(9, 8, rng)).rows() == 9);
  for (const auto& p : store.with_prefix("acoustic.")) std::fill(p->values().begin(), p->values().end(), 0.0);
  const auto mel = m.decode_mel(ag::Var::zeros(4, 8));
  for (double v : mel.value()) CHECK(v == 0.0);
}

TEST_CASE("teacher-forced synthesis reproduces ground-truth frames", "[acoustic]") {
  ParamStore store;
  Rng rng(5);
  AcousticModel m(store, "acoustic", tiny_acoustic(), rng);
  const std::vector<std::size_t> ids{0, 4, 2, 5};
  VarianceTargets t{{120, 0, 180, 150}, {0.5, 0.1, 1.5, 1.0}, {3, 0, 2, 4}};
  const auto out = m.synthesize(ids, random_leaf(4, 8, rng), &t);
  CHECK(out.mel.rows() == 9);
  CHECK(out.mel.cols() == 5);
  CHECK(out.durations == t.durations);
}

TEST_CASE("free-running durations follow the predicted log durations", "[acoustic]") {
  ParamStore store;
  Rng rng(6);
  AcousticModel m(store, "acoustic", tiny_acoustic(), rng);
  auto* w = store.find("acoustic.duration_predictor.out.weight");
  auto* b = store.find("acoustic.duration_predictor.out.bias");
  REQUIRE(w);
  REQUIRE(b);
  std::fill(w->values().begin(), w->values().end(), 0.0);
  b->values() = {std::log(3.0)};
  const std::vector<std::size_t> ids{1, 2, 3};
  const auto out = m.synthesize(ids, ag::Var::zeros(3, 8), nullptr);
  CHECK(out.durations == std::vector<std::size_t>{2, 2, 2});
  CHECK(out.mel.rows() == 6);
}

TEST_CASE("changing the global style changes the mel", "[acoustic]") {
  ParamStore store;
  Rng rng(7);
  AcousticModel m(store, "acoustic", tiny_acoustic(), rng);
  const std::vector<std::size_t> ids{1, 2, 3}, owner{0, 0, 1};
  VarianceTargets t{{100, 110, 120}, {1, 1, 1}, {2, 2, 2}};
  const auto s = random_leaf(1, 8, rng);
  const auto w = random_leaf(2, 8, rng);
  const auto a = m.synthesize(ids, replicate_styles(random_leaf(1, 8, rng), s, w, owner), &t);
  const auto b = m.synthesize(ids, replicate_styles(random_leaf(1, 8, rng), s, w, owner), &t);
  CHECK(l2_diff(a.mel, b.mel) > 1e-9);
}
