# Copyright 2026 The multistyle Authors
# SPDX-License-Identifier: Apache-2.0

import json

import numpy as np
import pytest

import multistyle

SYNTH = {
    "documents": 2,
    "sentences_per_document": 5,
    "min_subwords": 2,
    "max_subwords": 3,
    "max_phonemes_per_subword": 2,
    "test_every": 3,
}


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    manifest = multistyle.generate_corpus(root / "data", seed=3, synth=SYNTH)
    config = {
        "seed": 3,
        "corpus": {"manifest": "data/manifest.jsonl"},
        "model": {
            "d_model": 8,
            "d_ctx": 8,
            "conv_channels": [2, 2],
            "style_tokens": 4,
            "token_heads": 2,
            "acoustic_heads": 2,
            "encoder_layers": 1,
            "decoder_layers": 1,
            "d_ffn": 8,
            "variance_channels": 4,
            "variance_bins": 8,
            "context_radius": 1,
            "reference_radius": 1,
            "provider": {"kind": "hash", "d_sem": 8},
        },
        "train": {
            "batch_size": 2,
            "stage1_per_level": 2,
            "stage2_steps": 2,
            "stage3_steps": 2,
            "warmup_steps": 1,
        },
        "output": {"dir": "out"},
    }
    (root / "config.json").write_text(json.dumps(config))
    log = multistyle.train(root / "config.json")
    return root, multistyle.Corpus.load(manifest), log


def test_corpus_shape(run):
    _, corpus, _ = run
    assert len(corpus) == 10
    assert len(corpus.document_ids) == 2
    key = corpus.keys("train")[0]
    u = corpus.utterance(key)
    assert u["mel"].shape == (sum(u["durations"]), corpus.mel_bins)
    assert len(u["pitch"]) == u["mel"].shape[0]
    assert sum(u["subword_phoneme_counts"]) == len(u["phonemes"])


def test_training_log(run):
    _, _, log = run
    assert [r["stage"] for r in log] == [1] * 6 + [2] * 2 + [3] * 2
    assert all(np.isfinite(r["loss"]) for r in log)
    assert log[0]["level"] == "global"


def test_synthesis(run):
    root, corpus, _ = run
    model = multistyle.Model.load(root / "out" / "stage3")
    assert model.mode == "hierarchical"
    key = corpus.keys("test")[0]
    out = model.synthesize(corpus, key)
    assert out["mel"].shape[1] == corpus.mel_bins
    assert out["mel"].shape[0] == len(out["pitch"])
    styles = model.styles(corpus, key)
    assert np.all(np.abs(styles["global"]) < 1)
    assert styles["subword"].shape[0] == len(corpus.utterance(key)["subwords"])
    para = model.synthesize_paragraph(corpus, corpus.document_ids[0])
    assert para["mel"].shape[0] == sum(s["mel"].shape[0] for s in para["sentences"])
    assert not para["autoregressive"]


def test_copy_evaluation_is_zero(run):
    _, corpus, _ = run
    report = multistyle.evaluate(corpus, mode="copy", split="")
    for name in ("mcd", "f0_rmse", "energy_rmse", "duration_mse"):
        assert report[name] == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        multistyle.evaluate(corpus, mode="predicted")


def test_attention_rows(run):
    root, corpus, _ = run
    model = multistyle.Model.load(root / "out" / "stage2")
    weights, keys, _ = multistyle.attention(model, corpus, samples=3, window=3)
    assert weights.shape == (len(keys), 3)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-9)


def test_dtw_and_mcd():
    a = np.array([[0.0], [1.0], [2.0]])
    b = np.array([[0.0], [1.0], [1.0], [2.0]])
    pairs, cost = multistyle.dtw(a, b)
    assert pairs[0] == (0, 0) and pairs[-1] == (2, 3)
    assert cost == 0.0
    mel = np.random.default_rng(0).normal(size=(6, 20))
    assert multistyle.mcd(mel, mel) == pytest.approx(0.0, abs=1e-12)


def test_tensor_round_trip(tmp_path):
    x = np.arange(6, dtype=float).reshape(2, 3) / 7
    multistyle.write_tensor(tmp_path / "x.mst", x, dtype="float64")
    np.testing.assert_array_equal(multistyle.read_tensor(tmp_path / "x.mst"), x)
    with pytest.raises(ValueError):
        multistyle.write_tensor(tmp_path / "y.mst", x, dtype="int8")
    with pytest.raises(Exception):
        multistyle.write_tensor(tmp_path / "z.mst", np.array([np.nan]))


def test_linear_probe_identity():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 2))
    y = 2 * x[:, 0] - x[:, 1]
    r = multistyle.linear_probe(x, y, x, y, ridge=0.0)
    assert r["r2"] == pytest.approx(1.0, abs=1e-9)


def test_errors(tmp_path):
    with pytest.raises(ValueError, match="stage_one"):
        (tmp_path / "c.json").write_text(json.dumps({"train": {"stage_one": 1}}))
        multistyle.train(tmp_path / "c.json")
    with pytest.raises(OSError):
        multistyle.Corpus.load(tmp_path / "missing.jsonl")
