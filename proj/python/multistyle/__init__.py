# Copyright 2026 The multistyle Authors
# SPDX-License-Identifier: Apache-2.0
"""Multi-scale speaking-style modelling for expressive speech synthesis."""

from ._multistyle import (
    Corpus,
    Model,
    attention,
    dtw,
    evaluate,
    generate_corpus,
    linear_probe,
    mcd,
    read_tensor,
    train,
    write_tensor,
)

__all__ = [
    "Corpus",
    "Model",
    "attention",
    "dtw",
    "evaluate",
    "generate_corpus",
    "linear_probe",
    "mcd",
    "read_tensor",
    "train",
    "write_tensor",
]
