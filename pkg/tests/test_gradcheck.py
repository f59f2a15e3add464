"""Finite-difference verification of every backward pass, per encoder variant."""

import time

import numpy as np
import pytest

from modelutil import VOCAB_SIZE, tiny_batch, tiny_config

from nl2vega.model import Seq2Seq, gradient_check

VARIANTS = ("native", "external", "external_cnn", "combined")


@pytest.mark.parametrize("variant", VARIANTS)
def test_all_tensors_match_finite_differences(variant):
    net = Seq2Seq(tiny_config(variant), VOCAB_SIZE, dtype=np.float64)
    batch = tiny_batch(variant)
    started = time.monotonic()
    report = gradient_check(net, batch)
    elapsed = time.monotonic() - started
    bad = ", ".join(f"{t.name}: {t.max_rel_err:.2e}" for t in report.failures())
    assert report.ok, f"gradient mismatches in {bad}"
    assert elapsed < 60.0


def test_requires_float64():
    net = Seq2Seq(tiny_config(), VOCAB_SIZE, dtype=np.float32)
    with pytest.raises(ValueError, match="float64"):
        gradient_check(net, tiny_batch(dtype=np.float32))


def test_report_covers_every_parameter():
    net = Seq2Seq(tiny_config(), VOCAB_SIZE, dtype=np.float64)
    report = gradient_check(net, tiny_batch())
    assert {t.name for t in report.tensors} == set(net.parameters())
    assert report.max_rel_err <= report.tolerance
