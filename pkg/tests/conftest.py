"""Session-wide fixtures shared by the CLI, service, and acceptance tests."""

import pytest

from nl2vega.dataset import (
    augment_corpus,
    build_vocabulary,
    bundled_corpus_path,
    encode_corpus,
    load_corpus,
)
from nl2vega.model import ModelConfig, save, train


@pytest.fixture(scope="session")
def overfit_checkpoint(tmp_path_factory):
    """Checkpoint memorizing the two shortest corpus pairs.

    Trained once per session; the vocabulary covers the whole corpus so the
    checkpoint can decode against any corpus table, but only the two
    memorized pairs come back verbatim.
    """
    result = load_corpus(bundled_corpus_path())
    pairs = sorted(result.pairs, key=lambda p: len(p.label_text))[:2]
    vocab = build_vocabulary(augment_corpus(result.pairs))
    encoded = encode_corpus(augment_corpus(pairs), vocab)
    cfg = ModelConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32, dropout=0.0,
                      max_len=96, learning_rate=0.005, epochs=150,
                      batch_size=2, seed=3)
    ckpt = train(encoded, encoded, cfg, vocab)
    path = tmp_path_factory.mktemp("overfit") / "overfit.nvz"
    save(ckpt, path)
    return path, pairs
