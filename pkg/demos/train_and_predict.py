"""Train a small model on the bundled corpus, then ask it questions.

Memorizing all 64 pairs (128 augmented items) takes roughly ten seconds on
one CPU core; the point is to watch the whole pipeline end to end, not to
generalize.
"""

import json

import numpy as np

from nl2vega.dataset import (
    augment_corpus,
    build_vocabulary,
    bundled_corpus_path,
    corpus_schema,
    encode_corpus,
    load_corpus,
)
from nl2vega.evaluation import evaluate
from nl2vega.model import ModelConfig, build_network, train
from nl2vega.service import PredictService

result = load_corpus(bundled_corpus_path())
items = augment_corpus(result.pairs)
vocab = build_vocabulary(items)
encoded = encode_corpus(items, vocab)
print(f"{len(result.pairs)} pairs -> {len(items)} items, vocabulary {len(vocab)} tokens")

config = ModelConfig(d_model=48, n_heads=4, n_layers=1, d_ff=96, dropout=0.0,
                     max_len=160, learning_rate=0.002, epochs=20,
                     batch_size=8, seed=7)
ckpt = train(encoded, encoded, config, vocab,
             progress=lambda e, tl, vl: print(f"  epoch {e:2d}  loss {tl:.4f}"))
net = build_network(ckpt, dtype=np.float32)

report = evaluate(net, vocab, items)
print(f"\ntoken accuracy {report.token_accuracy['overall']:.3f}, "
      f"guided exact match {report.guided_exact_match['overall']:.3f}")

# The service wraps decode + repair + compile behind one call; the HTTP
# server and the predict subcommand both sit on top of it.
service = PredictService(net, vocab, corpus_schema(result.pairs))
sample = result.pairs[0]
print(f"\nQ: {sample.nl_query}")
answer = service.predict(sample.nl_query, sample.table)
print(f"A: {answer['vega_zero']}")
print(f"   matches the label: {answer['vega_zero'] == sample.label_text}")

# Pinning the chart type narrows decoding to that mark.
pinned = service.predict(sample.nl_query, sample.table, chart="line")
print(f"\nsame question pinned to a line chart:\n   {pinned['vega_zero']}")
print("\ncompiled document for the first answer:")
print(json.dumps(answer["vega_lite"], indent=2))
