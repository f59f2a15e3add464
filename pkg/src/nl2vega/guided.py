"""Constrained decoding: grammar- and schema-aware filtering of model logits.

The decoder walks an automaton over vega-zero positions. At each step the
model proposes its top five candidates; the highest-probability candidate
that is legal at the current position is emitted, and if all five are
illegal, the globally highest-probability legal token is taken instead, so
the finished query always parses and validates no matter how bad the model
is. Ties break toward the lowest token id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import EOS, RESERVED_TOKENS, AugmentedItem, Vocabulary
from .errors import EncodingError
from .model.network import Batch, Seq2Seq, make_batch
from .vega_zero.ast import (
    AGG_FUNCTIONS,
    BIN_INTERVALS,
    CHART_TYPES,
    COMPARISON_OPS,
    SORT_AXES,
    SORT_DIRECTIONS,
    TableSchema,
)
from .vega_zero.lexer import is_marker
from .vega_zero.parser import CLAUSE_KEYWORDS, TRANSFORM_KEYWORDS

TOP_K = 5

# tokens that can never fill an open value slot: they either break the parse
# (clause keywords) or create connector/operator ambiguity
_OPEN_EXCLUDE = (set(CLAUSE_KEYWORDS) | set(COMPARISON_OPS)
                 | {"and", "or", "by", "like", "between"} | set(RESERVED_TOKENS))


@dataclass(frozen=True)
class DecoderMeta:
    """Source-side facts that constrain decoding."""

    table: str
    columns: tuple[str, ...]
    column_kinds: dict[str, str] = field(default_factory=dict)
    chart_given: bool = False
    chart_word: Optional[str] = None

    @classmethod
    def from_schema(cls, table: TableSchema, chart_word: Optional[str] = None) -> "DecoderMeta":
        return cls(
            table=table.name.lower(),
            columns=tuple(c.name.lower() for c in table.columns),
            column_kinds={c.name.lower(): c.kind for c in table.columns},
            chart_given=chart_word is not None,
            chart_word=chart_word,
        )

    @classmethod
    def from_item(cls, item: AugmentedItem) -> "DecoderMeta":
        table = item.pair.schema.table(item.pair.table)
        chart = item.pair.label.mark if item.chart_given else None
        return cls.from_schema(table, chart)


class DecoderState:
    """Automaton over label positions; tracks legality of every next token."""

    def __init__(self, meta: DecoderMeta, vocab: Vocabulary):
        self.meta = meta
        v = set(vocab.tokens)
        self._open = sorted(t for t in v
                            if t not in _OPEN_EXCLUDE and not is_marker(t))
        self._digits = [t for t in self._open if t.isdigit() and int(t) > 0]
        self._columns = [c for c in meta.columns if c in v]
        if not self._columns:
            raise EncodingError(f"no column of table {meta.table!r} is in the model vocabulary")
        if meta.table not in v:
            raise EncodingError(f"table token {meta.table!r} is not in the model vocabulary")
        self._charts = ([meta.chart_word] if meta.chart_given
                        else [c for c in CHART_TYPES if c in v])
        if not self._charts or any(c not in v for c in self._charts):
            raise EncodingError("no usable chart-type token in the model vocabulary")
        self._aggs = [a for a in AGG_FUNCTIONS if a in v]
        required = {"mark", "data", "encoding", "x", "y", "aggregate", EOS}
        missing = sorted(required - v)
        if missing or not self._aggs:
            raise EncodingError(f"vocabulary lacks mandatory query tokens: {missing or AGG_FUNCTIONS}")
        self._axes = [a for a in SORT_AXES if a in v]
        self._dirs = [d for d in SORT_DIRECTIONS if d in v]
        self._intervals = [i for i in BIN_INTERVALS if i in v]
        self._ops = [op for op in COMPARISON_OPS if op in v]
        if "like" in v and self._open:
            self._ops.append("like")
        if "between" in v and "and" in v and self._open:
            self._ops.append("between")
        self._has = v.__contains__

        self.state = "MARK_KW"
        self.seen: set[str] = set()
        self.x_column: Optional[str] = None
        self.tokens: list[str] = []

    # which transform clauses are still available and actually completable
    def _clause_gates(self) -> list[str]:
        out = []
        if "filter" not in self.seen and self._ops and self._open:
            out.append("filter")
        if "group" not in self.seen and (self._axes or self._columns):
            out.append("group")
        if "sort" not in self.seen and self._axes and self._dirs:
            out.append("sort")
        if ("bin" not in self.seen and self._has("x") and self._has("by")
                and self._intervals
                and self.meta.column_kinds.get(self.x_column) == "temporal"):
            out.append("bin")
        if "topk" not in self.seen and self._digits:
            out.append("topk")
        return out

    def allowed(self) -> list[str]:
        s = self.state
        if s == "MARK_KW":
            return ["mark"]
        if s == "CHART":
            return list(self._charts)
        if s == "DATA_KW":
            return ["data"]
        if s == "TABLE":
            return [self.meta.table]
        if s == "ENCODING_KW":
            return ["encoding"]
        if s == "X_KW":
            return ["x"]
        if s in ("X_COL", "Y_COL", "COLOR_COL", "FILTER_COL"):
            return list(self._columns)
        if s == "Y_KW":
            return ["y"]
        if s == "AGG_KW":
            return ["aggregate"]
        if s == "AGG_FN":
            return list(self._aggs)
        if s == "AFTER_Y":
            out = ["color"] if self._has("color") else []
            if self._has("transform") and self._clause_gates():
                out.append("transform")
            return out + [EOS]
        if s == "AFTER_COLOR":
            out = ["transform"] if self._has("transform") and self._clause_gates() else []
            return out + [EOS]
        if s == "TRANSFORM_FIRST":
            return self._clause_gates()
        if s == "CLAUSE_BOUNDARY":
            return self._clause_gates() + [EOS]
        if s == "FILTER_BOUNDARY":
            out = [c for c in ("and", "or") if self._has(c)]
            return out + self._clause_gates() + [EOS]
        if s == "FILTER_OP":
            return list(self._ops)
        if s in ("FILTER_VAL", "LIKE_PAT", "BETWEEN_LOW", "BETWEEN_HIGH"):
            return list(self._open)
        if s == "BETWEEN_AND":
            return ["and"]
        if s == "GROUP_VAL":
            return self._axes + [c for c in self._columns if c not in self._axes]
        if s == "SORT_AXIS":
            return list(self._axes)
        if s == "SORT_DIR":
            return list(self._dirs)
        if s == "BIN_X":
            return ["x"]
        if s == "BIN_BY":
            return ["by"]
        if s == "BIN_INTERVAL":
            return list(self._intervals)
        if s == "TOPK_NUM":
            return list(self._digits)
        raise AssertionError(f"unreachable decoder state {s!r}")

    # cheapest-first clause order used when a decode must wrap up: group and
    # topk finish in one token, sort in two, bin in three, filter in at least
    # three more
    _CLOSE_ORDER = ("group", "topk", "sort", "bin", "filter")

    def closing_allowed(self) -> list[str]:
        """Legal tokens on the shortest path to a complete query."""
        allowed = self.allowed()
        if EOS in allowed:
            return [EOS]
        if self.state == "TRANSFORM_FIRST":
            for kind in self._CLOSE_ORDER:
                if kind in allowed:
                    return [kind]
        if self.state == "FILTER_OP":
            short = [op for op in allowed if op != "between"]
            if short:
                return short
        return allowed

    def advance(self, token: str) -> None:
        s = self.state
        self.tokens.append(token)
        if s == "MARK_KW":
            self.state = "CHART"
        elif s == "CHART":
            self.state = "DATA_KW"
        elif s == "DATA_KW":
            self.state = "TABLE"
        elif s == "TABLE":
            self.state = "ENCODING_KW"
        elif s == "ENCODING_KW":
            self.state = "X_KW"
        elif s == "X_KW":
            self.state = "X_COL"
        elif s == "X_COL":
            self.x_column = token
            self.state = "Y_KW"
        elif s == "Y_KW":
            self.state = "AGG_KW"
        elif s == "AGG_KW":
            self.state = "AGG_FN"
        elif s == "AGG_FN":
            self.state = "Y_COL"
        elif s == "Y_COL":
            self.state = "AFTER_Y"
        elif s == "AFTER_Y":
            self.state = {"color": "COLOR_COL", "transform": "TRANSFORM_FIRST"}[token]
        elif s == "COLOR_COL":
            self.state = "AFTER_COLOR"
        elif s == "AFTER_COLOR":
            self.state = "TRANSFORM_FIRST"
        elif s in ("TRANSFORM_FIRST", "CLAUSE_BOUNDARY", "FILTER_BOUNDARY"):
            if token in ("and", "or"):
                self.state = "FILTER_COL"
            else:
                self.seen.add(token)
                self.state = {"filter": "FILTER_COL", "group": "GROUP_VAL",
                              "sort": "SORT_AXIS", "bin": "BIN_X",
                              "topk": "TOPK_NUM"}[token]
        elif s == "FILTER_COL":
            self.state = "FILTER_OP"
        elif s == "FILTER_OP":
            self.state = {"like": "LIKE_PAT", "between": "BETWEEN_LOW"}.get(token, "FILTER_VAL")
        elif s in ("FILTER_VAL", "LIKE_PAT", "BETWEEN_HIGH"):
            self.state = "FILTER_BOUNDARY"
        elif s == "BETWEEN_LOW":
            self.state = "BETWEEN_AND"
        elif s == "BETWEEN_AND":
            self.state = "BETWEEN_HIGH"
        elif s == "GROUP_VAL":
            self.state = "CLAUSE_BOUNDARY"
        elif s == "SORT_AXIS":
            self.state = "SORT_DIR"
        elif s == "SORT_DIR":
            self.state = "CLAUSE_BOUNDARY"
        elif s == "BIN_X":
            self.state = "BIN_BY"
        elif s == "BIN_BY":
            self.state = "BIN_INTERVAL"
        elif s == "BIN_INTERVAL":
            self.state = "CLAUSE_BOUNDARY"
        elif s == "TOPK_NUM":
            self.state = "CLAUSE_BOUNDARY"
        else:
            raise AssertionError(f"cannot advance from state {s!r}")


@dataclass(frozen=True)
class DecodeResult:
    tokens: tuple[str, ...]
    truncated: bool

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def batch_of_one(item: AugmentedItem, vocab: Vocabulary,
                 external: Optional[np.ndarray] = None, dtype=np.float32) -> Batch:
    from .dataset import encode_example

    example = encode_example(item, vocab)
    ext = [external] if external is not None else None
    return make_batch([example], vocab.pad_id, dtype=dtype, external=ext)


def guided_search(net: Seq2Seq, vocab: Vocabulary, batch: Batch, meta: DecoderMeta,
                  max_len: int = 64) -> DecodeResult:
    """Decode one source under grammar and schema constraints.

    `max_len` is a soft budget: once reached, the automaton is steered down
    its shortest legal completion, so the result always parses. `truncated`
    reports that the budget was hit.
    """
    memory = net.encode(batch)
    state = DecoderState(meta, vocab)
    prefix = [vocab.sos_id]
    tokens: list[str] = []
    # any state closes within a handful of forced tokens
    for _ in range(max_len + 16):
        closing = len(tokens) >= max_len
        logits = net.decode_step(memory[0], batch.src_mask[0], prefix)
        allowed = state.closing_allowed() if closing else state.allowed()
        allowed_ids = {vocab.id_of(t) for t in allowed}
        if not allowed_ids:
            raise AssertionError(f"empty allowed set in state {state.state!r}")
        ranked = np.argsort(-logits, kind="stable")
        pick = next((int(i) for i in ranked[:TOP_K] if int(i) in allowed_ids), None)
        if pick is None:
            pick = min(allowed_ids, key=lambda i: (-float(logits[i]), i))
        if pick == vocab.eos_id:
            return DecodeResult(tuple(tokens), truncated=closing)
        token = vocab.token_of(pick)
        state.advance(token)
        tokens.append(token)
        prefix.append(pick)
    raise AssertionError("guided decode failed to close")


def greedy_decode(net: Seq2Seq, vocab: Vocabulary, batch: Batch,
                  max_len: int = 64) -> DecodeResult:
    """Unconstrained argmax decoding; the baseline the constraints improve on."""
    memory = net.encode(batch)
    prefix = [vocab.sos_id]
    tokens: list[str] = []
    for _ in range(max_len):
        logits = net.decode_step(memory[0], batch.src_mask[0], prefix)
        pick = int(np.argmax(logits))
        if pick == vocab.eos_id:
            return DecodeResult(tuple(tokens), truncated=False)
        tokens.append(vocab.token_of(pick))
        prefix.append(pick)
    return DecodeResult(tuple(tokens), truncated=True)
