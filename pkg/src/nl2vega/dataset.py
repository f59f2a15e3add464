"""Corpus ingestion, source-sequence augmentation, vocabulary and id encoding.

Corpus files are JSONL, one pair per line with fields nl, label, table,
schema, values, hardness, split. Each pair is augmented into two model inputs:
one with the chart-type slot left as the ``[T]`` placeholder and one with the
chart word filled in.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import CorpusError, EncodingError
from .vega_zero import (
    ColumnSchema,
    DatabaseSchema,
    TableSchema,
    VegaZeroAST,
    parse,
    serialize,
    serialize_tokens,
    tokenize,
    validate,
)

HARDNESS_LEVELS = ("Easy", "Medium", "Hard", "Extra Hard")

# segment ids for source tokens
SEG_NL = 0
SEG_TEMPLATE = 1
SEG_DATA = 2
SEG_COL = 3
SEG_VAL = 4
SEG_SPECIAL = 5
NUM_SEGMENTS = 6

PAD, SOS, EOS, UNK = "<pad>", "<sos>", "<eos>", "<unk>"
RESERVED_TOKENS = (PAD, SOS, EOS, UNK)

MAX_SAMPLE_VALUES = 16
MAX_SOURCE_LEN = 256

TEMPLATE_SLOTS = ("[T]", "[X]", "[Y]", "[Z]", "[F]", "[G]", "[B]", "[S]", "[K]", "[AggFunction]")


@dataclass(frozen=True)
class NvPair:
    """One natural-language query paired with its vega-zero label."""

    nl_query: str
    label: VegaZeroAST
    table: str
    schema: DatabaseSchema
    hardness: Optional[str] = None
    split: str = "train"

    @property
    def label_text(self) -> str:
        return serialize(self.label)


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    raw: str


@dataclass
class CorpusLoadResult:
    pairs: list[NvPair]
    rejects: list[Reject]

    def split(self, name: str) -> list[NvPair]:
        return [p for p in self.pairs if p.split == name]

    def write_rejects(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.rejects:
                fh.write(json.dumps({"line": r.line, "reason": r.reason, "raw": r.raw}) + "\n")


@dataclass(frozen=True)
class SourceSequence:
    tokens: tuple[str, ...]
    segment_ids: tuple[int, ...]
    chart_given: bool

    def __post_init__(self):
        if len(self.tokens) != len(self.segment_ids):
            raise ValueError("tokens and segment_ids must have equal length")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def _schema_from_record(record: dict, table: str) -> DatabaseSchema:
    cols = tuple(ColumnSchema(c["name"], c["kind"]) for c in record["schema"]["columns"])
    values = tuple(str(v) for v in record.get("values", []))
    return DatabaseSchema((TableSchema(table, cols, values),))


def _pair_from_record(record: dict) -> NvPair:
    for key in ("nl", "label", "table", "schema"):
        if key not in record:
            raise CorpusError(f"missing field '{key}'")
    label = parse(tokenize(record["label"]))
    table = record["table"].lower()
    schema = _schema_from_record(record, table)
    report = validate(label, schema)
    if not report.ok:
        first = report.errors()[0]
        raise CorpusError(f"label does not validate: {first.clause}: {first.message}")
    hardness = record.get("hardness")
    if hardness is not None and hardness not in HARDNESS_LEVELS:
        raise CorpusError(f"unknown hardness {hardness!r}")
    return NvPair(
        nl_query=record["nl"],
        label=label,
        table=table,
        schema=schema,
        hardness=hardness,
        split=record.get("split", "train"),
    )


def load_corpus(path: Union[str, Path], fmt: str = "jsonl") -> CorpusLoadResult:
    """Load pairs from a JSONL or CSV corpus file.

    Malformed records land in the rejects list instead of being dropped; more
    than 10% rejects (or an empty file) raises CorpusError.
    """
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc

    records: list[tuple[int, Union[dict, str]]] = []
    if fmt == "jsonl":
        for i, line in enumerate(text.splitlines(), start=1):
            if line.strip():
                records.append((i, line))
    elif fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        for i, row in enumerate(reader, start=2):
            for key in ("schema", "values"):
                if isinstance(row.get(key), str) and row[key]:
                    try:
                        row[key] = json.loads(row[key])
                    except json.JSONDecodeError:
                        pass
            records.append((i, row))
    else:
        raise CorpusError(f"unknown corpus format {fmt!r}")

    pairs: list[NvPair] = []
    rejects: list[Reject] = []
    for line_no, raw in records:
        try:
            record = json.loads(raw) if isinstance(raw, str) else raw
            if not isinstance(record, dict):
                raise CorpusError("record is not an object")
            pairs.append(_pair_from_record(record))
        except Exception as exc:  # noqa: BLE001 - every malformed record becomes a reject
            rejects.append(Reject(line_no, str(exc), raw if isinstance(raw, str) else json.dumps(raw)))

    total = len(pairs) + len(rejects)
    if total == 0:
        raise CorpusError(f"corpus {path} contains no records")
    if len(rejects) > 0.10 * total:
        raise CorpusError(f"corpus {path}: {len(rejects)}/{total} records rejected (>10%)")
    return CorpusLoadResult(pairs, rejects)


def template_tokens(table: str, chart_word: Optional[str] = None) -> list[str]:
    """The query template carried in the <C> section; [T] filled iff a chart word is given."""
    mark = chart_word if chart_word is not None else "[T]"
    return [
        "mark", mark, "data", table,
        "encoding", "x", "[X]", "y", "aggregate", "[AggFunction]", "[Y]", "color", "[Z]",
        "transform", "filter", "[F]", "group", "[G]", "bin", "[B]", "sort", "[S]", "topk", "[K]",
    ]


def build_source_sequence(pair: NvPair, chart_given: bool) -> SourceSequence:
    """Augmented model input: <N> nl </N> <C> template </C> <D> schema </D>."""
    table = pair.schema.table(pair.table)
    if table is None:
        raise CorpusError(f"table {pair.table!r} missing from the pair's schema")

    nl = tokenize(pair.nl_query)
    chart_word = pair.label.mark if chart_given else None
    if chart_given and pair.label.has_placeholder_mark:
        raise CorpusError("cannot fill the chart slot: label mark is the placeholder")
    template = template_tokens(pair.table, chart_word)
    columns = [c.lower() for c in table.column_names()]
    values = [v.lower() for v in table.sample_values[:MAX_SAMPLE_VALUES]]

    tokens: list[str] = []
    segments: list[int] = []

    def put(toks: Iterable[str], seg: int) -> None:
        for t in toks:
            tokens.append(t)
            segments.append(seg)

    put(["<N>"], SEG_SPECIAL)
    put(nl, SEG_NL)
    put(["</N>", "<C>"], SEG_SPECIAL)
    put(template, SEG_TEMPLATE)
    put(["</C>", "<D>"], SEG_SPECIAL)
    put([pair.table], SEG_DATA)
    put(["<COL>"], SEG_SPECIAL)
    put(columns, SEG_COL)
    put(["</COL>", "<VAL>"], SEG_SPECIAL)
    put(values, SEG_VAL)
    put(["</VAL>", "</D>"], SEG_SPECIAL)

    if len(tokens) > MAX_SOURCE_LEN:
        tokens, segments = _truncate(tokens, segments)
    return SourceSequence(tuple(tokens), tuple(segments), chart_given)


def _truncate(tokens: list[str], segments: list[int]) -> tuple[list[str], list[int]]:
    # drop VAL tokens first (lowest information), then trim the NL tail
    overflow = len(tokens) - MAX_SOURCE_LEN
    keep = [True] * len(tokens)
    for idx in range(len(tokens) - 1, -1, -1):
        if overflow <= 0:
            break
        if segments[idx] == SEG_VAL:
            keep[idx] = False
            overflow -= 1
    for idx in range(len(tokens) - 1, -1, -1):
        if overflow <= 0:
            break
        if segments[idx] == SEG_NL:
            keep[idx] = False
            overflow -= 1
    tokens = [t for t, k in zip(tokens, keep) if k]
    segments = [s for s, k in zip(segments, keep) if k]
    return tokens, segments


@dataclass(frozen=True)
class AugmentedItem:
    """One training/evaluation item: an augmented source and its label tokens."""

    source: SourceSequence
    label_tokens: tuple[str, ...]
    pair: NvPair

    @property
    def chart_given(self) -> bool:
        return self.source.chart_given

    @property
    def label_text(self) -> str:
        return " ".join(self.label_tokens)


def augment_pair(pair: NvPair) -> list[AugmentedItem]:
    """Exactly two variants per pair: chart slot placeholder and chart slot filled."""
    label = tuple(serialize_tokens(pair.label))
    return [
        AugmentedItem(build_source_sequence(pair, chart_given=False), label, pair),
        AugmentedItem(build_source_sequence(pair, chart_given=True), label, pair),
    ]


def augment_corpus(pairs: Sequence[NvPair]) -> list[AugmentedItem]:
    items: list[AugmentedItem] = []
    for pair in pairs:
        items.extend(augment_pair(pair))
    return items


class Vocabulary:
    """Bidirectional token <-> id map with fixed reserved ids.

    Ids are deterministic for a given token set: reserved tokens first, then
    all remaining tokens sorted, so shuffled corpora build identical maps.
    """

    def __init__(self, tokens: Iterable[str]):
        ordered = list(RESERVED_TOKENS)
        seen = set(ordered)
        for tok in sorted(set(tokens)):
            if tok not in seen:
                ordered.append(tok)
                seen.add(tok)
        self._tokens = ordered
        self._ids = {tok: i for i, tok in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def sos_id(self) -> int:
        return self._ids[SOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def id_of(self, token: str, default: Optional[int] = None) -> int:
        if default is None:
            return self._ids[token]
        return self._ids.get(token, default)

    def token_of(self, idx: int) -> str:
        return self._tokens[idx]

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text("\n".join(self._tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        lines = Path(path).read_text("utf-8").splitlines()
        vocab = cls.__new__(cls)
        vocab._tokens = lines
        vocab._ids = {tok: i for i, tok in enumerate(lines)}
        for i, tok in enumerate(RESERVED_TOKENS):
            if vocab._ids.get(tok) != i:
                raise CorpusError(f"vocabulary file {path} has unstable reserved ids")
        return vocab

    @classmethod
    def from_token_list(cls, tokens: Sequence[str]) -> "Vocabulary":
        vocab = cls.__new__(cls)
        vocab._tokens = list(tokens)
        vocab._ids = {tok: i for i, tok in enumerate(vocab._tokens)}
        return vocab


def build_vocabulary(items: Sequence[AugmentedItem]) -> Vocabulary:
    if not items:
        raise CorpusError("cannot build a vocabulary from zero items")
    tokens: set[str] = set()
    for item in items:
        tokens.update(item.source.tokens)
        tokens.update(item.label_tokens)
    return Vocabulary(tokens)


@dataclass(frozen=True)
class EncodedExample:
    source_ids: tuple[int, ...]
    source_segment_ids: tuple[int, ...]
    label_ids: tuple[int, ...]  # <sos> ... <eos>


@dataclass(frozen=True)
class EncodedItem:
    example: EncodedExample
    item: AugmentedItem

    @property
    def chart_given(self) -> bool:
        return self.item.chart_given


def encode_example(item: AugmentedItem, vocab: Vocabulary) -> EncodedExample:
    """Ids for one item; unknown source tokens become <unk>, unknown label tokens error."""
    source_ids = tuple(vocab.id_of(t, vocab.unk_id) for t in item.source.tokens)
    label_ids = [vocab.sos_id]
    for tok in item.label_tokens:
        if tok not in vocab:
            raise EncodingError(f"label token {tok!r} outside the closed vocabulary")
        label_ids.append(vocab.id_of(tok))
    label_ids.append(vocab.eos_id)
    return EncodedExample(source_ids, tuple(item.source.segment_ids), tuple(label_ids))


def encode_label_tokens(tokens: Sequence[str], vocab: Vocabulary) -> tuple[int, ...]:
    ids = [vocab.sos_id]
    for tok in tokens:
        if tok not in vocab:
            raise EncodingError(f"label token {tok!r} outside the closed vocabulary")
        ids.append(vocab.id_of(tok))
    ids.append(vocab.eos_id)
    return tuple(ids)


def decode_tokens(ids: Sequence[int], vocab: Vocabulary, strip_special: bool = True) -> list[str]:
    tokens = [vocab.token_of(i) for i in ids]
    if strip_special:
        tokens = [t for t in tokens if t not in (PAD, SOS, EOS)]
    return tokens


def encode_corpus(items: Sequence[AugmentedItem], vocab: Vocabulary) -> list[EncodedItem]:
    return [EncodedItem(encode_example(item, vocab), item) for item in items]


def bundled_corpus_path() -> Path:
    """Location of the mini-corpus shipped inside the package."""
    from importlib import resources

    with resources.as_file(resources.files("nl2vega.data") / "mini_corpus.jsonl") as p:
        return Path(p)


def corpus_schema(pairs: Sequence[NvPair]) -> DatabaseSchema:
    """Union of all per-pair tables (first definition of each table wins)."""
    tables: dict[str, TableSchema] = {}
    for pair in pairs:
        t = pair.schema.table(pair.table)
        if t is not None and t.name.lower() not in tables:
            tables[t.name.lower()] = t
    return DatabaseSchema(tuple(tables.values()))
