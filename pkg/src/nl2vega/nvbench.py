"""Importer for the published benchmark CSVs into the neutral JSONL corpus.

Expects a directory holding train.csv / dev.csv / test.csv where each row
carries an already-augmented ``source`` sequence and a ``labels`` vega-zero
string. The two augmented variants of a pair collapse back into one JSONL
record; column kinds are inferred from how each column is used across the
whole dataset (bin implies temporal, numeric aggregation or comparison
implies numeric, anything else is categorical).
"""

from __future__ import annotations

import csv
import json
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import CorpusError
from .vega_zero import Comparison, VegaZeroAST, parse, serialize, tokenize, validate
from .vega_zero.ast import ColumnSchema, DatabaseSchema, TableSchema

SPLIT_FILES = {"train": "train.csv", "dev": "dev.csv", "test": "test.csv"}

csv.field_size_limit(min(sys.maxsize, 2**31 - 1))


@dataclass
class SplitReport:
    rows: int = 0
    pairs: int = 0
    vis_queries: int = 0
    encoded_items: int = 0
    rejects: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "pairs": self.pairs,
            "vis_queries": self.vis_queries,
            "encoded_items": self.encoded_items,
            "rejects": dict(self.rejects),
        }


@dataclass
class ImportReport:
    splits: dict[str, SplitReport]

    def to_dict(self) -> dict:
        return {name: rep.to_dict() for name, rep in self.splits.items()}

    def summary_line(self) -> str:
        qs = "/".join(str(self.splits[s].vis_queries) for s in SPLIT_FILES)
        items = "/".join(str(self.splits[s].encoded_items) for s in SPLIT_FILES)
        return f"vis queries {qs}, encoded items {items} (train/dev/test)"


@dataclass
class _RawPair:
    nl: str
    label: VegaZeroAST
    label_text: str
    table: str
    columns: list[str]
    values: list[str]
    hardness: Optional[str]
    split: str


def _section(tokens: list[str], open_mark: str, close_mark: str) -> list[str]:
    try:
        i = tokens.index(open_mark)
        j = tokens.index(close_mark, i + 1)
    except ValueError as exc:
        raise CorpusError(f"source lacks {open_mark} ... {close_mark}") from exc
    return tokens[i + 1 : j]


def _parse_source(source: str) -> tuple[str, str, list[str], list[str]]:
    tokens = source.split()
    nl = " ".join(_section(tokens, "<N>", "</N>"))
    data = _section(tokens, "<D>", "</D>")
    if not data:
        raise CorpusError("empty <D> section")
    if data.count("<COL>") > 1:
        raise CorpusError("multi-table pair")
    table = data[0]
    cols = _section(data, "<COL>", "</COL>")
    vals = _section(data, "<VAL>", "</VAL>")
    return nl, table, cols, vals


def _read_rows(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"source", "labels"} <= set(reader.fieldnames):
            raise CorpusError(f"{path} lacks the source/labels columns")
        return list(reader)


def _collect_pairs(src_dir: Path, report: ImportReport) -> list[_RawPair]:
    pairs: list[_RawPair] = []
    for split, fname in SPLIT_FILES.items():
        path = src_dir / fname
        if not path.exists():
            raise CorpusError(f"missing split file {path}")
        rows = _read_rows(path)
        split_rep = report.splits[split]
        split_rep.rows = len(rows)

        seen: dict[tuple[str, str], _RawPair] = {}
        for row in rows:
            try:
                nl, table, cols, vals = _parse_source(row["source"])
                label = parse(tokenize(row["labels"]))
                if label.has_placeholder_mark:
                    raise CorpusError("label keeps the chart placeholder")
                label_text = serialize(label)
            except CorpusError as exc:
                split_rep.rejects[str(exc)] += 1
                continue
            except Exception as exc:  # noqa: BLE001 - parser errors become counted rejects
                split_rep.rejects[f"label does not parse: {exc}"] += 1
                continue
            key = (nl, label_text)
            if key in seen:
                continue
            hardness = row.get("hardness") or None
            seen[key] = _RawPair(nl, label, label_text, table, cols, vals, hardness, split)
        pairs.extend(seen.values())
    return pairs


def _infer_schemas(pairs: list[_RawPair]) -> dict[str, TableSchema]:
    """Column kinds from usage anywhere in the dataset; first-seen column order."""
    columns: dict[str, list[str]] = {}
    values: dict[str, list[str]] = {}
    kind_votes: dict[tuple[str, str], set[str]] = {}

    def vote(table: str, column: str, kind: str) -> None:
        kind_votes.setdefault((table, column.lower()), set()).add(kind)

    for p in pairs:
        cols = columns.setdefault(p.table, [])
        for c in p.columns:
            if c.lower() not in (x.lower() for x in cols):
                cols.append(c)
        vals = values.setdefault(p.table, [])
        for v in p.values:
            if v not in vals:
                vals.append(v)

        a = p.label
        if a.bin is not None:
            vote(p.table, a.x, "temporal")
        if a.y_agg in ("sum", "avg", "max", "min"):
            vote(p.table, a.y, "numeric")
        if a.filter is not None:
            for cond in a.filter.conditions:
                if isinstance(cond, Comparison) and not cond.value.startswith(('"', "'")):
                    vote(p.table, cond.column, "numeric")

    schemas: dict[str, TableSchema] = {}
    for table, cols in columns.items():
        specs = []
        for c in cols:
            votes = kind_votes.get((table, c.lower()), set())
            if "temporal" in votes:
                kind = "temporal"
            elif "numeric" in votes:
                kind = "numeric"
            else:
                kind = "categorical"
            specs.append(ColumnSchema(c, kind))
        schemas[table] = TableSchema(table, tuple(specs), tuple(values[table]))
    return schemas


def import_nvbench(src_dir: Union[str, Path], out_dir: Union[str, Path]) -> ImportReport:
    """Convert the benchmark directory into per-split JSONL plus a count report."""
    src_dir = Path(src_dir)
    out_dir = Path(out_dir)
    if not src_dir.is_dir():
        raise CorpusError(f"{src_dir} is not a directory")
    out_dir.mkdir(parents=True, exist_ok=True)

    report = ImportReport({s: SplitReport() for s in SPLIT_FILES})
    pairs = _collect_pairs(src_dir, report)
    schemas = _infer_schemas(pairs)

    handles = {s: open(out_dir / f"{s}.jsonl", "w", encoding="utf-8") for s in SPLIT_FILES}
    try:
        for p in pairs:
            split_rep = report.splits[p.split]
            schema = schemas[p.table]
            result = validate(p.label, DatabaseSchema((schema,)))
            if not result.ok:
                first = result.errors()[0]
                split_rep.rejects[f"label does not validate: {first.message}"] += 1
                continue
            record = {
                "nl": p.nl,
                "label": p.label_text,
                "table": p.table,
                "schema": {"columns": [{"name": c.name, "kind": c.kind} for c in schema.columns]},
                "values": p.values,
                "hardness": p.hardness if p.hardness in ("Easy", "Medium", "Hard", "Extra Hard") else None,
                "split": p.split,
            }
            handles[p.split].write(json.dumps(record) + "\n")
            split_rep.pairs += 1
    finally:
        for fh in handles.values():
            fh.close()

    for split, rep in report.splits.items():
        labels = set()
        path = out_dir / f"{split}.jsonl"
        for line in path.read_text("utf-8").splitlines():
            labels.add(json.loads(line)["label"])
        rep.vis_queries = len(labels)
        rep.encoded_items = 2 * rep.pairs

    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    rejects_path = out_dir / "rejects.jsonl"
    with open(rejects_path, "w", encoding="utf-8") as fh:
        for split, rep in report.splits.items():
            for reason, count in sorted(rep.rejects.items()):
                fh.write(json.dumps({"split": split, "reason": reason, "count": count}) + "\n")
    return report
