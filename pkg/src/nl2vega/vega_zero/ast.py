"""AST node types for the vega-zero visualization query language.

A query always carries a mark (chart type or the ``[T]`` placeholder), a
table name, an x column and a ``y aggregate`` pair; color and the transform
sub-clauses (filter, group, sort, bin, topk) are optional and appear at most
once each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

CHART_TYPES = ("arc", "bar", "line", "point")
MARK_PLACEHOLDER = "[T]"
AGG_FUNCTIONS = ("none", "count", "sum", "avg", "max", "min")
BIN_INTERVALS = ("month", "weekday", "year", "day", "quarter")
SORT_AXES = ("x", "y")
SORT_DIRECTIONS = ("asc", "desc")

COMPARISON_OPS = ("=", "!=", "<", ">", "<=", ">=")


@dataclass(frozen=True)
class Comparison:
    """Single comparison, e.g. ``department_id != 40``."""

    column: str
    op: str
    value: str

    def tokens(self) -> list[str]:
        return [self.column, self.op, self.value]


@dataclass(frozen=True)
class LikePattern:
    """``cust_name like '%a%'`` — pattern kept verbatim, quotes included."""

    column: str
    pattern: str

    def tokens(self) -> list[str]:
        return [self.column, "like", self.pattern]


@dataclass(frozen=True)
class BetweenRange:
    """``salary between 8000 and 12000`` — the inner ``and`` belongs to the range."""

    column: str
    low: str
    high: str

    def tokens(self) -> list[str]:
        return [self.column, "between", self.low, "and", self.high]


Condition = Union[Comparison, LikePattern, BetweenRange]


@dataclass(frozen=True)
class FilterExpr:
    """Flat condition chain: conditions at even indices, 'and'/'or' between them.

    No precedence tree is imposed; serialization round-trips token for token.
    """

    parts: tuple[Union[Condition, str], ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("filter expression must contain at least one condition")
        for i, part in enumerate(self.parts):
            if i % 2 == 0:
                if isinstance(part, str):
                    raise ValueError(f"expected a condition at part {i}, got {part!r}")
            elif part not in ("and", "or"):
                raise ValueError(f"expected 'and' or 'or' at part {i}, got {part!r}")
        if len(self.parts) % 2 == 0:
            raise ValueError("filter expression must end with a condition")

    @property
    def conditions(self) -> list[Condition]:
        return [p for i, p in enumerate(self.parts) if i % 2 == 0]  # type: ignore[misc]

    def tokens(self) -> list[str]:
        out: list[str] = []
        for part in self.parts:
            if isinstance(part, str):
                out.append(part)
            else:
                out.extend(part.tokens())
        return out


@dataclass(frozen=True)
class SortClause:
    axis: str  # "x" | "y"
    direction: str  # "asc" | "desc"

    def __post_init__(self):
        if self.axis not in SORT_AXES:
            raise ValueError(f"sort axis must be x or y, got {self.axis!r}")
        if self.direction not in SORT_DIRECTIONS:
            raise ValueError(f"sort direction must be asc or desc, got {self.direction!r}")


@dataclass(frozen=True)
class BinClause:
    axis: str  # always "x" in serialized form
    interval: str

    def __post_init__(self):
        if self.axis != "x":
            raise ValueError(f"bin axis must be x, got {self.axis!r}")
        if self.interval not in BIN_INTERVALS:
            raise ValueError(f"unknown bin interval {self.interval!r}")


@dataclass(frozen=True)
class VegaZeroAST:
    """Structured form of one vega-zero query."""

    mark: str  # chart type word or MARK_PLACEHOLDER
    data: str
    x: str
    y_agg: str
    y: str
    color: Optional[str] = None
    filter: Optional[FilterExpr] = None
    group: Optional[str] = None  # "x" | "y" | column name
    sort: Optional[SortClause] = None
    bin: Optional[BinClause] = None
    topk: Optional[int] = None

    def __post_init__(self):
        if self.mark not in CHART_TYPES and self.mark != MARK_PLACEHOLDER:
            raise ValueError(f"unknown chart type {self.mark!r}")
        if self.y_agg not in AGG_FUNCTIONS:
            raise ValueError(f"unknown aggregate function {self.y_agg!r}")
        if self.topk is not None and self.topk <= 0:
            raise ValueError(f"topk must be positive, got {self.topk}")

    @property
    def has_placeholder_mark(self) -> bool:
        return self.mark == MARK_PLACEHOLDER

    def to_dict(self) -> dict:
        """Stable JSON shape; absent clauses are null."""
        return {
            "mark": self.mark,
            "data": self.data,
            "x": self.x,
            "y_agg": self.y_agg,
            "y": self.y,
            "color": self.color,
            "filter": _filter_to_dict(self.filter),
            "group": self.group,
            "sort": {"axis": self.sort.axis, "direction": self.sort.direction} if self.sort else None,
            "bin": {"axis": self.bin.axis, "interval": self.bin.interval} if self.bin else None,
            "topk": self.topk,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VegaZeroAST":
        return cls(
            mark=d["mark"],
            data=d["data"],
            x=d["x"],
            y_agg=d["y_agg"],
            y=d["y"],
            color=d.get("color"),
            filter=_filter_from_dict(d.get("filter")),
            group=d.get("group"),
            sort=SortClause(**d["sort"]) if d.get("sort") else None,
            bin=BinClause(**d["bin"]) if d.get("bin") else None,
            topk=d.get("topk"),
        )


def _filter_to_dict(f: Optional[FilterExpr]) -> Optional[dict]:
    if f is None:
        return None
    parts = []
    for part in f.parts:
        if isinstance(part, str):
            parts.append(part)
        elif isinstance(part, Comparison):
            parts.append({"kind": "cmp", "column": part.column, "op": part.op, "value": part.value})
        elif isinstance(part, LikePattern):
            parts.append({"kind": "like", "column": part.column, "pattern": part.pattern})
        else:
            parts.append({"kind": "between", "column": part.column, "low": part.low, "high": part.high})
    return {"parts": parts}


def _filter_from_dict(d: Optional[dict]) -> Optional[FilterExpr]:
    if d is None:
        return None
    parts: list = []
    for raw in d["parts"]:
        if isinstance(raw, str):
            parts.append(raw)
        elif raw["kind"] == "cmp":
            parts.append(Comparison(raw["column"], raw["op"], raw["value"]))
        elif raw["kind"] == "like":
            parts.append(LikePattern(raw["column"], raw["pattern"]))
        else:
            parts.append(BetweenRange(raw["column"], raw["low"], raw["high"]))
    return FilterExpr(tuple(parts))


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str  # "categorical" | "numeric" | "temporal"

    def __post_init__(self):
        if self.kind not in ("categorical", "numeric", "temporal"):
            raise ValueError(f"unknown column kind {self.kind!r}")


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[ColumnSchema, ...]
    sample_values: tuple[str, ...] = ()

    def __post_init__(self):
        lowered = [c.name.lower() for c in self.columns]
        if len(set(lowered)) != len(lowered):
            raise ValueError(f"duplicate column names in table {self.name!r}")

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Optional[ColumnSchema]:
        low = name.lower()
        for c in self.columns:
            if c.name.lower() == low:
                return c
        return None


@dataclass(frozen=True)
class DatabaseSchema:
    tables: tuple[TableSchema, ...]

    def __post_init__(self):
        lowered = [t.name.lower() for t in self.tables]
        if len(set(lowered)) != len(lowered):
            raise ValueError("duplicate table names in schema")

    def table(self, name: str) -> Optional[TableSchema]:
        low = name.lower()
        for t in self.tables:
            if t.name.lower() == low:
                return t
        return None

    def to_dict(self) -> dict:
        return {
            "tables": [
                {
                    "name": t.name,
                    "columns": [{"name": c.name, "kind": c.kind} for c in t.columns],
                    "sample_values": list(t.sample_values),
                }
                for t in self.tables
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatabaseSchema":
        return cls(
            tables=tuple(
                TableSchema(
                    name=t["name"],
                    columns=tuple(ColumnSchema(c["name"], c["kind"]) for c in t["columns"]),
                    sample_values=tuple(t.get("sample_values", ())),
                )
                for t in d["tables"]
            )
        )


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" | "warning"
    clause: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not any(i.severity == "error" for i in self.issues)

    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]
