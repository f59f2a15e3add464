"""vega-zero language tools: lexing, parsing, validation, compilation, VQL import."""

from .ast import (
    AGG_FUNCTIONS,
    BIN_INTERVALS,
    CHART_TYPES,
    MARK_PLACEHOLDER,
    SORT_AXES,
    SORT_DIRECTIONS,
    BetweenRange,
    BinClause,
    ColumnSchema,
    Comparison,
    DatabaseSchema,
    FilterExpr,
    Issue,
    LikePattern,
    SortClause,
    TableSchema,
    ValidationReport,
    VegaZeroAST,
)
from .generator import random_ast, random_corpus_schema, random_table
from .lexer import MARKERS, normalize, tokenize
from .parser import TRANSFORM_KEYWORDS, parse, serialize, serialize_tokens
from .validator import validate
from .vegalite import compile_to_vegalite, filter_expression, validate_vegalite
from .vql import from_vql

__all__ = [
    "AGG_FUNCTIONS", "BIN_INTERVALS", "CHART_TYPES", "MARK_PLACEHOLDER", "SORT_AXES",
    "SORT_DIRECTIONS", "MARKERS", "TRANSFORM_KEYWORDS",
    "BetweenRange", "BinClause", "ColumnSchema", "Comparison", "DatabaseSchema",
    "FilterExpr", "Issue", "LikePattern", "SortClause", "TableSchema",
    "ValidationReport", "VegaZeroAST",
    "tokenize", "normalize", "parse", "serialize", "serialize_tokens", "validate",
    "compile_to_vegalite", "filter_expression", "validate_vegalite", "from_vql",
    "random_ast", "random_corpus_schema", "random_table",
]
