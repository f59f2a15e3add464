"""Schema validation of parsed queries.

Issues are data, not exceptions: the report lists every problem found, in a
fixed clause order, so identical inputs always produce identical reports.
"""

from __future__ import annotations

from .ast import DatabaseSchema, Issue, ValidationReport, VegaZeroAST


def validate(ast: VegaZeroAST, schema: DatabaseSchema) -> ValidationReport:
    issues: list[Issue] = []
    table = schema.table(ast.data)
    if table is None:
        issues.append(Issue("error", "data", f"unknown table '{ast.data}'"))
        return ValidationReport(tuple(issues))

    def check_column(clause: str, name: str) -> None:
        if table.column(name) is None:
            issues.append(Issue("error", clause, f"unknown column '{name}' in table '{table.name}'"))

    check_column("x", ast.x)
    check_column("y", ast.y)
    if ast.color is not None:
        check_column("color", ast.color)
    if ast.group is not None and ast.group not in ("x", "y"):
        check_column("group", ast.group)

    if ast.bin is not None:
        x_col = table.column(ast.x)
        if x_col is not None and x_col.kind != "temporal":
            issues.append(Issue(
                "error", "bin",
                f"bin requires a temporal x column; '{ast.x}' is {x_col.kind}",
            ))

    # Filter columns are open vocabulary downstream; surface unknowns as warnings only.
    if ast.filter is not None:
        for cond in ast.filter.conditions:
            if table.column(cond.column) is None:
                issues.append(Issue("warning", "filter", f"unknown column '{cond.column}' in table '{table.name}'"))

    return ValidationReport(tuple(issues))
