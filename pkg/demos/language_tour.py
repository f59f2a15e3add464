"""Tour of the vega-zero language layer: parse, validate, compile.

No training involved; runs in well under a second.
"""

import json

from nl2vega.vega_zero import (
    ColumnSchema,
    DatabaseSchema,
    TableSchema,
    compile_to_vegalite,
    parse,
    serialize,
    validate,
    validate_vegalite,
)

# A vega-zero query is one flat sentence: mark, data source, x/y encodings
# with an aggregate, then optional transforms in a fixed order.
QUERY = ("mark bar data invoices encoding x region y aggregate sum amount "
         "transform filter amount > 100 group x sort y desc topk 5")

ast = parse(QUERY)
print("parsed:")
print(json.dumps(ast.to_dict(), indent=2))

# serialize() is the canonical spelling; parse() accepts it back unchanged.
assert serialize(ast) == QUERY
print("\ncanonical form round-trips:", serialize(ast))

# Validation needs to know the table. Columns carry a kind so the checker
# can reject, say, binning a categorical axis by month.
schema = DatabaseSchema((
    TableSchema(
        name="invoices",
        columns=(
            ColumnSchema("region", "categorical"),
            ColumnSchema("amount", "numeric"),
            ColumnSchema("issued_on", "temporal"),
        ),
        sample_values=("emea", "apac"),
    ),
))
report = validate(ast, schema)
print("\nschema check ok:", report.ok)

bad = parse(QUERY.replace("x region", "x typo_column"))
for issue in validate(bad, schema).issues:
    print("caught:", issue.message)

# Compilation produces a self-contained Vega-Lite document. The data block
# here is a named reference; pass a URL string or inline rows instead to get
# something a renderer can draw immediately.
doc = compile_to_vegalite(ast, {"name": "invoices"})
print("\ncompiled Vega-Lite:")
print(json.dumps(doc, indent=2))
print("\nschema violations:", validate_vegalite(doc) or "none")
