"""Natural-language-to-visualization toolchain built around the vega-zero language."""

__version__ = "0.1.0"
