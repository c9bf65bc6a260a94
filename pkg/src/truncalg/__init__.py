"""truncalg: exact desk-scale algebra over truncated local rings."""

__version__ = "0.1.0"

SCHEMA_VERSION = "1"
VERSION_STAMP = f"truncalg-{__version__}/schema-{SCHEMA_VERSION}"
