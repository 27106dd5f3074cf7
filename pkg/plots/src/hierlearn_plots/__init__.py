from .render import SCHEMAS, SchemaError, load_rows, render

__all__ = ["SCHEMAS", "SchemaError", "load_rows", "render"]
