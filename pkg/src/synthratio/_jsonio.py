"""JSON emission with fixed-precision floats.

Reports and serialized fits write every float with 17 significant digits,
which is enough for exact float64 round-trips, so reloading a fit reproduces
predictions bit-for-bit.  The standard ``json`` module does not allow custom
float formatting, hence this small emitter.  Output is plain JSON, readable
by any parser.
"""

import json

import numpy as np


def _format_float(x):
    if x != x:  # NaN is not valid JSON
        return "null"
    if x in (float("inf"), float("-inf")):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent=2):
    """Serialize to JSON with 17-significant-digit floats."""
    return "".join(_emit(obj, indent, 0)) + "\n"


def _emit(obj, indent, level):
    pad = " " * (indent * level)
    inner = " " * (indent * (level + 1))
    if obj is None:
        yield "null"
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        yield "true" if obj else "false"
    elif isinstance(obj, (int, np.integer)):
        yield str(int(obj))
    elif isinstance(obj, (float, np.floating)):
        yield _format_float(float(obj))
    elif isinstance(obj, str):
        yield json.dumps(obj)
    elif isinstance(obj, np.ndarray):
        yield from _emit(obj.tolist(), indent, level)
    elif isinstance(obj, dict):
        if not obj:
            yield "{}"
            return
        yield "{\n"
        for i, (key, value) in enumerate(obj.items()):
            yield inner + json.dumps(str(key)) + ": "
            yield from _emit(value, indent, level + 1)
            yield ",\n" if i < len(obj) - 1 else "\n"
        yield pad + "}"
    elif isinstance(obj, (list, tuple)):
        if not obj:
            yield "[]"
            return
        yield "[\n"
        for i, value in enumerate(obj):
            yield inner
            yield from _emit(value, indent, level + 1)
            yield ",\n" if i < len(obj) - 1 else "\n"
        yield pad + "]"
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dump(obj, path, indent=2):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj, indent=indent))
