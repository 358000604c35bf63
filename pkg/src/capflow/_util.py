"""Small shared helpers: deterministic serialization and ordered parallel map."""

from __future__ import annotations

import concurrent.futures
import math
from typing import Callable, Iterable, Sequence


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def dumps_deterministic(obj, indent=0) -> str:
    """JSON text with sorted keys and 17-significant-digit floats.

    Only the JSON-representable types produced by this package are
    supported (dict, list/tuple, str, bool, None, int, float).
    """
    pad = " " * indent

    def enc(o, depth):
        if o is None:
            return "null"
        if o is True:
            return "true"
        if o is False:
            return "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return fmt17(o)
        if isinstance(o, str):
            out = o.replace("\\", "\\\\").replace('"', '\\"')
            return f'"{out}"'
        if isinstance(o, dict):
            items = sorted(o.items(), key=lambda kv: kv[0])
            body = ",".join(f'"{k}":{enc(v, depth + 1)}' for k, v in items)
            return "{" + body + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ",".join(enc(v, depth + 1) for v in o) + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    _ = pad
    return enc(obj, 0)


def pmap(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map preserving input order; thread count never changes the result.

    Each item is computed independently and results are assembled by
    index, so single-threaded and parallel runs are bit-identical.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
