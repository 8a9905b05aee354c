"""JSON/CSV reading and writing shared by the CLI."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .density import density_from_dict, density_to_dict
from .errors import SchemaError
from .family import LrePath

SIG_DIGITS = 12


def fmt(x) -> str:
    if isinstance(x, bool) or isinstance(x, int) and not isinstance(x, float):
        return str(x)
    return f"{float(x):.{SIG_DIGITS}g}"


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "item"):
        return _round(obj.item())
    return obj


def to_json(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=False) + "\n"


def rows_to_csv(rows: Iterable[dict], header: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(row[h]) for h in header])
    return buf.getvalue()


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(path: str | os.PathLike):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"input file {str(path)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


def path_from_dict(doc) -> LrePath:
    """``{"pi0": density, "pi1": density, "beta_domain": [lo, hi]}`` to a path."""
    if not isinstance(doc, dict) or "pi0" not in doc or "pi1" not in doc:
        raise SchemaError("path document needs 'pi0' and 'pi1' densities")
    pi0, pi1 = density_from_dict(doc["pi0"]), density_from_dict(doc["pi1"])
    domain = doc.get("beta_domain", (0.0, 1.0))
    if not (isinstance(domain, (list, tuple)) and len(domain) == 2):
        raise SchemaError("beta_domain must be a two-element list")
    return LrePath(pi0, pi1, beta_domain=tuple(domain))


def path_to_dict(path: LrePath) -> dict:
    doc = {"pi0": density_to_dict(path.pi0), "pi1": density_to_dict(path.pi1)}
    if path.beta_domain != (0.0, 1.0):
        doc["beta_domain"] = list(path.beta_domain)
    return doc
