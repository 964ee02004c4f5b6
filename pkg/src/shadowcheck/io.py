"""JSON and CSV input/output shared by the command line."""
import csv
import io as _io
import json
import platform
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels
from .decider import ObsConInstance
from .errors import InvalidInputError
from .linalg import from_json, to_json
from .pauli import PauliString


def _default(o):
    if isinstance(o, np.ndarray):
        if np.iscomplexobj(o):
            return to_json(o) if o.ndim == 2 else {"re": o.real.tolist(), "im": o.imag.tolist()}
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (complex, np.complexfloating)):
        return {"re": float(o.real), "im": float(o.imag)}
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, PauliString):
        return o.to_json()
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, default=_default, indent=1, allow_nan=True) + "\n"


def write_json(path, obj):
    text = dumps(obj)
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidInputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not valid JSON: {exc}") from None


def flatten(obj, prefix=""):
    """Flat ``key -> scalar`` view of a nested report (lists of scalars joined by ';')."""
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(flatten(v, f"{prefix}{k}."))
        return out
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return {prefix[:-1]: ";".join(str(v) for v in obj)}
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}{i}."))
        return out
    return {prefix[:-1]: obj}


def write_csv(path, rows):
    """Write a list of flat dicts; columns are the union of keys in first-seen order."""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in cols})
    Path(path).write_text(buf.getvalue())


def versions():
    return {
        "shadowcheck": __version__,
        "backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def observable_from_json(obj):
    """Explicit matrix, Pauli string, or factorized ``{"lambdas", "vectors"}`` observable."""
    if "lambdas" in obj:
        vec = obj["vectors"]
        w = from_json(vec) if isinstance(vec, dict) else np.asarray(vec, dtype=np.complex128)
        return (np.asarray(obj["lambdas"], dtype=float), w)
    if "matrix" in obj:
        return from_json(obj["matrix"])
    if "rows" in obj:
        return from_json(obj)
    return PauliString.from_json(obj)


def observable_to_json(o):
    if isinstance(o, tuple):
        return {"lambdas": np.asarray(o[0]).tolist(), "vectors": to_json(o[1])}
    if isinstance(o, PauliString):
        return o.to_json()
    return {"matrix": to_json(o)}


def load_instance(path):
    return ObsConInstance.from_json(read_json(path))
