"""JSON and CSV formats for tensors, perturbations, projectors and reports.

Complex numbers are stored as ``[re, im]`` pairs.  A tensor document is
``{"d": d, "D": D, "mats": [...]}`` with ``mats[i][r][c]`` the entry
``(A_i)_{rc}``; rectangular families (walls) give ``"D": [rows, cols]``.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, InputError
from .mps import BlockMps, MpsTensor
from .span import LocalTerm, ProjectorTerm
from .uncle import Perturbation

FORMAT_VERSION = 1


def _cplx_to_json(arr: np.ndarray):
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [_cplx_to_json(x) for x in arr]


def _cplx_from_json(obj, ndim: int, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: entries must be [re, im] number pairs") from exc
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise InputError(f"{what}: expected a {ndim}-level nested list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def family_to_json(mats: np.ndarray) -> dict:
    mats = np.asarray(mats, dtype=complex)
    d, rows, cols = mats.shape
    D = rows if rows == cols else [rows, cols]
    return {"d": d, "D": D, "mats": _cplx_to_json(mats)}


def family_from_json(doc: dict, what: str = "tensor") -> np.ndarray:
    if not isinstance(doc, dict) or not {"d", "D", "mats"} <= doc.keys():
        raise InputError(f"{what}: needs keys 'd', 'D' and 'mats'")
    d, D = doc["d"], doc["D"]
    rows, cols = (D, D) if isinstance(D, int) else tuple(D)
    mats = _cplx_from_json(doc["mats"], 3, what)
    if mats.shape != (d, rows, cols):
        raise DimensionMismatchError(f"{what}: mats has shape {mats.shape}, header says {(d, rows, cols)}")
    return mats


def tensor_to_json(t: MpsTensor) -> dict:
    return family_to_json(t.mats)


def tensor_from_json(doc: dict) -> MpsTensor:
    return MpsTensor(family_from_json(doc))


def blocks_to_json(c: BlockMps) -> dict:
    out = {"blocks": [tensor_to_json(b) for b in c.blocks]}
    if c.allow_repeated:
        out["allow_repeated"] = True
    return out


def blocks_from_json(doc: dict) -> BlockMps:
    blocks = doc.get("blocks")
    if not isinstance(blocks, list) or not blocks:
        raise InputError("block file needs a non-empty 'blocks' list")
    return BlockMps(tuple(tensor_from_json(b) for b in blocks), bool(doc.get("allow_repeated", False)))


def perturbation_to_json(p: Perturbation) -> dict:
    return {k: family_to_json(getattr(p, k)) for k in ("pa", "pb", "r", "l")}


def perturbation_from_json(doc: dict) -> Perturbation:
    if not isinstance(doc, dict) or not {"pa", "pb", "r", "l"} <= doc.keys():
        raise InputError("perturbation needs blocks 'pa', 'pb', 'r', 'l'")
    return Perturbation(*(family_from_json(doc[k], k) for k in ("pa", "pb", "r", "l")))


def term_to_json(term: LocalTerm) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "support": term.support,
        "local_dim": term.local_dim,
        "projector": isinstance(term, ProjectorTerm),
        "matrix": _cplx_to_json(term.matrix),
    }


def term_from_json(doc: dict) -> LocalTerm:
    if not isinstance(doc, dict) or not {"support", "local_dim", "matrix"} <= doc.keys():
        raise InputError("projector file needs 'support', 'local_dim' and 'matrix'")
    m = _cplx_from_json(doc["matrix"], 2, "matrix")
    cls = ProjectorTerm if doc.get("projector", True) else LocalTerm
    return cls(m, int(doc["support"]), int(doc["local_dim"]))


def read_json(path) -> dict:
    """Parse a JSON file, reporting syntax errors with line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_tensor_file(path):
    """A single tensor or a block MPS, depending on the document."""
    doc = read_json(path)
    if isinstance(doc, dict) and "blocks" in doc:
        return blocks_from_json(doc)
    return tensor_from_json(doc)


def dumps(doc) -> str:
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(doc, sort_keys=True, indent=2, default=_default) + "\n"


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).write_text(csv_text(header, rows))
