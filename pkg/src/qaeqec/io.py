"""Model files (``.qaemodel.json``) and CSV output with provenance headers."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .dqnn import Architecture, EncodingFinder, NetworkParams, QAECollection
from .linalg import is_unitary
from .noise import DephasingQuadrature

MODEL_SUFFIX = ".qaemodel.json"
MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Malformed or unsupported model file."""


class NumericalInvariantError(ValueError):
    """A loaded unitary is not unitary within tolerance."""


def _encode_matrix(u: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(u, dtype=complex).ravel()]


def _decode_matrix(pairs: Sequence[Sequence[float]]) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ModelFormatError("unitaries must be lists of (re, im) pairs")
    d = int(round(np.sqrt(len(arr))))
    if d * d != len(arr) or d & (d - 1):
        raise ModelFormatError(f"{len(arr)} entries do not form a 2^n x 2^n matrix")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)


def model_to_dict(model, metadata: dict[str, Any] | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {"format": "qaeqec-model", "format_version": MODEL_FORMAT_VERSION}
    if isinstance(model, NetworkParams):
        out["kind"] = "network"
        out["architecture"] = {
            "layer_widths": list(model.architecture.layer_widths),
            "self_inverse": model.architecture.self_inverse,
        }
    elif isinstance(model, QAECollection):
        out["kind"] = "collection"
        out["n"] = model.n
        out["patterns"] = [list(p) for p in model.patterns]
    elif isinstance(model, EncodingFinder):
        out["kind"] = "finder"
        out["n"] = model.collection.n
        out["patterns"] = [list(p) for p in model.patterns]
        q = model.quadrature
        out["quadrature"] = None if q is None else {"sigma": q.sigma, "nodes": list(q.nodes), "weights": list(q.weights)}
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    out["unitaries"] = [_encode_matrix(u) for u in model.flat_unitaries()]
    out["metadata"] = dict(metadata or {})
    return out


def _require(data: dict, key: str):
    if key not in data:
        raise ModelFormatError(f"model file lacks {key!r}")
    return data[key]


def model_from_dict(data: dict[str, Any], atol: float = 1e-8):
    """Rebuild a model; raises :class:`NumericalInvariantError` on non-unitary entries."""
    if data.get("format") != "qaeqec-model":
        raise ModelFormatError("not a qaeqec model file")
    if data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {data.get('format_version')!r}")
    us = [_decode_matrix(m) for m in _require(data, "unitaries")]
    for i, u in enumerate(us):
        if not is_unitary(u, atol):
            raise NumericalInvariantError(f"unitary {i} deviates from unitarity")
    kind = _require(data, "kind")
    try:
        if kind == "network":
            arch = _require(data, "architecture")
            a = Architecture(tuple(int(w) for w in arch["layer_widths"]), bool(arch["self_inverse"]))
            template = NetworkParams.identity(a)
            if len(us) != len(template.flat_unitaries()):
                raise ModelFormatError("unitary count does not match the architecture")
            return template.replace_unitaries(us)
        if kind in ("collection", "finder"):
            n = int(_require(data, "n"))
            patterns = [tuple(int(q) for q in p) for p in _require(data, "patterns")]
            if not patterns or patterns[0] != () or len(patterns) != len(us):
                raise ModelFormatError("patterns must start with the empty pattern and match the unitaries")
            coll = QAECollection(n, us[0], dict(zip(patterns[1:], us[1:])))
            if kind == "collection":
                return coll
            q = data.get("quadrature")
            quad = None if q is None else DephasingQuadrature(float(q["sigma"]), tuple(q["nodes"]), tuple(q["weights"]))
            return EncodingFinder(coll, quad)
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def dumps_model(model, metadata: dict[str, Any] | None = None) -> str:
    return json.dumps(model_to_dict(model, metadata), indent=1) + "\n"


def save_model(path, model, metadata: dict[str, Any] | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_model(model, metadata))
    return path


def load_model(path, atol: float = 1e-8):
    """Returns ``(model, metadata)``."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    return model_from_dict(data, atol), dict(data.get("metadata", {}))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def config_hash(config: dict[str, Any]) -> str:
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    return hashlib.sha256(json.dumps(config, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def provenance(command: str, config: dict[str, Any], seed: int) -> list[str]:
    return [f"artifact: qaeqec {__version__}", f"command: {command}", f"config_sha256: {config_hash(config)}", f"seed: {seed}"]


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence[Any]], header_lines: Sequence[str] = ()) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    """Returns ``(header_lines, rows)``; header lines lose their ``# `` prefix."""
    lines = Path(path).read_text().splitlines()
    header = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return header, list(csv.DictReader(body))
