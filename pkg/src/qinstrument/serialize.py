"""JSON interchange for every file-facing type.

Matrix encoding, shared by all formats::

    {"rows": n, "cols": m, "data": [[re, im], ...]}   # row-major

Superoperators are written in Kraus form when completely positive and as
the natural matrix otherwise; readers accept either.  Schema problems
raise :class:`FormatError`; documents that parse but violate domain
invariants raise :class:`InvariantViolation` from the constructors.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .objects import DensityOperator, OutcomeSpace, Povm, SharpObservable
from .instruments import Instrument, StateFamily
from .dilation import IndirectModel
from .schemes import Apparatus
from .superop import Superoperator
from .validation import FormatError, InvariantViolation


def matrix_to_json(m: np.ndarray) -> dict[str, Any]:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj: Any, name: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict):
        raise FormatError(f"{name}: expected an object, got {type(obj).__name__}")
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{name}: missing or malformed rows/cols/data") from exc
    if rows < 1 or cols < 1:
        raise FormatError(f"{name}: dimensions must be positive")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise FormatError(
            f"{name}: expected {rows * cols} entries, got "
            f"{len(data) if isinstance(data, list) else 'non-list'}"
        )
    try:
        flat = np.array(
            [complex(float(re), float(im)) for re, im in data], dtype=complex
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{name}: entries must be [re, im] pairs") from exc
    return flat.reshape(rows, cols)


def _outcomes_from_json(obj: Any, name: str) -> OutcomeSpace:
    if not isinstance(obj, list) or not obj:
        raise FormatError(f"{name}: outcomes must be a nonempty list")
    return OutcomeSpace(tuple(str(x) for x in obj))


def _labeled_matrices(obj: Any, outcomes: OutcomeSpace, name: str) -> dict[str, np.ndarray]:
    if not isinstance(obj, dict):
        raise FormatError(f"{name}: expected an object keyed by outcome label")
    missing = [x for x in outcomes if x not in obj]
    if missing:
        raise FormatError(f"{name}: missing entries for outcomes {missing}")
    return {x: matrix_from_json(obj[x], f"{name}[{x!r}]") for x in outcomes}


# -- states ------------------------------------------------------------


def state_to_json(rho: DensityOperator) -> dict[str, Any]:
    return matrix_to_json(rho.matrix)


def state_from_json(obj: Any) -> DensityOperator:
    return DensityOperator(matrix_from_json(obj, "state"))


# -- observables and POVMs ----------------------------------------------


def observable_to_json(e: SharpObservable) -> dict[str, Any]:
    return {
        "dim": e.dim,
        "outcomes": list(e.outcomes.labels),
        "projections": {x: matrix_to_json(e.projection(x)) for x in e.outcomes},
    }


def observable_from_json(obj: Any) -> SharpObservable:
    outcomes = _outcomes_from_json(obj.get("outcomes"), "observable")
    dim = obj.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise FormatError("observable: dim must be a positive integer")
    mats = _labeled_matrices(obj.get("projections"), outcomes, "projections")
    return SharpObservable(outcomes, mats, dim=dim)


def povm_to_json(f: Povm) -> dict[str, Any]:
    return {
        "dim": f.dim,
        "outcomes": list(f.outcomes.labels),
        "effects": {x: matrix_to_json(f.effect(x)) for x in f.outcomes},
    }


def povm_from_json(obj: Any) -> Povm:
    outcomes = _outcomes_from_json(obj.get("outcomes"), "povm")
    dim = obj.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise FormatError("povm: dim must be a positive integer")
    mats = _labeled_matrices(obj.get("effects"), outcomes, "effects")
    return Povm(outcomes, mats, dim=dim)


# -- superoperators ------------------------------------------------------


def superoperator_to_json(s: Superoperator) -> dict[str, Any]:
    if s.is_completely_positive():
        return {"kraus": [matrix_to_json(k) for k in s.kraus()]}
    return {"natural": matrix_to_json(s.matrix)}


def superoperator_from_json(obj: Any) -> Superoperator:
    if not isinstance(obj, dict):
        raise FormatError("superoperator: expected an object")
    try:
        if "kraus" in obj:
            ops = obj["kraus"]
            if not isinstance(ops, list) or not ops:
                raise FormatError("superoperator: kraus must be a nonempty list")
            return Superoperator.from_kraus(
                [matrix_from_json(k, f"kraus[{i}]") for i, k in enumerate(ops)]
            )
        if "natural" in obj:
            return Superoperator(matrix_from_json(obj["natural"], "natural"))
    except InvariantViolation as exc:
        # Shape problems inside a superoperator document are schema errors.
        raise FormatError(f"superoperator: {exc}") from exc
    raise FormatError("superoperator: expected a 'kraus' or 'natural' key")


# -- instruments and families ---------------------------------------------


def instrument_to_json(x: Instrument) -> dict[str, Any]:
    return {
        "dim": x.dim,
        "outcomes": list(x.outcomes.labels),
        "maps": {lbl: superoperator_to_json(x.map(lbl)) for lbl in x.outcomes},
    }


def instrument_from_json(obj: Any) -> Instrument:
    outcomes = _outcomes_from_json(obj.get("outcomes"), "instrument")
    dim = obj.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise FormatError("instrument: dim must be a positive integer")
    maps = obj.get("maps")
    if not isinstance(maps, dict):
        raise FormatError("instrument: maps must be an object keyed by outcome label")
    missing = [x for x in outcomes if x not in maps]
    if missing:
        raise FormatError(f"instrument: missing maps for outcomes {missing}")
    ops = {}
    for x in outcomes:
        op = superoperator_from_json(maps[x])
        if op.dim != dim:
            raise FormatError(
                f"instrument: map for outcome {x!r} has dimension {op.dim}, expected {dim}"
            )
        ops[x] = op
    return Instrument(outcomes, ops)


def state_family_to_json(fam: StateFamily) -> dict[str, Any]:
    return {
        "outcomes": list(fam.outcomes.labels),
        "states": {x: matrix_to_json(fam.state(x).matrix) for x in fam.outcomes},
    }


def state_family_from_json(obj: Any) -> StateFamily:
    outcomes = _outcomes_from_json(obj.get("outcomes"), "state family")
    mats = _labeled_matrices(obj.get("states"), outcomes, "states")
    return StateFamily(outcomes, {x: DensityOperator(m) for x, m in mats.items()})


# -- indirect models ------------------------------------------------------


def model_to_json(m: IndirectModel) -> dict[str, Any]:
    return {
        "sys_dim": m.sys_dim,
        "anc_dim": m.anc_dim,
        "ancilla_state": matrix_to_json(m.ancilla_state.matrix),
        "unitary": matrix_to_json(m.coupling),
        "probe": observable_to_json(m.probe),
    }


def model_from_json(obj: Any) -> IndirectModel:
    for key in ("sys_dim", "anc_dim", "ancilla_state", "unitary", "probe"):
        if key not in obj:
            raise FormatError(f"model: missing key {key!r}")
    sys_dim, anc_dim = obj["sys_dim"], obj["anc_dim"]
    if not isinstance(sys_dim, int) or not isinstance(anc_dim, int):
        raise FormatError("model: sys_dim and anc_dim must be integers")
    return IndirectModel(
        sys_dim=sys_dim,
        anc_dim=anc_dim,
        ancilla_state=DensityOperator(matrix_from_json(obj["ancilla_state"], "ancilla_state")),
        coupling=matrix_from_json(obj["unitary"], "unitary"),
        probe=observable_from_json(obj["probe"]),
    )


# -- apparatuses -----------------------------------------------------------


def apparatus_to_json(a: Apparatus) -> dict[str, Any]:
    if not a.is_instrument_backed:
        raise ValueError("black-box apparatuses have no serialized form")
    return {"label": a.label, "instrument": instrument_to_json(a.instrument)}


def apparatus_from_json(obj: Any) -> Apparatus:
    if not isinstance(obj, dict) or "label" not in obj or "instrument" not in obj:
        raise FormatError("apparatus: expected 'label' and 'instrument' keys")
    return Apparatus.from_instrument(
        str(obj["label"]), instrument_from_json(obj["instrument"])
    )


# -- file-level helpers -----------------------------------------------------

KINDS = (
    "state",
    "observable",
    "povm",
    "superoperator",
    "instrument",
    "state_family",
    "model",
    "apparatus",
)


def detect_kind(obj: Any) -> str:
    """Classify a parsed JSON document by its key signature."""
    if not isinstance(obj, dict):
        raise FormatError("document must be a JSON object")
    keys = set(obj)
    if {"rows", "cols", "data"} <= keys:
        return "state"
    if "projections" in keys and "unitary" not in keys:
        return "observable"
    if "effects" in keys:
        return "povm"
    if "maps" in keys:
        return "instrument"
    if "states" in keys and "outcomes" in keys:
        return "state_family"
    if "unitary" in keys and "ancilla_state" in keys:
        return "model"
    if "instrument" in keys and "label" in keys:
        return "apparatus"
    if "kraus" in keys or "natural" in keys:
        return "superoperator"
    raise FormatError(f"unrecognized document with keys {sorted(keys)}")


_READERS = {
    "state": state_from_json,
    "observable": observable_from_json,
    "povm": povm_from_json,
    "superoperator": superoperator_from_json,
    "instrument": instrument_from_json,
    "state_family": state_family_from_json,
    "model": model_from_json,
    "apparatus": apparatus_from_json,
}


def read_json(path) -> Any:
    """Parse a JSON file; parse failures surface as FormatError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def load(path, kind: str | None = None):
    """Load a typed object from a JSON file, detecting the kind if omitted."""
    obj = read_json(path)
    resolved = kind or detect_kind(obj)
    if resolved not in _READERS:
        raise FormatError(f"unknown kind {resolved!r}")
    return resolved, _READERS[resolved](obj)


def load_instrument(path) -> Instrument:
    obj = read_json(path)
    if detect_kind(obj) != "instrument":
        raise FormatError(f"{path}: not an instrument document")
    return instrument_from_json(obj)


def load_state(path) -> DensityOperator:
    obj = read_json(path)
    if detect_kind(obj) != "state":
        raise FormatError(f"{path}: not a state document")
    return state_from_json(obj)


def write_json(path, obj: Any) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
