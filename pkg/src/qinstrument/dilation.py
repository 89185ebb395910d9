"""Indirect measurement models and unitary realizability.

A model couples the system to an ancilla, applies a joint unitary, and
reads a sharp probe observable on the ancilla.  Composite indices are
system-first: basis vector ``s * anc_dim + a`` is system index ``s`` with
ancilla index ``a``.

Both directions are provided: :func:`instrument_of_model` extracts the
instrument a model realizes, and :func:`dilate` builds a model realizing a
given completely positive instrument (pure ancilla state, probe reading
off which Kraus branch fired).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .objects import DensityOperator, SharpObservable
from .instruments import Instrument
from .superop import Superoperator
from .validation import UNITARY_TOL, InvariantViolation


@dataclass(frozen=True, eq=False)
class IndirectModel:
    """Ancilla state, coupling unitary, and probe observable on the ancilla."""

    sys_dim: int
    anc_dim: int
    ancilla_state: DensityOperator
    coupling: np.ndarray
    probe: SharpObservable

    def __post_init__(self):
        if self.sys_dim < 1 or self.anc_dim < 1:
            raise InvariantViolation("dimensions must be positive")
        u = linalg.as_matrix(self.coupling, "coupling")
        n = linalg.require_square(u, "coupling")
        if n != self.sys_dim * self.anc_dim:
            raise InvariantViolation(
                f"coupling size {n} does not match sys_dim * anc_dim = "
                f"{self.sys_dim * self.anc_dim}"
            )
        defect = linalg.frobenius(linalg.dagger(u) @ u - np.eye(n))
        if defect > UNITARY_TOL:
            raise InvariantViolation(
                f"coupling is not unitary: ||U†U - I||_F = {defect:.3e}"
            )
        if self.ancilla_state.dim != self.anc_dim:
            raise InvariantViolation("ancilla state dimension does not match anc_dim")
        if self.probe.dim != self.anc_dim:
            raise InvariantViolation("probe dimension does not match anc_dim")
        object.__setattr__(self, "coupling", linalg.frozen(u))

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"IndirectModel(sys_dim={self.sys_dim}, anc_dim={self.anc_dim}, "
            f"outcomes={self.probe.outcomes.labels})"
        )


def instrument_of_model(m: IndirectModel) -> Instrument:
    """Instrument realized by a model:
    ``X({x}) rho = Tr_anc[(I ⊗ E(x)) U (rho ⊗ sigma) U†]``.
    """
    d, anc = m.sys_dim, m.anc_dim
    u = m.coupling
    udag = linalg.dagger(u)
    sigma = m.ancilla_state.matrix
    projectors = [
        np.kron(np.eye(d, dtype=complex), m.probe.projection(x)) for x in m.probe.outcomes
    ]
    naturals = [np.zeros((d * d, d * d), dtype=complex) for _ in projectors]
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            evolved = u @ np.kron(unit, sigma) @ udag
            col = i + d * j
            for k, proj in enumerate(projectors):
                reduced = linalg.partial_trace_ancilla(proj @ evolved, d, anc)
                naturals[k][:, col] = linalg.vec(reduced)
    ops = [Superoperator(nat) for nat in naturals]
    return Instrument(m.probe.outcomes, ops)


def dilate(x: Instrument) -> IndirectModel:
    """Build an indirect measurement model realizing a CP instrument.

    The ancilla dimension is the total Kraus count over all outcomes
    (padded to at least 2).  The coupling is the deterministic unitary
    completion of the isometry ``psi ⊗ |0>  ->  sum_{x,k} (K_{x,k} psi) ⊗ |x,k>``,
    the ancilla state is pure on the first basis vector, and the probe
    projects onto each outcome's block of ancilla indices, with any
    leftover padding dimensions absorbed into the lexicographically first
    outcome.  Raises for non-CP instruments, quoting the offending Choi
    eigenvalue.
    """
    if not x.is_cp():
        label, low = x.min_choi_eigenvalue()
        raise ValueError(
            f"instrument is not completely positive: outcome {label!r} has "
            f"minimum Choi eigenvalue {low:.6g}"
        )
    d = x.dim
    kraus_lists = [list(x.map(lbl).kraus()) for lbl in x.outcomes]
    counts = [len(ks) for ks in kraus_lists]
    total = sum(counts)
    anc = max(total, 2)

    # Isometry V: column s holds the amplitudes of (K_a e_s) ⊗ |a>.
    flat_kraus = [k for ks in kraus_lists for k in ks]
    v = np.zeros((d * anc, d), dtype=complex)
    for a, k in enumerate(flat_kraus):
        v[np.arange(d) * anc + a, :] = k
    completed = linalg.unitary_completion(v)

    # Place the isometry columns at ancilla index 0 and the completion
    # columns, in order, in the remaining slots.
    u = np.zeros((d * anc, d * anc), dtype=complex)
    for s in range(d):
        u[:, s * anc] = completed[:, s]
    extras = iter(range(d, d * anc))
    for s in range(d):
        for a in range(1, anc):
            u[:, s * anc + a] = completed[:, next(extras)]

    # Probe blocks per outcome, leftovers to the lexicographically first label.
    assignments: dict[str, list[int]] = {lbl: [] for lbl in x.outcomes}
    start = 0
    for lbl, count in zip(x.outcomes, counts):
        assignments[lbl].extend(range(start, start + count))
        start += count
    leftovers = list(range(total, anc))
    if leftovers:
        assignments[min(x.outcomes.labels)].extend(leftovers)
    projections = []
    for lbl in x.outcomes:
        p = np.zeros((anc, anc), dtype=complex)
        for idx in assignments[lbl]:
            p[idx, idx] = 1.0
        projections.append(p)
    probe = SharpObservable(x.outcomes, projections)

    ancilla_state = DensityOperator.pure(np.eye(anc, dtype=complex)[:, 0])
    return IndirectModel(
        sys_dim=d,
        anc_dim=anc,
        ancilla_state=ancilla_state,
        coupling=u,
        probe=probe,
    )


@dataclass(frozen=True)
class RealizationReport:
    """Map-by-map comparison of a model's instrument against a target."""

    deviations: dict[str, float]
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def verify_realization(
    m: IndirectModel, x: Instrument, tol: float = 1e-8
) -> RealizationReport:
    """Compare the instrument realized by ``m`` with ``x`` outcome by outcome.

    Deviations are Frobenius distances of natural matrices.  Raises when
    the outcome spaces or system dimensions are incomparable.
    """
    if m.sys_dim != x.dim:
        raise ValueError(
            f"model system dimension {m.sys_dim} does not match instrument dimension {x.dim}"
        )
    if m.probe.outcomes.labels != x.outcomes.labels:
        raise ValueError("model probe and instrument outcome spaces differ")
    realized = instrument_of_model(m)
    deviations = {
        lbl: realized.map(lbl).distance(x.map(lbl)) for lbl in x.outcomes
    }
    return RealizationReport(deviations=deviations, tolerance=tol)
