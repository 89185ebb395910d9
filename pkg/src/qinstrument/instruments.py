"""Instruments and their structure theory.

An instrument assigns one positive superoperator to each outcome so that
the traces over all outcomes preserve the trace of the input.  Only the
singleton maps are stored; the map of an outcome subset is their sum, so
finite additivity holds by construction.

The module provides the POVM and total operation of an instrument, the
decomposability and compatibility tests, and the three constructions that
realize the structure results as executable algebra:

* compatible total operation  <->  compatible instrument,
* nondegenerate observable + state family  ->  compatible operation,
* nondegenerate observable + state family  ->  measure-and-prepare
  instrument.

"Compatible with E" for a trace-preserving operation T is taken as
``T = T ∘ pinch_E`` where ``pinch_E`` is the projective pinching channel;
in finite dimension this is equivalent to T arising as the total
operation of some E-compatible instrument.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import linalg
from .objects import (
    DensityOperator,
    OutcomeSpace,
    Povm,
    SharpObservable,
    is_nondegenerate,
    luders_pinching,
)
from .superop import PositivityVerdict, Superoperator
from .validation import (
    NORMALIZATION_TOL,
    Check,
    InvariantViolation,
    enforce,
)


def _normalization_defect(total: Superoperator) -> float:
    """Worst deviation of Tr[X(all) rho] from Tr[rho] over matrix units."""
    d = total.dim
    identity_row = linalg.vec(np.eye(d, dtype=complex))
    image = identity_row @ total.matrix
    return linalg.max_abs(image - identity_row)


def instrument_checks(ops: Iterable[Superoperator]) -> list[Check]:
    total = None
    for op in ops:
        total = op if total is None else total + op
    return [Check("normalized", _normalization_defect(total), NORMALIZATION_TOL)]


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-indexed positive superoperators with trace-preserving sum."""

    outcomes: OutcomeSpace
    ops: tuple[Superoperator, ...]

    def __init__(self, outcomes, ops):
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(tuple(outcomes))
        if isinstance(ops, Mapping):
            seq = [ops[x] for x in outcomes]
        else:
            seq = list(ops)
        if len(seq) != len(outcomes):
            raise InvariantViolation("one outcome map per label required")
        if not all(isinstance(op, Superoperator) for op in seq):
            raise TypeError("outcome maps must be Superoperator instances")
        d = seq[0].dim
        if any(op.dim != d for op in seq):
            raise InvariantViolation("outcome maps must share one dimension")
        enforce(instrument_checks(seq), "instrument")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "ops", tuple(seq))

    @property
    def dim(self) -> int:
        return self.ops[0].dim

    def map(self, label: str) -> Superoperator:
        return self.ops[self.outcomes.index(label)]

    def subset_map(self, labels: Iterable[str]) -> Superoperator:
        """Map of an outcome subset: the sum of its singleton maps."""
        total = None
        for x in labels:
            op = self.map(x)
            total = op if total is None else total + op
        if total is None:
            return Superoperator(np.zeros((self.dim**2, self.dim**2), dtype=complex))
        return total

    def total_operation(self) -> Superoperator:
        """Sum over all outcomes; trace preserving by the normalization invariant."""
        return self.subset_map(self.outcomes)

    def povm(self) -> Povm:
        """Effects ``F(x) = X({x})* I``."""
        d = self.dim
        eye = np.eye(d, dtype=complex)
        effects = [op.dual().apply(eye) for op in self.ops]
        return Povm(self.outcomes, effects)

    def is_e_compatible(self, e: SharpObservable, tol: float = 1e-9) -> bool:
        """True when the POVM of the instrument equals ``e`` entrywise."""
        if e.dim != self.dim:
            raise ValueError(
                f"observable dimension {e.dim} does not match instrument dimension {self.dim}"
            )
        if e.outcomes.labels != self.outcomes.labels:
            return False
        f = self.povm()
        return all(
            linalg.max_abs(f.effect(x) - e.projection(x)) <= tol for x in self.outcomes
        )

    def is_decomposable(self, tol: float = 1e-9) -> bool:
        """Whether every dual map factors as POVM effect times dual total.

        Checks ``X({x})* A = F(x) T*(A)`` on the matrix-unit basis for every
        singleton; subsets follow by additivity.
        """
        d = self.dim
        eye = np.eye(d, dtype=complex)
        dual_total = self.total_operation().dual()
        for op in self.ops:
            dual_op = op.dual()
            effect = dual_op.apply(eye)
            factored = np.kron(eye, effect) @ dual_total.matrix
            if linalg.max_abs(dual_op.matrix - factored) > tol:
                return False
        return True

    def is_cp(self, tol: float = 1e-10) -> bool:
        """Complete positivity of every singleton map (sums of CP maps are CP)."""
        return all(op.is_completely_positive(tol) for op in self.ops)

    def sample_positivity(
        self, samples: int, seed: int, tol: float = 1e-9
    ) -> dict[str, PositivityVerdict]:
        """Sampled positivity verdict for every outcome map.

        CP maps short-circuit without sampling; otherwise a returned
        witness state is definitive evidence against positivity.  Each
        outcome gets its own substream derived from ``seed``.
        """
        return {
            lbl: op.sample_positivity(samples, seed + idx, tol)
            for idx, (lbl, op) in enumerate(zip(self.outcomes, self.ops))
        }

    def min_choi_eigenvalue(self) -> tuple[str, float]:
        """Most negative Choi eigenvalue across outcome maps, with its label."""
        worst_label, worst = self.outcomes.labels[0], np.inf
        for x, op in zip(self.outcomes, self.ops):
            low = linalg.min_eigenvalue(op.choi())
            if low < worst:
                worst_label, worst = x, low
        return worst_label, float(worst)

    def mix(self, other: "Instrument", weight: float) -> "Instrument":
        """Convex mixture of two instruments over the same outcome space."""
        if self.outcomes.labels != other.outcomes.labels or self.dim != other.dim:
            raise ValueError("instruments are structurally incomparable")
        if not 0.0 <= weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        ops = [
            a.scale(weight) + b.scale(1.0 - weight)
            for a, b in zip(self.ops, other.ops)
        ]
        return Instrument(self.outcomes, ops)

    def max_abs_distance(self, other: "Instrument") -> float:
        if self.outcomes.labels != other.outcomes.labels or self.dim != other.dim:
            raise ValueError("instruments are structurally incomparable")
        return max(a.max_abs_distance(b) for a, b in zip(self.ops, other.ops))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Instrument(dim={self.dim}, outcomes={self.outcomes.labels})"


@dataclass(frozen=True, eq=False)
class StateFamily:
    """One density operator per outcome label."""

    outcomes: OutcomeSpace
    states: tuple[DensityOperator, ...]

    def __init__(self, outcomes, states):
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(tuple(outcomes))
        if isinstance(states, Mapping):
            seq = [states[x] for x in outcomes]
        else:
            seq = list(states)
        if len(seq) != len(outcomes):
            raise InvariantViolation("one state per outcome required")
        if not all(isinstance(s, DensityOperator) for s in seq):
            raise TypeError("family members must be DensityOperator instances")
        d = seq[0].dim
        if any(s.dim != d for s in seq):
            raise InvariantViolation("family members must share one dimension")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "states", tuple(seq))

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def state(self, label: str) -> DensityOperator:
        return self.states[self.outcomes.index(label)]


@dataclass(frozen=True)
class DecompositionReport:
    """Deviations of the factorization identities for an instrument against
    an observable, measured entrywise over the matrix-unit basis.

    The ``povm_matches_observable`` entry records how far the instrument's
    POVM is from the observable; the six identity entries compare the
    subset maps (and their duals) with the projected total operation, over
    all singletons and the full outcome set.
    """

    deviations: dict[str, float]
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def check_decomposition_identities(
    x: Instrument, e: SharpObservable, tol: float = 1e-9
) -> DecompositionReport:
    """Verify the sandwich identities relating an instrument to its total
    operation through the observable's projections.

    For each outcome subset D in the generator set (singletons plus the
    full space), compares ``X(D)`` against ``T[E(D) .]``, ``T[. E(D)]`` and
    ``T[E(D) . E(D)]``, and dually ``X(D)*`` against ``E(D) T*(.)``,
    ``T*(.) E(D)`` and ``E(D) T*(.) E(D)``.

    Raises on structural mismatch (different outcome space or dimension);
    an instrument whose POVM merely differs from ``e`` still produces a
    report, with the mismatch recorded in ``povm_matches_observable``.
    """
    if e.dim != x.dim:
        raise ValueError("instrument and observable dimensions differ")
    if e.outcomes.labels != x.outcomes.labels:
        raise ValueError("instrument and observable outcome spaces differ")
    d = x.dim
    eye = np.eye(d, dtype=complex)
    total = x.total_operation()
    dual_total = total.dual()
    povm = x.povm()
    povm_dev = max(
        linalg.max_abs(povm.effect(lbl) - e.projection(lbl)) for lbl in x.outcomes
    )

    names = (
        "apply_project_left",
        "apply_project_right",
        "apply_project_both",
        "dual_project_left",
        "dual_project_right",
        "dual_project_both",
    )
    devs = dict.fromkeys(names, 0.0)
    subsets: list[tuple[str, ...]] = [(lbl,) for lbl in x.outcomes]
    subsets.append(tuple(x.outcomes.labels))
    for subset in subsets:
        proj = e.subset_projection(subset)
        m_subset = x.subset_map(subset).matrix
        m_dual = x.subset_map(subset).dual().matrix
        left = total.matrix @ np.kron(eye, proj)
        right = total.matrix @ np.kron(proj.T, eye)
        both = total.matrix @ np.kron(proj.T, proj)
        devs["apply_project_left"] = max(
            devs["apply_project_left"], linalg.max_abs(m_subset - left)
        )
        devs["apply_project_right"] = max(
            devs["apply_project_right"], linalg.max_abs(m_subset - right)
        )
        devs["apply_project_both"] = max(
            devs["apply_project_both"], linalg.max_abs(m_subset - both)
        )
        dual_left = np.kron(eye, proj) @ dual_total.matrix
        dual_right = np.kron(proj.T, eye) @ dual_total.matrix
        dual_both = np.kron(proj.T, proj) @ dual_total.matrix
        devs["dual_project_left"] = max(
            devs["dual_project_left"], linalg.max_abs(m_dual - dual_left)
        )
        devs["dual_project_right"] = max(
            devs["dual_project_right"], linalg.max_abs(m_dual - dual_right)
        )
        devs["dual_project_both"] = max(
            devs["dual_project_both"], linalg.max_abs(m_dual - dual_both)
        )
    devs = {"povm_matches_observable": povm_dev, **devs}
    return DecompositionReport(deviations=devs, tolerance=tol)


def is_e_compatible_operation(
    t: Superoperator, e: SharpObservable, tol: float = 1e-9
) -> bool:
    """Whether a trace-preserving operation is unchanged by pre-pinching.

    ``T = T ∘ pinch_E`` characterizes the total operations of instruments
    whose POVM is ``e``.  Raises for non-trace-preserving input.
    """
    if t.dim != e.dim:
        raise ValueError("operation and observable dimensions differ")
    if not t.is_trace_preserving(tol):
        raise ValueError(
            f"operation is not trace preserving "
            f"(defect {t.trace_preservation_defect():.3e})"
        )
    pinched = t.compose(luders_pinching(e))
    return t.distance(pinched) <= tol


def instrument_from_total_operation(
    e: SharpObservable, t: Superoperator, tol: float = 1e-9
) -> Instrument:
    """The unique ``e``-compatible instrument with total operation ``t``:
    ``X({x}) rho = T[E(x) rho]``.

    Requires ``t`` to be compatible with ``e``; together with the converse
    direction (:meth:`Instrument.total_operation`) this realizes the
    bijection between compatible instruments and compatible
    trace-preserving operations.
    """
    if not is_e_compatible_operation(t, e, tol):
        raise ValueError("operation is not compatible with the observable")
    d = e.dim
    eye = np.eye(d, dtype=complex)
    ops = [
        Superoperator(t.matrix @ np.kron(eye, e.projection(x))) for x in e.outcomes
    ]
    return Instrument(e.outcomes, ops)


def operation_from_state_family(e: SharpObservable, fam: StateFamily) -> Superoperator:
    """Measure-and-prepare operation ``T rho = sum_x prep_x Tr[rho E(x)]``.

    Defined for nondegenerate observables, where this finite sum sets up a
    bijection between compatible trace-preserving operations and output
    state families (up to families differing only on zero projections).
    The result is always completely positive.
    """
    if e.outcomes.labels != fam.outcomes.labels:
        raise ValueError("observable and family outcome spaces differ")
    if e.dim != fam.dim:
        raise ValueError("observable and family dimensions differ")
    if not is_nondegenerate(e):
        raise ValueError("observable is degenerate: some projection has rank above one")
    n = e.dim * e.dim
    m = np.zeros((n, n), dtype=complex)
    for x in e.outcomes:
        m += np.outer(linalg.vec(fam.state(x).matrix), linalg.vec(e.projection(x).T))
    return Superoperator(m)


def instrument_from_state_family(e: SharpObservable, fam: StateFamily) -> Instrument:
    """Measure-and-prepare instrument ``X({x}) rho = Tr[E(x) rho] prep_x``."""
    if e.outcomes.labels != fam.outcomes.labels:
        raise ValueError("observable and family outcome spaces differ")
    if e.dim != fam.dim:
        raise ValueError("observable and family dimensions differ")
    if not is_nondegenerate(e):
        raise ValueError("observable is degenerate: some projection has rank above one")
    ops = []
    for x in e.outcomes:
        m = np.outer(linalg.vec(fam.state(x).matrix), linalg.vec(e.projection(x).T))
        ops.append(Superoperator(m))
    return Instrument(e.outcomes, ops)


def family_from_operation(e: SharpObservable, t: Superoperator) -> StateFamily:
    """Recover the output state family of a compatible operation.

    For rank-1 projections the member at ``x`` is ``T[E(x)]``; outcomes
    with zero projection are unconstrained and filled with the maximally
    mixed state.
    """
    if e.dim != t.dim:
        raise ValueError("observable and operation dimensions differ")
    if not is_nondegenerate(e):
        raise ValueError("observable is degenerate: some projection has rank above one")
    states = []
    for x in e.outcomes:
        proj = e.projection(x)
        weight = float(np.real(np.trace(proj)))
        if weight > 0.5:
            states.append(DensityOperator(t.apply(proj) / weight))
        else:
            states.append(DensityOperator.maximally_mixed(e.dim))
    return StateFamily(e.outcomes, states)


def luders_instrument(e: SharpObservable) -> Instrument:
    """Projective state reduction ``X({x}) rho = E(x) rho E(x)``."""
    ops = [Superoperator.from_kraus([e.projection(x)]) for x in e.outcomes]
    return Instrument(e.outcomes, ops)
