"""States, sharp observables, POVMs, and outcome distributions.

A sharp observable is a finite family of mutually orthogonal projections
summing to the identity, indexed by string outcome labels.  Zero
projections are permitted: such outcomes simply carry probability zero in
every state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from . import linalg
from .superop import Superoperator
from .validation import (
    DISTRIBUTION_SUM_TOL,
    HERMITIAN_TOL,
    PROBABILITY_CLAMP,
    PROJECTION_TOL,
    PSD_TOL,
    SUM_TO_IDENTITY_TOL,
    TRACE_TOL,
    Check,
    InvariantViolation,
    enforce,
)


@dataclass(frozen=True)
class OutcomeSpace:
    """Ordered, finite set of distinct outcome labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise InvariantViolation("outcome space must be nonempty")
        if len(set(labels)) != len(labels):
            raise InvariantViolation("outcome labels must be distinct")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown outcome label {label!r}") from None


def density_checks(matrix: np.ndarray) -> list[Check]:
    """Invariant deviations of a density-operator candidate."""
    herm = linalg.hermiticity_defect(matrix)
    sym = (matrix + linalg.dagger(matrix)) / 2.0
    low = linalg.min_eigenvalue(sym)
    trace = abs(complex(np.trace(matrix)) - 1.0)
    return [
        Check("hermitian", herm, HERMITIAN_TOL),
        Check("positive_semidefinite", max(0.0, -low), PSD_TOL),
        Check("unit_trace", trace, TRACE_TOL),
    ]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive, unit-trace Hermitian matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix, "density matrix")
        linalg.require_square(m, "density matrix")
        enforce(density_checks(m), "density operator")
        object.__setattr__(self, "matrix", linalg.frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, amplitudes) -> "DensityOperator":
        """Rank-1 state from a (not necessarily normalized) vector."""
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot build a state from the zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)

    def mix(self, other: "DensityOperator", weight: float) -> "DensityOperator":
        """Convex mixture ``weight*self + (1-weight)*other``."""
        if not 0.0 <= weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        return DensityOperator(weight * self.matrix + (1.0 - weight) * other.matrix)

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityOperator(dim={self.dim})"


def _effect_table(
    outcomes: OutcomeSpace, matrices, dim_hint: int | None, kind: str
) -> tuple[np.ndarray, ...]:
    if isinstance(matrices, Mapping):
        missing = [x for x in outcomes if x not in matrices]
        if missing:
            raise InvariantViolation(f"{kind} missing outcomes {missing}")
        seq = [matrices[x] for x in outcomes]
    else:
        seq = list(matrices)
        if len(seq) != len(outcomes):
            raise InvariantViolation(
                f"{kind}: got {len(seq)} matrices for {len(outcomes)} outcomes"
            )
    mats = tuple(linalg.frozen(linalg.as_matrix(m, kind)) for m in seq)
    d = dim_hint if dim_hint is not None else linalg.require_square(mats[0], kind)
    for m in mats:
        if m.shape != (d, d):
            raise InvariantViolation(f"{kind} shapes disagree with dimension {d}")
    return mats


def observable_checks(projections: Iterable[np.ndarray]) -> list[Check]:
    """Projection, orthogonality and completeness deviations."""
    mats = list(projections)
    d = mats[0].shape[0]
    herm = max(linalg.hermiticity_defect(p) for p in mats)
    idem = max(linalg.max_abs(p @ p - p) for p in mats)
    ortho = 0.0
    for i, p in enumerate(mats):
        for q in mats[i + 1 :]:
            ortho = max(ortho, linalg.max_abs(p @ q))
    complete = linalg.max_abs(sum(mats) - np.eye(d))
    return [
        Check("projections_hermitian", herm, PROJECTION_TOL),
        Check("projections_idempotent", idem, PROJECTION_TOL),
        Check("projections_orthogonal", ortho, PROJECTION_TOL),
        Check("projections_complete", complete, SUM_TO_IDENTITY_TOL),
    ]


@dataclass(frozen=True, eq=False)
class SharpObservable:
    """Outcome-labeled orthogonal projections summing to the identity."""

    outcomes: OutcomeSpace
    projections: tuple[np.ndarray, ...]

    def __init__(self, outcomes, projections, dim: int | None = None):
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(tuple(outcomes))
        mats = _effect_table(outcomes, projections, dim, "projection")
        enforce(observable_checks(mats), "sharp observable")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "projections", mats)

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def projection(self, label: str) -> np.ndarray:
        return self.projections[self.outcomes.index(label)]

    def subset_projection(self, labels: Iterable[str]) -> np.ndarray:
        """Projection onto the union of the given outcomes."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for x in labels:
            total = total + self.projection(x)
        return total

    def rank(self, label: str) -> int:
        """Rank of one projection, counted as eigenvalues above 1/2."""
        vals = np.linalg.eigvalsh(self.projection(label))
        return int(np.sum(vals > 0.5))

    def as_povm(self) -> "Povm":
        return Povm(self.outcomes, self.projections)

    @classmethod
    def from_basis(cls, basis: np.ndarray, labels: Iterable[str] | None = None) -> "SharpObservable":
        """Rank-1 observable from the columns of a unitary matrix."""
        basis = linalg.as_matrix(basis, "basis")
        d = linalg.require_square(basis, "basis")
        labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(d))
        projections = [np.outer(basis[:, i], basis[:, i].conj()) for i in range(d)]
        return cls(OutcomeSpace(labels), projections)

    @classmethod
    def trivial(cls, dim: int, label: str = "all") -> "SharpObservable":
        """Single-outcome observable {I}; every state yields this outcome."""
        return cls(OutcomeSpace((label,)), [np.eye(dim, dtype=complex)])

    def __repr__(self) -> str:  # pragma: no cover
        return f"SharpObservable(dim={self.dim}, outcomes={self.outcomes.labels})"


def povm_checks(effects: Iterable[np.ndarray]) -> list[Check]:
    mats = list(effects)
    d = mats[0].shape[0]
    herm = max(linalg.hermiticity_defect(f) for f in mats)
    low = min(linalg.min_eigenvalue((f + linalg.dagger(f)) / 2.0) for f in mats)
    complete = linalg.max_abs(sum(mats) - np.eye(d))
    return [
        Check("effects_hermitian", herm, HERMITIAN_TOL),
        Check("effects_positive", max(0.0, -low), PSD_TOL),
        Check("effects_complete", complete, SUM_TO_IDENTITY_TOL),
    ]


@dataclass(frozen=True, eq=False)
class Povm:
    """Outcome-labeled positive effects summing to the identity."""

    outcomes: OutcomeSpace
    effects: tuple[np.ndarray, ...]

    def __init__(self, outcomes, effects, dim: int | None = None):
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(tuple(outcomes))
        mats = _effect_table(outcomes, effects, dim, "effect")
        enforce(povm_checks(mats), "POVM")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "effects", mats)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def effect(self, label: str) -> np.ndarray:
        return self.effects[self.outcomes.index(label)]

    def max_abs_distance(self, other: "Povm") -> float:
        if self.outcomes.labels != other.outcomes.labels or self.dim != other.dim:
            raise ValueError("POVMs are structurally incomparable")
        return max(
            linalg.max_abs(f - g) for f, g in zip(self.effects, other.effects)
        )

    def __repr__(self) -> str:  # pragma: no cover
        return f"Povm(dim={self.dim}, outcomes={self.outcomes.labels})"


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probabilities per outcome label.

    Rounding noise is tolerated: values in ``[-1e-12, 0)`` clamp to zero,
    and the whole vector is renormalized when the total is within 1e-9 of
    one.  Larger deviations indicate a modeling bug and are rejected.
    """

    outcomes: OutcomeSpace
    probabilities: tuple[float, ...]

    def __init__(self, outcomes, probabilities):
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(tuple(outcomes))
        if isinstance(probabilities, Mapping):
            probs = [float(probabilities[x]) for x in outcomes]
        else:
            probs = [float(p) for p in probabilities]
        if len(probs) != len(outcomes):
            raise InvariantViolation("one probability per outcome required")
        arr = np.asarray(probs, dtype=float)
        if np.any(arr < -PROBABILITY_CLAMP) or np.any(arr > 1.0 + PROBABILITY_CLAMP):
            raise InvariantViolation(
                f"probability outside [0, 1] beyond rounding noise: {arr}"
            )
        arr = np.clip(arr, 0.0, 1.0)
        total = float(arr.sum())
        if abs(total - 1.0) > DISTRIBUTION_SUM_TOL:
            raise InvariantViolation(
                f"probabilities sum to {total}, off by more than {DISTRIBUTION_SUM_TOL}"
            )
        if total > 0:
            arr = arr / total
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probabilities", tuple(float(p) for p in arr))

    def prob(self, label: str) -> float:
        return self.probabilities[self.outcomes.index(label)]

    def mass(self, labels: Iterable[str]) -> float:
        return float(sum(self.prob(x) for x in labels))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.outcomes.labels, self.probabilities))

    def __iter__(self):
        return iter(zip(self.outcomes.labels, self.probabilities))


Measurement = Union[SharpObservable, Povm]


def born_distribution(e: Measurement, rho: DensityOperator) -> OutcomeDistribution:
    """Outcome distribution ``p(x) = Tr[E(x) rho]``."""
    mats = e.projections if isinstance(e, SharpObservable) else e.effects
    if e.dim != rho.dim:
        raise ValueError(
            f"measurement dimension {e.dim} does not match state dimension {rho.dim}"
        )
    probs = [float(np.real(np.trace(m @ rho.matrix))) for m in mats]
    return OutcomeDistribution(e.outcomes, probs)


def is_nondegenerate(e: SharpObservable) -> bool:
    """True when every projection has rank at most one.

    In finite dimension the commutant of the projection family is the
    direct sum of the full operator algebras on each range, which is
    abelian exactly when all ranks are <= 1.
    """
    return all(e.rank(x) <= 1 for x in e.outcomes)


def luders_pinching(e: SharpObservable) -> Superoperator:
    """The channel ``rho -> sum_x E(x) rho E(x)``; idempotent and trace preserving."""
    return Superoperator.from_kraus(e.projections)
