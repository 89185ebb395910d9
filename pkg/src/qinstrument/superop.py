"""Superoperators on a d-dimensional system.

A superoperator is stored as its d^2 x d^2 "natural" matrix acting on
column-stacked operators (``vec(A)[r + d*c] = A[r, c]``), with Choi and
Kraus views derived on demand.

Conventions, fixed once for the whole package:

* natural matrix of ``rho -> A rho B``: ``kron(B.T, A)``;
* Choi matrix: ``sum_ij L(|i><j|) kron |i><j|``, so the Choi of the
  identity channel is the unnormalized maximally entangled projector and
  the Choi of the transpose map is the SWAP matrix;
* duality is with respect to the bilinear pairing ``<A, rho> = Tr[A rho]``.

Complete positivity is decided by positive-semidefiniteness of the Choi
matrix, which in finite dimension is equivalent to the operational
definition and costs one eigendecomposition.  Plain positivity has no
comparably cheap certificate, so :meth:`Superoperator.sample_positivity`
returns an explicit verdict: a concrete violating state is definitive,
while the absence of one over the sampled states is only evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import linalg
from .validation import (
    KRAUS_CUTOFF,
    KRAUS_RECONSTRUCTION_TOL,
    InvariantViolation,
)


@dataclass(frozen=True, eq=False)
class KrausSet:
    """A nonempty family of same-shape operators representing a CP map."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.operators:
            raise InvariantViolation("KrausSet must contain at least one operator")
        ops = tuple(linalg.frozen(linalg.as_matrix(k, "Kraus operator")) for k in self.operators)
        d = linalg.require_square(ops[0], "Kraus operator")
        for k in ops[1:]:
            if k.shape != (d, d):
                raise InvariantViolation("Kraus operators must share one square shape")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)


@dataclass(frozen=True, eq=False)
class PositivityVerdict:
    """Outcome of sampled positivity testing.

    ``witness`` is a density matrix whose image has a negative eigenvalue
    (definitive violation); ``None`` means no violation was found in the
    sample, which does not prove positivity.
    """

    samples: int
    witness: np.ndarray | None
    min_output_eigenvalue: float

    @property
    def violated(self) -> bool:
        return self.witness is not None

    @property
    def plausibly_positive(self) -> bool:
        return self.witness is None


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on operators, held as its natural matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix, "natural matrix")
        n = linalg.require_square(m, "natural matrix")
        d = int(round(np.sqrt(n)))
        if d * d != n:
            raise InvariantViolation(
                f"natural matrix size {n} is not a perfect square"
            )
        object.__setattr__(self, "matrix", linalg.frozen(m))

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=complex))

    @classmethod
    def from_kraus(cls, operators: Iterable[np.ndarray]) -> "Superoperator":
        """Map ``rho -> sum_k K_k rho K_k†``."""
        ks = KrausSet(tuple(operators))
        d = ks.dim
        m = np.zeros((d * d, d * d), dtype=complex)
        for k in ks:
            m += np.kron(k.conj(), k)
        return cls(m)

    @classmethod
    def from_apply(cls, fn: Callable[[np.ndarray], np.ndarray], dim: int) -> "Superoperator":
        """Build the natural matrix by applying ``fn`` to every matrix unit."""
        m = np.zeros((dim * dim, dim * dim), dtype=complex)
        for i in range(dim):
            for j in range(dim):
                unit = np.zeros((dim, dim), dtype=complex)
                unit[i, j] = 1.0
                m[:, i + dim * j] = linalg.vec(linalg.as_matrix(fn(unit), "map output"))
        return cls(m)

    @classmethod
    def from_choi(cls, choi: np.ndarray) -> "Superoperator":
        choi = linalg.as_matrix(choi, "Choi matrix")
        n = linalg.require_square(choi, "Choi matrix")
        d = int(round(np.sqrt(n)))
        if d * d != n:
            raise ValueError(f"Choi matrix size {n} is not a perfect square")
        natural = choi.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(n, n)
        return cls(natural)

    # -- core operations ----------------------------------------------

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, a) -> np.ndarray:
        a = linalg.as_matrix(a, "operand")
        d = self.dim
        if a.shape != (d, d):
            raise ValueError(f"operand shape {a.shape} does not match dimension {d}")
        return linalg.unvec(self.matrix @ linalg.vec(a))

    def compose(self, other: "Superoperator") -> "Superoperator":
        """``self`` after ``other``."""
        if self.dim != other.dim:
            raise ValueError("cannot compose superoperators of different dimension")
        return Superoperator(self.matrix @ other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if not isinstance(other, Superoperator):
            return NotImplemented
        if self.dim != other.dim:
            raise ValueError("cannot add superoperators of different dimension")
        return Superoperator(self.matrix + other.matrix)

    def scale(self, factor: complex) -> "Superoperator":
        return Superoperator(self.matrix * factor)

    def dual(self) -> "Superoperator":
        """Adjoint with respect to ``<A, rho> = Tr[A rho]``.

        Satisfies ``Tr[(L*A) rho] = Tr[A (L rho)]`` for all A, rho, and is
        an involution.  In natural-matrix form this is ``S M.T S`` with S
        the transpose permutation.
        """
        s = linalg.transpose_permutation(self.dim)
        m = self.matrix.T
        return Superoperator(m[np.ix_(s, s)])

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij L(|i><j|) kron |i><j|``."""
        d = self.dim
        n = d * d
        return self.matrix.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(n, n)

    def kraus(self, cutoff: float = KRAUS_CUTOFF) -> KrausSet:
        """Kraus operators from the Choi eigendecomposition.

        Eigenvalues above ``cutoff`` are kept; the reconstruction is
        verified against the natural matrix before returning.  Requires a
        completely positive map.
        """
        if not self.is_completely_positive():
            raise ValueError("Kraus decomposition requires a completely positive map")
        d = self.dim
        vals, vecs = linalg.eigh_symmetrized(self.choi())
        ops = [
            np.sqrt(val) * vecs[:, idx].reshape(d, d)
            for idx, val in enumerate(vals)
            if val > cutoff
        ]
        if not ops:
            ops = [np.zeros((d, d), dtype=complex)]
        rebuilt = Superoperator.from_kraus(ops)
        defect = linalg.max_abs(rebuilt.matrix - self.matrix)
        if defect > KRAUS_RECONSTRUCTION_TOL:
            raise InvariantViolation(
                f"Kraus reconstruction deviates by {defect:.3e}"
            )
        return KrausSet(tuple(ops))

    # -- classification -----------------------------------------------

    def is_completely_positive(self, tol: float = 1e-10) -> bool:
        """Choi-matrix PSD test."""
        return linalg.is_psd(self.choi(), tol)

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        """True when the dual maps the identity to the identity within ``tol``."""
        d = self.dim
        image = self.dual().apply(np.eye(d))
        return linalg.max_abs(image - np.eye(d)) <= tol

    def trace_preservation_defect(self) -> float:
        d = self.dim
        return linalg.max_abs(self.dual().apply(np.eye(d)) - np.eye(d))

    def sample_positivity(
        self, samples: int, seed: int, tol: float = 1e-9
    ) -> PositivityVerdict:
        """Probe positivity on random pure states.

        States are drawn as normalized complex Gaussian vectors.  A CP map
        is positive, so a passing Choi test short-circuits the scan.
        """
        if samples < 1:
            raise ValueError("samples must be at least 1")
        if self.is_completely_positive():
            return PositivityVerdict(samples=0, witness=None, min_output_eigenvalue=0.0)
        rng = np.random.default_rng(seed)
        d = self.dim
        worst = np.inf
        for _ in range(samples):
            psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            psi /= np.linalg.norm(psi)
            state = np.outer(psi, psi.conj())
            low = linalg.min_eigenvalue(self.apply(state))
            worst = min(worst, low)
            if low < -tol:
                return PositivityVerdict(
                    samples=samples, witness=linalg.frozen(state), min_output_eigenvalue=low
                )
        return PositivityVerdict(samples=samples, witness=None, min_output_eigenvalue=worst)

    # -- comparison helpers -------------------------------------------

    def distance(self, other: "Superoperator") -> float:
        """Frobenius distance between natural matrices."""
        if self.dim != other.dim:
            raise ValueError("cannot compare superoperators of different dimension")
        return linalg.frobenius(self.matrix - other.matrix)

    def max_abs_distance(self, other: "Superoperator") -> float:
        """Largest entrywise natural-matrix deviation; equals the worst
        deviation of the two maps over the matrix-unit basis."""
        if self.dim != other.dim:
            raise ValueError("cannot compare superoperators of different dimension")
        return linalg.max_abs(self.matrix - other.matrix)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Superoperator(dim={self.dim})"


def transpose_map(dim: int) -> Superoperator:
    """The transposition map; positive but not completely positive for dim >= 2."""
    s = linalg.transpose_permutation(dim)
    m = np.zeros((dim * dim, dim * dim), dtype=complex)
    m[s, np.arange(dim * dim)] = 1.0
    return Superoperator(m)


def convex_mixture(weights: Sequence[float], maps: Sequence[Superoperator]) -> Superoperator:
    """Weighted sum of superoperators (weights are not checked for convexity)."""
    if len(weights) != len(maps) or not maps:
        raise ValueError("need one weight per superoperator")
    m = sum(w * s.matrix for w, s in zip(weights, maps))
    return Superoperator(m)
