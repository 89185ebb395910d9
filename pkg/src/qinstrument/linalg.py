"""Dense complex matrix foundation.

Everything downstream manipulates plain ``numpy`` arrays of ``complex128``.
This module supplies the handful of primitives the rest of the package is
built on: Kronecker products, the ancilla partial trace, tolerance-aware
PSD testing, Hermitian eigendecomposition with symmetrization, and the
deterministic completion of an isometry to a unitary.

Vectorization is column-stacking throughout the package:
``vec(A)[r + d*c] = A[r, c]``, so ``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import numpy as np

from .validation import ISOMETRY_TOL

# Residual threshold below which a candidate basis vector is considered
# already spanned during unitary completion.
COMPLETION_RESIDUAL = 1e-8

# Absolute floor for the PSD eigenvalue tolerance.
PSD_ABS_FLOOR = 1e-12


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D complex128 array (copied, C-ordered)."""
    a = np.array(m, dtype=complex, order="C")
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def require_square(m: np.ndarray, name: str = "matrix") -> int:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m.shape[0]


def frozen(a: np.ndarray) -> np.ndarray:
    """Return a read-only copy; shared domain objects are immutable."""
    out = np.array(a, dtype=complex, order="C")
    out.setflags(write=False)
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(m).T.reshape(-1)


def unvec(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    x = np.asarray(x).reshape(-1)
    d = int(round(np.sqrt(x.size)))
    if d * d != x.size:
        raise ValueError(f"vector of length {x.size} is not a square matrix")
    return x.reshape(d, d).T


def transpose_permutation(d: int) -> np.ndarray:
    """Index permutation ``s`` with ``vec(A.T) = vec(A)[s]``."""
    r, c = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    s = np.empty(d * d, dtype=int)
    s[(r + d * c).ravel()] = (c + d * r).ravel()
    return s


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; dimensions multiply, first factor is the high index."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def partial_trace_ancilla(m, sys_dim: int, anc_dim: int) -> np.ndarray:
    """Trace out the second tensor factor of a (sys*anc) x (sys*anc) matrix.

    The composite index convention is system-first: row ``s*anc_dim + a``
    refers to system index ``s`` and ancilla index ``a``.
    """
    m = as_matrix(m)
    n = require_square(m)
    if sys_dim < 1 or anc_dim < 1 or n != sys_dim * anc_dim:
        raise ValueError(
            f"matrix of size {n} does not factor as sys_dim {sys_dim} x anc_dim {anc_dim}"
        )
    blocks = m.reshape(sys_dim, anc_dim, sys_dim, anc_dim)
    return np.einsum("iaja->ij", blocks)


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation from Hermiticity."""
    return max_abs(m - dagger(m))


def eigh_symmetrized(m, tol: float = 1e-8):
    """Eigendecomposition of ``(m + m†)/2``; rejects grossly non-Hermitian input.

    Returns ``(eigenvalues, eigenvectors)`` in ascending eigenvalue order.
    """
    m = as_matrix(m)
    require_square(m)
    defect = hermiticity_defect(m)
    scale = max(1.0, max_abs(m))
    if defect > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: asymmetry {defect:.3e} exceeds {tol * scale:.1e}"
        )
    return np.linalg.eigh((m + dagger(m)) / 2.0)


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetrized matrix."""
    vals = np.linalg.eigvalsh((m + dagger(m)) / 2.0)
    return float(vals[0])


def is_psd(m, tol: float = 1e-10) -> bool:
    """Positive-semidefinite test: Hermitian within ``tol`` and the minimum
    eigenvalue above ``-tol * max(1, spectral radius)`` (absolute floor 1e-12).
    """
    m = as_matrix(m)
    require_square(m)
    scale = max(1.0, max_abs(m))
    if hermiticity_defect(m) > tol * scale:
        return False
    vals = np.linalg.eigvalsh((m + dagger(m)) / 2.0)
    radius = float(np.max(np.abs(vals))) if vals.size else 0.0
    threshold = max(tol * max(1.0, radius), PSD_ABS_FLOOR)
    return bool(vals[0] >= -threshold)


def unitary_completion(v) -> np.ndarray:
    """Extend an n x k isometry to an n x n unitary whose first k columns are ``v``.

    Completion columns come from Gram-Schmidt over the standard basis in
    index order, skipping candidates whose residual norm falls below
    ``COMPLETION_RESIDUAL``; the result is deterministic for a given input.
    """
    v = as_matrix(v, "isometry")
    n, k = v.shape
    if k > n:
        raise ValueError(f"isometry has more columns ({k}) than rows ({n})")
    gram_defect = max_abs(dagger(v) @ v - np.eye(k))
    if gram_defect > ISOMETRY_TOL:
        raise ValueError(
            f"input is not an isometry: ||v†v - I|| = {gram_defect:.3e}"
        )
    columns = [v[:, j].copy() for j in range(k)]
    for i in range(n):
        if len(columns) == n:
            break
        w = np.zeros(n, dtype=complex)
        w[i] = 1.0
        # Two projection passes keep the new column orthogonal to working
        # precision even when the candidate is nearly spanned.
        for _ in range(2):
            for c in columns:
                w = w - c * (np.vdot(c, w))
        norm = np.linalg.norm(w)
        if norm < COMPLETION_RESIDUAL:
            continue
        columns.append(w / norm)
    if len(columns) != n:
        raise ValueError("unitary completion failed to span the full space")
    return np.column_stack(columns)
