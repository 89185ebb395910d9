"""Seeded random generators for states, observables, channels and instruments.

Pure states are normalized complex Gaussian vectors; mixed states combine a
squared-Gaussian spectrum with a Haar-like random basis.  All functions
take an explicit ``numpy.random.Generator`` so results are reproducible.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .objects import DensityOperator, OutcomeSpace, Povm, SharpObservable
from .instruments import Instrument, StateFamily
from .superop import Superoperator


def random_pure_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase-fixed diagonal."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_density(rng: np.random.Generator, dim: int) -> DensityOperator:
    spectrum = rng.standard_normal(dim) ** 2
    spectrum /= spectrum.sum()
    basis = random_unitary(rng, dim)
    return DensityOperator(basis @ np.diag(spectrum) @ basis.conj().T)


def random_sharp_observable(
    rng: np.random.Generator, dim: int, ranks: Sequence[int]
) -> SharpObservable:
    """Observable with the given projection ranks (zeros allowed) in a
    Haar-random basis; labels are "0", "1", ... in rank order."""
    ranks = [int(r) for r in ranks]
    if any(r < 0 for r in ranks) or sum(ranks) != dim:
        raise ValueError(f"ranks {ranks} must be nonnegative and sum to {dim}")
    basis = random_unitary(rng, dim)
    projections = []
    start = 0
    for r in ranks:
        block = basis[:, start : start + r]
        projections.append(block @ block.conj().T)
        start += r
    labels = tuple(str(i) for i in range(len(ranks)))
    return SharpObservable(OutcomeSpace(labels), projections)


def random_nondegenerate_observable(
    rng: np.random.Generator, dim: int
) -> SharpObservable:
    return random_sharp_observable(rng, dim, [1] * dim)


def random_povm(rng: np.random.Generator, dim: int, n_outcomes: int) -> Povm:
    """POVM from Gaussian effects symmetrized through the inverse root of
    their sum."""
    if n_outcomes < 1:
        raise ValueError("n_outcomes must be at least 1")
    raw = []
    for _ in range(n_outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        raw.append(g.conj().T @ g)
    total = sum(raw)
    vals, vecs = np.linalg.eigh(total)
    inv_root = vecs @ np.diag(vals**-0.5) @ vecs.conj().T
    effects = [inv_root @ a @ inv_root for a in raw]
    labels = tuple(str(i) for i in range(n_outcomes))
    return Povm(OutcomeSpace(labels), effects)


def random_kraus_channel(
    rng: np.random.Generator, dim: int, n_kraus: int
) -> Superoperator:
    """Trace-preserving CP map from globally normalized Gaussian Kraus blocks."""
    blocks = [
        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        for _ in range(n_kraus)
    ]
    gram = sum(b.conj().T @ b for b in blocks)
    vals, vecs = np.linalg.eigh(gram)
    inv_root = vecs @ np.diag(vals**-0.5) @ vecs.conj().T
    return Superoperator.from_kraus([b @ inv_root for b in blocks])


def random_cp_instrument(
    rng: np.random.Generator, dim: int, n_outcomes: int, max_kraus: int = 3
) -> Instrument:
    """CP instrument with 1..max_kraus Kraus operators per outcome,
    normalized so the total operation preserves trace."""
    if n_outcomes < 1:
        raise ValueError("n_outcomes must be at least 1")
    per_outcome = [int(rng.integers(1, max_kraus + 1)) for _ in range(n_outcomes)]
    blocks = [
        [
            rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            for _ in range(count)
        ]
        for count in per_outcome
    ]
    gram = sum(b.conj().T @ b for group in blocks for b in group)
    vals, vecs = np.linalg.eigh(gram)
    inv_root = vecs @ np.diag(vals**-0.5) @ vecs.conj().T
    ops = [
        Superoperator.from_kraus([b @ inv_root for b in group]) for group in blocks
    ]
    labels = tuple(str(i) for i in range(n_outcomes))
    return Instrument(OutcomeSpace(labels), ops)


def random_state_family(
    rng: np.random.Generator, dim: int, outcomes: OutcomeSpace
) -> StateFamily:
    states = [random_density(rng, dim) for _ in outcomes]
    return StateFamily(outcomes, states)


def random_compatible_operation(
    rng: np.random.Generator, e: SharpObservable, n_kraus: int = 3
) -> Superoperator:
    """Random trace-preserving operation compatible with ``e``, built as a
    random channel composed after the pinching of ``e``."""
    from .objects import luders_pinching

    channel = random_kraus_channel(rng, e.dim, n_kraus)
    return channel.compose(luders_pinching(e))
