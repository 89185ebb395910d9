import numpy as np
import pytest

from qinstrument import (
    DensityOperator,
    Instrument,
    SharpObservable,
    Superoperator,
    luders_instrument,
)
from qinstrument.objects import OutcomeSpace, Povm


@pytest.fixture
def z_observable():
    return SharpObservable.from_basis(np.eye(2), ["0", "1"])


@pytest.fixture
def x_observable():
    hadamard = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return SharpObservable.from_basis(hadamard, ["0", "1"])


@pytest.fixture
def luders_z(z_observable):
    return luders_instrument(z_observable)


@pytest.fixture
def luders_x(x_observable):
    return luders_instrument(x_observable)


@pytest.fixture
def tetrahedron_povm():
    """Four-outcome qubit POVM from tetrahedron Bloch vectors."""
    pauli = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    directions = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    ) / np.sqrt(3)
    effects = []
    for n in directions:
        bloch = sum(n[k] * pauli[k] for k in range(3))
        effects.append((np.eye(2, dtype=complex) + bloch) / 4.0)
    return Povm(OutcomeSpace(("a", "b", "c", "d")), effects)


def sqrt_psd(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return vecs @ np.diag(np.sqrt(vals)) @ vecs.conj().T


@pytest.fixture
def sqrt_instrument(tetrahedron_povm):
    """Measurement instrument X({x}) rho = sqrt(F(x)) rho sqrt(F(x))."""
    ops = [
        Superoperator.from_kraus([sqrt_psd(tetrahedron_povm.effect(x))])
        for x in tetrahedron_povm.outcomes
    ]
    return Instrument(tetrahedron_povm.outcomes, ops)


@pytest.fixture
def plus_state():
    return DensityOperator.pure([1, 1])


@pytest.fixture
def zero_state():
    return DensityOperator.pure([1, 0])
