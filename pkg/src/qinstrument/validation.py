"""Shared invariant machinery: named checks, exceptions, and the tolerances
used by every constructor in the package.

Domain objects are desk scale (dimensions up to ~64 with entries of order
one), so the type-level tolerances below are absolute.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

# Type-level invariants.
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
PROJECTION_TOL = 1e-10
SUM_TO_IDENTITY_TOL = 1e-10
NORMALIZATION_TOL = 1e-9

# Distributions.
PROBABILITY_CLAMP = 1e-12
DISTRIBUTION_SUM_TOL = 1e-9

# Linear algebra.
ISOMETRY_TOL = 1e-10
UNITARY_TOL = 1e-10
KRAUS_CUTOFF = 1e-10
KRAUS_RECONSTRUCTION_TOL = 1e-9

# Schemes and models.
NULL_OUTCOME_EPS = 1e-12
DILATION_ROUNDTRIP_TOL = 1e-8
POVM_RECONSTRUCTION_TOL = 1e-8

# Single CLI-facing default, overridable with --tol.
DEFAULT_TOL = 1e-9


class InvariantViolation(ValueError):
    """A domain object failed one of its construction invariants."""


class FormatError(ValueError):
    """A JSON document does not match any known schema."""


class ZeroProbabilityError(ValueError):
    """A collective reduction was queried on an outcome set of probability zero."""


class AffinityError(ValueError):
    """A scheme failed the affinity validation required for POVM extraction."""


@dataclass(frozen=True)
class Check:
    """One named invariant with its measured deviation and tolerance."""

    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def enforce(checks: Iterable[Check], context: str) -> None:
    """Raise :class:`InvariantViolation` describing the worst failed check."""
    failed = [c for c in checks if not c.passed]
    if not failed:
        return
    worst = max(failed, key=lambda c: c.deviation - c.tolerance)
    raise InvariantViolation(
        f"{context}: {worst.name} deviation {worst.deviation:.3e} "
        f"exceeds tolerance {worst.tolerance:.1e}"
    )
