"""Measurement schemes: apparatuses, joint statistics, mixing-law checks,
POVM reconstruction, and seeded trajectory sampling.

An apparatus is either instrument-backed or a black box supplying the two
host functions P (output distribution) and Q (conditional output state).
Black-box outputs are validated on every call; the point of this module is
to test axioms against arbitrary schemes, so host code is never trusted.

Output states at zero-probability outcomes are not determined by the
statistics; the designated null-outcome state is the maximally mixed one,
and such outcomes are excluded from equivalence comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np

from . import linalg
from .objects import (
    DensityOperator,
    OutcomeDistribution,
    OutcomeSpace,
    Povm,
)
from .instruments import Instrument
from .rand import random_density
from .validation import (
    AffinityError,
    NULL_OUTCOME_EPS,
    POVM_RECONSTRUCTION_TOL,
    ZeroProbabilityError,
)

# Fixed seed for the fresh-state validation pass of POVM reconstruction;
# a constant keeps the operation deterministic without a seed parameter.
_POVM_VALIDATION_SEED = 20260810
_POVM_VALIDATION_STATES = 20

PFunc = Callable[[DensityOperator], OutcomeDistribution]
QFunc = Callable[[DensityOperator, str], DensityOperator]


@dataclass(frozen=True, eq=False)
class Apparatus:
    """A measuring apparatus with a named output variable."""

    label: str
    dim: int
    outcomes: OutcomeSpace
    instrument: Instrument | None
    p_func: PFunc | None
    q_func: QFunc | None

    @classmethod
    def from_instrument(cls, label: str, instrument: Instrument) -> "Apparatus":
        return cls(
            label=label,
            dim=instrument.dim,
            outcomes=instrument.outcomes,
            instrument=instrument,
            p_func=None,
            q_func=None,
        )

    @classmethod
    def black_box(
        cls, label: str, dim: int, outcomes, p: PFunc, q: QFunc
    ) -> "Apparatus":
        if not isinstance(outcomes, OutcomeSpace):
            outcomes = OutcomeSpace(tuple(outcomes))
        return cls(
            label=label, dim=dim, outcomes=outcomes, instrument=None, p_func=p, q_func=q
        )

    @property
    def is_instrument_backed(self) -> bool:
        return self.instrument is not None

    def _check_state(self, rho: DensityOperator) -> None:
        if rho.dim != self.dim:
            raise ValueError(
                f"state dimension {rho.dim} does not match apparatus dimension {self.dim}"
            )

    def output_distribution(self, rho: DensityOperator) -> OutcomeDistribution:
        """P(rho): the distribution of the output variable."""
        self._check_state(rho)
        if self.instrument is not None:
            probs = [
                float(np.real(np.trace(self.instrument.map(x).apply(rho.matrix))))
                for x in self.outcomes
            ]
            return OutcomeDistribution(self.outcomes, probs)
        dist = self.p_func(rho)
        if not isinstance(dist, OutcomeDistribution):
            raise TypeError("black-box P must return an OutcomeDistribution")
        if dist.outcomes.labels != self.outcomes.labels:
            raise ValueError("black-box P returned a mismatched outcome space")
        return dist

    def output_state(self, rho: DensityOperator, label: str) -> DensityOperator:
        """Q(rho, x): the output state conditional on outcome ``x``.

        For instrument-backed apparatuses this is the normalized image of
        the outcome map when its probability exceeds the null threshold,
        and the maximally mixed state otherwise.
        """
        self._check_state(rho)
        self.outcomes.index(label)
        if self.instrument is not None:
            image = self.instrument.map(label).apply(rho.matrix)
            weight = float(np.real(np.trace(image)))
            if weight <= NULL_OUTCOME_EPS:
                return DensityOperator.maximally_mixed(self.dim)
            return DensityOperator(image / weight)
        state = self.q_func(rho, label)
        if not isinstance(state, DensityOperator):
            raise TypeError("black-box Q must return a DensityOperator")
        if state.dim != self.dim:
            raise ValueError("black-box Q returned a state of the wrong dimension")
        return state

    def __repr__(self) -> str:  # pragma: no cover
        kind = "instrument" if self.is_instrument_backed else "black-box"
        return f"Apparatus({self.label!r}, dim={self.dim}, {kind})"


def scheme_of_instrument(x: Instrument, label: str = "x") -> Apparatus:
    """Apparatus whose statistics are given by an instrument:
    ``P(rho)(x) = Tr[X({x}) rho]`` and ``Q(rho, x)`` the normalized image."""
    return Apparatus.from_instrument(label, x)


def eigenbasis_apparatus(dim: int, label: str = "eig") -> Apparatus:
    """Black-box apparatus that measures each state in its own eigenbasis.

    Outcome ``k`` carries the k-th largest eigenvalue and prepares the
    corresponding eigenprojector.  The output statistics are not affine in
    the input state, so this apparatus admits no POVM description; it
    exists to exercise the negative paths of the mixing-law machinery.
    """
    outcomes = OutcomeSpace(tuple(str(i) for i in range(dim)))

    def p(rho: DensityOperator) -> OutcomeDistribution:
        vals = np.linalg.eigvalsh(rho.matrix)[::-1]
        return OutcomeDistribution(outcomes, [float(v) for v in vals])

    def q(rho: DensityOperator, outcome: str) -> DensityOperator:
        _, vecs = np.linalg.eigh(rho.matrix)
        column = vecs[:, dim - 1 - int(outcome)]
        return DensityOperator.pure(column)

    return Apparatus.black_box(label, dim, outcomes, p, q)


@dataclass(frozen=True, eq=False)
class CollectiveScheme:
    """Collective reduction view of an apparatus: outcome subsets instead of
    single outcomes."""

    apparatus: Apparatus

    def reduce(self, labels: Iterable[str], rho: DensityOperator) -> DensityOperator:
        """Output state given that the outcome fell in ``labels``.

        Defined only where the subset probability is positive; querying a
        null subset raises :class:`ZeroProbabilityError`.
        """
        labels = tuple(labels)
        dist = self.apparatus.output_distribution(rho)
        mass = dist.mass(labels)
        if mass <= 0.0:
            raise ZeroProbabilityError(
                f"collective reduction undefined: outcomes {labels} have probability zero"
            )
        mixture = np.zeros((rho.dim, rho.dim), dtype=complex)
        for x in labels:
            p = dist.prob(x)
            if p > 0.0:
                mixture += p * self.apparatus.output_state(rho, x).matrix
        return DensityOperator(mixture / mass)

    def consistency_defect(self, rho: DensityOperator) -> float:
        """Deviation of the singleton partition from the trivial one:
        ``sum_x P(x) R({x}, rho)`` against ``R(all, rho)``."""
        dist = self.apparatus.output_distribution(rho)
        combined = np.zeros((rho.dim, rho.dim), dtype=complex)
        for x in self.apparatus.outcomes:
            p = dist.prob(x)
            if p > 0.0:
                combined += p * self.apparatus.output_state(rho, x).matrix
        whole = self.reduce(self.apparatus.outcomes.labels, rho)
        return linalg.max_abs(combined - whole.matrix)


def collective_of(a: Apparatus) -> CollectiveScheme:
    """Collective scheme induced by an apparatus via probability-weighted
    mixing of its conditional output states."""
    return CollectiveScheme(apparatus=a)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probabilities over tuples of outcomes of a measurement sequence."""

    spaces: tuple[OutcomeSpace, ...]
    probabilities: dict[tuple[str, ...], float]

    def __init__(self, spaces, probabilities):
        spaces = tuple(spaces)
        valid_keys = set(product(*(s.labels for s in spaces)))
        unknown = set(map(tuple, probabilities)) - valid_keys
        if unknown:
            raise ValueError(f"unknown outcome tuples: {sorted(unknown)}")
        table = {}
        total = 0.0
        for key in product(*(s.labels for s in spaces)):
            p = float(probabilities.get(key, 0.0))
            if p < -1e-12:
                raise ValueError(f"negative joint probability {p} at {key}")
            p = max(p, 0.0)
            table[key] = p
            total += p
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"joint probabilities sum to {total}")
        object.__setattr__(self, "spaces", spaces)
        object.__setattr__(self, "probabilities", table)

    def prob(self, key: tuple[str, ...]) -> float:
        return self.probabilities[tuple(key)]

    def items(self):
        return self.probabilities.items()

    def marginal(self, length: int) -> "JointDistribution":
        """Marginal over the first ``length`` coordinates."""
        if not 1 <= length <= len(self.spaces):
            raise ValueError("marginal length out of range")
        table: dict[tuple[str, ...], float] = {}
        for key, p in self.probabilities.items():
            head = key[:length]
            table[head] = table.get(head, 0.0) + p
        return JointDistribution(self.spaces[:length], table)

    def max_abs_distance(self, other: "JointDistribution") -> float:
        if tuple(s.labels for s in self.spaces) != tuple(
            s.labels for s in other.spaces
        ):
            raise ValueError("joint distributions are structurally incomparable")
        return max(
            abs(self.probabilities[k] - other.probabilities[k])
            for k in self.probabilities
        )


def _check_sequence(sequence: Sequence[Apparatus], rho: DensityOperator) -> None:
    if not sequence:
        raise ValueError("measurement sequence must be nonempty")
    for app in sequence:
        if app.dim != rho.dim:
            raise ValueError(
                f"apparatus {app.label!r} dimension {app.dim} does not match "
                f"state dimension {rho.dim}"
            )


def joint_distribution(
    sequence: Sequence[Apparatus], rho: DensityOperator
) -> JointDistribution:
    """Joint outcome distribution of a successive measurement.

    Computed by the recursion: measure with the first apparatus, then
    condition the remaining sequence on each positive-probability outcome.
    """
    _check_sequence(sequence, rho)

    def recurse(apps: Sequence[Apparatus], state: DensityOperator):
        first = apps[0]
        dist = first.output_distribution(state)
        if len(apps) == 1:
            return {(x,): dist.prob(x) for x in first.outcomes}
        tail_spaces = [a.outcomes.labels for a in apps[1:]]
        table: dict[tuple[str, ...], float] = {}
        for x in first.outcomes:
            p = dist.prob(x)
            if p > 0.0:
                sub = recurse(apps[1:], first.output_state(state, x))
                for key, q in sub.items():
                    table[(x,) + key] = p * q
            else:
                for key in product(*tail_spaces):
                    table[(x,) + key] = 0.0
        return table

    table = recurse(list(sequence), rho)
    return JointDistribution(tuple(a.outcomes for a in sequence), table)


@dataclass(frozen=True, eq=False)
class MixingLawWitness:
    """A concrete mixture on which joint statistics failed to be affine."""

    rho_a: DensityOperator
    rho_b: DensityOperator
    weight: float
    outcome: tuple[str, ...]
    mixed_probability: float
    combined_probability: float
    trial: int

    @property
    def deviation(self) -> float:
        return abs(self.mixed_probability - self.combined_probability)


@dataclass(frozen=True, eq=False)
class MixingLawVerdict:
    """Result of probing affinity of joint statistics in the input state.

    ``witness`` is definitive when present; ``affine`` means no violation
    was found over the examined trials, which is evidence rather than
    proof for black-box apparatuses.
    """

    trials: int
    max_deviation: float
    witness: MixingLawWitness | None

    @property
    def affine(self) -> bool:
        return self.witness is None

    @property
    def violated(self) -> bool:
        return self.witness is not None


def check_mlpd(
    sequence: Sequence[Apparatus],
    trials: int,
    seed: int,
    tol: float = 1e-9,
) -> MixingLawVerdict:
    """Probe the mixing law: joint statistics of ``a rho1 + (1-a) rho2``
    must equal the same mixture of the joint statistics.

    Draws random state pairs and weights, returning the first witness whose
    deviation exceeds ``tol``, or an affine verdict with the largest
    deviation seen.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not sequence:
        raise ValueError("measurement sequence must be nonempty")
    rng = np.random.default_rng(seed)
    dim = sequence[0].dim
    max_dev = 0.0
    for trial in range(trials):
        rho_a = random_density(rng, dim)
        rho_b = random_density(rng, dim)
        weight = float(rng.uniform())
        mixed = rho_a.mix(rho_b, weight)
        joint_mixed = joint_distribution(sequence, mixed)
        joint_a = joint_distribution(sequence, rho_a)
        joint_b = joint_distribution(sequence, rho_b)
        for key, p_mixed in joint_mixed.items():
            combined = weight * joint_a.prob(key) + (1.0 - weight) * joint_b.prob(key)
            dev = abs(p_mixed - combined)
            max_dev = max(max_dev, dev)
            if dev > tol:
                witness = MixingLawWitness(
                    rho_a=rho_a,
                    rho_b=rho_b,
                    weight=weight,
                    outcome=key,
                    mixed_probability=p_mixed,
                    combined_probability=combined,
                    trial=trial,
                )
                return MixingLawVerdict(
                    trials=trial + 1, max_deviation=max_dev, witness=witness
                )
    return MixingLawVerdict(trials=trials, max_deviation=max_dev, witness=None)


def povm_from_affine_scheme(a: Apparatus) -> Povm:
    """Reconstruct the unique POVM measured by an affine apparatus.

    Effects are rebuilt from the output probabilities of d^2 probe states
    (basis states plus two phase variants per off-diagonal pair) via
    polarization, then validated against fresh random states; failure of
    either the prediction check or the POVM invariants raises
    :class:`AffinityError`, as expected for non-affine schemes.
    """
    d = a.dim
    basis = np.eye(d, dtype=complex)
    diag_probs = [
        a.output_distribution(DensityOperator.pure(basis[:, i])) for i in range(d)
    ]
    effects: dict[str, np.ndarray] = {}
    for idx, x in enumerate(a.outcomes):
        f = np.zeros((d, d), dtype=complex)
        for i in range(d):
            f[i, i] = diag_probs[i].probabilities[idx]
        for i in range(d):
            for j in range(i + 1, d):
                plus = DensityOperator.pure(basis[:, i] + basis[:, j])
                phase = DensityOperator.pure(basis[:, i] + 1j * basis[:, j])
                p_plus = a.output_distribution(plus).probabilities[idx]
                p_phase = a.output_distribution(phase).probabilities[idx]
                s1 = 2.0 * p_plus - f[i, i] - f[j, j]
                s2 = 2.0 * p_phase - f[i, i] - f[j, j]
                f[i, j] = (s1 - 1j * s2) / 2.0
                f[j, i] = (s1 + 1j * s2) / 2.0
        effects[x] = f

    rng = np.random.default_rng(_POVM_VALIDATION_SEED)
    for _ in range(_POVM_VALIDATION_STATES):
        probe = random_density(rng, d)
        dist = a.output_distribution(probe)
        for x in a.outcomes:
            predicted = float(np.real(np.trace(effects[x] @ probe.matrix)))
            if abs(predicted - dist.prob(x)) > POVM_RECONSTRUCTION_TOL:
                raise AffinityError(
                    f"apparatus {a.label!r} is not affine: outcome {x!r} deviates "
                    f"by {abs(predicted - dist.prob(x)):.3e} on a fresh state"
                )
    try:
        return Povm(a.outcomes, effects)
    except ValueError as exc:
        raise AffinityError(
            f"reconstructed effects of {a.label!r} do not form a POVM: {exc}"
        ) from exc


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    """Tally of sampled outcome tuples with their final conditional states."""

    shots: int
    counts: dict[tuple[str, ...], int]
    final_states: dict[tuple[str, ...], DensityOperator]

    def frequency(self, key: tuple[str, ...]) -> float:
        return self.counts.get(tuple(key), 0) / self.shots


def sample_trajectory(
    sequence: Sequence[Apparatus],
    rho: DensityOperator,
    shots: int,
    seed: int,
) -> TrajectoryResult:
    """Sample successive measurements shot by shot.

    Each shot draws an outcome from P of the current state, updates the
    state through Q, and proceeds to the next apparatus.  Apparatuses are
    required to be pure functions, so distributions and updated states are
    cached per (step, state); the sampling order and therefore the tally
    are deterministic for a fixed seed.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    _check_sequence(sequence, rho)
    rng = np.random.default_rng(seed)

    dist_cache: dict[tuple[int, bytes], np.ndarray] = {}
    state_cache: dict[tuple[int, bytes, int], DensityOperator] = {}

    def cumulative(step: int, state: DensityOperator) -> np.ndarray:
        key = (step, state.matrix.tobytes())
        cum = dist_cache.get(key)
        if cum is None:
            dist = sequence[step].output_distribution(state)
            cum = np.cumsum(dist.probabilities)
            dist_cache[key] = cum
        return cum

    def advance(step: int, state: DensityOperator, idx: int) -> DensityOperator:
        key = (step, state.matrix.tobytes(), idx)
        nxt = state_cache.get(key)
        if nxt is None:
            nxt = sequence[step].output_state(state, sequence[step].outcomes.labels[idx])
            state_cache[key] = nxt
        return nxt

    counts: dict[tuple[str, ...], int] = {}
    finals: dict[tuple[str, ...], DensityOperator] = {}
    n_steps = len(sequence)
    for _ in range(shots):
        state = rho
        labels: list[str] = []
        for step in range(n_steps):
            cum = cumulative(step, state)
            draw = rng.random()
            idx = int(np.searchsorted(cum, draw, side="right"))
            idx = min(idx, len(cum) - 1)
            labels.append(sequence[step].outcomes.labels[idx])
            state = advance(step, state, idx)
        key = tuple(labels)
        counts[key] = counts.get(key, 0) + 1
        if key not in finals:
            finals[key] = state
    return TrajectoryResult(shots=shots, counts=counts, final_states=finals)
