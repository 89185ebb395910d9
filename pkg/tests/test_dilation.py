import numpy as np
import pytest

from qinstrument import (
    DensityOperator,
    IndirectModel,
    Instrument,
    InvariantViolation,
    SharpObservable,
    Superoperator,
    dilate,
    instrument_from_total_operation,
    instrument_of_model,
    luders_instrument,
    transpose_map,
    verify_realization,
)
from qinstrument.objects import observable_checks
from qinstrument.rand import (
    random_cp_instrument,
    random_density,
    random_unitary,
)

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def cnot_model(z_observable):
    return IndirectModel(
        sys_dim=2,
        anc_dim=2,
        ancilla_state=DensityOperator.pure([1, 0]),
        coupling=CNOT,
        probe=z_observable,
    )


class TestIndirectModel:
    def test_rejects_non_unitary_coupling(self, z_observable):
        with pytest.raises(InvariantViolation, match="unitary"):
            IndirectModel(2, 2, DensityOperator.pure([1, 0]), np.eye(4) * 0.5, z_observable)

    def test_rejects_mismatched_probe(self, z_observable):
        with pytest.raises(InvariantViolation):
            IndirectModel(2, 3, DensityOperator.maximally_mixed(3), np.eye(6), z_observable)


class TestInstrumentOfModel:
    def test_identity_coupling_factorizes(self, z_observable):
        # With U = I the outcome maps are Tr[E(x) sigma] times the identity.
        sigma = DensityOperator(np.array([[0.7, 0.1], [0.1, 0.3]], dtype=complex))
        model = IndirectModel(2, 2, sigma, np.eye(4, dtype=complex), z_observable)
        inst = instrument_of_model(model)
        for x in ("0", "1"):
            weight = sigma.matrix[int(x), int(x)].real
            assert np.max(np.abs(inst.map(x).matrix - weight * np.eye(4))) < 1e-12

    def test_cnot_gives_luders_z(self, z_observable):
        # Oracle: explicit 4x4 conjugation, traced by hand against the
        # projective instrument.
        report = verify_realization(cnot_model(z_observable), luders_instrument(z_observable), 1e-10)
        assert report.passed

    def test_normalization(self, z_observable):
        rng = np.random.default_rng(0)
        model = IndirectModel(
            2,
            3,
            random_density(rng, 3),
            random_unitary(rng, 6),
            SharpObservable.from_basis(random_unitary(rng, 3), ["a", "b", "c"]),
        )
        inst = instrument_of_model(model)
        total = inst.total_operation()
        for _ in range(20):
            rho = random_density(rng, 2)
            assert abs(np.trace(total.apply(rho.matrix)) - 1.0) < 1e-10

    def test_output_always_cp(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            model = IndirectModel(
                2,
                2,
                random_density(rng, 2),
                random_unitary(rng, 4),
                SharpObservable.from_basis(random_unitary(rng, 2), ["0", "1"]),
            )
            inst = instrument_of_model(model)
            for lbl in inst.outcomes:
                assert np.min(np.linalg.eigvalsh(inst.map(lbl).choi())) > -1e-9

    def test_linear_in_mixed_ancilla(self):
        rng = np.random.default_rng(2)
        u = random_unitary(rng, 6)
        probe = SharpObservable.from_basis(random_unitary(rng, 3), ["a", "b", "c"])
        sigma = random_density(rng, 3)
        mixed = instrument_of_model(IndirectModel(2, 3, sigma, u, probe))
        vals, vecs = np.linalg.eigh(sigma.matrix)
        combo = [np.zeros((4, 4), dtype=complex) for _ in probe.outcomes]
        for k in range(3):
            pure = instrument_of_model(
                IndirectModel(2, 3, DensityOperator.pure(vecs[:, k]), u, probe)
            )
            combo = [c + vals[k] * op.matrix for c, op in zip(combo, pure.ops)]
        for got, expected in zip(mixed.ops, combo):
            assert np.max(np.abs(got.matrix - expected)) < 1e-10


class TestDilate:
    def test_luders_z(self, luders_z):
        model = dilate(luders_z)
        assert model.anc_dim == 2
        assert model.probe.outcomes.labels == ("0", "1")
        assert verify_realization(model, luders_z, 1e-10).passed

    def test_single_outcome_unitary_channel(self):
        rng = np.random.default_rng(3)
        v = random_unitary(rng, 3)
        inst = Instrument(("only",), [Superoperator.from_kraus([v])])
        model = dilate(inst)
        assert model.anc_dim == 2  # padded
        assert model.probe.outcomes.labels == ("only",)
        assert np.allclose(model.probe.projection("only"), np.eye(2))
        assert verify_realization(model, inst, 1e-8).passed

    def test_random_cp_instruments(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            inst = random_cp_instrument(rng, 3, 3, max_kraus=2)
            model = dilate(inst)
            report = verify_realization(model, inst)
            assert report.max_deviation < 1e-8
            u = model.coupling
            assert np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])) < 1e-10

    def test_probe_is_valid_observable(self):
        rng = np.random.default_rng(5)
        inst = random_cp_instrument(rng, 2, 3, max_kraus=3)
        model = dilate(inst)
        for check in observable_checks(model.probe.projections):
            assert check.passed

    def test_ancilla_state_is_pure_first_basis_vector(self, luders_z):
        model = dilate(luders_z)
        expected = np.zeros((model.anc_dim, model.anc_dim), dtype=complex)
        expected[0, 0] = 1.0
        assert np.allclose(model.ancilla_state.matrix, expected)

    def test_zero_outcome_map_supported(self, z_observable):
        zero = Superoperator(np.zeros((4, 4)))
        inst = Instrument(
            ("0", "1", "never"),
            [
                Superoperator.from_kraus([z_observable.projection("0")]),
                Superoperator.from_kraus([z_observable.projection("1")]),
                zero,
            ],
        )
        model = dilate(inst)
        assert verify_realization(model, inst).passed

    def test_rejects_non_cp(self):
        inst = instrument_from_total_operation(SharpObservable.trivial(2), transpose_map(2))
        with pytest.raises(ValueError, match="Choi eigenvalue"):
            dilate(inst)


class TestVerifyRealization:
    def test_mismatched_observable_fails_with_order_one_deviation(
        self, z_observable, x_observable
    ):
        model = cnot_model(z_observable)
        luders_x = luders_instrument(x_observable)
        report = verify_realization(model, luders_x, 1e-8)
        assert not report.passed
        # Oracle: Frobenius distance between the projective maps themselves.
        expected = max(
            np.linalg.norm(
                np.kron(z_observable.projection(x).conj(), z_observable.projection(x))
                - np.kron(x_observable.projection(x).conj(), x_observable.projection(x))
            )
            for x in ("0", "1")
        )
        assert report.max_deviation == pytest.approx(expected, abs=1e-12)
        assert report.max_deviation > 0.5

    def test_outcome_mismatch_raises(self, luders_z, z_observable):
        model = dilate(luders_z)
        other = Instrument(
            ("a", "b"),
            [luders_z.map("0"), luders_z.map("1")],
        )
        with pytest.raises(ValueError, match="outcome"):
            verify_realization(model, other)

    def test_dimension_mismatch_raises(self, luders_z):
        inst3 = luders_instrument(SharpObservable.from_basis(np.eye(3), ["0", "1", "2"]))
        with pytest.raises(ValueError, match="dimension"):
            verify_realization(dilate(luders_z), inst3)
