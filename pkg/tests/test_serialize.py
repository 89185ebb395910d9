import numpy as np
import pytest

from qinstrument import (
    DensityOperator,
    FormatError,
    IndirectModel,
    InvariantViolation,
    StateFamily,
    dilate,
)
from qinstrument import serialize
from qinstrument.rand import (
    random_cp_instrument,
    random_density,
    random_nondegenerate_observable,
    random_povm,
    random_state_family,
)
from qinstrument.schemes import scheme_of_instrument
from qinstrument.superop import Superoperator, transpose_map


class TestMatrixCodec:
    def test_roundtrip(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        assert np.array_equal(serialize.matrix_from_json(serialize.matrix_to_json(m)), m)

    def test_row_major_layout(self):
        obj = serialize.matrix_to_json(np.array([[1, 2], [3, 4]], dtype=complex))
        assert obj["data"][1] == [2.0, 0.0]  # row-major: entry (0, 1) second

    def test_rejects_bad_length(self):
        with pytest.raises(FormatError):
            serialize.matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})

    def test_rejects_missing_keys(self):
        with pytest.raises(FormatError):
            serialize.matrix_from_json({"rows": 2, "data": []})


class TestTypedRoundtrips:
    def test_state(self):
        rng = np.random.default_rng(1)
        rho = random_density(rng, 3)
        again = serialize.state_from_json(serialize.state_to_json(rho))
        assert np.max(np.abs(again.matrix - rho.matrix)) < 1e-15

    def test_observable(self):
        rng = np.random.default_rng(2)
        e = random_nondegenerate_observable(rng, 3)
        again = serialize.observable_from_json(serialize.observable_to_json(e))
        for x in e.outcomes:
            assert np.max(np.abs(again.projection(x) - e.projection(x))) < 1e-15

    def test_povm(self):
        rng = np.random.default_rng(3)
        f = random_povm(rng, 2, 3)
        again = serialize.povm_from_json(serialize.povm_to_json(f))
        assert again.max_abs_distance(f) < 1e-15

    def test_superoperator_kraus_form(self):
        rng = np.random.default_rng(4)
        s = random_cp_instrument(rng, 2, 2).map("0")
        obj = serialize.superoperator_to_json(s)
        assert "kraus" in obj  # CP maps are written in Kraus form
        again = serialize.superoperator_from_json(obj)
        assert again.max_abs_distance(s) < 1e-12

    def test_superoperator_natural_form(self):
        t = transpose_map(2)
        obj = serialize.superoperator_to_json(t)
        assert "natural" in obj  # non-CP maps fall back to the natural matrix
        again = serialize.superoperator_from_json(obj)
        assert again.max_abs_distance(t) == 0.0

    def test_instrument(self, luders_z):
        again = serialize.instrument_from_json(serialize.instrument_to_json(luders_z))
        assert again.max_abs_distance(luders_z) < 1e-12

    def test_state_family(self):
        rng = np.random.default_rng(5)
        e = random_nondegenerate_observable(rng, 2)
        fam = random_state_family(rng, 2, e.outcomes)
        again = serialize.state_family_from_json(serialize.state_family_to_json(fam))
        for x in fam.outcomes:
            assert np.max(np.abs(again.state(x).matrix - fam.state(x).matrix)) < 1e-15

    def test_model(self, luders_z):
        model = dilate(luders_z)
        again = serialize.model_from_json(serialize.model_to_json(model))
        assert np.max(np.abs(again.coupling - model.coupling)) < 1e-15
        assert again.anc_dim == model.anc_dim

    def test_apparatus(self, luders_z):
        app = scheme_of_instrument(luders_z, "z")
        again = serialize.apparatus_from_json(serialize.apparatus_to_json(app))
        assert again.label == "z"
        assert again.instrument.max_abs_distance(luders_z) < 1e-12

    def test_black_box_apparatus_not_serializable(self):
        from qinstrument import eigenbasis_apparatus

        with pytest.raises(ValueError):
            serialize.apparatus_to_json(eigenbasis_apparatus(2))


class TestDetection:
    def test_kinds(self, luders_z):
        rng = np.random.default_rng(6)
        e = random_nondegenerate_observable(rng, 2)
        fam = random_state_family(rng, 2, e.outcomes)
        cases = {
            "state": serialize.state_to_json(random_density(rng, 2)),
            "observable": serialize.observable_to_json(e),
            "povm": serialize.povm_to_json(random_povm(rng, 2, 2)),
            "superoperator": serialize.superoperator_to_json(transpose_map(2)),
            "instrument": serialize.instrument_to_json(luders_z),
            "state_family": serialize.state_family_to_json(fam),
            "model": serialize.model_to_json(dilate(luders_z)),
            "apparatus": serialize.apparatus_to_json(scheme_of_instrument(luders_z)),
        }
        for kind, obj in cases.items():
            assert serialize.detect_kind(obj) == kind

    def test_unknown_document(self):
        with pytest.raises(FormatError):
            serialize.detect_kind({"what": 1})


class TestErrors:
    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(FormatError):
            serialize.read_json(path)

    def test_denormalized_instrument_is_semantic_failure(self, luders_z):
        obj = serialize.instrument_to_json(luders_z)
        # scale one Kraus operator: parses fine, fails the instrument invariant
        for entry in obj["maps"]["0"]["kraus"]:
            entry["data"] = [[1.1 * re, 1.1 * im] for re, im in entry["data"]]
        with pytest.raises(InvariantViolation):
            serialize.instrument_from_json(obj)

    def test_wrong_map_dimension_is_format_error(self, luders_z):
        obj = serialize.instrument_to_json(luders_z)
        obj["dim"] = 3
        with pytest.raises(FormatError):
            serialize.instrument_from_json(obj)

    def test_file_loaders(self, tmp_path, luders_z):
        inst_path = tmp_path / "inst.json"
        serialize.write_json(inst_path, serialize.instrument_to_json(luders_z))
        assert serialize.load_instrument(inst_path).max_abs_distance(luders_z) < 1e-12
        with pytest.raises(FormatError):
            serialize.load_state(inst_path)
