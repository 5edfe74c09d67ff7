import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmt.errors import (
    BadParameter,
    BadWeights,
    DimensionMismatch,
    LengthNotDyadic,
    MixedKinds,
    ParseError,
)
from wmt.measures import (
    DiscreteMeasure,
    GaussianMeasure,
    MeasureSequence,
    default_level,
    read_sequence,
    validate_sequence,
    write_sequence,
)

from conftest import random_discrete, random_gaussian


class TestGaussianMeasure:
    def test_rejects_zero_variance(self):
        with pytest.raises(BadParameter):
            GaussianMeasure(0.0, 0.0)
        with pytest.raises(BadParameter):
            GaussianMeasure(0.0, -1.0)

    def test_std(self):
        assert GaussianMeasure(0.0, 4.0).std == 2.0


class TestDiscreteMeasure:
    def test_renormalizes_to_exact_one(self):
        w = np.array([0.3, 0.3, 0.4 + 5e-10])
        mu = DiscreteMeasure(np.array([[0.0], [1.0], [2.0]]), w)
        assert math.fsum(mu.weights) == 1.0

    def test_rejects_far_from_one(self):
        with pytest.raises(BadWeights):
            DiscreteMeasure(np.array([[0.0], [1.0]]), [0.5, 0.6])

    def test_rejects_negative_weights(self):
        with pytest.raises(BadWeights):
            DiscreteMeasure(np.array([[0.0], [1.0]]), [1.5, -0.5])

    def test_merges_duplicates(self):
        mu = DiscreteMeasure(
            np.array([[1.0, 0.0], [1.0 + 1e-13, 0.0], [0.0, 0.0]]),
            [0.25, 0.25, 0.5],
        )
        assert mu.size == 2
        # canonical order sorts by first coordinate
        assert np.allclose(mu.atoms[0], [0.0, 0.0])
        assert mu.weights[1] == pytest.approx(0.5)

    def test_drops_zero_weight_atoms(self):
        mu = DiscreteMeasure(np.array([[0.0], [5.0]]), [1.0, 0.0])
        assert mu.size == 1

    def test_atoms_immutable(self):
        mu = DiscreteMeasure(np.array([[0.0], [1.0]]), [0.5, 0.5])
        with pytest.raises(ValueError):
            mu.atoms[0, 0] = 3.0

    @given(
        st.lists(
            st.floats(min_value=0.01, max_value=10.0),
            min_size=1,
            max_size=20,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_renormalization_property(self, raw):
        weights = np.asarray(raw)
        weights = weights / weights.sum()
        atoms = np.arange(len(weights), dtype=float).reshape(-1, 1)
        mu = DiscreteMeasure(atoms, weights)
        assert math.fsum(mu.weights) == 1.0
        assert np.all(mu.weights > 0.0)


class TestMeasureSequence:
    def test_five_gaussians_level_two_ok(self, rng):
        seq = MeasureSequence(tuple(random_gaussian(rng) for _ in range(5)), 2)
        validate_sequence(seq)

    def test_six_gaussians_level_two_fails(self, rng):
        with pytest.raises(LengthNotDyadic):
            MeasureSequence(tuple(random_gaussian(rng) for _ in range(6)), 2)

    def test_641_discrete_level_six_ok(self):
        elements = tuple(
            DiscreteMeasure(np.array([[float(i)]]), [1.0]) for i in range(641)
        )
        seq = MeasureSequence(elements, 6)
        assert len(seq) == 641

    def test_mixed_kinds(self, rng):
        with pytest.raises(MixedKinds):
            MeasureSequence((random_gaussian(rng), random_discrete(rng)), 0)

    def test_mixed_dimensions(self, rng):
        with pytest.raises(DimensionMismatch):
            MeasureSequence(
                (random_discrete(rng, d=1), random_discrete(rng, d=2)), 0
            )

    def test_times(self):
        seq = MeasureSequence(
            tuple(GaussianMeasure(float(i), 1.0) for i in range(5)), 2, grid_origin=1.0
        )
        assert np.allclose(seq.times(), [1.0, 1.25, 1.5, 1.75, 2.0])


def test_default_level():
    assert default_level(641) == 6
    assert default_level(161) == 5
    assert default_level(65) == 6
    assert default_level(17) == 4
    assert default_level(6) == 0


class TestSequenceIO:
    def test_json_round_trip_bit_exact(self, rng, tmp_path):
        seq = MeasureSequence(
            tuple(random_discrete(rng, d=2) for _ in range(5)), 2, grid_origin=0.25
        )
        path = tmp_path / "seq.json"
        write_sequence(seq, path)
        again = read_sequence(path)
        rewritten = tmp_path / "seq2.json"
        write_sequence(again, rewritten)
        assert path.read_bytes() == rewritten.read_bytes()
        for a, b in zip(seq, again):
            assert np.array_equal(a.atoms, b.atoms)
            assert np.array_equal(a.weights, b.weights)
        assert again.level == seq.level and again.grid_origin == seq.grid_origin

    def test_json_gaussian_round_trip(self, rng, tmp_path):
        seq = MeasureSequence(tuple(random_gaussian(rng) for _ in range(5)), 2)
        path = tmp_path / "seq.json"
        write_sequence(seq, path)
        again = read_sequence(path)
        assert all(
            a.mean == b.mean and a.variance == b.variance for a, b in zip(seq, again)
        )

    def test_csv_shared_support(self, rng, tmp_path):
        # 161 epochs x 10 support points, softmax-like rows
        logits = rng.normal(size=(161, 10))
        rows = np.exp(logits)
        rows /= rows.sum(axis=1, keepdims=True)
        path = tmp_path / "seq.csv"
        lines = [",".join(repr(float(s)) for s in range(10))]
        for row in rows:
            lines.append(",".join(repr(float(v)) for v in row))
        path.write_text("\n".join(lines) + "\n")
        seq = read_sequence(path, "csv")
        assert len(seq) == 161
        assert seq.level == 5
        assert seq.kind == "discrete" and seq.dim == 1
        # write/read is the identity on canonical (library-written) files
        canonical = tmp_path / "canonical.csv"
        write_sequence(seq, canonical, "csv")
        rewritten = tmp_path / "rewritten.csv"
        write_sequence(read_sequence(canonical, "csv"), rewritten, "csv")
        assert rewritten.read_bytes() == canonical.read_bytes()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        with pytest.raises(ParseError):
            read_sequence(path)

    def test_parse_error_context(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1\n0.5,oops\n")
        with pytest.raises(ParseError, match="line 2"):
            read_sequence(path, "csv")

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"kind": "gaussian", "elements": [{"mean": 0}]}))
        with pytest.raises(ParseError):
            read_sequence(path)

    def test_bad_length_propagates(self, tmp_path):
        obj = {
            "kind": "gaussian",
            "level": 2,
            "elements": [{"mean": 0.0, "variance": 1.0}] * 6,
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(LengthNotDyadic):
            read_sequence(path)
