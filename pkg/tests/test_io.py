import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncle_lab import io
from uncle_lab.errors import DimensionMismatchError, InputError
from uncle_lab.models import ghz_uncle_term, zero_doubled_tensor
from uncle_lab.mps import MpsTensor, random_block_mps, random_tensor
from uncle_lab.uncle import random_perturbation


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(1, 3))
def test_tensor_round_trip_bit_exact(seed, d, D):
    t = random_tensor(d, D, np.random.default_rng(seed), canonical=False)
    back = io.tensor_from_json(json.loads(io.dumps(io.tensor_to_json(t))))
    assert np.array_equal(back.mats, t.mats)


def test_tensor_document_layout():
    t = MpsTensor(np.array([[[1 + 2j]], [[3.0]]]))
    doc = io.tensor_to_json(t)
    assert doc == {"d": 2, "D": 1, "mats": [[[[1.0, 2.0]]], [[[3.0, 0.0]]]]}


def test_rectangular_family():
    fam = np.arange(12, dtype=complex).reshape(2, 2, 3)
    doc = io.family_to_json(fam)
    assert doc["D"] == [2, 3]
    assert np.array_equal(io.family_from_json(doc), fam)


def test_blocks_and_perturbation_round_trip():
    c = random_block_mps(3, (1, 2), 0)
    back = io.blocks_from_json(json.loads(io.dumps(io.blocks_to_json(c))))
    assert back.dims == (1, 2)
    z = io.blocks_from_json(io.blocks_to_json(zero_doubled_tensor()))
    assert z.allow_repeated
    p = random_perturbation(c, np.random.default_rng(0))
    q = io.perturbation_from_json(json.loads(io.dumps(io.perturbation_to_json(p))))
    for k in ("pa", "pb", "r", "l"):
        assert np.array_equal(getattr(p, k), getattr(q, k))


def test_term_round_trip():
    t = ghz_uncle_term()
    back = io.term_from_json(json.loads(io.dumps(io.term_to_json(t))))
    assert np.array_equal(back.matrix, t.matrix)
    assert back.support == 3 and back.local_dim == 2


def test_validation_errors():
    with pytest.raises(InputError):
        io.tensor_from_json({"d": 1})
    with pytest.raises(DimensionMismatchError):
        io.tensor_from_json({"d": 2, "D": 1, "mats": [[[[1, 0]]]]})
    with pytest.raises(InputError):
        io.tensor_from_json({"d": 1, "D": 1, "mats": [[["a", "b"]]]})
    with pytest.raises(InputError):
        io.blocks_from_json({"blocks": []})
    with pytest.raises(InputError):
        io.perturbation_from_json({"pa": {}})
    with pytest.raises(InputError):
        io.term_from_json({"matrix": []})


def test_read_json_reports_position(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"d": 2,\n  "D": }')
    with pytest.raises(InputError, match="line 2, column"):
        io.read_json(bad)
    with pytest.raises(InputError, match="cannot read"):
        io.read_json(tmp_path / "missing.json")


def test_csv_uses_17_digits():
    text = io.csv_text(["n", "x"], [(3, 0.1), (4, np.float64(1 / 3))])
    lines = text.splitlines()
    assert lines[0] == "n,x"
    assert lines[1] == "3,0.10000000000000001"
    assert float(lines[2].split(",")[1]) == 1 / 3


def test_dumps_deterministic_and_numpy_aware():
    doc = {"b": np.float64(0.5), "a": np.arange(3)}
    assert io.dumps(doc) == io.dumps(dict(reversed(list(doc.items()))))
    assert json.loads(io.dumps(doc)) == {"a": [0, 1, 2], "b": 0.5}
    with pytest.raises(TypeError):
        io.dumps({"x": object()})
