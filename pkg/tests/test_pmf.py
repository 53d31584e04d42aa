import json

import numpy as np
import pytest

from compoisson import CmpParams, ParameterError, TruncatedPmf, cmp_pmf, point_mass


def test_window_accessors():
    pmf = TruncatedPmf(2, [0.25, 0.5, 0.25])
    assert list(pmf.support) == [2, 3, 4]
    assert pmf.last == 4
    assert pmf.at(3) == 0.5
    assert pmf.at(7) == 0.0
    assert np.array_equal(pmf.padded(0, 6), [0, 0, 0.25, 0.5, 0.25, 0])
    assert np.isclose(pmf.mean(), 3.0)
    assert np.isclose(pmf.variance(), 0.5)
    assert pmf.is_normalized()


def test_probs_are_read_only():
    pmf = TruncatedPmf(0, [0.5, 0.5])
    with pytest.raises(ValueError):
        pmf.probs[0] = 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"support_start": 0, "probs": []},
        {"support_start": 0, "probs": [0.5, -0.1]},
        {"support_start": -1, "probs": [1.0]},
        {"support_start": 0, "probs": [1.0], "tail_bound": -1e-3},
        {"support_start": 0, "probs": [1.0], "tail_ratio": 1.0},
    ],
)
def test_invalid_windows_rejected(kwargs):
    with pytest.raises(ParameterError):
        TruncatedPmf(**kwargs)


def test_shift_and_trim():
    pmf = TruncatedPmf(0, [0.5, 0.5, 0.0, 0.0], tail_ratio=0.5)
    moved = pmf.shift(3)
    assert moved.support_start == 3 and moved.meta["shift"] == 3
    trimmed = pmf.trimmed()
    assert trimmed.probs.size == 2 and trimmed.tail_ratio is None
    with pytest.raises(ParameterError):
        pmf.shift(-1)


def test_json_roundtrip():
    pmf = cmp_pmf(CmpParams(1.5, 0.8))
    back = TruncatedPmf.from_json(pmf.to_json())
    assert np.array_equal(back.probs, pmf.probs)
    assert back.tail_bound == pmf.tail_bound
    assert back.meta["family"] == "cmp"
    doc = json.loads(pmf.to_json())
    assert set(doc) == {"family", "params", "support_start", "probs", "tail_bound", "tol", "seed"}


def test_csv_layout():
    lines = point_mass(4).to_csv().splitlines()
    header = json.loads(lines[0][2:])
    assert header["family"] == "point"
    assert lines[1:] == ["k,prob", "4,1.0"]


def test_malformed_document():
    with pytest.raises(ParameterError):
        TruncatedPmf.from_dict({"probs": [1.0]})
