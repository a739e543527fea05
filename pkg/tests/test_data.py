import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borel_reduce import data
from borel_reduce.data import Dataset, StepSpec
from borel_reduce.errors import DataError, ParameterError


def test_yeast_fixture_exact_values(fixtures_dir):
    ds = data.load_yeast(fixtures_dir / "yeast_tiny.data")
    assert ds.features.shape == (3, 8)
    assert ds.features[0].tolist() == [0.58, 0.61, 0.47, 0.13, 0.50, 0.00, 0.48, 0.22]
    assert ds.features[1].tolist() == [0.43, 0.67, 0.48, 0.27, 0.50, 0.00, 0.53, 0.22]
    assert ds.labels.tolist() == [1, 2, 1]
    assert ds.class_names == ("MIT", "NUC")
    assert ds.feature_names == data.YEAST_FEATURES
    assert len(ds.metadata["sha256"]) == 64


def test_yeast_reload_is_identical(fixtures_dir):
    a = data.load_yeast(fixtures_dir / "yeast_tiny.data")
    b = data.load_yeast(fixtures_dir / "yeast_tiny.data")
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert a.class_names == b.class_names and a.metadata == b.metadata


def test_yeast_empty_file(tmp_path):
    path = tmp_path / "empty.data"
    path.write_text("")
    with pytest.raises(DataError):
        data.load_yeast(path)


def test_yeast_wrong_field_count_reports_line(tmp_path):
    path = tmp_path / "bad.data"
    path.write_text("A 0.1 0.2 0.3 0.4 0.5 0.6 0.7 0.8 MIT\nB 0.1 0.2 CYT\n")
    with pytest.raises(DataError) as err:
        data.load_yeast(path)
    assert err.value.line == 2
    assert "line 2" in str(err.value)


def test_yeast_non_numeric_reports_column(tmp_path):
    path = tmp_path / "bad.data"
    path.write_text("A 0.1 0.2 x 0.4 0.5 0.6 0.7 0.8 MIT\n")
    with pytest.raises(DataError) as err:
        data.load_yeast(path)
    assert (err.value.line, err.value.column) == (1, 4)


def test_phoneme_fixture_exact_values(fixtures_dir):
    ds = data.load_phoneme(fixtures_dir / "phoneme_tiny.csv")
    assert ds.features.tolist() == [[9.85, 9.20, 9.84], [13.23, 14.19, 15.34]]
    assert ds.labels.tolist() == [1, 2]
    assert ds.class_names == ("sh", "iy")
    assert ds.feature_names == ("x.1", "x.2", "x.3")
    assert "row.names" in ds.dropped_columns and "speaker" in ds.dropped_columns


def test_phoneme_without_speaker(fixtures_dir):
    ds = data.load_phoneme(fixtures_dir / "phoneme_nospeaker.csv")
    assert ds.features.shape == (3, 2)
    assert ds.labels.tolist() == [1, 2, 1]
    assert any("speaker" in d and "absent" in d for d in ds.dropped_columns)


def test_phoneme_missing_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("1.0,2.0,aa\n")
    with pytest.raises(DataError):
        data.load_phoneme(path)


def test_phoneme_non_numeric_cell(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x.1,x.2,g\n1.0,2.0,aa\n1.0,oops,aa\n")
    with pytest.raises(DataError) as err:
        data.load_phoneme(path)
    assert (err.value.line, err.value.column) == (3, 2)


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset("x", [[np.nan]], [1], ("a",))
    with pytest.raises(DataError):
        Dataset("x", [[1.0]], [2], ("a",))
    with pytest.raises(DataError):
        Dataset("x", np.zeros((0, 2)), [], ("a",))
    ds = Dataset("x", [[1.0], [2.0]], [1, 2], ("a", "b"))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0
    assert ds.subset([1]).features.tolist() == [[2.0]]


def test_load_dispatch(fixtures_dir):
    assert data.load(fixtures_dir / "yeast_tiny.data", "yeast").n_rows == 3
    with pytest.raises(ParameterError):
        data.load(fixtures_dir / "yeast_tiny.data", "arff")


def test_canonical_path_env(monkeypatch, tmp_path):
    monkeypatch.setenv("BOREL_YEAST_DATA", str(tmp_path / "y.data"))
    assert data.canonical_path("yeast") == tmp_path / "y.data"


# --- synthetic generator ------------------------------------------------------------


def test_step_spec_bayes_error():
    assert StepSpec().bayes_error == 0.25
    ds = data.synth_two_class(10, seed=0)
    assert ds.metadata["bayes_error"] == 0.25


def test_synth_rejects_bad_input():
    with pytest.raises(ParameterError):
        data.synth_two_class(0)
    with pytest.raises(ParameterError):
        StepSpec(probs=(1.2, 0.1))
    with pytest.raises(ParameterError):
        StepSpec(cuts=(0.5,), probs=(0.5,))


def test_synth_label_frequencies_within_three_sigma():
    n = 100_000
    spec = StepSpec()
    ds = data.synth_two_class(n, seed=123, spec=spec)
    p = spec.marginal
    ones = np.count_nonzero(ds.labels == 2)
    assert abs(ones - n * p) <= 3 * math.sqrt(n * p * (1 - p))
    left = ds.features[:, 0] < 0.5
    n_left = int(left.sum())
    ones_left = int(np.count_nonzero(ds.labels[left] == 2))
    assert abs(ones_left - 0.75 * n_left) <= 3 * math.sqrt(n_left * 0.75 * 0.25)


def test_synth_is_seeded_and_in_unit_cube():
    spec = StepSpec(dims=3, duplicate_noise=0.05)
    a = data.synth_two_class(500, seed=4, spec=spec)
    b = data.synth_two_class(500, seed=4, spec=spec)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert a.features.min() >= 0 and a.features.max() <= 1
    assert set(a.labels.tolist()) <= {1, 2}


@settings(max_examples=100, deadline=None)
@given(
    cuts=st.lists(st.floats(0.01, 0.99), min_size=0, max_size=4, unique=True).map(sorted),
    data_=st.data(),
)
def test_bayes_error_matches_numeric_integral(cuts, data_):
    probs = data_.draw(st.lists(st.floats(0, 1), min_size=len(cuts) + 1, max_size=len(cuts) + 1))
    spec = StepSpec(cuts=tuple(cuts), probs=tuple(probs))
    grid = (np.arange(200_000) + 0.5) / 200_000
    eta = spec.conditional(grid)
    assert spec.bayes_error == pytest.approx(np.minimum(eta, 1 - eta).mean(), abs=1e-4)
