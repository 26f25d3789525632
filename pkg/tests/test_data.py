import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from simgood.data import (
    CSV,
    SPARSE,
    AttributeScaler,
    Dataset,
    SplitSpec,
    apply_scaling,
    fit_scaling,
    generate_rings,
    load_dataset,
    parse_dataset,
    serialize_csv,
    serialize_sparse,
    split,
    split_sizes,
)
from simgood.exceptions import DimensionMismatch, LabelError, ParseError, TooSmall


def test_sparse_line():
    ds = parse_dataset("+1 1:0.5 3:-0.2\n-1 2:1\n")
    np.testing.assert_array_equal(ds.X[0], [0.5, 0.0, -0.2])
    assert ds.y.tolist() == [1, -1]


def test_csv_line_with_label_remap():
    ds = parse_dataset("0.1,0.2,1\n0.3,0.4,0\n", CSV)
    np.testing.assert_array_equal(ds.X[0], [0.1, 0.2])
    assert ds.y.tolist() == [1, -1]


@pytest.mark.parametrize("labels,expected", [((1, 2), [-1, 1]), ((0, 1), [-1, 1]), ((4, 2), [1, -1])])
def test_two_label_schemes_map_smaller_to_negative(labels, expected):
    text = "".join(f"{lab} 1:1\n" for lab in labels)
    assert parse_dataset(text).y.tolist() == expected


def test_three_labels_rejected():
    with pytest.raises(LabelError):
        parse_dataset("0 1:1\n1 1:2\n2 1:3\n")


@pytest.mark.parametrize("text", ["+1 1:abc\n", "+1 0:1\n", "+1 1-2\n", "", "x 1:1\n"])
def test_malformed_sparse(text):
    with pytest.raises(ParseError):
        parse_dataset(text)


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as info:
        parse_dataset("+1 1:1\n# comment\n-1 2:oops\n")
    assert info.value.line == 3


def test_ragged_csv_rejected():
    with pytest.raises(ParseError):
        parse_dataset("1,2,1\n1,-1\n", CSV)


def test_declared_dimension():
    assert parse_dataset("+1 2:1\n", dim=5).dim == 5
    with pytest.raises(DimensionMismatch):
        parse_dataset("+1 7:1\n", dim=5)


_values = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)


@given(st.integers(1, 8), st.integers(1, 5), st.data())
def test_serialize_round_trip(n, d, data):
    X = data.draw(arrays(np.float64, (n, d), elements=st.one_of(st.just(0.0), _values)))
    y = np.array(data.draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n)))
    ds = Dataset(X, y)
    for fmt, dump in ((SPARSE, serialize_sparse), (CSV, serialize_csv)):
        back = parse_dataset(dump(ds), fmt)
        np.testing.assert_array_equal(back.X, X)
        np.testing.assert_array_equal(back.y, y)


def test_load_dataset_guesses_format(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2,1\n3,4,-1\n")
    assert load_dataset(p).dim == 2
    q = tmp_path / "d.txt"
    q.write_text("+1 1:1 2:2\n")
    assert load_dataset(q).dim == 2


def test_scaling_examples():
    train = Dataset(np.array([[0.0, 3.0], [10.0, 3.0]]), np.array([1, -1]))
    p = fit_scaling(train)
    out = apply_scaling(p, Dataset(np.array([[5.0, 3.0], [10.0, 7.0], [0.0, 3.0], [12.0, 3.0]]),
                                   np.array([1, 1, 1, 1])))
    # independent affine map: -1/d + (v - min) / (max - min) * 2/d, no clipping
    expected = [-0.5 + (v - 0.0) / 10.0 for v in (5.0, 10.0, 0.0, 12.0)]
    np.testing.assert_allclose(out.X[:, 0], expected)
    assert out.X[3, 0] == pytest.approx(0.7)
    # constant attribute maps to 0 whatever the value
    np.testing.assert_array_equal(out.X[:, 1], 0.0)


@given(arrays(np.float64, (12, 4), elements=st.floats(-1e3, 1e3)))
def test_scaled_training_vectors_in_unit_ball(X):
    ds = Dataset(X, np.ones(12, dtype=int))
    Z = apply_scaling(fit_scaling(ds), ds).X
    assert np.all(np.abs(Z) <= 1 / 4 + 1e-12)
    assert np.all(np.linalg.norm(Z, axis=1) <= 1 + 1e-12)


def test_scaler_estimator_matches_functional_form(rng):
    X = rng.normal(size=(20, 3))
    ds = Dataset(X, np.ones(20, dtype=int))
    ref = apply_scaling(fit_scaling(ds), ds).X
    np.testing.assert_allclose(AttributeScaler().fit_transform(X), ref)


def _toy(n):
    return Dataset(np.arange(n, dtype=float)[:, None], np.where(np.arange(n) % 2 == 0, 1, -1))


def test_split_sizes_examples():
    assert split_sizes(10, SplitSpec(seed=0, train_fraction=0.7)) == (7, 0, 3)
    assert split_sizes(100, SplitSpec(seed=0, train_fraction=0.7, validation_fraction=0.3)) == (49, 21, 30)


def test_split_partitions_deterministically():
    spec = SplitSpec(seed=9, train_fraction=0.7, validation_fraction=0.3)
    a, b = split(_toy(100), spec), split(_toy(100), spec)
    for x, z in zip(a, b):
        np.testing.assert_array_equal(x.X, z.X)
    idx = np.concatenate([p.meta["indices"] for p in a])
    assert sorted(idx.tolist()) == list(range(100))
    assert [len(p) for p in a] == [49, 21, 30]
    other = split(_toy(100), SplitSpec(seed=10, train_fraction=0.7, validation_fraction=0.3))
    assert not np.array_equal(other[0].X, a[0].X)


def test_split_without_validation():
    train, val, test = split(_toy(10), SplitSpec(seed=1))
    assert val is None and len(train) == 7 and len(test) == 3


def test_split_too_small():
    with pytest.raises(TooSmall):
        split(_toy(1), SplitSpec(seed=0))


def test_rings_shapes_and_statistics():
    train, test = generate_rings(700, 300, seed=4)
    assert (len(train), train.dim, len(test)) == (700, 2, 300)
    assert np.sum(train.y == 1) == 350
    r = np.linalg.norm(train.X, axis=1)
    assert abs(r[train.y == 1].mean() - 1.0) < 0.02
    assert abs(r[train.y == -1].mean() - 2.0) < 0.02
    assert abs(r[train.y == 1].std() - 0.1) < 0.02
    again, _ = generate_rings(700, 300, seed=4)
    np.testing.assert_array_equal(train.X, again.X)


def test_parse_accepts_streams():
    ds = parse_dataset(io.BytesIO(b"+1 1:2\n"))
    assert ds.X[0, 0] == 2.0
