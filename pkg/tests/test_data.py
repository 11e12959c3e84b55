import numpy as np
import pytest

from twinreg.data import (
    Dataset,
    SplitSpec,
    apply_scaler,
    fit_scaler,
    generate,
    generate_rcl,
    generate_test_function,
    generate_wheatstone,
    load_csv,
    load_dataset,
    rcl_current,
    split,
    split_indices,
    tf_formula,
    wheatstone_voltage,
    write_csv,
)
from twinreg.errors import (
    CSVParseError,
    InvalidArgumentError,
    MissingFileError,
    MissingTargetError,
    NonNumericCellError,
)


# -- synthetic generators ---------------------------------------------------

def test_tf_shape_and_points():
    d = generate_test_function(1000, seed=0)
    assert (d.n, d.feature_count) == (1000, 2)
    assert d.name == "TF"
    assert tf_formula(1.0, 0.0) == 0.0
    assert tf_formula(0.0, 0.0) == -1.0


def test_tf_noiseless_residual_zero():
    d = generate_test_function(300, seed=4)
    resid = d.targets - tf_formula(d.features[:, 0], d.features[:, 1])
    assert np.max(np.abs(resid)) <= 1e-12
    assert d.features.min() >= -1 and d.features.max() <= 1


def test_rcl_shape_and_points():
    d = generate_rcl(4000, seed=0)
    assert (d.n, d.feature_count) == (4000, 6)
    # resonance: omega L = 1 / (omega C)
    assert rcl_current(1.0, 1.0, 0.0, 1.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert rcl_current(0.0, 1.3, 0.4, 0.7, 1.1, 0.9) == 0.0


def test_wsb_shape_and_points():
    d = generate_wheatstone(200, seed=0)
    assert (d.n, d.feature_count) == (200, 4)
    assert wheatstone_voltage(1.7, 0.8, 0.8, 0.8) == pytest.approx(0.0, abs=1e-15)
    assert wheatstone_voltage(0.0, 0.6, 1.2, 1.9) == 0.0


@pytest.mark.parametrize("key", ["TF", "RCL", "WSB"])
def test_generators_deterministic(key):
    a = generate(key, n=50, seed=9)
    b = generate(key, n=50, seed=9)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.targets, b.targets)


@pytest.mark.parametrize("key,fn", [("RCL", rcl_current), ("WSB", wheatstone_voltage)])
def test_noise_seed_shares_inputs(key, fn):
    clean = generate(key, n=500, seed=3, noise_std=0.0)
    noisy = generate(key, n=500, seed=3)
    assert np.array_equal(clean.features, noisy.features)
    assert np.max(np.abs(clean.targets - fn(*clean.features.T))) <= 1e-12
    noise = noisy.targets - clean.targets
    assert 0.08 < noise.std() < 0.12


def test_generator_errors():
    with pytest.raises(InvalidArgumentError):
        generate_test_function(0)
    with pytest.raises(InvalidArgumentError):
        generate_rcl(10, domain={"R": (-1.0, 1.0)})
    with pytest.raises(InvalidArgumentError):
        generate_rcl(10, domain={"omega": (0.0, 1.0)})
    with pytest.raises(InvalidArgumentError):
        generate_wheatstone(10, domain={"R2": (-0.5, 1.0)})
    with pytest.raises(InvalidArgumentError):
        generate("NOPE")


def test_dataset_invariants():
    with pytest.raises(InvalidArgumentError):
        Dataset(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(InvalidArgumentError):
        Dataset(np.array([[np.nan, 1.0]]), np.zeros(1))
    d = Dataset(np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(ValueError):
        d.features[0, 0] = 1.0


# -- CSV ---------------------------------------------------------------------

def test_load_csv_single_row(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("a,b,y\n1,2,3\n")
    d = load_csv(p, "y")
    assert d.features.tolist() == [[1.0, 2.0]]
    assert d.targets.tolist() == [3.0]
    assert d.feature_names == ("a", "b")


def test_load_csv_by_index_preserves_order(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("y,a,b\n5,1,2\n6,3,4\n7,5,6\n")
    d = load_csv(p, 0)
    assert d.targets.tolist() == [5.0, 6.0, 7.0]
    assert d.features.tolist() == [[1, 2], [3, 4], [5, 6]]


def test_load_csv_boston_shape(tmp_path):
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(size=(506, 13)), rng.normal(size=506), "BH")
    p = tmp_path / "bh.csv"
    write_csv(d, p)
    back = load_csv(p)
    assert (back.n, back.feature_count) == (506, 13)
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.targets, d.targets)


def test_load_csv_blank_cell(tmp_path):
    p = tmp_path / "blank.csv"
    p.write_text("a,b,y\n1,2,3\n4,,6\n")
    with pytest.raises(NonNumericCellError) as ei:
        load_csv(p, "y")
    assert ei.value.row == 3 and ei.value.column == "b"
    assert "line 3" in str(ei.value) and "'b'" in str(ei.value)


def test_load_csv_errors_are_distinct(tmp_path):
    with pytest.raises(MissingFileError):
        load_csv(tmp_path / "absent.csv")
    p = tmp_path / "bad.csv"
    p.write_text("a,y\n1,x\n")
    with pytest.raises(NonNumericCellError) as ei:
        load_csv(p)
    assert (ei.value.row, ei.value.column) == (2, "y")
    with pytest.raises(MissingTargetError):
        load_csv(p, "target")
    p.write_text("a,y\n1,2,3\n")
    with pytest.raises(CSVParseError):
        load_csv(p)
    p.write_text("a,y\n1,inf\n")
    with pytest.raises(NonNumericCellError):
        load_csv(p)


def test_load_dataset_dispatch(tmp_path):
    assert load_dataset("tf", n=10).name == "TF"
    with pytest.raises(InvalidArgumentError):
        load_dataset("BH")
    p = tmp_path / "x.csv"
    p.write_text("a,y\n1,2\n")
    assert load_dataset(str(p)).n == 1


# -- splitting -----------------------------------------------------------------

def test_split_fraction_sizes():
    d = generate_test_function(1000)
    tr, va, te = split(d, SplitSpec(0))
    assert (tr.n, va.n, te.n) == (700, 100, 200)


def test_split_counts_mode():
    d = generate_test_function(1599)
    tr, va, te = split(d, SplitSpec(1, counts=(100, 100)))
    assert (tr.n, va.n, te.n) == (100, 0, 100)
    with pytest.raises(InvalidArgumentError):
        split(generate_test_function(150), SplitSpec(0, counts=(100, 100)))


def test_split_deterministic_and_disjoint():
    a = split_indices(500, SplitSpec(7))
    b = split_indices(500, SplitSpec(7))
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    tr, va, te = a
    assert len(set(tr) | set(va) | set(te)) == 500
    assert not set(tr) & set(va) and not set(tr) & set(te) and not set(va) & set(te)
    c = split_indices(500, SplitSpec(8))
    assert not np.array_equal(a[0], c[0])


def test_splitspec_validation():
    with pytest.raises(InvalidArgumentError):
        SplitSpec(0, fractions=(0.7, 0.1, 0.1))
    with pytest.raises(InvalidArgumentError):
        SplitSpec(0, fractions=(1.1, -0.1, 0.0))
    SplitSpec(0, fractions=(0.7, 0.1, 0.2 + 5e-10))


# -- scaling -----------------------------------------------------------------

def test_scaler_hand_zscore():
    d = Dataset(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]), np.zeros(3))
    s = fit_scaler(d)
    z = apply_scaler(s, d).features
    r = np.sqrt(1.5)
    assert np.allclose(z[:, 0], [-r, 0.0, r], atol=1e-12)
    assert np.array_equal(z[:, 1], [0.0, 0.0, 0.0])


def test_scaler_standardizes_and_round_trips(rng):
    X = rng.normal(3.0, 7.0, size=(80, 4))
    d = Dataset(X, rng.normal(size=80))
    s = fit_scaler(d, targets=True)
    z = s.transform(X)
    assert np.allclose(z.mean(axis=0), 0.0, atol=1e-9)
    assert np.allclose(z.std(axis=0), 1.0, atol=1e-9)
    assert np.max(np.abs(s.inverse_transform(z) - X)) <= 1e-10
    t = s.transform_targets(d.targets)
    assert np.max(np.abs(s.inverse_targets(t) - d.targets)) <= 1e-10


def test_scaler_empty_and_width_errors():
    with pytest.raises(InvalidArgumentError):
        fit_scaler(Dataset(np.empty((0, 2)), np.empty(0)))
    s = fit_scaler(Dataset(np.ones((3, 2)), np.zeros(3)))
    with pytest.raises(InvalidArgumentError):
        apply_scaler(s, Dataset(np.ones((3, 3)), np.zeros(3)))
