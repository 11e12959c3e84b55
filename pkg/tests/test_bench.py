import json

import numpy as np
import pytest

from twinreg.bench import (
    ExperimentConfig,
    bias_variance_diagnostic,
    bootstrap_polyfit,
    crossover_size,
    multiplier_verdict,
    polynomial_task,
    rmse,
    run_experiment,
    standard_error,
    storage_report,
    sweep,
)
from twinreg.bench.biasvar import RegressionTask
from twinreg.data import SplitSpec, generate, split
from twinreg.errors import ExperimentError, InvalidArgumentError

TINY_MLP = {"mlp": {"hidden": [8], "max_epochs": 3}}
TINY_RF = {"rf": {"max_depth": [4], "max_features": [1.0], "min_samples_leaf": [1],
                  "min_samples_split": [2], "n_estimators": [3]}}


def layer_sum(n_in, hidden):
    widths = [n_in] + list(hidden) + [1]
    return sum(a * b + b for a, b in zip(widths, widths[1:]))


# -- metrics ----------------------------------------------------------------------------

def test_rmse_examples():
    assert rmse([1, 2], [1, 4]) == pytest.approx(np.sqrt(2), abs=1e-15)
    assert rmse([3.0, -1.0], [3.0, -1.0]) == 0.0
    assert rmse([2.5], [1.0]) == 1.5
    with pytest.raises(InvalidArgumentError):
        rmse([1, 2], [1])
    with pytest.raises(InvalidArgumentError):
        rmse([], [])


def test_standard_error():
    v = [1.0, 2.0, 4.0, 7.0]
    assert standard_error(v) == pytest.approx(np.std(v, ddof=1) / 2, abs=1e-15)
    assert standard_error([3.0]) == 0.0


# -- storage ------------------------------------------------------------------------------

def test_storage_report_f13():
    rows = {r.ensemble_size: r for r in storage_report(13, [1, 2, 32])}
    assert rows[32].ann_parameters == 32 * layer_sum(13, (128, 128)) == 589856
    assert rows[32].tnnr_parameters == layer_sum(26, (128, 128)) + 32 * 14 == 20545
    assert rows[1].ann_parameters == 18433 < rows[1].tnnr_parameters == 20111
    assert rows[2].tnnr_parameters < rows[2].ann_parameters
    assert crossover_size(13) == 2


def test_storage_errors():
    with pytest.raises(InvalidArgumentError):
        storage_report(0, [1])
    with pytest.raises(InvalidArgumentError):
        storage_report(3, [0])


# -- bias / variance ----------------------------------------------------------------------

def test_bias_variance_identity_holds():
    res = bias_variance_diagnostic(bootstrap_polyfit(3), polynomial_task(), trials=200, seed=1)
    assert res.holds
    assert abs(res.residual) <= 3 * res.mse_se


def test_identical_members_cov_equals_var():
    res = bias_variance_diagnostic(bootstrap_polyfit(3), polynomial_task(), trials=100, seed=0,
                                   identical_members=True)
    assert res.covariance == pytest.approx(res.variance, rel=1e-12)
    assert res.holds


def test_independent_members_cov_near_zero():
    res = bias_variance_diagnostic(bootstrap_polyfit(3), polynomial_task(), trials=400, seed=2,
                                   independent_members=True)
    assert abs(res.covariance) <= 3 * res.covariance_se
    assert res.holds


def test_perfect_estimator_degenerate():
    task = RegressionTask(lambda x: np.sin(x), 0.0, 20, np.linspace(-1, 1, 11))
    exact = lambda x, y, rng: (lambda q: np.sin(q))
    res = bias_variance_diagnostic(exact, task, trials=30, seed=0)
    assert res.mse == 0.0
    assert max(res.bias2, res.variance, abs(res.covariance)) < 1e-25
    assert res.degenerate and res.holds
    with pytest.raises(InvalidArgumentError):
        bias_variance_diagnostic(exact, task, trials=10)


# -- experiments --------------------------------------------------------------------------

def test_knn_all_rows_equals_train_mean():
    cfg = ExperimentConfig(dataset="WSB", method="knn", params={"k": 140}, repetitions=3)
    res = run_experiment(cfg)
    d = generate("WSB")
    for seed, value in zip(res.seeds, res.rmse):
        tr, _, te = split(d, SplitSpec(seed))
        assert tr.n == 140
        assert value == pytest.approx(rmse(np.full(te.n, tr.targets.mean()), te.targets), abs=1e-12)


def test_result_fields_recomputable(tmp_path):
    cfg = ExperimentConfig(dataset="TF", n_samples=120, method="knn", repetitions=25,
                           output=str(tmp_path))
    res = run_experiment(cfg)
    assert len(res.rmse) == 25 and res.seeds == list(range(25))
    assert abs(res.mean_rmse - np.mean(res.rmse)) <= 1e-12
    assert abs(res.standard_error - np.std(res.rmse, ddof=1) / 5) <= 1e-12
    stored = json.loads((tmp_path / "result.json").read_text())["results"][0]
    assert stored["rmse"] == res.rmse
    assert stored["config"]["method"] == "knn"
    lines = (tmp_path / "result.csv").read_text().splitlines()
    assert lines[0] == "seed,sweep_value,rmse" and len(lines) == 26
    assert float(lines[1].split(",")[2]) == res.rmse[0]
    t = (tmp_path / "timings.csv").read_text().splitlines()
    assert t[0] == "seed,sweep_value,train_s,infer_s" and len(t) == 26


def test_run_is_deterministic(tmp_path):
    base = dict(dataset="TF", n_samples=80, method="tnnr", seeds=[3, 4], learner=TINY_MLP)
    a = run_experiment(ExperimentConfig(**base, output=str(tmp_path / "a")))
    b = run_experiment(ExperimentConfig(**base, output=str(tmp_path / "b")))
    assert a.rmse == b.rmse
    assert (tmp_path / "a" / "result.csv").read_bytes() == (tmp_path / "b" / "result.csv").read_bytes()


def test_sweep_neighbors_full_equals_all_anchor():
    common = dict(dataset="TF", n_samples=60, seeds=[0, 1], learner=TINY_MLP)
    nn = sweep(ExperimentConfig(method="nntnnr", params={"train_mode": "all"},
                                sweep_axis="neighbors", sweep_values=[5, 42], **common))
    full = run_experiment(ExperimentConfig(method="tnnr", **common))
    assert [r.sweep_value for r in nn] == [5, 42]
    assert nn[1].rmse == full.rmse


def test_sweep_multiplier_n_equals_full():
    common = dict(dataset="TF", n_samples=40, seeds=[2], learner=TINY_MLP)
    mult = sweep(ExperimentConfig(method="tnnr", sweep_axis="multiplier", sweep_values=[1, 28], **common))
    full = run_experiment(ExperimentConfig(method="tnnr", **common))
    assert mult[-1].rmse == full.rmse


def test_sweep_shares_split_seeds():
    res = sweep(ExperimentConfig(dataset="WSB", method="knn", sweep_axis="neighbors",
                                 sweep_values=[1, 3, 9], seeds=[5, 6, 7]))
    assert all(r.seeds == [5, 6, 7] for r in res)
    assert len({tuple(r.rmse) for r in res}) == 3


def test_sweep_ensemble_members_reused():
    res = sweep(ExperimentConfig(dataset="TF", n_samples=60, method="ann_ensemble", seeds=[0],
                                 sweep_axis="ensemble_size", sweep_values=[1, 3], learner=TINY_MLP))
    single = run_experiment(ExperimentConfig(dataset="TF", n_samples=60, method="ann", seeds=[0],
                                             learner=TINY_MLP))
    assert res[0].rmse == single.rmse
    assert res[1].parameter_counts[0] == 3 * res[0].parameter_counts[0]


def test_lambda_sweep_and_rf_methods():
    common = dict(dataset="WSB", seeds=[0], learner=TINY_RF)
    res = sweep(ExperimentConfig(method="semisup_rf", sweep_axis="lambda", sweep_values=[0.0, 1.0], **common))
    assert len(res) == 2 and all(np.isfinite(r.mean_rmse) for r in res)
    for method in ("rf", "twin_rf"):
        r = run_experiment(ExperimentConfig(method=method, **common))
        assert r.parameter_counts[0] > 0


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(method="magic")
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(method="knn", sweep_axis="lambda", sweep_values=[1])
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(method="knn", sweep_axis="neighbors", sweep_values=[])
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(method="knn", repetitions=0)
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(method="knn", params={"neighbors": 3})
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig.from_dict({"method": "knn", "colour": "red"})
    with pytest.raises(InvalidArgumentError):
        run_experiment(ExperimentConfig(method="knn", sweep_axis="neighbors", sweep_values=[1]))


def test_errors_carry_repetition_index(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,2\n")
    with pytest.raises(ExperimentError) as ei:
        run_experiment(ExperimentConfig(dataset=str(bad), method="knn", repetitions=1))
    assert ei.value.repetition == 0
    cfg = ExperimentConfig(dataset="WSB", method="knn", params={"k": 500}, seeds=[4, 5])
    with pytest.raises(ExperimentError) as ei:
        run_experiment(cfg)
    assert ei.value.repetition == 0 and isinstance(ei.value.cause, InvalidArgumentError)


def test_parallel_workers_match_serial():
    common = dict(dataset="WSB", method="knn", seeds=[0, 1, 2])
    a = run_experiment(ExperimentConfig(**common))
    b = run_experiment(ExperimentConfig(**common, workers=2))
    assert a.rmse == b.rmse


def test_multiplier_verdicts():
    assert multiplier_verdict([0.1, 0.2, 0.3]) == "reject-tnnr"
    assert multiplier_verdict([0.3, 0.2, 0.1]) == "ok"
    assert multiplier_verdict([0.2, 0.2, 0.2]) == "ok"
    assert multiplier_verdict([0.1, 0.3, 0.2]) == "ok"


def test_twin_rf_matches_semisup_supervised_model():
    grid = {"max_depth": [3, 6], "max_features": [1.0], "min_samples_leaf": [1],
            "min_samples_split": [2], "n_estimators": [3]}
    common = dict(dataset="WSB", seeds=[1], learner={"rf": grid})
    twin = run_experiment(ExperimentConfig(method="twin_rf", **common))
    plain = run_experiment(ExperimentConfig(method="rf", **common))

    from twinreg import learners
    from twinreg.data import apply_scaler, fit_scaler
    from twinreg.learners import ForestConfig, LearnerConfig
    from twinreg.semisup import semisup_fit
    from twinreg.twin import predict_values

    tr, _, te = split(generate("WSB"), SplitSpec(1, counts=(100, 100)))
    s = fit_scaler(tr)
    cfg = LearnerConfig("random_forest", rf=ForestConfig(**{k: tuple(v) for k, v in grid.items()}))
    tm = semisup_fit(cfg, tr, te.features, seed=1, scaler=s)
    sup = predict_values(tm.info["supervised"], s.transform(te.features), model_space=True)
    assert rmse(sup, te.targets) == twin.rmse[0]
    trs = apply_scaler(s, tr)
    direct = learners.fit(cfg, trs.features, trs.targets, seed=1).predict(s.transform(te.features))
    assert rmse(direct, te.targets) == plain.rmse[0]
