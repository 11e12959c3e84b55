"""Command-line entry point: ``twinreg <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..data import generate, load_dataset, write_csv
from ..errors import CSVParseError, ExperimentError, InvalidArgumentError
from .biasvar import bias_variance_diagnostic, bootstrap_polyfit, polynomial_task
from .experiment import ExperimentConfig, multiplier_check, run_experiment, sweep
from .storage import crossover_size, storage_report


class _JSONErrorParser(argparse.ArgumentParser):
    """Usage errors are reported as JSON on stderr like every other failure."""

    def error(self, message):
        _emit_error("usage", message)
        sys.exit(2)


def _emit_error(kind, message, **extra):
    payload = {"error": kind, "message": str(message)}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload), file=sys.stderr)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _key_values(items, flag):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InvalidArgumentError(f"{flag} expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip().replace("-", "_")] = _parse_value(v)
    return out


def _experiment_args(p, sweep_cmd=False):
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--dataset", help="synthetic key (TF, RCL, WSB) or CSV path")
    p.add_argument("--target-column", help="CSV target column name or index")
    p.add_argument("--n-samples", type=int, help="rows to generate for synthetic data")
    p.add_argument("--noise-std", type=float)
    p.add_argument("--data-seed", type=int)
    p.add_argument("--method")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="method parameter, e.g. neighbors=32 (repeatable)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--split-fractions", type=float, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    g.add_argument("--split-counts", type=int, nargs=2, metavar=("TRAIN", "TEST"))
    p.add_argument("--repetitions", type=int)
    p.add_argument("--seed", type=int, help="first split seed")
    p.add_argument("--seeds", type=int, nargs="+", help="explicit split seeds")
    p.add_argument("--mlp", action="append", metavar="KEY=VALUE", help="MLP setting override")
    p.add_argument("--rf", action="append", metavar="KEY=VALUE",
                   help="forest grid override, e.g. max_depth=[8,32]")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory for result.json / result.csv")
    if sweep_cmd:
        p.add_argument("--axis", help="ensemble_size, multiplier, neighbors, lambda or anchors")
        p.add_argument("--values", nargs="+", type=_parse_value)


def _build_config(args) -> ExperimentConfig:
    d = json.loads(Path(args.config).read_text()) if args.config else {}
    simple = {
        "dataset": args.dataset, "n_samples": args.n_samples, "noise_std": args.noise_std,
        "data_seed": args.data_seed, "method": args.method, "repetitions": args.repetitions,
        "seed": args.seed, "seeds": args.seeds, "workers": args.workers, "output": args.out,
    }
    if args.target_column is not None:
        tc = args.target_column
        simple["target_column"] = int(tc) if tc.lstrip("-").isdigit() else tc
    d.update({k: v for k, v in simple.items() if v is not None})
    if args.param:
        d["params"] = {**d.get("params", {}), **_key_values(args.param, "--param")}
    if args.split_fractions:
        d["split"] = {"fractions": list(args.split_fractions)}
    if args.split_counts:
        d["split"] = {"counts": list(args.split_counts)}
    learner = dict(d.get("learner", {}))
    if args.mlp:
        learner["mlp"] = {**learner.get("mlp", {}), **_key_values(args.mlp, "--mlp")}
    if args.rf:
        learner["rf"] = {**learner.get("rf", {}), **_key_values(args.rf, "--rf")}
    if learner:
        d["learner"] = learner
    if getattr(args, "axis", None):
        d["sweep_axis"] = args.axis
    if getattr(args, "values", None):
        d["sweep_values"] = args.values
    return ExperimentConfig.from_dict(d)


def _summary(result):
    return {
        "sweep_value": result.sweep_value,
        "mean_rmse": result.mean_rmse,
        "standard_error": result.standard_error,
        "repetitions": len(result.rmse),
    }


def cmd_gen_data(args):
    d = generate(args.dataset, n=args.n, seed=args.seed, noise_std=args.noise_std)
    write_csv(d, args.out)
    print(json.dumps({"dataset": d.name, "rows": d.n, "features": d.feature_count,
                      "path": str(args.out)}))


def cmd_run(args):
    cfg = _build_config(args)
    if cfg.sweep_axis is not None:
        raise InvalidArgumentError("config requests a sweep; use the sweep subcommand")
    print(json.dumps(_summary(run_experiment(cfg))))


def cmd_sweep(args):
    cfg = _build_config(args)
    print(json.dumps([_summary(r) for r in sweep(cfg)]))


def cmd_storage(args):
    rows = storage_report(args.features, args.ensemble_sizes, tuple(args.hidden), args.augment)
    print("ensemble_size,ann_parameters,tnnr_parameters")
    for r in rows:
        print(f"{r.ensemble_size},{r.ann_parameters},{r.tnnr_parameters}")
    print(f"# crossover ensemble size: {crossover_size(args.features, tuple(args.hidden), args.augment)}")


def cmd_bv(args):
    res = bias_variance_diagnostic(bootstrap_polyfit(args.degree), polynomial_task(args.noise_std),
                                   trials=args.trials, seed=args.seed,
                                   independent_members=args.independent,
                                   identical_members=args.identical)
    print(json.dumps(res.to_dict()))


def cmd_multiplier(args):
    kw = {}
    if args.mlp:
        kw["learner"] = {"mlp": _key_values(args.mlp, "--mlp")}
    if args.n_samples is not None:
        kw["n_samples"] = args.n_samples
    load_dataset(args.dataset, n=args.n_samples)  # fail fast on a bad dataset
    report = multiplier_check(args.dataset, args.seeds, tuple(args.multipliers), **kw)
    print(json.dumps(report))


def build_parser():
    p = _JSONErrorParser(prog="twinreg", description="Twinned regression experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_JSONErrorParser)

    g = sub.add_parser("gen-data", help="write a synthetic dataset to CSV")
    g.add_argument("--dataset", required=True, choices=["TF", "RCL", "WSB"])
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-std", type=float)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    r = sub.add_parser("run", help="repeated-split evaluation of one method")
    _experiment_args(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="evaluate a method across values of one axis")
    _experiment_args(s, sweep_cmd=True)
    s.set_defaults(func=cmd_sweep)

    st = sub.add_parser("storage-report", help="stored parameters: ANN ensemble vs anchors")
    st.add_argument("--features", type=int, required=True)
    st.add_argument("--ensemble-sizes", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32])
    st.add_argument("--hidden", type=int, nargs="*", default=[128, 128])
    st.add_argument("--augment", action="store_true")
    st.set_defaults(func=cmd_storage)

    b = sub.add_parser("bv-diag", help="Monte-Carlo bias/variance/covariance check")
    b.add_argument("--trials", type=int, default=500)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--degree", type=int, default=3)
    b.add_argument("--noise-std", type=float, default=0.3)
    m = b.add_mutually_exclusive_group()
    m.add_argument("--independent", action="store_true", help="members see independent data")
    m.add_argument("--identical", action="store_true", help="member B copies member A")
    b.set_defaults(func=cmd_bv)

    mc = sub.add_parser("multiplier-check", help="advisory TNNR suitability check")
    mc.add_argument("--dataset", default="TF")
    mc.add_argument("--seeds", type=int, nargs="+", default=[0])
    mc.add_argument("--multipliers", type=int, nargs="+", default=[1, 4, 16])
    mc.add_argument("--n-samples", type=int)
    mc.add_argument("--mlp", action="append", metavar="KEY=VALUE")
    mc.set_defaults(func=cmd_multiplier)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ExperimentError as exc:
        _emit_error("experiment", exc, repetition=exc.repetition,
                    cause=type(exc.cause).__name__)
        return 1
    except CSVParseError as exc:
        _emit_error("csv", exc, path=str(exc.path) if exc.path else None, row=exc.row,
                    column=exc.column)
        return 1
    except (InvalidArgumentError, TypeError) as exc:
        _emit_error("invalid-argument", exc)
        return 2
    except OSError as exc:
        _emit_error("io", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
