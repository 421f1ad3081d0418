"""Command-line entry point: ``mdsvm {synth,train,tune,structure,experiment,evaluate}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import data as D
from .metrics import (EgdThresholds, accuracy, dissimilarity_score, feature_dissimilarity,
                      model_support, predictive_agreement)
from .solver import NumericalError, SolverSettings
from .structure import cardinality_report, extract_structure, verify_cfs, write_structure
from .trainer import (MdsvmHyper, ModelFileError, global_objective,
                      init_modelset, load_models, save_models, train_mdsvm, train_svm)
from .tuning import TuningConfig, run_experiment, tune_ensvm, tune_mdsvm

log = logging.getLogger("mdsvm")

DEMO_DIR = Path(__file__).parent / "demo"
DEMO_DATA = DEMO_DIR / "demo.csv"
DEMO_CONFIG = DEMO_DIR / "demo.cfg"

EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


class UsageError(Exception):
    pass


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="dataset path ('demo' for the bundled one)")
    p.add_argument("--format", default="csv", choices=["csv", "sparse"])
    p.add_argument("--dims", type=int, default=None, help="feature count for sparse files")


def _add_solver_args(p):
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--abs-tol", type=float, default=1e-5)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=5000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdsvm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--threads", type=int, default=None,
                        help="cap on worker processes (falls back to EGD_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic redundant-feature dataset")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--core", type=int, default=2)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--group-size", type=int, default=1)
    p.add_argument("--noise", type=int, default=5)
    p.add_argument("--correlation", type=float, default=1.0)
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="csv path; ground truth goes to <out>.truth")

    p = sub.add_parser("train", help="train a model set with fixed hyperparameters")
    _add_data_args(p)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=10.0)
    p.add_argument("--lambda3", type=float, default=1.0)
    p.add_argument("--jitter", type=float, default=0.01,
                   help="relative perturbation of the w/m initialization")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", default=None,
                   help="ground-truth file from synth; reports Dis on the redundant block")
    p.add_argument("--out", required=True)
    _add_solver_args(p)

    p = sub.add_parser("evaluate", help="score a model file on a dataset")
    _add_data_args(p)
    p.add_argument("--models", required=True)

    p = sub.add_parser("structure", help="extract and verify the feature structure")
    _add_data_args(p)
    p.add_argument("--models", required=True)
    p.add_argument("--test", default=None, help="held-out data for verification")
    p.add_argument("--l2", type=float, default=1.0, help="l2 penalty of the verification SVMs")
    p.add_argument("--epsilon1", type=float, default=0.05)
    p.add_argument("--epsilon2", type=float, default=0.05)
    p.add_argument("--theta", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_solver_args(p)

    p = sub.add_parser("tune", help="nested-CV hyperparameter selection on one dataset")
    _add_data_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--lambda1", type=float, default=None)
    p.add_argument("--out", default=None)
    _add_solver_args(p)

    p = sub.add_parser("experiment", help="repeated split experiment with tables")
    _add_data_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--splits", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--lambda1", type=float, default=None)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True, help="output directory")
    _add_solver_args(p)
    return parser


def _settings(args) -> SolverSettings:
    return SolverSettings(rho=args.rho, abs_tol=args.abs_tol, rel_tol=args.rel_tol,
                          max_iterations=args.max_iter)


def _validate(args):
    """Flag checks that must pass before any file is read."""
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be >= 1")
    cmd = args.command
    if cmd == "synth":
        try:
            D.SyntheticSpec(n=args.n, core_features=args.core, redundant_groups=args.groups,
                            group_size=args.group_size, noise_features=args.noise,
                            within_group_correlation=args.correlation,
                            label_noise=args.label_noise)
        except D.DataError as exc:
            raise UsageError(str(exc)) from None
    if cmd == "train":
        try:
            MdsvmHyper(m=args.m, lambda1=args.lambda1, lambda2=args.lambda2, lambda3=args.lambda3)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.jitter < 0:
            raise UsageError("--jitter must be >= 0")
    if cmd == "experiment":
        if args.splits < 1:
            raise UsageError("--splits must be >= 1")
        if not 0 < args.train_fraction < 1:
            raise UsageError("--train-fraction must lie in (0, 1)")
    if hasattr(args, "rho"):
        try:
            _settings(args)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if getattr(args, "dims", None) is not None and args.dims < 1:
        raise UsageError("--dims must be >= 1")


def _load(args, path=None) -> D.Dataset:
    path = path or args.data
    if path == "demo":
        return D.load_dataset(DEMO_DATA, "csv")
    return D.load_dataset(path, args.format, args.dims)


def _config(args) -> TuningConfig:
    path = args.config
    if path is None and args.data == "demo":
        path = DEMO_CONFIG
    config = TuningConfig.from_file(path) if path else TuningConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.sigma is not None:
        overrides["sigma"] = args.sigma
    if args.lambda1 is not None:
        overrides["lambda1_fixed"] = args.lambda1
    if overrides:
        config = TuningConfig(**{**config.__dict__, **overrides})
    return config


def cmd_synth(args) -> int:
    spec = D.SyntheticSpec(n=args.n, core_features=args.core, redundant_groups=args.groups,
                           group_size=args.group_size, noise_features=args.noise,
                           within_group_correlation=args.correlation,
                           label_noise=args.label_noise)
    data, truth = D.generate_synthetic(spec, args.seed)
    D.save_dataset(data, args.out, "csv")
    D.save_truth(truth, data, f"{args.out}.truth")
    print(f"wrote {data.n}x{data.d} dataset to {args.out} (truth: {args.out}.truth)")
    return 0


def _read_truth_block(path, names) -> list[int]:
    block = []
    for line in Path(path).read_text().splitlines():
        key, _, rest = line.partition(" ")
        if key == "cfs":
            block.extend(names.index(tok) for tok in rest.split())
    return block


def cmd_train(args) -> int:
    data = _load(args)
    settings = _settings(args)
    hyper = MdsvmHyper(m=args.m, lambda1=args.lambda1, lambda2=args.lambda2, lambda3=args.lambda3)
    base = train_svm(data, args.lambda3, settings)
    init = init_modelset(base, args.m, hyper, jitter=args.jitter, seed=args.seed)
    models = train_mdsvm(data, hyper, init, settings)
    save_models(models, args.out, data.feature_names)
    print("objective trace: " + " ".join(f"{v:.6g}" for v in models.objective_trace))
    print(f"converged: {models.converged}")
    print("train accuracy: " + " ".join(f"{accuracy(mod, data):.4f}" for mod in models.models))
    if models.m >= 2:
        supports = [model_support(mod) for mod in models.models]
        print(f"Dis: {dissimilarity_score(supports):.4f}")
        print(f"agreement: {predictive_agreement(models, data):.4f}")
        if args.truth:
            block = set(_read_truth_block(args.truth, list(data.feature_names)))
            restricted = [s & block for s in supports]
            print(f"Dis on redundant block: {dissimilarity_score(restricted):.4f}")
    return 0


def _models_for(args, data):
    models, names = load_models(args.models)
    if models.d != data.d:
        raise ModelFileError(f"model file has d={models.d}, data has d={data.d}")
    if names is not None and tuple(names) != tuple(data.feature_names):
        log.warning("feature names in the model file differ from the data header")
    return models


def cmd_evaluate(args) -> int:
    data = _load(args)
    models = _models_for(args, data)
    accs = [accuracy(mod, data) for mod in models.models]
    for i, a in enumerate(accs):
        print(f"model {i + 1} accuracy: {a!r}")
    print(f"mean accuracy: {float(np.mean(accs))!r}")
    print(f"objective: {global_objective(models, data)!r}")
    if models.m >= 2:
        print(f"agreement: {predictive_agreement(models, data)!r}")
    return 0


def cmd_structure(args) -> int:
    data = _load(args)
    models = _models_for(args, data)
    names = list(data.feature_names)
    if models.m < 2:
        raise UsageError("structure extraction needs a model file with m >= 2")
    structure = extract_structure(models, names)
    supports = [s.as_set() for s in structure.source_supports]
    if all(feature_dissimilarity(supports[0], s) == 0 for s in supports[1:]):
        log.warning("all models share the same support: the core set is the whole support "
                    "and every interchangeable set is empty")
    write_structure(structure, args.out, data.d)
    card = cardinality_report(structure, data.d)
    print(f"IFG (approximate): {' '.join(structure.ifg.names) or '-'}")
    for i, c in enumerate(structure.cfs):
        print(f"CFS {i + 1}: {' '.join(c.names) or '-'}")
    print(f"|IFG|/|S| = {card.ifg_pct:.2f}%  mean |CFS|/|S| = {card.cfs_pct:.2f}%  "
          f"|union|/|S| = {card.union_pct:.2f}%")
    if args.test:
        train, test = data, _load(args, args.test)
    else:
        train, test = D.split(data, 0.8, args.seed)
    thresholds = EgdThresholds(args.epsilon1, args.epsilon2, args.theta)
    report = verify_cfs(structure, train, test, thresholds, _settings(args), args.l2)
    status = "holds" if report.is_egd else "fails (" + ", ".join(report.failing_conditions) + ")"
    print(f"EGD on CFS+IFG models: {status}; agreement {report.pa:.4f}")
    with open(args.out, "a") as fh:
        fh.write(f"egd {int(report.is_egd)} {' '.join(report.failing_conditions)}".rstrip() + "\n")
    return 0


def cmd_tune(args) -> int:
    data = _load(args)
    config = _config(args)
    settings = _settings(args)
    scaler = D.fit_standardize(data)
    data = D.apply_standardize(scaler, data)
    l1, l2 = tune_ensvm(data, config, settings)
    sel = tune_mdsvm(data, config, settings)
    lines = [f"ensvm_l1 = {l1!r}", f"ensvm_l2 = {l2!r}", f"lambda1 = {config.lambda1_fixed!r}",
             f"lambda2 = {sel.lambda2!r}", f"lambda3 = {sel.lambda3!r}", f"m = {sel.m}",
             f"z = {sel.z!r}"]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
    return 0


def cmd_experiment(args) -> int:
    data = _load(args)
    config = _config(args)
    name = args.name or ("demo" if args.data == "demo" else Path(args.data).stem)
    report = run_experiment(data, config, args.splits, args.train_fraction, _settings(args),
                            name=name, threads=args.threads)
    paths = report.write(args.out)
    print(report.summary(), end="")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


COMMANDS = {
    "synth": cmd_synth, "train": cmd_train, "evaluate": cmd_evaluate,
    "structure": cmd_structure, "tune": cmd_tune, "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads is None and os.environ.get("EGD_THREADS"):
        args.threads = int(os.environ["EGD_THREADS"])
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mdsvm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (D.DataError, ModelFileError, OSError) as exc:
        print(f"mdsvm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"mdsvm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
