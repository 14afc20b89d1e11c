"""Command-line entry point: ``stabsel gen|fit|run|sweep|bound|report``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import solvers
from .control import calibrate_lambda, calibration_target, nfp_bound
from .core import DataError, load_bundle, save_bundle, standardize
from .datagen import DataConfig, generate, scale_config
from .harness import ExperimentError, ExperimentSpec, run_experiment, write_csv, write_report
from .meta import CVConfig, SacConfig, StabilityConfig, SubAlgorithm, cross_validate, screen_and_clean
from .solvers import PenaltyConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc


def _dump(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, sort_keys=True, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    raw = _read_json(args.config)
    try:
        cfg = DataConfig.from_dict(raw)
    except TypeError as exc:
        raise UsageError(f"bad config: {exc}") from exc
    cfg = scale_config(cfg, args.scale)
    bundle = generate(cfg, seed=args.seed)
    save_bundle(bundle, args.out)
    print(f"wrote {cfg.name()} (seed {bundle.meta['seed']}) to {args.out}")
    return EXIT_OK


def _load(path, do_standardize: bool):
    bundle = load_bundle(path)
    return standardize(bundle) if do_standardize else bundle


def cmd_fit(args) -> int:
    data = _load(args.data, not args.no_standardize)
    lam = args.lam
    if lam is None:
        lam = args.lambda_ratio * solvers.lambda_max(data, args.algorithm, args.l1_weight)
    rep = solvers.fit(args.algorithm, data, PenaltyConfig(lam, args.l1_weight))
    out = rep.to_dict()
    out.update({"algorithm": args.algorithm, "lambda": lam, "l1_weight": args.l1_weight})
    _dump(out, args.out)
    return EXIT_OK


def _truth_block(data, mask) -> dict:
    if data.truth is None:
        return {}
    truth = data.truth_mask
    T = int(np.count_nonzero(mask & truth))
    return {"truth": data.truth.positives.to_pairs(), "T": T, "V": int(np.count_nonzero(mask)) - T}


def cmd_sweep(args) -> int:
    data = _load(args.data, not args.no_standardize)
    sh = data.shape
    alg, w = args.algorithm, args.l1_weight
    result = {"regime": args.regime, "algorithm": alg, "l1_weight": w, "K": sh.n_elements,
              "shape": [sh.n_inputs, sh.n_outputs, sh.n_samples], "seed": args.seed}
    if args.regime == "stability":
        cfg = StabilityConfig(args.fraction, args.iterations, args.pi, args.seed)
        target = calibration_target(sh.n_elements, sh.n_outputs, per_output=args.per_output_target)
        grid = solvers.lambda_grid(solvers.lambda_max(data, alg, w), args.decay, args.grid)
        cal = calibrate_lambda(data, alg, target, grid, cfg, w)
        mask = cal.profile.select_mask(args.pi)
        result.update({"tau": cal.profile.tau.tolist(), "q_hat": cal.profile.q_hat, "lambda": cal.lam,
                       "pi": args.pi, "target": target, "iterations": args.iterations,
                       "invocations": args.iterations * len(cal.path),
                       "warnings": [cal.warning] if cal.warning else []})
    elif args.regime == "screen-and-clean":
        cfg = SacConfig(args.splits, args.folds, args.pi_sac, args.seed, args.decay)
        res = screen_and_clean(data, SubAlgorithm(alg, PenaltyConfig(0.0, w)), cfg)
        mask = res.select_mask(args.pi_sac)
        result.update({"pvalues": res.pvalues.tolist(), "pi_sac": args.pi_sac,
                       "invocations": res.invocations, "warnings": list(res.warnings)})
    else:
        cv = cross_validate(data, alg, CVConfig(args.folds, args.decay, args.seed), w)
        mask = cv.selection.to_mask()
        result.update({"lambda": cv.lam, "lambdas": list(cv.lambdas), "errors": cv.errors.tolist(),
                       "invocations": cv.invocations, "warnings": [cv.warning] if cv.warning else []})
    rows, cols = np.nonzero(mask)
    result["selection"] = [[int(i) + 1, int(j) + 1] for i, j in zip(rows, cols)]
    result.update(_truth_block(data, mask))
    _dump(result, args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    res = _read_json(args.result)
    if "tau" not in res or "q_hat" not in res:
        raise DataError("bound needs a stability result with 'tau' and 'q_hat'")
    tau = np.asarray(res["tau"], dtype=float)
    I = int(res.get("iterations", 0)) or None
    K = int(res.get("K", tau.size))
    truth = None
    if res.get("truth") is not None:
        truth = np.zeros(tau.shape, dtype=bool)
        for i, j in res["truth"]:
            truth[i - 1, j - 1] = True
    rows = []
    for pi in args.pi:
        if not (0.5 < pi <= 1.0):
            raise UsageError(f"pi must lie in (0.5, 1], got {pi}")
        # compare on the count scale when I is known, as stability_select does
        mask = (tau * I >= pi * I - 1e-9) if I else (tau >= pi)
        row = [pi, nfp_bound(res["q_hat"], K, pi), int(mask.sum())]
        if truth is not None:
            row.append(int(np.count_nonzero(mask & ~truth)))
        rows.append(row)
    header = ["pi", "bound", "size"] + (["V"] if truth is not None else [])
    write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_run(args) -> int:
    raw = _read_json(args.spec)
    if args.out:
        raw["out_dir"] = args.out
    try:
        spec = ExperimentSpec.from_dict(raw)
    except TypeError as exc:
        raise UsageError(f"bad spec: {exc}") from exc
    try:
        summary = run_experiment(spec, workers=args.workers)
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"cells written {summary.written}, skipped {summary.skipped}, failed jobs {len(summary.failed)}, "
          f"sub-algorithm invocations {summary.invocations}")
    for msg in summary.failed:
        print(f"failed: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if summary.failed else EXIT_OK


def cmd_report(args) -> int:
    try:
        n = write_report(args.store, args.table, args.out)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    print(f"wrote {n} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stabsel", description="Sparse selection with stability selection, screen-and-clean and CV.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic dataset directory")
    g.add_argument("--config", required=True, help="DataConfig JSON file")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--scale", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    algs = list(solvers.ALGORITHMS)

    f = sub.add_parser("fit", help="fit one sub-algorithm at one lambda")
    f.add_argument("--data", required=True)
    f.add_argument("--algorithm", choices=algs, required=True)
    lam = f.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--lambda-ratio", type=float, help="lambda as a fraction of lambda_max")
    f.add_argument("--l1-weight", type=float, default=1.0)
    f.add_argument("--no-standardize", action="store_true")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sweep", help="run one regime on a dataset directory")
    s.add_argument("--data", required=True)
    s.add_argument("--regime", choices=["stability", "screen-and-clean", "cross-validation"], required=True)
    s.add_argument("--algorithm", choices=algs, required=True)
    s.add_argument("--l1-weight", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--iterations", type=int, default=100)
    s.add_argument("--fraction", type=float, default=0.5)
    s.add_argument("--pi", type=float, default=0.9)
    s.add_argument("--pi-sac", type=float, default=1.0)
    s.add_argument("--per-output-target", action="store_true", help="calibrate to sqrt(0.8*|K|*t)")
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--splits", type=int, default=10)
    s.add_argument("--decay", type=float, default=0.98)
    s.add_argument("--grid", type=int, default=400, help="maximum lambda grid length")
    s.add_argument("--no-standardize", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bound", help="NFP bound table for a stability result")
    b.add_argument("--result", required=True)
    b.add_argument("--pi", type=_floats, required=True, help="comma-separated thresholds")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bound)

    r = sub.add_parser("run", help="run or resume an experiment")
    r.add_argument("--spec", required=True)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="aggregate a result store into a CSV table")
    rp.add_argument("--store", required=True)
    rp.add_argument("--table", choices=["roc", "error-control", "model-choice", "gamma-power"], required=True)
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
