"""Command line interface: direct operations on CSV clouds plus seeded experiments.

Subcommands
-----------
dim / cover / rad   point-cloud dimension, covering number, loss-matrix complexity
arc                 expectation / high-probability gap experiments
sgd-check           contraction, covering and gap checks for projected SGD
compress-check      output-count and complexity checks for compression learners
vc-check            threshold-classifier complexity against the VC bound
fractal-check       dimension bound, Steiner variant, cardinality bound
limit-trend         report-only large-n ratio series

Experiments read a JSON config (see README), write a CSV or JSON report plus a
manifest with the config hash, tool version, PRNG and kernel backend ids, and
exit 0 only when every enabled check passed. Schema violations exit 2 with a
field-level message.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import PRNG_ID, __version__
from .experiments import (
    BoundReport,
    compression_check,
    expectation_bound_experiment,
    fractal_bound_experiment,
    highprob_bound_experiment,
    limit_ratio_experiment,
    sgd_covering_check,
    sgd_gap_check,
    vc_check,
)
from .fractal import covering_number, dim_fm, dim_fm_oracle
from .kernels import default_backend_id
from .learners import (
    Ball,
    Box,
    SgdSpec,
    ThresholdLoss,
    make_compression_learner,
    make_erm_learner,
    make_sgd_learner,
    make_threshold_learner,
    quadratic_loss,
)
from .metric import Metric, PointCloud, load_pointcloud
from .rademacher import LossMatrix, rademacher_exact, rademacher_mc
from .supersample import make_distribution

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_SCHEMA = 2


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


# --- config parsing ---------------------------------------------------------


@dataclass
class RunConfig:
    """A fully seeded experiment description; identical configs replay identically."""

    experiment: str
    n: int
    reps: int
    seed: int
    delta: float
    learner: dict
    loss: dict
    dist: dict
    mode: str
    out: str
    format: str
    limits: dict
    metric: Metric
    dedup_tol: float
    margin_stderrs: float
    raw: dict

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        def need(field, typ, default=None):
            if field not in doc:
                if default is not None:
                    return default
                raise ConfigError(field, "missing")
            val = doc[field]
            if typ is int and isinstance(val, bool) or not isinstance(val, typ):
                raise ConfigError(field, f"expected {typ.__name__}, got {type(val).__name__}")
            return val

        experiment = need("experiment", str)
        known = {"arc", "sgd-check", "compress-check", "vc-check", "fractal-check", "limit-trend"}
        if experiment not in known:
            raise ConfigError("experiment", f"unknown experiment {experiment!r}; expected one of {sorted(known)}")
        limits = need("limits", dict, default={})
        exact_n_limit = int(limits.get("exact_n_limit", 20))
        n = need("n", int, default=0 if experiment in ("compress-check", "vc-check", "limit-trend", "sgd-check") else None)
        if n and n > exact_n_limit and experiment in ("arc", "fractal-check"):
            raise ConfigError("n", f"n={n} exceeds exact_n_limit={exact_n_limit} for exact sign enumeration")
        metric_name = str(doc.get("metric", "linf"))
        if metric_name not in ("linf", "l2"):
            raise ConfigError("metric", f"expected 'linf' or 'l2', got {metric_name!r}")
        return RunConfig(
            experiment=experiment,
            n=int(n or 0),
            reps=int(need("reps", int, default=100)),
            seed=int(need("seed", int, default=0)),
            delta=float(doc.get("delta", 0.05)),
            learner=need("learner", dict, default={"kind": "erm_grid"}),
            loss=need("loss", dict, default={"kind": "quadratic", "box": [[0.0, 1.0]]}),
            dist=need("dist", dict, default={"dist": "uniform_box", "params": {"box": [[0.0, 1.0]]}}),
            mode=str(doc.get("mode", "expectation")),
            out=str(doc.get("out", "report")),
            format=str(doc.get("format", "csv")),
            limits=dict(limits),
            metric=Metric(metric_name),
            dedup_tol=float(doc.get("dedup_tol", 1e-12)),
            margin_stderrs=float(doc.get("margin_stderrs", 3.0)),
            raw=doc,
        )


def _build_loss(spec: dict):
    kind = spec.get("kind", "quadratic")
    if kind == "quadratic":
        box = spec.get("box", [[0.0, 1.0]])
        return quadratic_loss(box, spec.get("weights"))
    if kind == "zero_one_threshold":
        return ThresholdLoss()
    raise ConfigError("loss.kind", f"unsupported loss {kind!r}")


def _build_domain(spec: dict):
    if "box" in spec:
        return Box(np.asarray(spec["box"], dtype=float))
    if "ball" in spec:
        return Ball(np.asarray(spec["ball"]["center"], dtype=float), float(spec["ball"]["radius"]))
    raise ConfigError("learner.domain", "expected a 'box' or 'ball' entry")


def _build_learner(spec: dict, loss):
    kind = spec.get("kind")
    if kind == "erm_grid":
        if "grid" in spec and isinstance(spec["grid"], dict):
            g = spec["grid"]
            pts = np.linspace(g.get("low", 0.0), g.get("high", 1.0), int(g.get("points", 16)))[:, None]
        elif "grid" in spec:
            pts = np.asarray(spec["grid"], dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
        else:
            raise ConfigError("learner.grid", "missing for erm_grid")
        cloud = PointCloud(pts, Metric.LINF)
        return make_erm_learner(cloud, loss), f"erm_grid[{len(cloud)}]"
    if kind == "sgd":
        spec_obj = SgdSpec(
            theta1=np.asarray(spec["theta1"], dtype=float),
            eta=float(spec["eta"]),
            T=int(spec["T"]),
            domain=_build_domain(spec.get("domain", {})),
            indices=tuple(spec["indices"]) if "indices" in spec else None,
            index_seed=spec.get("index_seed"),
        )
        return make_sgd_learner(loss, spec_obj), f"sgd[T={spec_obj.T}]"
    if kind == "compress_k":
        return make_compression_learner(int(spec["k"])), f"compress_k[{spec['k']}]"
    if kind == "vc_threshold":
        return make_threshold_learner(), "vc_threshold"
    raise ConfigError("learner.kind", f"unsupported learner {kind!r}")


# --- report emission --------------------------------------------------------

CSV_COLUMNS = ["experiment", "n", "rep", "seed", "gap", "arc", "bound_name", "bound_value", "pass"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_report(report: BoundReport, out: Path, fmt: str) -> list[Path]:
    paths = []
    if fmt == "csv":
        path = out.with_suffix(".csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in report.rows:
                w.writerow(
                    [r.experiment, r.n, r.rep, r.seed, _fmt(r.gap), _fmt(r.arc), r.bound_name, _fmt(r.bound_value), _fmt(r.passed)]
                )
        paths.append(path)
        summary = out.with_suffix(".summary.json")
        with open(summary, "w") as fh:
            json.dump(_summary_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(summary)
    elif fmt == "json":
        path = out.with_suffix(".json")
        doc = _summary_dict(report)
        doc["rows"] = [asdict(r) for r in report.rows]
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    else:
        raise ConfigError("format", f"unsupported format {fmt!r}")
    return paths


def _summary_dict(report: BoundReport) -> dict:
    return {
        "experiment": report.experiment,
        "n": report.n,
        "seed": report.seed,
        "learner": report.learner_id,
        "delta": report.delta,
        "mean_gap": report.mean_gap,
        "stderr_gap": report.stderr_gap,
        "mean_arc": report.mean_arc,
        "stderr_arc": report.stderr_arc,
        "bounds": report.bounds,
        "flags": report.flags,
        "passed": report.passed,
    }


def write_manifest(config_doc: dict, out: Path, report_paths: list[Path]) -> Path:
    blob = json.dumps(config_doc, sort_keys=True).encode()
    manifest = {
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "tool_version": __version__,
        "prng": PRNG_ID,
        "kernel_backend": default_backend_id(),
        "reports": [p.name for p in report_paths],
    }
    path = out.with_suffix(".manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# --- experiment dispatch ----------------------------------------------------


def run(config: RunConfig) -> BoundReport:
    """Execute the configured experiment and return its report."""
    loss = _build_loss(config.loss)
    dist = make_distribution(config.dist)
    if config.experiment == "arc":
        learner, _ = _build_learner(config.learner, loss)
        if config.mode == "expectation":
            return expectation_bound_experiment(
                learner, loss, dist, config.n, config.reps, config.seed,
                metric=config.metric, dedup_tol=config.dedup_tol,
                margin_stderrs=config.margin_stderrs,
            )
        if config.mode == "highprob":
            return highprob_bound_experiment(
                learner, loss, dist, config.n, config.reps, config.seed, delta=config.delta,
                metric=config.metric, dedup_tol=config.dedup_tol,
            )
        raise ConfigError("mode", f"arc mode must be 'expectation' or 'highprob', got {config.mode!r}")
    if config.experiment == "fractal-check":
        learner, _ = _build_learner(config.learner, loss)
        return fractal_bound_experiment(
            learner, loss, dist, config.n, config.reps, config.seed,
            metric=config.metric, dedup_tol=config.dedup_tol,
            exact_limit=int(config.limits.get("exact_limit", 20)),
        )
    if config.experiment == "sgd-check":
        lspec = config.learner
        domain = _build_domain(lspec.get("domain", {"box": [[0.0, 1.0]]}))
        theta1 = np.asarray(lspec.get("theta1", [0.0]), dtype=float)
        eta = float(lspec.get("eta", 0.5))
        T = int(lspec.get("T", 8))
        configs = [tuple(c) for c in lspec.get("configs", [])] or [(config.n or 8, T)]

        def make_spec(n, T_, s):
            return SgdSpec(theta1=theta1, eta=eta, T=T_, domain=domain, index_seed=s)

        cover_rep = sgd_covering_check(
            loss, make_spec, dist, configs, config.seed,
            exact_limit=int(config.limits.get("exact_limit", 300)),
        )
        gap_rep = sgd_gap_check(
            loss, make_spec(config.n or 8, T, config.seed), dist, config.n or 8,
            config.reps, config.seed + 1, delta=config.delta,
        )
        cover_rep.rows.extend(gap_rep.rows)
        cover_rep.bounds.update(gap_rep.bounds)
        cover_rep.flags.update(gap_rep.flags)
        cover_rep.passed = cover_rep.passed and gap_rep.passed
        return cover_rep
    if config.experiment == "compress-check":
        pairs = [tuple(p) for p in config.learner.get("pairs", [[2, 8]])]
        return compression_check(loss, dist, pairs, config.seed)
    if config.experiment == "vc-check":
        ns = list(config.learner.get("ns", [6, 8, 10, 12]))
        return vc_check(ThresholdLoss(), dist, ns, config.seed)
    if config.experiment == "limit-trend":
        learner, _ = _build_learner(config.learner, loss)
        n_grid = list(config.learner.get("n_grid", [4, 6, 8, 10, 12, 14, 16, 18]))
        return limit_ratio_experiment(
            learner, loss, dist, n_grid, config.seed,
            metric=config.metric, dedup_tol=config.dedup_tol,
        )
    raise ConfigError("experiment", f"unhandled experiment {config.experiment!r}")


# --- argparse wiring --------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--reps", type=int, default=None, help="override config repetitions")
    p.add_argument("--out", default=None, help="output path stem")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arcbounds", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"arcbounds {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dim", help="finite fractal dimension of a CSV point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--metric", choices=("linf", "l2"), default=None)
    p.add_argument("--exact-limit", type=int, default=20)
    p.add_argument("--oracle", action="store_true", help="cross-check with the exhaustive small-set oracle")
    p.add_argument("--oracle-limit", type=int, default=8)
    p.add_argument("--out", default=None, help="write the JSON here instead of stdout")

    p = sub.add_parser("cover", help="covering number of a CSV point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--metric", choices=("linf", "l2"), default=None)
    p.add_argument("--exact-limit", type=int, default=20)
    p.add_argument("--out", default=None)

    p = sub.add_parser("rad", help="empirical Rademacher complexity of a loss-matrix CSV")
    p.add_argument("--loss-matrix", required=True, help="CSV, one parameter per row, no header")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--range-a", type=float, default=None, help="declared loss range start (default: matrix min)")
    p.add_argument("--range-b", type=float, default=None, help="declared loss range width (default: matrix spread)")
    p.add_argument("--out", default=None)

    for name in ("arc", "sgd-check", "compress-check", "vc-check", "fractal-check", "limit-trend"):
        p = sub.add_parser(name, help=f"run the {name} experiment from a config")
        _add_common(p)
    return ap


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "dim":
            cloud = load_pointcloud(args.input, metric=args.metric)
            res = dim_fm(cloud, exact_limit=args.exact_limit)
            doc = {
                "value": None if res.value == float("inf") else res.value,
                "focal": res.focal,
                "T": res.T,
                "delta": res.delta,
                "nabla": res.nabla,
                "exact": res.exact,
            }
            if args.oracle:
                doc["oracle_value"] = dim_fm_oracle(cloud, oracle_limit=args.oracle_limit)
            _emit_json(doc, args.out)
            return EXIT_OK
        if args.command == "cover":
            cloud = load_pointcloud(args.input, metric=args.metric)
            res = covering_number(cloud, args.eps, exact_limit=args.exact_limit)
            _emit_json(
                {"count": res.count, "exact": res.exact,
                 "cover": [[c, sorted(members)] for c, members in res.cover]},
                args.out,
            )
            return EXIT_OK
        if args.command == "rad":
            values = np.loadtxt(args.loss_matrix, delimiter=",", ndmin=2)
            a = float(values.min()) if args.range_a is None else args.range_a
            b = float(max(values.max() - a, 1e-12)) if args.range_b is None else args.range_b
            M = LossMatrix(values, a, b)
            est = rademacher_exact(M) if args.mode == "exact" else rademacher_mc(M, args.draws, args.seed)
            _emit_json({"value": est.value, "stderr": est.stderr, "mode": est.mode, "draws": est.draws}, args.out)
            return EXIT_OK

    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED

    # experiment subcommands share the config path
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
        doc["experiment"] = args.command
        if args.seed is not None:
            doc["seed"] = args.seed
        if args.reps is not None:
            doc["reps"] = args.reps
        if args.out is not None:
            doc["out"] = args.out
        if args.format is not None:
            doc["format"] = args.format
        config = RunConfig.from_dict(doc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        report = run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ValueError as exc:
        print(f"error: experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    out = Path(config.out)
    paths = write_report(report, out, config.format)
    write_manifest(doc, out, paths)
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
