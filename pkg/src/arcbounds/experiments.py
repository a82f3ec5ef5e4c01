"""Experiment lab: measured generalization gaps against every computed bound.

Each experiment draws seeded supersamples, builds the exact learner-output set
over all sign mixings, computes its empirical Rademacher complexity on the
primary half, and checks the relevant closed-form bound. Statistical pass
rules use 3 combined standard errors so failures are meaningful and, thanks to
seeding, reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fractal import (
    SteinerInfeasibleError,
    covering_number,
    fractal_bound,
    minkowski_slope_estimate,
    steiner_augment,
)
from .learners import (
    LossModel,
    contraction_factor,
    domain_diameter,
    forgetting_depth,
    make_compression_learner,
    make_threshold_learner,
    sgd_run,
)
from .metric import Metric, PointCloud, covering_diameter, dedup, diameter, is_focal
from .rademacher import LossMatrix, RadEstimate, massart_bound, rademacher_exact
from .supersample import Distribution, build_theta_hat, draw_supersample

__all__ = [
    "GapMeasurement",
    "ReportRow",
    "BoundReport",
    "generalization_gap",
    "highprob_rhs",
    "sgd_rhs",
    "compression_rhs",
    "vc_rhs",
    "expectation_bound_experiment",
    "highprob_bound_experiment",
    "fractal_bound_experiment",
    "sgd_covering_check",
    "sgd_gap_check",
    "compression_check",
    "vc_check",
    "limit_ratio_experiment",
    "rep_seeds",
    "learner_seed_for",
]

PASS_MARGIN_STDERRS = 3.0
BOUND_SLACK = 1e-9


# --- gap measurement -------------------------------------------------------


@dataclass(frozen=True)
class GapMeasurement:
    theta: np.ndarray
    empirical_risk: float
    true_risk: float
    gap: float
    risk_mode: str
    true_risk_stderr: float = 0.0


def generalization_gap(
    loss,
    theta: np.ndarray,
    sample: np.ndarray,
    dist: Distribution,
    risk_mode: str = "closed_form",
    heldout_m: int = 1_000_000,
    seed: int = 0,
) -> GapMeasurement:
    """True risk minus empirical risk of theta on the sample.

    closed_form enumerates empirical supports exactly and uses the loss's
    moment formula otherwise (rejecting pairs without one); heldout draws
    ``heldout_m`` fresh points and reports the Monte Carlo standard error.
    """
    theta = np.asarray(theta, dtype=float)
    emp = float(loss.risks(theta[None, :], sample).mean())
    if risk_mode == "closed_form":
        if dist.kind == "empirical":
            support = dist.support()
            true = float(loss.risks(theta[None, :], support).mean())
        elif getattr(loss, "true_risk", None) is not None:
            true = float(loss.true_risk(theta, dist))
        else:
            raise ValueError(
                f"no closed-form risk for loss {type(loss).__name__} under {dist.kind}; use heldout"
            )
        stderr = 0.0
    elif risk_mode == "heldout":
        rng = np.random.default_rng(seed)
        zs = dist.sample(rng, heldout_m)
        vals = loss.risks(theta[None, :], zs)[0]
        true = float(vals.mean())
        stderr = float(vals.std(ddof=1) / math.sqrt(heldout_m))
    else:
        raise ValueError(f"unknown risk mode {risk_mode!r}")
    return GapMeasurement(theta, emp, true, true - emp, risk_mode, stderr)


# --- closed-form right-hand sides ------------------------------------------


def highprob_rhs(rad_essup_estimate: float, b: float, n: int, delta: float) -> float:
    """4 * (essential-supremum estimate) + b * sqrt(8 ln(2/delta) / n).

    The estimate is a max over finitely many supersamples, i.e. a lower
    approximation of the essential supremum; the check built on it is
    conservative in the favorable direction.
    """
    if not (0 < delta <= 1):
        raise ValueError("delta must lie in (0, 1]")
    if rad_essup_estimate < 0:
        raise ValueError("complexity estimate must be nonnegative")
    return 4.0 * rad_essup_estimate + b * math.sqrt(8.0 * math.log(2.0 / delta) / n)


def sgd_rhs(b: float, R: float, n: int, gamma: float, L: float, delta: float) -> float:
    """High-probability SGD bound 4b*sqrt(m ln2 / n) + b*sqrt(8 ln(2/delta)/n) + 2L/n.

    m is the forgetting depth at resolution 1/(2n).
    """
    if not (0 <= gamma < 1):
        raise ValueError("need gamma in [0, 1)")
    if not (0 < delta <= 1):
        raise ValueError("delta must lie in (0, 1]")
    m = forgetting_depth(R, gamma, 1.0 / (2.0 * n))
    return (
        4.0 * b * math.sqrt(m * math.log(2.0) / n)
        + b * math.sqrt(8.0 * math.log(2.0 / delta) / n)
        + 2.0 * L / n
    )


def compression_rhs(k: int, n: int) -> float:
    """sqrt(k * ln(2en/k) / (2n)) for losses valued in [0, 1]."""
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    return math.sqrt(k * math.log(2.0 * math.e * n / k) / (2.0 * n))


def vc_rhs(V: int, n: int) -> float:
    """sqrt(2 V ln(en/V) / n): growth-function bound with explicit constants."""
    if not (n > V >= 1):
        raise ValueError("need n > V >= 1")
    return math.sqrt(2.0 * V * math.log(math.e * n / V) / n)


# --- report plumbing --------------------------------------------------------


@dataclass
class ReportRow:
    experiment: str
    n: int
    rep: int
    seed: int
    gap: float | None
    arc: float | None
    bound_name: str
    bound_value: float
    passed: bool


@dataclass
class BoundReport:
    """One experiment's outcome: measurements, bounds, flags, and per-rep rows."""

    experiment: str
    n: int
    seed: int
    learner_id: str
    delta: float | None = None
    mean_gap: float | None = None
    stderr_gap: float | None = None
    mean_arc: float | None = None
    stderr_arc: float | None = None
    bounds: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    passed: bool = True
    rows: list = field(default_factory=list)

    def add_row(self, **kw) -> None:
        self.rows.append(ReportRow(**kw))


def rep_seeds(master_seed: int, reps: int) -> np.ndarray:
    """Per-repetition 63-bit seeds, reproducible from the master seed."""
    return np.random.default_rng(master_seed).integers(0, 2**63 - 1, size=reps)


def learner_seed_for(seed: int) -> int:
    # decouple the learner's randomness stream from the data stream
    return int(seed) ^ 0x5DEECE66D


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def _loss_matrix(loss, cloud: PointCloud, zs: np.ndarray) -> LossMatrix:
    return LossMatrix(values=loss.risks(cloud.points, zs), range_a=loss.a, range_b=loss.b)


def _exact_arc(loss, cloud: PointCloud, zs: np.ndarray) -> RadEstimate:
    return rademacher_exact(_loss_matrix(loss, cloud, zs))


# --- experiments ------------------------------------------------------------


def expectation_bound_experiment(
    learner,
    loss,
    dist: Distribution,
    n: int,
    reps: int,
    seed: int,
    metric: Metric = Metric.LINF,
    dedup_tol: float = 1e-12,
    risk_mode: str = "closed_form",
    margin_stderrs: float = PASS_MARGIN_STDERRS,
) -> BoundReport:
    """Mean gap against twice the mean exact complexity, with a 3-stderr margin."""
    if n > 20:
        raise ValueError("exact sign enumeration needs n <= 20")
    report = BoundReport("arc-expectation", n, seed, getattr(learner, "__name__", "learner"))
    seeds = rep_seeds(seed, reps)
    gaps = np.empty(reps)
    arcs = np.empty(reps)
    for rep, s in enumerate(seeds):
        s = int(s)
        ss = draw_supersample(dist, n, s)
        lseed = learner_seed_for(s)
        cloud = build_theta_hat(learner, ss, mode="exact", learner_seed=lseed, tol=dedup_tol, metric=metric)
        arcs[rep] = _exact_arc(loss, cloud, ss.s_plus).value
        theta = learner(ss.s_plus, lseed)
        gaps[rep] = generalization_gap(loss, theta, ss.s_plus, dist, risk_mode, seed=s + 1).gap
        # per-rep rows are informational: the pass rule compares means
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=float(gaps[rep]),
            arc=float(arcs[rep]), bound_name="twice_arc", bound_value=float(2 * arcs[rep]),
            passed=True,
        )
    mg, sg = _mean_stderr(gaps)
    ma, sa = _mean_stderr(arcs)
    combined = math.sqrt(sg**2 + (2.0 * sa) ** 2)
    report.mean_gap, report.stderr_gap = mg, sg
    report.mean_arc, report.stderr_arc = ma, sa
    report.bounds["expectation_rhs"] = 2.0 * ma
    report.bounds["margin"] = margin_stderrs * combined
    report.flags["exact_theta_hat"] = True
    report.passed = mg <= 2.0 * ma + margin_stderrs * combined
    return report


def highprob_bound_experiment(
    learner,
    loss,
    dist: Distribution,
    n: int,
    reps: int,
    seed: int,
    delta: float = 0.05,
    metric: Metric = Metric.LINF,
    dedup_tol: float = 1e-12,
    risk_mode: str = "closed_form",
) -> BoundReport:
    """Fraction of runs whose gap exceeds the high-probability bound must stay <= delta."""
    report = BoundReport("arc-highprob", n, seed, getattr(learner, "__name__", "learner"), delta=delta)
    seeds = rep_seeds(seed, reps)
    gaps = np.empty(reps)
    arcs = np.empty(reps)
    for rep, s in enumerate(seeds):
        s = int(s)
        ss = draw_supersample(dist, n, s)
        lseed = learner_seed_for(s)
        cloud = build_theta_hat(learner, ss, mode="exact", learner_seed=lseed, tol=dedup_tol, metric=metric)
        arcs[rep] = _exact_arc(loss, cloud, ss.s_plus).value
        theta = learner(ss.s_plus, lseed)
        gaps[rep] = generalization_gap(loss, theta, ss.s_plus, dist, risk_mode, seed=s + 1).gap
    essup_est = float(arcs.max())
    rhs = highprob_rhs(essup_est, loss.b, n, delta)
    violations = int(np.sum(gaps > rhs))
    for rep, s in enumerate(seeds):
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=int(s), gap=float(gaps[rep]),
            arc=float(arcs[rep]), bound_name="highprob_rhs", bound_value=rhs,
            passed=bool(gaps[rep] <= rhs),
        )
    report.mean_gap, report.stderr_gap = _mean_stderr(gaps)
    report.mean_arc, report.stderr_arc = _mean_stderr(arcs)
    report.bounds["highprob_rhs"] = rhs
    report.bounds["essup_lower_estimate"] = essup_est
    report.flags["essup_is_lower_estimate"] = True
    report.passed = violations / reps <= delta
    report.flags["violations"] = violations
    return report


def fractal_bound_experiment(
    learner,
    loss,
    dist: Distribution,
    n: int,
    reps: int,
    seed: int,
    metric: Metric = Metric.LINF,
    dedup_tol: float = 1e-12,
    eps_grid_size: int = 10,
    exact_limit: int = 20,
) -> BoundReport:
    """Exact complexity against the dimension bound, its Steiner variant, and
    the cardinality bound b * sqrt(ln(2 |set|) / n)."""
    report = BoundReport("fractal-check", n, seed, getattr(learner, "__name__", "learner"))
    seeds = rep_seeds(seed, reps)
    all_ok = True
    for rep, s in enumerate(seeds):
        s = int(s)
        ss = draw_supersample(dist, n, s)
        lseed = learner_seed_for(s)
        cloud = build_theta_hat(learner, ss, mode="exact", learner_seed=lseed, tol=dedup_tol, metric=metric)
        arc = _exact_arc(loss, cloud, ss.s_plus).value
        trivial = loss.b * math.sqrt(math.log(2 * len(cloud)) / n)
        ok = arc <= trivial + BOUND_SLACK
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
            bound_name="trivial_cardinality", bound_value=trivial, passed=ok,
        )
        all_ok &= ok
        focal = len(cloud) < 3 or is_focal(cloud)
        if focal:
            continue
        dn = fractal_bound(cloud, loss.L, loss.b, n, exact_limit)
        ok = arc <= dn + BOUND_SLACK
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
            bound_name="dimension_bound", bound_value=dn, passed=ok,
        )
        all_ok &= ok
        # Steiner variant at the grid minimizer of the covering bound
        delta_c = diameter(cloud)
        grid = [delta_c / 2**j for j in range(1, eps_grid_size + 1)]
        best_eps, best_val = None, None
        for eps in grid:
            cnt = covering_number(cloud, eps, exact_limit).count
            val = loss.L * eps + loss.b * math.sqrt(2.0 * math.log(cnt) / n)
            if best_val is None or val < best_val:
                best_eps, best_val = eps, val
        if best_eps is not None and covering_diameter(cloud) > best_eps:
            try:
                extra = steiner_augment(cloud, best_eps, exact_limit)
            except SteinerInfeasibleError:
                report.flags.setdefault("steiner_skipped", 0)
                report.flags["steiner_skipped"] += 1
                continue
            if len(extra):
                aug = PointCloud(np.vstack([cloud.points, extra]), metric, validate=False)
                if not is_focal(aug):
                    dn_aug = fractal_bound(aug, loss.L, loss.b, n, exact_limit)
                    ok = arc <= dn_aug + BOUND_SLACK
                    report.add_row(
                        experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
                        bound_name="dimension_bound_steiner", bound_value=dn_aug, passed=ok,
                    )
                    all_ok &= ok
    report.flags["exact_theta_hat"] = True
    report.passed = bool(all_ok)
    return report


def sgd_covering_check(
    loss: LossModel,
    make_spec,
    dist: Distribution,
    configs: list[tuple[int, int]],
    seed: int,
    eps_fracs: tuple[float, ...] = (0.5, 0.25, 0.125, 0.0625),
    dedup_tol: float = 1e-12,
    exact_limit: int = 300,
) -> BoundReport:
    """Covering numbers of exact SGD output sets against the 2^min(m, T) bound.

    ``make_spec(n, T, seed)`` builds the SGD spec for a configuration; epsilon
    values are fractions of the domain diameter.
    """
    report = BoundReport("sgd-covering", 0, seed, "sgd")
    seeds = rep_seeds(seed, len(configs))
    all_ok = True
    for rep, ((n, T), s) in enumerate(zip(configs, seeds)):
        s = int(s)
        spec = make_spec(n, T, s)
        gamma = contraction_factor(loss.alpha, loss.beta, spec.eta)
        R = domain_diameter(spec.domain)
        ss = draw_supersample(dist, n, s)

        def learner(sample, lseed, _spec=spec):
            return sgd_run(loss, _spec, sample, lseed)

        cloud = build_theta_hat(
            learner, ss, mode="exact", learner_seed=learner_seed_for(s), tol=dedup_tol, metric=Metric.L2
        )
        for eps_frac in eps_fracs:
            eps = eps_frac * R
            m = forgetting_depth(R, gamma, eps)
            bound = 2 ** min(m, T)
            cnt = covering_number(cloud, eps, exact_limit).count
            ok = cnt <= bound
            report.add_row(
                experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=None,
                bound_name=f"cover_bound_T{T}_eps{eps:.6g}", bound_value=float(bound), passed=ok,
            )
            all_ok &= ok
    report.passed = bool(all_ok)
    return report


def sgd_gap_check(
    loss: LossModel,
    spec,
    dist: Distribution,
    n: int,
    reps: int,
    seed: int,
    delta: float = 0.05,
    risk_mode: str = "closed_form",
) -> BoundReport:
    """Measured SGD gaps against the closed-form bound; pass rate must reach 1 - delta."""
    gamma = contraction_factor(loss.alpha, loss.beta, spec.eta)
    R = domain_diameter(spec.domain)
    rhs = sgd_rhs(loss.b, R, n, gamma, loss.L, delta)
    report = BoundReport("sgd-gap", n, seed, "sgd", delta=delta)
    seeds = rep_seeds(seed, reps)
    gaps = np.empty(reps)
    for rep, s in enumerate(seeds):
        s = int(s)
        rng = np.random.default_rng(s)
        sample = dist.sample(rng, n)
        theta = sgd_run(loss, spec, sample, learner_seed_for(s))
        gaps[rep] = generalization_gap(loss, theta, sample, dist, risk_mode, seed=s + 1).gap
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=float(gaps[rep]), arc=None,
            bound_name="sgd_rhs", bound_value=rhs, passed=bool(gaps[rep] <= rhs),
        )
    report.mean_gap, report.stderr_gap = _mean_stderr(gaps)
    report.bounds["sgd_rhs"] = rhs
    frac = float(np.mean(gaps <= rhs))
    report.flags["pass_fraction"] = frac
    report.passed = frac >= 1.0 - delta
    return report


def compression_check(
    loss,
    dist: Distribution,
    pairs: list[tuple[int, int]],
    seed: int,
    dedup_tol: float = 1e-12,
    metric: Metric = Metric.LINF,
) -> BoundReport:
    """Output-set cardinality against C(2n, k), complexity against the class bounds."""
    report = BoundReport("compress-check", 0, seed, "compress_k")
    seeds = rep_seeds(seed, len(pairs))
    all_ok = True
    for rep, ((k, n), s) in enumerate(zip(pairs, seeds)):
        s = int(s)
        ss = draw_supersample(dist, n, s)
        learner = make_compression_learner(k)
        cloud = build_theta_hat(learner, ss, mode="exact", learner_seed=learner_seed_for(s), tol=dedup_tol, metric=metric)
        cap = math.comb(2 * n, k)
        ok_count = len(cloud) <= cap
        arc = _exact_arc(loss, cloud, ss.s_plus).value
        mb = massart_bound(cap, loss.b, n)
        ok_arc = arc <= mb + BOUND_SLACK
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
            bound_name=f"count_cap_k{k}", bound_value=float(cap), passed=ok_count,
        )
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
            bound_name=f"massart_k{k}", bound_value=mb, passed=ok_arc,
        )
        ok = ok_count and ok_arc
        if loss.a >= 0 and loss.a + loss.b <= 1:
            crhs = compression_rhs(k, n)
            ok_c = arc <= crhs + BOUND_SLACK
            report.add_row(
                experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
                bound_name=f"compression_rhs_k{k}", bound_value=crhs, passed=ok_c,
            )
            ok = ok and ok_c
        all_ok &= ok
    report.passed = bool(all_ok)
    return report


def vc_check(
    loss,
    dist: Distribution,
    ns: list[int],
    seed: int,
    dedup_tol: float = 1e-12,
) -> BoundReport:
    """Exact complexity of the threshold-classifier output set against the VC bound."""
    report = BoundReport("vc-check", 0, seed, "vc_threshold")
    seeds = rep_seeds(seed, len(ns))
    all_ok = True
    learner = make_threshold_learner()
    for rep, (n, s) in enumerate(zip(ns, seeds)):
        s = int(s)
        ss = draw_supersample(dist, n, s)
        cloud = build_theta_hat(learner, ss, mode="exact", learner_seed=learner_seed_for(s), tol=dedup_tol)
        arc = _exact_arc(loss, cloud, ss.s_plus).value
        rhs = vc_rhs(1, n)
        ok = arc <= rhs + BOUND_SLACK
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
            bound_name="vc_rhs", bound_value=rhs, passed=ok,
        )
        all_ok &= ok
    report.passed = bool(all_ok)
    return report


def limit_ratio_experiment(
    learner,
    loss,
    dist: Distribution,
    n_grid: list[int],
    seed: int,
    metric: Metric = Metric.LINF,
    dedup_tol: float = 1e-12,
) -> BoundReport:
    """Report-only trend: arc / sqrt(ln n / n) per n, plus a box-counting slope
    of the pooled output set. No pass/fail (the claim is asymptotic)."""
    if sorted(n_grid) != list(n_grid):
        raise ValueError("n grid must be increasing")
    report = BoundReport("limit-trend", max(n_grid), seed, getattr(learner, "__name__", "learner"))
    seeds = rep_seeds(seed, len(n_grid))
    pooled: list[np.ndarray] = []
    for rep, (n, s) in enumerate(zip(n_grid, seeds)):
        s = int(s)
        if n > 20:
            raise ValueError("trend experiment uses exact enumeration; n must stay <= 20")
        ss = draw_supersample(dist, n, s)
        cloud = build_theta_hat(learner, ss, mode="exact", learner_seed=learner_seed_for(s), tol=dedup_tol, metric=metric)
        pooled.append(cloud.points)
        arc = _exact_arc(loss, cloud, ss.s_plus).value
        ratio = arc / math.sqrt(math.log(n) / n) if n > 1 else float("nan")
        report.add_row(
            experiment=report.experiment, n=n, rep=rep, seed=s, gap=None, arc=arc,
            bound_name="ratio_to_sqrt_logn_over_n", bound_value=ratio, passed=True,
        )
    union_cloud = dedup(np.vstack(pooled), metric, dedup_tol)
    if len(union_cloud) >= 3:
        delta_u = diameter(union_cloud)
        grid = [delta_u / 2**j for j in range(1, 5)]
        try:
            slope = minkowski_slope_estimate(union_cloud, grid)
        except ValueError:
            slope = float("nan")
    else:
        slope = 0.0
    report.bounds["union_minkowski_slope"] = slope
    report.passed = True
    return report
