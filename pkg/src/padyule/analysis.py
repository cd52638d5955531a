"""Ensemble statistics and cross-checks between simulation and closed forms."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import graph_process as gp
from . import yule_process as yp
from ._rng import GRAPH_STREAM, YULE_STREAM, check_seed
from .errors import DomainError, InsufficientSampleError, NormalizationError
from .limit_dist import Pmf
from .params import ModelParams

__all__ = [
    "EnsembleSpec",
    "EnsembleDistribution",
    "ComparisonReport",
    "PowerLawFit",
    "ensemble_degree_distribution",
    "compare_distributions",
    "two_sample_chi_square",
    "embedding_equivalence_test",
    "fit_power_law_exponent",
    "MIN_EMBEDDING_SAMPLES",
]

MIN_EXPECTED = 5.0
MIN_EMBEDDING_SAMPLES = 1000
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class EnsembleSpec:
    """``num_runs`` trajectories of ``steps`` steps; run ``k`` uses seed ``base_seed + k``."""

    params: ModelParams
    steps: int
    num_runs: int
    base_seed: int = 0

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 0:
            raise DomainError("steps must be a nonnegative integer")
        if int(self.num_runs) != self.num_runs or self.num_runs < 1:
            raise DomainError("num_runs must be a positive integer")
        check_seed(self.base_seed)


@dataclass(frozen=True, eq=False)
class EnsembleDistribution:
    """Average of per-run normalized degree histograms.

    ``masses[j]`` estimates the probability that a uniformly chosen vertex
    has degree ``j`` at the ensemble horizon.  ``counts`` merges the raw
    histograms of all runs.
    """

    masses: np.ndarray
    num_runs: int
    counts: gp.DegreeHistogram

    def rows(self):
        return ((j, float(m)) for j, m in enumerate(self.masses))


def _run_masses(spec: EnsembleSpec, k: int):
    state = gp.simulate(spec.params, spec.steps, spec.base_seed + k).state
    hist = gp.empirical_distribution(state)
    return hist.masses(), hist


def ensemble_degree_distribution(spec: EnsembleSpec, workers: int | None = None) -> EnsembleDistribution:
    """Run the ensemble and average the per-run empirical degree laws.

    Runs may execute on a thread pool; the reduction happens afterwards in
    run order, so the result does not depend on ``workers``.
    """
    if workers is None or workers <= 1:
        results = [_run_masses(spec, k) for k in range(spec.num_runs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda k: _run_masses(spec, k), range(spec.num_runs)))
    size = max(m.size for m, _ in results)
    acc = np.zeros(size)
    merged = gp.DegreeHistogram({})
    for m, h in results:
        acc[: m.size] += m
        merged = merged.merge(h)
    acc /= spec.num_runs
    acc.setflags(write=False)
    return EnsembleDistribution(acc, spec.num_runs, merged)


@dataclass(frozen=True)
class ComparisonReport:
    """Distances between two distributions and the resulting verdict.

    ``chi_square_kind`` is ``"two-sample"`` when both inputs carry counts,
    ``"goodness-of-fit"`` when one does, and ``"divergence"`` (Pearson
    divergence of the masses, no sample size) otherwise.  ``verdict`` is
    decided by the chi-square quantile for the sample tests and by
    ``total_variation <= tv_threshold`` otherwise.
    """

    total_variation: float
    chi_square: float
    degrees_of_freedom: int
    chi_square_kind: str
    chi_square_threshold: float | None
    max_abs_diff: float
    tv_threshold: float | None
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {k: _json_number(v) for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _json_number(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class _Dist:
    masses: np.ndarray
    residual: float
    counts: np.ndarray | None


def _as_dist(x) -> _Dist:
    if isinstance(x, gp.DegreeHistogram):
        n = x.num_vertices
        if n == 0:
            raise NormalizationError("empty histogram")
        counts = np.zeros(x.max_degree + 1)
        for j, c in x.counts.items():
            counts[j] = c
        return _Dist(counts / n, 0.0, counts)
    if isinstance(x, Pmf):
        values, bound = np.asarray(x.values), x.tail_mass
    elif isinstance(x, EnsembleDistribution):
        values, bound = np.asarray(x.masses), 0.0
    else:
        values, bound = np.asarray(x, dtype=float), 0.0
    if values.ndim != 1 or values.size == 0 or np.any(values < 0) or not np.all(np.isfinite(values)):
        raise NormalizationError("masses must be a nonempty 1-d array of nonnegative numbers")
    total = float(values.sum())
    if total > 1.0 + NORMALIZATION_TOL or total < 1.0 - bound - NORMALIZATION_TOL:
        raise NormalizationError(
            f"masses sum to {total!r}, outside [1 - tail - 1e-9, 1 + 1e-9] with tail bound {bound!r}"
        )
    return _Dist(values, max(0.0, 1.0 - total), None)


def _aligned(a: _Dist, b: _Dist):
    """Masses on a common support with the leftover mass as one extra cell."""
    size = max(a.masses.size, b.masses.size)
    pa = np.zeros(size + 1)
    pb = np.zeros(size + 1)
    pa[: a.masses.size] = a.masses
    pb[: b.masses.size] = b.masses
    pa[size] = a.residual
    pb[size] = b.residual
    return pa, pb


def _pool_cells(weights: np.ndarray, min_weight: float) -> list[slice]:
    """Group consecutive cells until each group's weight reaches ``min_weight``.

    A short final group is folded into its predecessor.
    """
    groups = []
    start = 0
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if acc >= min_weight:
            groups.append(slice(start, i + 1))
            start, acc = i + 1, 0.0
    if start < weights.size:
        if groups:
            groups[-1] = slice(groups[-1].start, weights.size)
        else:
            groups.append(slice(0, weights.size))
    return groups


def two_sample_chi_square(x: Sequence[int] | np.ndarray, y: Sequence[int] | np.ndarray,
                          level: float = 0.999):
    """Pearson chi-square homogeneity statistic for two integer samples.

    Cells are consecutive values pooled until the expected count of both
    samples is at least 5.  Returns ``(statistic, dof, threshold)`` where
    ``threshold`` is the ``level`` quantile of the chi-square law with
    ``dof = cells - 1``.

    Raises
    ------
    InsufficientSampleError
        When pooling leaves fewer than two cells.
    """
    cx = np.bincount(np.asarray(x, dtype=np.int64))
    cy = np.bincount(np.asarray(y, dtype=np.int64))
    return _two_sample_from_counts(cx, cy, level)


def _two_sample_from_counts(cx, cy, level):
    size = max(cx.size, cy.size)
    ox = np.zeros(size)
    oy = np.zeros(size)
    ox[: cx.size] = cx
    oy[: cy.size] = cy
    n1, n2 = ox.sum(), oy.sum()
    if n1 == 0 or n2 == 0:
        raise InsufficientSampleError("both samples must be nonempty")
    pooled = ox + oy
    # the smaller expected count of a cell is min(n1, n2) * pooled / (n1 + n2)
    groups = _pool_cells(pooled * min(n1, n2) / (n1 + n2), MIN_EXPECTED)
    if len(groups) < 2:
        raise InsufficientSampleError("pooling left fewer than two cells")
    gx = np.array([ox[g].sum() for g in groups])
    gy = np.array([oy[g].sum() for g in groups])
    gp_ = gx + gy
    ex = n1 * gp_ / (n1 + n2)
    ey = n2 * gp_ / (n1 + n2)
    stat = float(np.sum((gx - ex) ** 2 / ex) + np.sum((gy - ey) ** 2 / ey))
    dof = len(groups) - 1
    return stat, dof, float(stats.chi2.ppf(level, dof))


def _goodness_of_fit(counts: np.ndarray, model: np.ndarray, level: float):
    n = counts.sum()
    expected = n * model
    groups = _pool_cells(expected, MIN_EXPECTED)
    if len(groups) < 2:
        raise InsufficientSampleError("pooling left fewer than two cells")
    o = np.array([counts[g].sum() for g in groups])
    e = np.array([expected[g].sum() for g in groups])
    if np.any(e <= 0):
        return math.inf, len(groups) - 1, float(stats.chi2.ppf(level, len(groups) - 1))
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(groups) - 1
    return stat, dof, float(stats.chi2.ppf(level, dof))


def compare_distributions(p, q, *, tv_threshold: float | None = 0.05,
                          level: float = 0.999) -> ComparisonReport:
    """Compare two degree distributions.

    Parameters
    ----------
    p, q : Pmf, DegreeHistogram, EnsembleDistribution or array of masses
        Histograms are treated as samples; the others as exact laws whose
        leftover mass beyond the last index forms one pooled tail cell.
    tv_threshold : float or None
        Budget for the total variation verdict when neither input is a sample.
    level : float
        Quantile of the chi-square reference law used by sample tests.
    """
    a, b = _as_dist(p), _as_dist(q)
    pa, pb = _aligned(a, b)
    diff = np.abs(pa - pb)
    tv = float(min(1.0, 0.5 * diff.sum()))
    mad = float(diff.max())
    threshold = None
    if a.counts is not None and b.counts is not None:
        kind = "two-sample"
        stat, dof, threshold = _two_sample_from_counts(a.counts, b.counts, level)
        passed = stat <= threshold
    elif a.counts is not None or b.counts is not None:
        kind = "goodness-of-fit"
        sample, model = (pa, pb) if a.counts is not None else (pb, pa)
        n = (a.counts if a.counts is not None else b.counts).sum()
        stat, dof, threshold = _goodness_of_fit(sample * n, model, level)
        passed = stat <= threshold
    else:
        kind = "divergence"
        support = pb > 0
        if np.any(pa[~support] > 0):
            stat = math.inf
        else:
            with np.errstate(over="ignore"):
                stat = float(np.sum((pa[support] - pb[support]) ** 2 / pb[support]))
        dof = int(np.count_nonzero(support | (pa > 0))) - 1
        passed = tv_threshold is None or tv <= tv_threshold
    return ComparisonReport(
        total_variation=tv,
        chi_square=stat,
        degrees_of_freedom=int(dof),
        chi_square_kind=kind,
        chi_square_threshold=threshold,
        max_abs_diff=mad,
        tv_threshold=tv_threshold,
        verdict="pass" if passed else "fail",
    )


def embedding_equivalence_test(params: ModelParams, t: int, samples: int, seed: int, *,
                               yule_params: ModelParams | None = None,
                               level: float = 0.999) -> ComparisonReport:
    """Two-sample test that graph degrees and household sizes agree in law.

    Draws ``samples`` degrees of a uniform vertex after ``t`` graph steps and
    ``samples`` sizes of a uniform household at census ``t``, from disjoint
    random streams of ``seed``.  ``yule_params`` overrides the household
    side's rates, which turns the test into a negative control.
    """
    if int(t) != t or t < 0:
        raise DomainError("t must be a nonnegative integer")
    if int(samples) != samples or samples < MIN_EMBEDDING_SAMPLES:
        raise DomainError(f"samples must be an integer >= {MIN_EMBEDDING_SAMPLES}, got {samples!r}")
    check_seed(seed)
    if t == 0:
        # both sides sit in the initial state (1): nothing to test
        return ComparisonReport(0.0, 0.0, 0, "two-sample", None, 0.0, None, "pass")
    x = gp.sample_degrees_at(params, int(t), int(samples), seed, stream=GRAPH_STREAM)
    y = yp.sample_sizes_at(yule_params or params, int(t), int(samples), seed, stream=YULE_STREAM)
    hx = gp.DegreeHistogram.from_values(x)
    hy = gp.DegreeHistogram.from_values(y)
    return compare_distributions(hx, hy, tv_threshold=None, level=level)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    residual: float


def fit_power_law_exponent(pmf: Pmf | np.ndarray, j_min: int, j_max: int) -> PowerLawFit:
    """Least-squares line through ``(ln j, ln p_j)`` for ``j_min <= j <= j_max``.

    ``residual`` is the root-mean-square deviation from the fitted line.
    """
    if j_min < 1 or j_max <= j_min:
        raise DomainError("need 1 <= j_min < j_max")
    if isinstance(pmf, Pmf):
        if j_max > pmf.j_max:
            raise DomainError(f"window exceeds pmf support (j_max={pmf.j_max})")
        logs = np.asarray(pmf.log_values[j_min: j_max + 1])
    else:
        vals = np.asarray(pmf, dtype=float)
        if j_max >= vals.size:
            raise DomainError("window exceeds the given masses")
        w = vals[j_min: j_max + 1]
        if np.any(w <= 0):
            raise DomainError("zero mass inside the fitting window")
        logs = np.log(w)
    if not np.all(np.isfinite(logs)):
        raise DomainError("zero mass inside the fitting window")
    x = np.log(np.arange(j_min, j_max + 1, dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = logs - A @ coef
    return PowerLawFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2))))
