"""Exact limit in-degree distribution of the attachment-detachment graph.

The limit law ``p_j`` of the degree of a uniformly chosen vertex has a closed
form in each regime (Beta functions times 2F1 away from criticality, the
confluent function U at criticality).  This module evaluates it, certifies
the truncated tail, and provides the tail asymptotics, the first two moments
and an independent quadrature oracle built on the transient probabilities of
a linear birth-death process started from one individual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import specfun
from .errors import DomainError, UnsupportedRegimeError
from .params import ModelParams, Regime, classify_regime
from .specfun import DEFAULT_CONFIG, SpecFunConfig

__all__ = [
    "ModelParams",
    "Regime",
    "classify_regime",
    "Pmf",
    "TailAsymptotic",
    "CriticalDecayRecord",
    "log_pmf",
    "limit_pmf",
    "certified_j_max",
    "tail_mass",
    "limit_pmf_oracle",
    "transient_prob",
    "log_transient_prob",
    "tail_asymptotic",
    "evaluate_critical_decay",
    "expectation",
    "variance",
    "summed_moments",
]

log = logging.getLogger(__name__)

# Largest truncation index limit_pmf will choose on its own.
MAX_AUTO_J = 4_000_000
# Remainder target for the critical regime when j_max is chosen automatically.
CRITICAL_TAIL_TARGET = 1e-9


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function on ``0..j_max`` with a bound on the rest.

    ``log_values`` is kept next to ``values`` because far-tail masses in the
    subcritical regime underflow to zero long before their logarithms become
    uninteresting.
    """

    values: np.ndarray
    log_values: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        logs = np.array(self.log_values, dtype=float)
        if values.ndim != 1 or values.shape != logs.shape or values.size == 0:
            raise ValueError("values and log_values must be equal-length 1-d arrays")
        if np.any(values < 0) or self.tail_mass < 0:
            raise ValueError("probabilities must be nonnegative")
        values.setflags(write=False)
        logs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "log_values", logs)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    @classmethod
    def from_values(cls, values: Sequence[float], tail_mass: float = 0.0) -> "Pmf":
        values = np.asarray(values, dtype=float)
        with np.errstate(divide="ignore"):
            logs = np.log(values)
        return cls(values, logs, tail_mass)

    @property
    def j_max(self) -> int:
        return self.values.size - 1

    def __len__(self):
        return self.values.size

    def __getitem__(self, j):
        return self.values[j]

    @property
    def total(self) -> float:
        """Mass on ``0..j_max`` (the tail bound is not included)."""
        return float(self.values.sum())

    def mean(self) -> float:
        return float(np.arange(self.values.size) @ self.values)

    def rows(self) -> Iterable[tuple[int, float]]:
        return ((j, float(p)) for j, p in enumerate(self.values))


@dataclass(frozen=True)
class TailAsymptotic:
    """``p_j ~ constant * geometric_ratio**(j + 1) * j**power_exponent``.

    The constant is stored as its logarithm because it overflows near the
    critical boundary, where the power exponent becomes very negative.
    """

    log_constant: float
    power_exponent: float
    geometric_ratio: float = 1.0

    @property
    def constant(self) -> float:
        """``exp(log_constant)``; ``inf`` when it exceeds the float range."""
        return math.exp(self.log_constant) if self.log_constant < 709.0 else math.inf

    def log_value(self, j):
        j = np.asarray(j, dtype=float)
        out = (
            self.log_constant
            + (j + 1.0) * math.log(self.geometric_ratio)
            + self.power_exponent * np.log(j)
        )
        return out if out.ndim else float(out)

    def value(self, j):
        return np.exp(self.log_value(j))


@dataclass(frozen=True)
class CriticalDecayRecord:
    j: int
    power_scaled: float
    exp_scaled: float
    log_p: float


def _as_index_array(j):
    arr = np.asarray(j)
    if arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise DomainError("degrees must be integers")
        arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise DomainError("degrees must be nonnegative")
    return arr


def _shape_params(params: ModelParams):
    """(gamma, z, prefactor log) used by the non-critical closed forms."""
    if params.mu2 < params.lambda2:
        r = params.lambda2 - params.mu2
        return params.lambda1 / r, params.mu2 / params.lambda2
    s = params.mu2 - params.lambda2
    return params.lambda1 / s, params.lambda2 / params.mu2


def log_pmf(params: ModelParams, j, config: SpecFunConfig = DEFAULT_CONFIG):
    """``ln p_j`` for a scalar or array of degrees ``j``.

    Everything is computed in log-space, so the subcritical geometric factor
    never underflows.  ``-inf`` marks an exact zero (``p_0`` without
    detachment).
    """
    js = _as_index_array(j)
    scalar = js.ndim == 0
    js = np.atleast_1d(js)
    out = np.empty(js.shape, dtype=float)
    zero = js == 0
    pos = ~zero
    jp = js[pos].astype(float)
    l1, l2, m2 = params.lambda1, params.lambda2, params.mu2
    regime = classify_regime(params)

    if regime is Regime.NO_DETACHMENT:
        rho = l1 / l2
        out[zero] = -math.inf
        out[pos] = math.log(rho) + specfun._ln_beta_array(jp, 1.0 + rho)
    elif regime in (Regime.SUPERCRITICAL, Regime.SUBCRITICAL):
        g, z = _shape_params(params)
        if regime is Regime.SUPERCRITICAL:
            r = l2 - m2
            log_p0_pref = math.log(m2 * l1 / (l2 * r))
            log_pj_pref = math.log(l1 * r / l2**2)
        else:
            s = m2 - l2
            log_p0_pref = math.log(l1 / s)
            # the closed form divides by lambda2**2; see the quadrature oracle
            log_pj_pref = math.log(l1 * s / l2**2)
        if zero.any():
            out[zero] = (
                log_p0_pref
                + specfun.ln_beta(2.0, g)
                + math.log(specfun.gauss_2f1(1.0, g, 2.0 + g, z, config))
            )
        if pos.any():
            lp = (
                log_pj_pref
                + specfun._ln_beta_array(jp, 1.0 + g)
                + specfun._log_gauss_2f1_array(jp + 1.0, 1.0 + g, jp + 1.0 + g, z, config)
            )
            if regime is Regime.SUBCRITICAL:
                lp = lp + (jp + 1.0) * math.log(z)
            out[pos] = lp
    else:
        z = l1 / l2
        if zero.any():
            out[zero] = specfun.log_hyp_u_b0(1, z, config)
        cache: dict[int, float] = {}
        vals = []
        for jj in js[pos]:
            jj = int(jj)
            if jj not in cache:
                cache[jj] = math.log(z) + specfun.log_hyp_u_b0(jj, z, config)
            vals.append(cache[jj])
        out[pos] = vals
    return float(out[0]) if scalar else out


def tail_asymptotic(params: ModelParams) -> TailAsymptotic:
    """Constant, power and geometric ratio of the large-``j`` behaviour of ``p_j``.

    Raises
    ------
    UnsupportedRegimeError
        In the critical regime, whose decay is not of this form.
    """
    l1, l2, m2 = params.lambda1, params.lambda2, params.mu2
    regime = classify_regime(params)
    if regime is Regime.NO_DETACHMENT:
        rho = l1 / l2
        return TailAsymptotic(math.log(rho) + specfun.ln_gamma(1.0 + rho), -(1.0 + rho), 1.0)
    if regime is Regime.SUPERCRITICAL:
        g = l1 / (l2 - m2)
        log_c = math.log(l1 / l2) + g * math.log(l2 / (l2 - m2)) + specfun.ln_gamma(1.0 + g)
        return TailAsymptotic(log_c, -(1.0 + g), 1.0)
    if regime is Regime.SUBCRITICAL:
        s = m2 - l2
        g = l1 / s
        # B(j, 1+g) ~ Gamma(1+g) j^-(1+g) and 2F1 -> (1 - l2/m2)^-(1+g)
        log_c = math.log(l1 * m2 / l2**2) + g * math.log(m2 / s) + specfun.ln_gamma(1.0 + g)
        return TailAsymptotic(log_c, -(1.0 + g), l2 / m2)
    raise UnsupportedRegimeError(
        "the critical regime has no power or geometric tail; use evaluate_critical_decay"
    )


def _log_tail_bound(asym: TailAsymptotic, j_max: int) -> float:
    """Log of twice the integral-comparison bound on the asymptote beyond j_max."""
    s = -asym.power_exponent
    J = float(j_max)
    base = math.log(2.0) + asym.log_constant + (J + 1.0) * math.log(asym.geometric_ratio)
    if asym.geometric_ratio == 1.0:
        return base + (1.0 - s) * math.log(J) - math.log(s - 1.0)
    return base - s * math.log(J) - math.log1p(-asym.geometric_ratio)


def _critical_tail(params: ModelParams, j_max: int, config: SpecFunConfig) -> float:
    # sum_{j > J} s^(j-1) (1+s)^(-j-1) = s^J (1+s)^(-J-1), so the remainder is
    # z * Gamma(J+1) U(J+1, 1, z) exactly.
    z = params.lambda1 / params.lambda2
    return math.exp(math.log(z) + specfun._log_gamma_hyp_u(j_max + 1.0, 1.0, z, config))


def tail_mass(params: ModelParams, j_max: int, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """Upper bound on ``sum_{j > j_max} p_j``.

    Away from criticality this is twice the integral bound on the tail
    asymptote; at criticality the remainder is evaluated exactly.
    """
    if j_max < 1:
        raise DomainError(f"j_max must be >= 1, got {j_max}")
    if classify_regime(params) is Regime.CRITICAL:
        return _critical_tail(params, j_max, config)
    return math.exp(_log_tail_bound(tail_asymptotic(params), j_max))


def certified_j_max(params: ModelParams, tol: float = 1e-6,
                    config: SpecFunConfig = DEFAULT_CONFIG) -> int:
    """Smallest truncation index whose tail bound is at most ``tol``.

    The critical regime uses ``min(tol, 1e-9)``.  The result is capped at
    ``MAX_AUTO_J``; a warning is logged when the cap binds.
    """
    if classify_regime(params) is Regime.CRITICAL:
        target = min(tol, CRITICAL_TAIL_TARGET)
        J = 16
        while _critical_tail(params, J, config) > target:
            if J >= MAX_AUTO_J:
                log.warning("critical tail above %g at the j_max cap %d", target, J)
                return MAX_AUTO_J
            J = min(2 * J, MAX_AUTO_J)
        return J
    asym = tail_asymptotic(params)
    log_tol = math.log(tol)
    if asym.geometric_ratio == 1.0:
        s = -asym.power_exponent
        J = math.exp((math.log(2.0 / ((s - 1.0) * tol)) + asym.log_constant) / (s - 1.0))
        J = max(1, math.ceil(J))
        if J > MAX_AUTO_J:
            log.warning("tail bound needs j_max=%.3g; capping at %d", J, MAX_AUTO_J)
            return MAX_AUTO_J
        return J
    lo, hi = 1, 2
    while _log_tail_bound(asym, hi) > log_tol:
        lo, hi = hi, 2 * hi
        if hi > MAX_AUTO_J:
            return MAX_AUTO_J
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _log_tail_bound(asym, mid) > log_tol:
            lo = mid
        else:
            hi = mid
    return hi


def limit_pmf(params: ModelParams, j_max: int | None = None, *, tol: float = 1e-6,
              config: SpecFunConfig = DEFAULT_CONFIG) -> Pmf:
    """Limit distribution ``p_0..p_{j_max}`` with a certified tail bound.

    Parameters
    ----------
    params : ModelParams
    j_max : int, optional
        Truncation index.  When omitted, :func:`certified_j_max` picks the
        smallest index whose tail bound is below ``tol``.
    tol : float
        Tail target used only when ``j_max`` is omitted.
    """
    if j_max is None:
        j_max = certified_j_max(params, tol, config)
    if int(j_max) != j_max or j_max < 1:
        raise DomainError(f"j_max must be a positive integer, got {j_max!r}")
    j_max = int(j_max)
    js = np.arange(j_max + 1)
    logs = log_pmf(params, js, config)
    values = np.exp(logs)
    if classify_regime(params) is Regime.NO_DETACHMENT:
        rho = params.lambda1 / params.lambda2
        exact = specfun._beta_array_exact(js[1:].astype(float), 1.0 + rho)
        if exact is not None:
            values[1:] = rho * exact
    return Pmf(values, logs, tail_mass(params, j_max, config))


def log_transient_prob(params: ModelParams, v, j: int):
    """``ln P(Z_v = j)`` for a linear birth-death process started at one.

    Birth rate is ``lambda2`` and death rate ``mu2``; ``v`` may be an array.
    """
    if int(j) != j or j < 0:
        raise DomainError(f"j must be a nonnegative integer, got {j!r}")
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainError("time must be nonnegative")
    lam, mu = params.lambda2, params.mu2
    j = int(j)
    with np.errstate(divide="ignore", invalid="ignore"):
        if mu == 0.0:
            if j == 0:
                out = np.full(v.shape, -math.inf)
            else:
                out = -lam * v
                if j > 1:
                    out = out + (j - 1) * np.log(-np.expm1(-lam * v))
        elif lam == mu:
            x = lam * v
            if j == 0:
                out = np.log(x) - np.log1p(x)
            else:
                out = -(j + 1) * np.log1p(x)
                if j > 1:
                    out = out + (j - 1) * np.log(x)
        else:
            a = abs(lam - mu)
            hi, lo = max(lam, mu), min(lam, mu)
            q = np.exp(-a * v)
            one_minus_q = -np.expm1(-a * v)
            den = hi - lo * q
            if j == 0:
                out = math.log(mu) + np.log(one_minus_q) - np.log(den)
            else:
                out = 2.0 * math.log(a) - a * v - (j + 1) * np.log(den)
                if j > 1:
                    out = out + (j - 1) * (math.log(lam) + np.log(one_minus_q))
    return out if out.ndim else float(out)


def transient_prob(params: ModelParams, v: float, j: int) -> float:
    """``P(Z_v = j)`` for the birth-death process with rates (lambda2, mu2) from one."""
    return math.exp(log_transient_prob(params, float(v), j))


def limit_pmf_oracle(params: ModelParams, j: int, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """``p_j`` by quadrature of ``lambda1 * int_0^inf exp(-lambda1 v) P(Z_v = j) dv``.

    The range is cut at ``V`` with ``exp(-lambda1 V) = 1e-12``.  This route
    shares nothing with :func:`limit_pmf` except the integrator.
    """
    if int(j) != j or j < 0:
        raise DomainError(f"j must be a nonnegative integer, got {j!r}")
    l1 = params.lambda1
    horizon = 12.0 * math.log(10.0) / l1

    def log_f(v):
        return math.log(l1) - l1 * v + log_transient_prob(params, v, int(j))

    shift, value = specfun._adaptive_log_quad(log_f, 0.0, horizon, config)
    if value == 0.0:
        return 0.0
    return math.exp(shift) * value


def evaluate_critical_decay(params: ModelParams, j_grid: Sequence[int], m: float = 3,
                            eps: float = 0.05,
                            config: SpecFunConfig = DEFAULT_CONFIG) -> list[CriticalDecayRecord]:
    """``j**m * p_j`` and ``exp(eps * j) * p_j`` along ``j_grid`` (critical regime only)."""
    if classify_regime(params) is not Regime.CRITICAL:
        raise UnsupportedRegimeError("evaluate_critical_decay needs lambda2 == mu2 > 0")
    grid = [int(j) for j in j_grid]
    if any(j < 1 for j in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("j_grid must be strictly increasing positive integers")
    logs = log_pmf(params, np.array(grid), config)
    return [
        CriticalDecayRecord(
            j=j,
            power_scaled=math.exp(m * math.log(j) + lp),
            exp_scaled=math.exp(eps * j + lp),
            log_p=float(lp),
        )
        for j, lp in zip(grid, logs)
    ]


def expectation(params: ModelParams) -> float:
    """Mean of the limit law; ``math.inf`` when it diverges."""
    l1, l2, m2 = params.lambda1, params.lambda2, params.mu2
    r = l2 - m2
    if l2 < m2 or 0.0 < r < l1:
        return l1 / (l1 - r)
    if r == 0.0:
        return 1.0
    return math.inf


def variance(params: ModelParams) -> float:
    """Variance of the limit law; ``math.inf`` when it diverges.

    The finite non-critical case needs ``lambda1 > 2 (lambda2 - mu2)``, the
    condition under which ``lambda1 int exp(-lambda1 v) E[Z_v^2] dv``
    converges.
    """
    l1, l2, m2 = params.lambda1, params.lambda2, params.mu2
    r = l2 - m2
    if r == 0.0:
        return 2.0 * l2 / l1
    if m2 > l2 or 0.0 < r < 0.5 * l1:
        second = (2.0 * l1 * l2 / (l1 - 2.0 * r) - l1 * (l2 + m2) / (l1 - r)) / r
        return second - (l1 / (l1 - r)) ** 2
    return math.inf


def summed_moments(params: ModelParams, j_max: int | None = None,
                   config: SpecFunConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Mean and variance obtained by summing ``j p_j`` and ``j^2 p_j``.

    Power-law tails beyond ``j_max`` are added through the asymptote,
    ``sum_{j>J} j^k c j^-s ~ c (J + 1/2)^(k-s+1) / (s-k-1)``; a divergent
    tail gives ``inf``.  This is a numerical cross-check of
    :func:`expectation` and :func:`variance`.
    """
    regime = classify_regime(params)
    if j_max is None:
        if regime is Regime.CRITICAL:
            z = params.lambda1 / params.lambda2
            # p_j ~ exp(-2 sqrt(z j)); j^2 p_j is negligible once sqrt(z j) > 20
            j_max = int(math.ceil(400.0 / z))
        elif regime is Regime.SUBCRITICAL:
            j_max = certified_j_max(params, 1e-16, config) + 64
        else:
            j_max = 20_000
    pmf = limit_pmf(params, j_max, config=config)
    js = np.arange(pmf.values.size, dtype=float)
    first = float(js @ pmf.values)
    second = float((js * js) @ pmf.values)
    if regime in (Regime.NO_DETACHMENT, Regime.SUPERCRITICAL):
        asym = tail_asymptotic(params)
        s = -asym.power_exponent
        edge = j_max + 0.5
        for k in (1, 2):
            if s - k - 1.0 <= 0.0:
                extra = math.inf
            else:
                extra = math.exp(asym.log_constant + (k - s + 1.0) * math.log(edge)) / (s - k - 1.0)
            if k == 1:
                first += extra
            else:
                second += extra
    mean = first
    var = second - first * first if math.isfinite(second) else math.inf
    return mean, var
