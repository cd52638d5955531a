"""Special functions needed by the limit laws, written from scratch.

Everything here works on real, positive arguments only: log-Gamma, Beta,
the Gauss hypergeometric series 2F1 on [0, 1), the fused quantity
Gamma(j) U(j, 0, z) and the modified Bessel function K_1.

Most callers only need the scalar functions.  Array variants (prefixed with
an underscore) exist for the vectorised pmf evaluation in
:mod:`padyule.limit_dist`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, QuadratureError

__all__ = [
    "SpecFunConfig",
    "DEFAULT_CONFIG",
    "CriticalAsymptoticTerms",
    "ln_gamma",
    "gamma",
    "ln_beta",
    "beta",
    "gauss_2f1",
    "hyp_u_b0",
    "log_hyp_u_b0",
    "bessel_k1",
    "u_asymptotic_b0",
]


@dataclass(frozen=True)
class SpecFunConfig:
    """Truncation controls shared by the series and quadrature routines."""

    rel_tol: float = 1e-12
    max_terms: int = 10**6
    quad_points: int = 257

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1e-3:
            raise DomainError(f"rel_tol must lie in (0, 1e-3), got {self.rel_tol}")
        if self.max_terms < 100:
            raise DomainError(f"max_terms must be >= 100, got {self.max_terms}")
        if self.quad_points < 32:
            raise DomainError(f"quad_points must be >= 32, got {self.quad_points}")


DEFAULT_CONFIG = SpecFunConfig()

# Panels allowed in one adaptive integration before giving up.
_MAX_PANELS = 1 << 17

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_SHIFT = 10.0
# B_{2k} / (2k (2k-1)) for k = 1..8
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_EULER_GAMMA = 0.57721566490153286061


def _check_positive(name, x):
    if not (x > 0.0) or not math.isfinite(x):
        raise DomainError(f"{name} must be a finite positive number, got {x!r}")


def _stirling_correction(y):
    """Sum of the Bernoulli correction terms of Stirling's series (y >= 10)."""
    inv = 1.0 / y
    inv2 = inv * inv
    acc = 0.0
    power = inv
    for c in _STIRLING_COEFFS:
        acc = acc + c * power
        power = power * inv2
    return acc


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``.

    Arguments below 10 are shifted upward with the recurrence
    ``Gamma(x + 1) = x Gamma(x)`` and the Stirling series (eight Bernoulli
    terms) is evaluated at the shifted point.
    """
    x = float(x)
    _check_positive("x", x)
    if x == 1.0 or x == 2.0:
        return 0.0
    shift = 0
    prod = 1.0
    y = x
    while y < _STIRLING_SHIFT:
        prod *= y
        y += 1.0
        shift += 1
    value = (y - 0.5) * math.log(y) - y + _HALF_LOG_2PI + _stirling_correction(y)
    if shift:
        value -= math.log(prod)
    return value


def gamma(x: float) -> float:
    """Gamma function; exact for small positive integers."""
    x = float(x)
    _check_positive("x", x)
    if x.is_integer() and x <= 171:
        return float(math.factorial(int(x) - 1))
    return math.exp(ln_gamma(x))


def _ln_gamma_ratio(x, a):
    """``ln Gamma(x + a) - ln Gamma(x)`` for ``x > 0``, ``a > 0``.

    Works elementwise on arrays.  The leading Stirling terms are combined as
    ``(y - 1/2) log1p(a / y) + a log(y + a) - a`` so that no large
    logarithms are subtracted; this keeps relative accuracy near machine
    precision even when x is in the millions.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    x, a = np.broadcast_arrays(x, a)
    shift = np.maximum(0.0, np.ceil(_STIRLING_SHIFT - x))
    acc = np.zeros(x.shape)
    for k in range(int(shift.max(initial=0.0))):
        active = shift > k
        acc -= np.where(active, np.log1p(a / (x + k)), 0.0)
    y = x + shift
    lead = (y - 0.5) * np.log1p(a / y) + a * np.log(y + a) - a
    corr = _stirling_correction(y + a) - _stirling_correction(y)
    out = lead + corr + acc
    return out if out.ndim else float(out)


def _small_integer(v):
    return v.is_integer() and 1.0 <= v <= 20.0


def ln_beta(a: float, b: float) -> float:
    """Log of the Beta function, ``ln B(a, b)``."""
    a = float(a)
    b = float(b)
    _check_positive("a", a)
    _check_positive("b", b)
    lo, hi = (a, b) if a <= b else (b, a)
    if _small_integer(lo):
        # B(x, n) = (n-1)! / (x (x+1) ... (x+n-1))
        n = int(lo)
        denom = 0.0
        for k in range(n):
            denom += math.log(hi + k)
        return math.log(math.factorial(n - 1)) - denom
    return ln_gamma(lo) - _ln_gamma_ratio(hi, lo)


def beta(a: float, b: float) -> float:
    """Beta function ``B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)``.

    When one argument is a small integer the finite product form is used,
    which makes values such as ``B(1, 2) = 1/2`` exact in floating point.
    Otherwise the result is assembled in log-space, so large arguments do
    not overflow.
    """
    a = float(a)
    b = float(b)
    _check_positive("a", a)
    _check_positive("b", b)
    lo, hi = (a, b) if a <= b else (b, a)
    if _small_integer(lo):
        n = int(lo)
        denom = 1.0
        for k in range(n):
            denom *= hi + k
        if math.isfinite(denom) and denom > 0.0:
            return math.factorial(n - 1) / denom
    return math.exp(ln_beta(a, b))


def _ln_beta_array(x, b):
    """``ln B(x, b)`` for an array ``x`` and a scalar ``b``."""
    x = np.asarray(x, dtype=float)
    b = float(b)
    if _small_integer(b):
        n = int(b)
        denom = np.zeros(x.shape)
        for k in range(n):
            denom += np.log(x + k)
        return math.log(math.factorial(n - 1)) - denom
    return ln_gamma(b) - _ln_gamma_ratio(x, b)


def _beta_array_exact(x, b):
    """``B(x, b)`` as a plain product when b is a small integer, else None."""
    b = float(b)
    if not _small_integer(b):
        return None
    x = np.asarray(x, dtype=float)
    denom = np.ones(x.shape)
    for k in range(int(b)):
        denom *= x + k
    return math.factorial(int(b) - 1) / denom


def gauss_2f1(a: float, b: float, c: float, z: float,
              config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """Gauss hypergeometric function on ``0 <= z < 1`` by its power series.

    Terms follow the recurrence
    ``t_{k+1} = t_k (a + k)(b + k) / ((c + k)(k + 1)) z``.  The sum stops once
    the geometric bound on the remainder, ``t_k r / (1 - r)`` with
    ``r = max(current ratio, z)``, is below ``rel_tol`` times the partial sum.  ``(a, b)`` is put in canonical order first so the result
    is bit-for-bit symmetric.

    Raises
    ------
    DomainError
        For nonpositive parameters or ``z`` outside ``[0, 1)``.
    ConvergenceError
        If ``config.max_terms`` terms do not reach the tolerance.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    _check_positive("a", a)
    _check_positive("b", b)
    _check_positive("c", c)
    if not 0.0 <= z < 1.0:
        raise DomainError(f"z must lie in [0, 1), got {z!r}")
    if a > b:
        a, b = b, a
    if z == 0.0:
        return 1.0
    term = 1.0
    total = 1.0
    tol = config.rel_tol
    for k in range(config.max_terms):
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        term *= ratio
        total += term
        r = ratio if ratio > z else z
        if r < 1.0 and term * r < tol * (1.0 - r) * total:
            return total
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) did not converge in {config.max_terms} terms"
    )


def _log_gauss_2f1_array(a, b, c, z, config: SpecFunConfig = DEFAULT_CONFIG):
    """Elementwise ``ln 2F1(a_i, b, c_i, z)`` for arrays ``a`` and ``c``."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    b = float(b)
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise DomainError(f"z must lie in [0, 1), got {z!r}")
    a, c = np.broadcast_arrays(a, c)
    total = np.ones(a.shape)
    if z == 0.0:
        return np.zeros(a.shape)
    term = np.ones(a.shape)
    active = np.ones(a.shape, dtype=bool)
    idx = np.arange(a.size).reshape(a.shape)
    tol = config.rel_tol
    # Work only on the still-active entries to keep large arrays cheap.
    af, cf, tf, sf, ix = a.ravel(), c.ravel(), term.ravel(), total.ravel(), idx.ravel()
    for k in range(config.max_terms):
        ratio = (af + k) * (b + k) / ((cf + k) * (k + 1.0)) * z
        tf = tf * ratio
        sf = sf + tf
        r = np.maximum(ratio, z)
        done = (r < 1.0) & (tf * r < tol * (1.0 - r) * sf)
        if done.any():
            total.flat[ix[done]] = sf[done]
            keep = ~done
            af, cf, tf, sf, ix = af[keep], cf[keep], tf[keep], sf[keep], ix[keep]
            if ix.size == 0:
                return np.log(total)
    raise ConvergenceError(f"2F1 array evaluation did not converge in {config.max_terms} terms")


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _adaptive_log_quad(log_f, lo, hi, config: SpecFunConfig = DEFAULT_CONFIG, order=8):
    """Integrate ``exp(log_f)`` over ``[lo, hi]``; returns ``(shift, value)``.

    The integral equals ``exp(shift) * value``.  ``log_f`` must accept a numpy
    array.  The interval starts as ``quad_points - 1`` equal panels.  Each
    panel carries a one-panel and a bisected Gauss-Legendre estimate; their
    difference is the panel error.  While the summed error exceeds
    ``rel_tol`` times the integral, every panel whose error is above the
    per-panel average budget is bisected.
    """
    nodes, weights = _gauss_legendre(order)
    edges = np.linspace(lo, hi, config.quad_points)
    a, b = edges[:-1], edges[1:]

    def points(a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        return mid[:, None] + half[:, None] * nodes[None, :], half

    pts, _ = points(a, b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        sample = log_f(pts)
    finite = sample[np.isfinite(sample)]
    if finite.size == 0:
        return -math.inf, 0.0
    shift = float(finite.max())

    def estimate(a, b):
        pts, half = points(a, b)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
            vals = np.exp(log_f(pts) - shift)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return half * (vals @ weights)

    def refine(a, b, coarse):
        m = 0.5 * (a + b)
        left = estimate(a, m)
        right = estimate(m, b)
        fine = left + right
        # rounding noise of the panel sums is not refinable error
        err = np.maximum(np.abs(fine - coarse) - 64 * np.finfo(float).eps * np.abs(fine), 0.0)
        return m, left, right, fine, err

    coarse = estimate(a, b)
    m, left, right, fine, err = refine(a, b, coarse)
    while True:
        total = fine.sum()
        target = config.rel_tol * abs(total)
        if err.sum() <= target:
            return shift, float(total)
        split = err > target / err.size
        if a.size + int(split.sum()) > _MAX_PANELS:
            raise QuadratureError(
                f"adaptive quadrature exceeded {_MAX_PANELS} panels on [{lo}, {hi}]"
            )
        keep = ~split
        na = np.concatenate([a[split], m[split]])
        nb = np.concatenate([m[split], b[split]])
        ncoarse = np.concatenate([left[split], right[split]])
        nm, nleft, nright, nfine, nerr = refine(na, nb, ncoarse)
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        m = np.concatenate([m[keep], nm])
        left = np.concatenate([left[keep], nleft])
        right = np.concatenate([right[keep], nright])
        fine = np.concatenate([fine[keep], nfine])
        err = np.concatenate([err[keep], nerr])


def _log_gamma_hyp_u(a, b, z, config: SpecFunConfig = DEFAULT_CONFIG):
    """``ln(Gamma(a) U(a, b, z))`` from its integral representation.

    With ``s = t / (1 - t)`` the integrand
    ``exp(-z s) s^(a-1) (1 + s)^(-(a-b+1)) ds`` becomes
    ``t^(a-1) (1 - t)^(-b) exp(-z t / (1 - t)) dt`` on ``(0, 1)``.  It is
    integrated in ``u = 1 - t`` because the peak sits at ``u ~ sqrt(z / a)``
    and forming ``1 - t`` there would cost several digits for large ``a``.
    """

    def log_f(u):
        return (a - 1.0) * np.log1p(-u) - b * np.log(u) - z / u + z

    shift, value = _adaptive_log_quad(log_f, 0.0, 1.0, config)
    if value <= 0.0:
        raise QuadratureError(f"Gamma(a)U(a,b,z) underflowed for a={a}, b={b}, z={z}")
    return shift + math.log(value)


def log_hyp_u_b0(j: int, z: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """Natural log of ``Gamma(j) U(j, 0, z)``; see :func:`hyp_u_b0`."""
    if int(j) != j or j < 1:
        raise DomainError(f"j must be a positive integer, got {j!r}")
    _check_positive("z", float(z))
    return _log_gamma_hyp_u(float(j), 0.0, float(z), config)


def hyp_u_b0(j: int, z: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """``Gamma(j) U(j, 0, z)`` as one fused quantity.

    Equal to ``int_0^inf exp(-z s) s^(j-1) (1 + s)^(-j-1) ds``.  Gamma(j) is
    never formed separately, so large ``j`` does not overflow.
    """
    return math.exp(log_hyp_u_b0(j, z, config))


def _bessel_k1_series(x):
    """K_1 by its ascending series with the logarithmic term, for x <= 2."""
    q = 0.25 * x * x
    term = 1.0  # (x^2/4)^k / (k! (k+1)!)
    i1_sum = 0.0
    psi_sum = 0.0
    harmonic_k = 0.0
    k = 0
    while True:
        psi = 2.0 * harmonic_k + 1.0 / (k + 1.0) - 2.0 * _EULER_GAMMA
        i1_sum += term
        psi_sum += psi * term
        k += 1
        harmonic_k += 1.0 / k
        term *= q / (k * (k + 1.0))
        if term < 1e-18 * i1_sum:
            break
    i1 = 0.5 * x * i1_sum
    return 1.0 / x + math.log(0.5 * x) * i1 - 0.25 * x * psi_sum


def _bessel_k1_scaled_integral(x):
    """``e^x K_1(x)`` from ``int_0^inf exp(-x (cosh t - 1)) cosh t dt``.

    The integrand is even and entire, so the trapezoidal rule converges
    geometrically in the step size.
    """
    h = 0.05
    # exp(-x (cosh t - 1)) < 1e-300 beyond this point
    t_max = math.acosh(1.0 + 700.0 / x)
    t = np.arange(0.0, t_max + h, h)
    s = np.sinh(0.5 * t)
    vals = np.exp(-2.0 * x * s * s) * np.cosh(t)
    return h * (vals.sum() - 0.5 * vals[0])


def _bessel_k1_scaled_asymptotic(x):
    """``e^x K_1(x)`` from the Hankel expansion, truncated at its smallest term."""
    mu = 4.0
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return math.sqrt(math.pi / (2.0 * x)) * total


_K1_SERIES_MAX = 2.0
_K1_ASYMPTOTIC_MIN = 25.0


def _bessel_k1_scaled(x):
    if x <= _K1_SERIES_MAX:
        return math.exp(x) * _bessel_k1_series(x)
    if x < _K1_ASYMPTOTIC_MIN:
        return _bessel_k1_scaled_integral(x)
    return _bessel_k1_scaled_asymptotic(x)


def bessel_k1(x: float) -> float:
    """Modified Bessel function of the second kind of order one.

    Three regimes: the ascending series for ``x <= 2``, a trapezoidal rule
    on the ``cosh`` integral representation for ``2 < x < 25`` and the
    large-argument Hankel expansion above that.
    """
    x = float(x)
    _check_positive("x", x)
    if x <= _K1_SERIES_MAX:
        return _bessel_k1_series(x)
    return _bessel_k1_scaled(x) * math.exp(-x)


@dataclass(frozen=True)
class CriticalAsymptoticTerms:
    """Large-j Bessel approximation of ``Gamma(j) U(j, 0, z)``.

    ``w = arccosh(1 + z / (2j))``, ``beta = (w + sinh w) / 2`` and
    ``leading = 2 e^(z/2) sqrt(2 beta tanh(w/2)) K_1(2 j beta)``.
    """

    j: int
    z: float
    w: float
    beta: float
    leading: float
    log_leading: float


def u_asymptotic_b0(j: int, z: float) -> CriticalAsymptoticTerms:
    """Leading Bessel term of the large-``j`` expansion of ``Gamma(j) U(j, 0, z)``.

    The bounded remainder of the expansion is not evaluated.
    """
    if int(j) != j or j < 1:
        raise DomainError(f"j must be a positive integer, got {j!r}")
    z = float(z)
    _check_positive("z", z)
    eps = z / (2.0 * j)
    # arccosh(1 + eps) without cancellation for small eps
    w = math.log1p(eps + math.sqrt(eps * (2.0 + eps)))
    b = 0.5 * (w + math.sinh(w))
    arg = 2.0 * j * b
    log_leading = (
        math.log(2.0)
        + 0.5 * z
        + 0.5 * math.log(2.0 * b * math.tanh(0.5 * w))
        + math.log(_bessel_k1_scaled(arg))
        - arg
    )
    return CriticalAsymptoticTerms(
        j=int(j), z=z, w=w, beta=b, leading=math.exp(log_leading), log_leading=log_leading
    )
