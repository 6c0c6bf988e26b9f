"""Special functions and quadrature rules.

Airy Ai (real argument), the explicit finite sum for the monopole-harmonic
Jacobi polynomial, log-factorials and Gauss-Legendre rules.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError

# Ai is evaluated by its Maclaurin series on [AIRY_NEG_SWITCH, AIRY_POS_SWITCH]
# and by the asymptotic expansions outside.  Both representations agree to
# ~1e-11 on the overlap annuli around the switch points.
AIRY_NEG_SWITCH = -7.0
AIRY_POS_SWITCH = 5.5

_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = 3.0 ** (-1.0 / 3.0) / math.gamma(1.0 / 3.0)
_SERIES_TERMS = 70
_ASYMP_TERMS = 40


def _asymptotic_coefficients(n):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    return np.array(u)


_U = _asymptotic_coefficients(_ASYMP_TERMS)


def airy_series(x):
    """Ai(x) from the Maclaurin series; accurate for moderate |x| only."""
    x = np.asarray(x, dtype=float)
    x3 = x ** 3
    f_term = np.ones_like(x)
    g_term = x.copy()
    f_sum = f_term.copy()
    g_sum = g_term.copy()
    for k in range(_SERIES_TERMS):
        f_term = f_term * x3 / ((3 * k + 2) * (3 * k + 3))
        g_term = g_term * x3 / ((3 * k + 3) * (3 * k + 4))
        f_sum = f_sum + f_term
        g_sum = g_sum + g_term
    return _AI0 * f_sum - _AIP0 * g_sum


def _truncated(terms):
    # optimal truncation: drop everything from the smallest term on
    mag = np.abs(terms)
    stop = np.argmin(mag, axis=0)
    keep = np.arange(terms.shape[0])[:, None] < np.maximum(stop, 1)[None, :]
    return np.sum(np.where(keep, terms, 0.0), axis=0)


def airy_asymptotic(x):
    """Ai(x) from the large-|x| expansions (decaying for x > 0, oscillatory for x < 0)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    pos = x > 0
    if np.any(pos):
        xp = x[pos]
        zeta = 2.0 / 3.0 * xp ** 1.5
        k = np.arange(_ASYMP_TERMS)[:, None]
        terms = (-1.0) ** k * _U[:, None] / zeta[None, :] ** k
        out[pos] = np.exp(-zeta) / (2.0 * math.sqrt(math.pi) * xp ** 0.25) * _truncated(terms)
    neg = ~pos
    if np.any(neg):
        xn = -x[neg]
        zeta = 2.0 / 3.0 * xn ** 1.5
        half = _ASYMP_TERMS // 2
        k = np.arange(half)[:, None]
        even = (-1.0) ** k * _U[0::2][:half, None] / zeta[None, :] ** (2 * k)
        odd = (-1.0) ** k * _U[1::2][:half, None] / zeta[None, :] ** (2 * k + 1)
        p_sum = _truncated(even)
        q_sum = _truncated(odd)
        phase = zeta + math.pi / 4.0
        out[neg] = (np.sin(phase) * p_sum - np.cos(phase) * q_sum) / (math.sqrt(math.pi) * xn ** 0.25)
    return out


def airy_ai(x):
    """Airy function Ai for real arguments.

    Accepts a scalar or an array; returns the same shape.  Absolute error is
    below 1e-10 for |x| <= 30.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("airy_ai: non-finite argument")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    mid = (flat >= AIRY_NEG_SWITCH) & (flat <= AIRY_POS_SWITCH)
    if np.any(mid):
        out[mid] = airy_series(flat[mid])
    if np.any(~mid):
        out[~mid] = airy_asymptotic(flat[~mid])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def log_factorial(n):
    """ln(n!) for a non-negative integer n."""
    if isinstance(n, bool) or int(n) != n:
        raise DomainError(f"log_factorial: integer required, got {n!r}")
    n = int(n)
    if n < 0:
        raise DomainError(f"log_factorial: negative argument {n}")
    if n < 2:
        return 0.0
    if n <= 1000:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1)


def check_label(N, j, k):
    if N < 1 or j < 0 or not (-j <= k <= N + j):
        raise DomainError(f"invalid quantum numbers (N={N}, j={j}, k={k}): need N>=1, j>=0, -j<=k<=N+j")


@lru_cache(maxsize=512)
def jacobi_terms(N, j, k):
    """Coefficients of the explicit sum for P~_{N,j,k}.

    Returns arrays ``(s, log_abs, sign, p, q)`` so that
    P~(x) = sum sign * exp(log_abs) * ((1-x)/2)**p * ((1+x)/2)**q,
    with s restricted to values where all factorial arguments are >= 0.
    """
    check_label(N, j, k)
    s = np.array([s for s in range(0, j + 1) if N - k + s >= 0 and j + k - s >= 0], dtype=int)
    lf = log_factorial
    log_abs = np.array([
        lf(j) + lf(j + N) - lf(si) - lf(j - si) - lf(N - k + si) - lf(j + k - si) for si in s
    ])
    sign = np.array([-1.0 if (j + k - si) % 2 else 1.0 for si in s])
    p = j + k - s
    q = s.copy()
    return s, log_abs, sign, p, q


def jacobi_sum(N, j, k, x):
    """Evaluate the polynomial P~_{N,j,k}(x) from its explicit finite sum.

    This is the Jacobi polynomial P_{j+k}^{(-k, N-k)} written as the sum over
    s with all four factorial arguments non-negative; parameters can be
    negative integers, so no three-term recurrence is used.
    """
    check_label(N, j, k)
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise DomainError("jacobi_sum: x must lie in [-1, 1]")
    _, log_abs, sign, p, q = jacobi_terms(N, j, k)
    u = (1.0 - xa) / 2.0
    v = (1.0 + xa) / 2.0
    total = np.zeros_like(xa)
    for la, sg, pi, qi in zip(log_abs, sign, p, q):
        total = total + sg * math.exp(la) * u ** int(pi) * v ** int(qi)
    if xa.ndim == 0:
        return float(total)
    return total


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on [-1, 1]."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        return np.sum(self.weights * values)

    def __len__(self):
        return len(self.nodes)


def gauss_legendre(n):
    """n-point Gauss-Legendre rule on [-1, 1], nodes ascending."""
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= 4096:
        raise DomainError(f"gauss_legendre: order must be an integer in [1, 4096], got {n!r}")
    n = int(n)
    x, w = _gl_cached(n)
    return QuadratureRule(order=n, nodes=x.copy(), weights=w.copy())


@lru_cache(maxsize=64)
def _gl_cached(n):
    x, w = roots_legendre(n)
    order = np.argsort(x)
    return x[order], w[order]


def composite_rule(breakpoints, n):
    """Gauss-Legendre rule of order n on every panel between sorted breakpoints.

    The breakpoints must span [-1, 1]; duplicate or degenerate panels are
    dropped.  Used for integrands that are smooth only piecewise in x.
    """
    pts = np.unique(np.clip(np.asarray(breakpoints, dtype=float), -1.0, 1.0))
    pts = np.union1d(pts, [-1.0, 1.0])
    x, w = _gl_cached(int(n))
    nodes, weights = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0.0:
            continue
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (hi + lo) + half * x)
        weights.append(half * w)
    return QuadratureRule(order=int(n), nodes=np.concatenate(nodes), weights=np.concatenate(weights))


def mapped_rule(lo, hi, n):
    """Gauss-Legendre nodes/weights on [lo, hi] as plain arrays."""
    x, w = _gl_cached(int(n))
    half = 0.5 * (hi - lo)
    return 0.5 * (hi + lo) + half * x, half * w
