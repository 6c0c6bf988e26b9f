"""Quasi-classical almost-eigensections of the monopole Laplacian.

Bohr-Sommerfeld quantized tori, eikonals, the two-branch canonical operator
away from the caustics, and the Airy-uniform form across them.  Throughout
h = 1/N and the torus energy is the rescaled almost-eigenvalue
lambda = (E_{N,j} + 1/4)/N**2 with P = k/N - 1/2.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import classical as cl
from .bundle import Section
from .errors import DegenerateTorusError, DomainError, FoldRegionError, InconsistencyError
from .exact import eigenvalue
from .specfun import airy_ai, check_label

POLE_COLLAR = 1e-3
_EPS_LO, _EPS_HI = 1e-3, 0.2
_PHASE = np.exp(0.25j * math.pi)
_EXTENSIONS = ("linear", "langer")


@dataclass(frozen=True)
class QuantumNumbers:
    N: int
    j: int
    k: int

    def __post_init__(self):
        check_label(self.N, self.j, self.k)
        if self.P ** 2 >= self.E + Fraction(1, 4):
            raise DomainError(f"torus for {self} is empty")
        if (self.P + Fraction(1, 2)) * self.N != self.k or (self.P - Fraction(1, 2)) * self.N != self.k - self.N:
            raise InconsistencyError("chart phases are not single-valued")

    @property
    def E(self):
        return (eigenvalue(self.N, self.j) + Fraction(1, 4)) / self.N ** 2

    @property
    def P(self):
        return Fraction(self.k, self.N) - Fraction(1, 2)

    @property
    def E_hat(self):
        return self.E * self.N ** 2

    @property
    def m_hat(self):
        return self.N + 2 * self.j + 1


def quantized_params(qn):
    """(E, P, E_hat, m_hat), rational where representable."""
    return qn.E, qn.P, qn.E_hat, qn.m_hat


def torus_for(qn):
    return cl.make_torus(float(qn.E), float(qn.P))


def u0_numeric(t):
    """u0 = mu(Lambda)^(-1/2) with mu from quadrature."""
    return cl.total_measure(t) ** -0.5


def u0_paper(t):
    return (t.E + 0.25) ** -0.25 / (2.0 * math.pi)


def fold_epsilon(N, t, end="min"):
    """Half-width of the collar around a fold where the oscillatory form is refused.

    One Airy wavelength, 2 N^(-2/3) kappa^(-2/3), clamped to [1e-3, 0.2].
    """
    if t.end_kind(end) != cl.FOLD:
        return POLE_COLLAR
    eps = 2.0 * N ** (-2.0 / 3.0) * t.kappa(end) ** (-2.0 / 3.0)
    return min(max(eps, _EPS_LO), _EPS_HI)


def oscillatory_domain(N, t):
    """Open theta interval on which the oscillatory form is accepted."""
    return t.theta_min + fold_epsilon(N, t, "min"), t.theta_max - fold_epsilon(N, t, "max")


def _check_chart(chart):
    c = str(chart).lower()
    if c not in ("u1", "u2"):
        raise DomainError(f"unknown chart {chart!r}")
    return c


def _branch_sign(branch):
    if branch in (1, "+", "plus"):
        return 1
    if branch in (-1, "-", "minus"):
        return -1
    raise DomainError(f"branch must be '+' or '-', got {branch!r}")


def eikonal(t, branch, chart, qn, theta, phi):
    """tau^{+-} = +-(I(theta) - I(theta_min)) + (P +- 1/2) phi, action by quadrature."""
    s = _branch_sign(branch)
    shift = 0.5 if _check_chart(chart) == "u1" else -0.5
    th = np.asarray(theta, dtype=float)
    I = np.vectorize(lambda x: cl.action_I(t, x))(th)
    P = t.P if qn is None else float(qn.P)
    val = s * I + (P + shift) * np.asarray(phi, dtype=float)
    return float(val) if np.ndim(val) == 0 else val


def _require_interior(N, t, theta):
    lo, hi = oscillatory_domain(N, t)
    th = np.asarray(theta, dtype=float)
    if np.any(th <= lo) or np.any(th >= hi):
        raise FoldRegionError(f"theta within the fold/pole collar; oscillatory form needs ({lo:.6g}, {hi:.6g})")
    return th


def _as_pair(u):
    if isinstance(u, tuple):
        if len(u) != 2:
            raise DomainError("u must be a scalar, a callable, or a (u_plus, u_minus) pair")
        return u
    return u, u


def _eval_u(u, theta):
    return u(theta) if callable(u) else u


def canonical_operator_nonsingular(t, u, N, chart, theta, phi):
    """Two-branch canonical operator on a non-singular chart.

    ``u`` is a constant, a callable of theta, or a pair (u_plus, u_minus).
    The chart U- carries Maslov index -1, hence the factor i.
    """
    th = _require_interior(N, t, theta)
    up, um = _as_pair(u)
    tp = eikonal(t, "+", chart, None, th, phi)
    tm = eikonal(t, "-", chart, None, th, phi)
    quarter = t.band(th) ** 0.25
    val = (_eval_u(up, th) * np.exp(1j * N * tp) + 1j * _eval_u(um, th) * np.exp(1j * N * tm)) / quarter
    return complex(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class WkbSection:
    """Almost-eigensection U_{N,j,k}: torus, normalization and both evaluation forms."""

    qn: QuantumNumbers
    torus: cl.TorusParams
    u0: float
    u0_mode: str = "numeric"

    @property
    def N(self):
        return self.qn.N

    @property
    def degenerate(self):
        return self.torus.degenerate

    def index(self, chart):
        return self.qn.k if _check_chart(chart) == "u1" else self.qn.k - self.qn.N

    # oscillatory --------------------------------------------------------------
    def oscillatory_profile(self, theta, check=True):
        t = self.torus
        th = _require_interior(self.N, t, theta) if check else np.asarray(theta, dtype=float)
        I = cl.action_rel(t, th)
        bnd = np.abs(t.band(th))
        return 2.0 * _PHASE * self.u0 * bnd ** -0.25 * np.sin(self.N * I + 0.25 * math.pi)

    # uniform ------------------------------------------------------------------
    def fold_profile(self, end, theta, extension="linear"):
        """sqrt(pi) e^{i pi/4} A N^{1/6} Ai(-N^{2/3} Phi) for a single fold (with sign at theta_max)."""
        t = self.torus
        Phi = fold_phase_Phi(t, theta, end=end, extension=extension)
        A = fold_amplitude_A(t, self.u0, theta, end=end, extension=extension)
        sign = 1.0 if end == "min" else self._max_sign()
        return sign * math.sqrt(math.pi) * _PHASE * A * self.N ** (1.0 / 6.0) * airy_ai(-self.N ** (2.0 / 3.0) * Phi)

    def _max_sign(self):
        # N * I_total = pi (n + 1/2) on a quantized torus; matching at theta_max costs (-1)^n
        x = self.N * cl.action_total(self.torus) / math.pi - 0.5
        n = round(x)
        if abs(x - n) > 1e-8:
            raise InconsistencyError(f"torus not Bohr-Sommerfeld quantized: N I/pi - 1/2 = {x}")
        return -1.0 if n % 2 else 1.0

    def uniform_profile(self, theta, extension="linear"):
        """Airy-uniform profile on (0, pi); both folds blended across the band middle.

        Degenerate tori fall back to the oscillatory form (zero outside its domain).
        """
        t = self.torus
        th = np.asarray(theta, dtype=float)
        if np.any((th <= 0.0) | (th >= math.pi)):
            raise DomainError("uniform profile: theta must lie in (0, pi)")
        if self.degenerate:
            lo, hi = oscillatory_domain(self.N, t)
            inside = (th > lo) & (th < hi)
            out = np.zeros(th.shape, dtype=complex)
            if np.any(inside):
                out[inside] = self.oscillatory_profile(th[inside], check=False)
            return out[()] if out.ndim == 0 else out
        w = _blend_weight(t, th)
        out = np.zeros(th.shape, dtype=complex)
        lo_part = w > 0.0
        hi_part = w < 1.0
        if np.any(lo_part):
            out[lo_part] += w[lo_part] * self.fold_profile("min", th[lo_part], extension)
        if np.any(hi_part):
            out[hi_part] += (1.0 - w[hi_part]) * self.fold_profile("max", th[hi_part], extension)
        return out[()] if out.ndim == 0 else out

    def section(self, form="uniform", extension="langer"):
        if form == "uniform":
            prof = lambda th: self.uniform_profile(th, extension)  # noqa: E731
        elif form == "oscillatory":
            prof = lambda th: self.oscillatory_profile(th)  # noqa: E731
        else:
            raise DomainError(f"unknown form {form!r}")
        return Section(N=self.N, m1=self.qn.k, profile=prof, name=f"U({self.N},{self.qn.j},{self.qn.k})")

    def breakpoints(self, extension="langer"):
        """Theta values where the chosen representation is not C-infinity."""
        t = self.torus
        if self.degenerate:
            return oscillatory_domain(self.N, t)
        return (t.theta_min, t.theta_max) if extension == "linear" else ()


@lru_cache(maxsize=256)
def wkb_section(qn, u0_mode="numeric"):
    t = torus_for(qn)
    if u0_mode == "numeric":
        u0 = u0_numeric(t)
    elif u0_mode == "paper":
        u0 = u0_paper(t)
    else:
        raise DomainError(f"u0_mode must be 'numeric' or 'paper', got {u0_mode!r}")
    return WkbSection(qn=qn, torus=t, u0=u0, u0_mode=u0_mode)


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def _blend_weight(t, theta):
    # weight of the theta_min fold form: 1 below mid - W/8, 0 above mid + W/8
    h = t.width / 8.0
    return 1.0 - _smoothstep((theta - (t.midpoint - h)) / (2.0 * h))


def _fold_setup(t, end, extension):
    end = cl._end(end)
    if t.end_kind(end) != cl.FOLD:
        raise DomainError(f"the {end} end of this torus is a pole; no fold construction")
    if extension not in _EXTENSIONS:
        raise DomainError(f"extension must be one of {_EXTENSIONS}")
    return end


def _signed_distance(t, end, theta):
    th = np.asarray(theta, dtype=float)
    if np.any((th <= 0.0) | (th >= math.pi)):
        raise DomainError("theta must lie in (0, pi)")
    if end == "min":
        if np.any(th > t.theta_max):
            raise DomainError("theta beyond the opposite turning point")
        return th - t.theta_min
    if np.any(th < t.theta_min):
        raise DomainError("theta beyond the opposite turning point")
    return t.theta_max - th


def _reduced_R(t, end, d):
    """R(d) = Delta I / sign(d)|d|^{3/2}, smooth through the fold, valid on the whole range."""
    d = np.asarray(d, dtype=float)
    inside_reach, outside_reach = cl.fold_reach(t, end)
    half = 0.5 * t.width
    R = np.empty(d.shape)
    near = (d <= half) & (d >= -outside_reach)
    if np.any(near):
        R[near] = cl.fold_local(t, end, d[near])[1]
    far_in = d > half
    if np.any(far_in):
        other = "max" if end == "min" else "min"
        dI = cl.action_total(t) - cl.fold_local(t, other, t.width - d[far_in])[0]
        R[far_in] = dI / d[far_in] ** 1.5
    deep = d < -outside_reach
    if np.any(deep):
        f = t.end_theta(end)
        th = f - d[deep] if end == "max" else f + d[deep]
        R[deep] = cl.tunnelling_action(t, end, th) / np.abs(d[deep]) ** 1.5
    return R


def fold_phase_Phi(t, theta, end="min", extension="linear"):
    """Airy phase Phi: ((3/2) Delta I)^{2/3} inside the band.

    Beyond the fold ``extension='linear'`` continues with kappa^{2/3} d (the
    C^1 tangent line), ``'langer'`` with the analytic continuation
    -((3/2) |tunnelling action|)^{2/3}.
    """
    end = _fold_setup(t, end, extension)
    d = _signed_distance(t, end, theta)
    R = _reduced_R(t, end, d)
    Phi = d * (1.5 * R) ** (2.0 / 3.0)
    if extension == "linear":
        Phi = np.where(d < 0, t.kappa(end) ** (2.0 / 3.0) * d, Phi)
    return float(Phi) if np.ndim(theta) == 0 else Phi


def fold_amplitude_limit(t, u0, end="min"):
    return 2.0 * u0 / (t.D ** (1.0 / 6.0) * math.sin(t.end_theta(end)) ** (1.0 / 3.0))


def fold_amplitude_A(t, u0, theta, end="min", extension="linear"):
    """Airy amplitude A = 2 u0 band^{-1/4} ((3/2) Delta I)^{1/6}.

    Evaluated as 2 u0 (band/d)^{-1/4} ((3/2) R)^{1/6}, which is finite through
    the fold.  Below it the linear extension holds the fold value constant.
    """
    end = _fold_setup(t, end, extension)
    if u0 <= 0:
        raise DomainError("u0 must be positive")
    d = _signed_distance(t, end, theta)
    R = _reduced_R(t, end, d)
    ratio, _ = cl._band_over_dist(t, end, d)
    A = 2.0 * u0 * np.abs(ratio) ** -0.25 * (1.5 * R) ** (1.0 / 6.0)
    if extension == "linear":
        A = np.where(d < 0, fold_amplitude_limit(t, u0, end), A)
    return float(A) if np.ndim(theta) == 0 else A


def wkb_oscillatory(qn, chart, theta, phi=0.0, u0_mode="numeric"):
    """Oscillatory almost-eigensection in the given chart (fold collars refused)."""
    ws = wkb_section(qn, u0_mode)
    val = ws.oscillatory_profile(theta) * np.exp(1j * ws.index(chart) * np.asarray(phi, dtype=float))
    return complex(val) if np.ndim(val) == 0 else val


def wkb_uniform(qn, chart, theta, phi=0.0, extension="linear", u0_mode="numeric"):
    """Airy-uniform almost-eigensection; degenerate tori fall back to the oscillatory form."""
    ws = wkb_section(qn, u0_mode)
    val = ws.uniform_profile(theta, extension) * np.exp(1j * ws.index(chart) * np.asarray(phi, dtype=float))
    return complex(val) if np.ndim(val) == 0 else val


def require_nondegenerate(qn):
    if torus_for(qn).degenerate:
        raise DegenerateTorusError(f"{qn} lies on a pole-touching torus")
