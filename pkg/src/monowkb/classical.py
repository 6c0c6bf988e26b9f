"""Magnetic geodesic flow on the sphere with B = 1/2.

Invariant tori Lambda(E, P) = {H = E, p_phi - B cos(theta) = P}, their
turning points, the action I(theta), the flow-invariant density, flow
integration and a numerical Maslov index via the regularized Jacobian.

The band function a + b z + c z**2 (z = cos theta) with a = E - P**2, b = -P,
c = -(E + 1/4) is positive strictly between its roots z_lo < z_hi; the
allowed theta range is [theta_min, theta_max] = [arccos z_hi, arccos z_lo].
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import (DegenerateTorusError, DomainError, EmptyTorusError, FoldRegionError,
                     InconsistencyError, PoleProximityError, ResolutionError)
from .specfun import mapped_rule

B_HALF = 0.5
FOLD = "fold"
POLE = "pole"
_POLE_TOL = 1e-10
_QUAD = dict(epsabs=1e-13, epsrel=1e-13, limit=400)


@dataclass(frozen=True)
class TorusParams:
    E: float
    P: float
    a: float
    b: float
    c: float
    D: float
    z_lo: float
    z_hi: float
    theta_min: float
    theta_max: float
    end_kind_min: str
    end_kind_max: str
    B: float = B_HALF

    @property
    def degenerate(self):
        return self.end_kind_min == POLE or self.end_kind_max == POLE

    @property
    def width(self):
        return self.theta_max - self.theta_min

    @property
    def midpoint(self):
        return 0.5 * (self.theta_min + self.theta_max)

    def end_theta(self, end):
        return self.theta_min if _end(end) == "min" else self.theta_max

    def end_kind(self, end):
        return self.end_kind_min if _end(end) == "min" else self.end_kind_max

    def kappa(self, end):
        """sqrt(D / sin(theta_end)): p_theta ~ kappa * sqrt(distance) at a fold."""
        return math.sqrt(self.D / math.sin(self.end_theta(end)))

    def band(self, theta):
        """a + b cos + c cos^2 in factored form, free of cancellation near the roots and poles."""
        th = np.asarray(theta, dtype=float)
        upper = 2.0 * np.sin(0.5 * (th + self.theta_min)) * np.sin(0.5 * (th - self.theta_min))
        lower = 2.0 * np.sin(0.5 * (self.theta_max + th)) * np.sin(0.5 * (self.theta_max - th))
        return -self.c * upper * lower

    def as_dict(self):
        return {
            "E": self.E, "P": self.P, "a": self.a, "b": self.b, "c": self.c, "D": self.D,
            "z_lo": self.z_lo, "z_hi": self.z_hi,
            "theta_min": self.theta_min, "theta_max": self.theta_max,
            "end_kinds": [self.end_kind_min, self.end_kind_max],
            "degenerate": self.degenerate,
        }


def _end(end):
    e = str(end).lower()
    if e not in ("min", "max"):
        raise DomainError(f"fold end must be 'min' or 'max', got {end!r}")
    return e


@dataclass(frozen=True)
class PhaseState:
    theta: float
    phi: float
    p_theta: float
    p_phi: float

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi:
            raise DomainError(f"theta must lie in (0, pi), got {self.theta}")

    def as_array(self):
        return np.array([self.theta, self.phi, self.p_theta, self.p_phi])


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # rows (theta, phi, p_theta, p_phi)
    I1: np.ndarray
    I2: np.ndarray
    drift_I1: float
    drift_I2: float

    @property
    def phase_states(self):
        return [PhaseState(*row) for row in self.states]


def make_torus(E, P):
    """Build Lambda(E, P) for B = 1/2 with numerically stable roots."""
    E = float(E)
    P = float(P)
    if not math.isfinite(E) or E <= 0.0:
        raise DomainError(f"energy must be positive, got {E}")
    if P * P >= E + B_HALF ** 2:
        raise EmptyTorusError(f"Lambda(E={E}, P={P}) is empty: P^2 >= E + 1/4")
    a = E - P * P
    b = -P
    c = -(E + 0.25)
    disc = b * b - 4.0 * a * c
    D = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(D, b))
    r1, r2 = q / c, a / q
    z_lo, z_hi = min(r1, r2), max(r1, r2)
    kind_min = kind_max = FOLD
    if abs(z_hi - 1.0) <= _POLE_TOL:
        z_hi, kind_min = 1.0, POLE
    if abs(z_lo + 1.0) <= _POLE_TOL:
        z_lo, kind_max = -1.0, POLE
    z_hi = min(z_hi, 1.0)
    z_lo = max(z_lo, -1.0)
    return TorusParams(E=E, P=P, a=a, b=b, c=c, D=D, z_lo=z_lo, z_hi=z_hi,
                       theta_min=math.acos(z_hi), theta_max=math.acos(z_lo),
                       end_kind_min=kind_min, end_kind_max=kind_max)


def _check_band(t, theta, tol=1e-12):
    th = np.asarray(theta, dtype=float)
    if np.any(th < t.theta_min - tol) or np.any(th > t.theta_max + tol):
        raise DomainError(f"theta outside the band [{t.theta_min}, {t.theta_max}]")
    return th


def p_theta_abs(t, theta):
    th = np.asarray(theta, dtype=float)
    return np.sqrt(np.maximum(t.band(th), 0.0)) / np.sin(th)


def momenta(t, theta, branch=1):
    """(p_theta, p_phi) on the given branch (+1 or -1) of Lambda."""
    th = _check_band(t, theta)
    if np.any((th <= 0.0) | (th >= math.pi)):
        raise DomainError("momenta: theta must lie in (0, pi)")
    sgn = 1.0 if branch in (1, "+", "plus") else -1.0
    p_th = sgn * p_theta_abs(t, th)
    p_ph = t.P + t.B * np.cos(th)
    if np.ndim(theta) == 0:
        return float(p_th), float(p_ph)
    return p_th, p_ph


def hamiltonian(state, B=B_HALF):
    th, _, pt, pp = state
    return pt * pt + pp * pp / math.sin(th) ** 2


def action_I(t, theta):
    """I(theta) = integral of p_theta from theta_min, by adaptive quadrature.

    Square-root endpoints are removed with u**2 = theta - theta_min on the
    lower half of the band and v**2 = theta_max - theta on the upper half.
    """
    th = float(_check_band(t, theta))
    th = min(max(th, t.theta_min), t.theta_max)
    mid = t.midpoint
    lo_end = min(th, mid)
    total = 0.0
    if lo_end > t.theta_min:
        total += quad(lambda u: 2.0 * u * float(p_theta_abs(t, t.theta_min + u * u)),
                      0.0, math.sqrt(lo_end - t.theta_min), **_QUAD)[0]
    if th > mid:
        total += quad(lambda v: 2.0 * v * float(p_theta_abs(t, t.theta_max - v * v)),
                      math.sqrt(t.theta_max - th), math.sqrt(t.theta_max - mid), **_QUAD)[0]
    return total


def action_total_exact(t):
    """Closed-form I(theta_max) = pi (sqrt(E+1/4) - |P+1/2|/2 - |P-1/2|/2)."""
    return math.pi * (math.sqrt(t.E + 0.25) - 0.5 * abs(t.P + 0.5) - 0.5 * abs(t.P - 0.5))


def _closed_form_raw(t, theta, clamp_tol=1e-9):
    z = math.cos(theta)
    sq = t.D  # sqrt(b^2 - 4ac)
    args = (
        (2 * t.a + t.b + (t.b + 2 * t.c) * z) / ((z - 1.0) * sq),
        (2 * t.a - t.b + (t.b - 2 * t.c) * z) / ((z + 1.0) * sq),
        (2 * t.c * z + t.b) / sq,
    )
    clamped = []
    for arg in args:
        if abs(arg) > 1.0 + clamp_tol:
            raise InconsistencyError(f"closed-form arcsin argument {arg!r} outside [-1, 1] at theta={theta}")
        clamped.append(min(1.0, max(-1.0, arg)))
    return (0.5 * abs(t.P + 0.5) * math.asin(clamped[0])
            + 0.5 * abs(t.P - 0.5) * math.asin(clamped[1])
            + math.sqrt(t.E + 0.25) * math.asin(clamped[2]))


def action_I_closed_form(t, theta):
    """Three-arcsin closed form of I, shifted so that I(theta_min) = 0.

    At theta_min the three arguments are exactly (1, 1, -1); the shift uses
    those values because arcsin loses half the digits next to +-1.
    """
    if t.degenerate:
        raise DegenerateTorusError("closed-form action requires two fold ends")
    th = float(theta)
    if not t.theta_min < th < t.theta_max:
        raise DomainError("closed-form action: theta must lie strictly inside the band")
    at_fold = 0.5 * math.pi * (0.5 * abs(t.P + 0.5) + 0.5 * abs(t.P - 0.5) - math.sqrt(t.E + 0.25))
    return _closed_form_raw(t, th) - at_fold


def closed_form_discrepancy(t, thetas, tol=1e-8):
    """Compare closed form with quadrature; returns a report dict (never raises)."""
    rows = []
    for th in thetas:
        try:
            cf = action_I_closed_form(t, th)
            q = action_I(t, th)
            rows.append({"theta": float(th), "closed": cf, "quadrature": q, "diff": abs(cf - q)})
        except InconsistencyError as exc:
            rows.append({"theta": float(th), "error": str(exc)})
    diffs = [r["diff"] for r in rows if "diff" in r]
    return {"E": t.E, "P": t.P, "max_diff": max(diffs) if diffs else None,
            "n_inconsistent": sum("error" in r for r in rows),
            "agrees": bool(diffs) and max(diffs) <= tol, "rows": rows}


def invariant_density(t, theta):
    """sin(theta) / sqrt(band) = 1 / p_theta: density of mu w.r.t. dtheta dphi."""
    th = np.asarray(theta, dtype=float)
    bnd = t.band(th)
    if np.any(bnd <= 0.0):
        raise FoldRegionError("invariant density diverges at (or beyond) a fold")
    val = np.sin(th) / np.sqrt(bnd)
    return float(val) if np.ndim(theta) == 0 else val


def _psi_map(t, psi):
    # theta = theta_min + W (1 - cos psi)/2 removes square roots at both ends
    W = t.width
    return t.theta_min + 0.5 * W * (1.0 - np.cos(psi)), 0.5 * W * np.sin(psi)


def total_measure(t):
    """mu(Lambda) = 2 branches x 2 pi x integral of dtheta / p_theta."""
    def integrand(psi):
        th, dth = _psi_map(t, psi)
        bnd = float(t.band(th))
        if bnd <= 0.0:
            return 0.0  # only at psi = 0 or pi, where dtheta/dpsi vanishes too
        return math.sin(th) * dth / math.sqrt(bnd)
    val = quad(integrand, 0.0, math.pi, **_QUAD)[0]
    return 4.0 * math.pi * val


def total_measure_exact(t):
    return 4.0 * math.pi ** 2 / math.sqrt(t.E + 0.25)


def theta_period_exact(t):
    return math.pi / math.sqrt(t.E + 0.25)


# fold-local action -----------------------------------------------------------

_S_NODES, _S_WEIGHTS = mapped_rule(0.0, 1.0, 64)


def _band_over_dist(t, end, d):
    """band(theta) / d with theta at signed distance d inside the band from ``end``."""
    d = np.asarray(d, dtype=float)
    half_sinc = 0.5 * np.sinc(d / (2.0 * math.pi))  # sin(d/2)/d
    if end == "min":
        th = t.theta_min + d
        other = np.cos(th) - t.z_lo
        near = 2.0 * np.sin(t.theta_min + 0.5 * d) * half_sinc
    else:
        th = t.theta_max - d
        other = t.z_hi - np.cos(th)
        near = 2.0 * np.sin(t.theta_max - 0.5 * d) * half_sinc
    return -t.c * near * other, th


def _reduced_action(t, end, d):
    # R(d) with Delta I = sign(d) |d|^{3/2} R(d); smooth through d = 0
    d = np.asarray(d, dtype=float)
    tau = d[..., None] * _S_NODES ** 2
    ratio, th = _band_over_dist(t, end, tau)
    g = np.sqrt(np.maximum(ratio, 0.0)) / np.sin(th)
    return np.sum(2.0 * _S_NODES ** 2 * g * _S_WEIGHTS, axis=-1)


def fold_local(t, end, d):
    """Fold-centred quantities at signed distance ``d`` (positive = inside the band).

    Returns (delta_I, R, band_over_d) where delta_I is the action measured from
    the fold (negative beyond it: minus the tunnelling action) and
    delta_I = sign(d) |d|**1.5 R.  Valid while the stencil of the substitution
    stays clear of the other turning point and the pole; see ``fold_reach``.
    """
    end = _end(end)
    if t.end_kind(end) != FOLD:
        raise DegenerateTorusError(f"the {end} end of this torus is a pole, not a fold")
    d = np.asarray(d, dtype=float)
    R = _reduced_action(t, end, d)
    ratio, _ = _band_over_dist(t, end, d)
    dI = np.sign(d) * np.abs(d) ** 1.5 * R
    return dI, R, ratio


def fold_reach(t, end):
    """(inside, outside) distances over which fold_local is accurate to ~1e-14."""
    end = _end(end)
    inside = t.width if t.degenerate else 0.6 * t.width
    to_pole = t.theta_min if end == "min" else math.pi - t.theta_max
    return inside, 0.9 * to_pole


def tunnelling_action(t, end, theta):
    """Positive action integral of sqrt(-band)/sin from theta to the fold (beyond the band)."""
    end = _end(end)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    f = t.end_theta(end)
    _, reach = fold_reach(t, end)
    sgn = -1.0 if end == "min" else 1.0
    out = np.empty_like(th)
    anchor = f + sgn * reach
    anchor_val = -float(fold_local(t, end, -reach)[0])
    for i, x in enumerate(th):
        dist = abs(x - f)
        if dist <= reach:
            out[i] = -float(fold_local(t, end, -dist)[0])
        else:
            lo, hi = sorted((x, anchor))
            extra = quad(lambda s: math.sqrt(max(-float(t.band(s)), 0.0)) / math.sin(s), lo, hi, **_QUAD)[0]
            out[i] = anchor_val + extra
    return out if np.ndim(theta) else float(out[0])


@lru_cache(maxsize=256)
def action_total(t):
    """I(theta_max) - I(theta_min) from the fold-local representation."""
    if t.end_kind_min == FOLD and t.end_kind_max == FOLD:
        half = 0.5 * t.width
        return float(fold_local(t, "min", half)[0] + fold_local(t, "max", half)[0])
    if t.end_kind_max == FOLD:
        return float(fold_local(t, "max", t.width)[0])
    return float(fold_local(t, "min", t.width)[0])


def action_rel(t, theta):
    """Vectorized I(theta) - I(theta_min) inside the band (fast path of action_I)."""
    th = np.clip(np.asarray(theta, dtype=float), t.theta_min, t.theta_max)
    total = action_total(t)
    if t.end_kind_min == FOLD and t.end_kind_max == FOLD:
        lower = th <= t.midpoint
        out = np.where(lower,
                       fold_local(t, "min", np.where(lower, th - t.theta_min, 0.0))[0],
                       total - fold_local(t, "max", np.where(lower, 0.0, t.theta_max - th))[0])
    elif t.end_kind_max == FOLD:
        out = total - fold_local(t, "max", t.theta_max - th)[0]
    else:
        out = fold_local(t, "min", th - t.theta_min)[0]
    return float(out) if np.ndim(theta) == 0 else out


# flow ------------------------------------------------------------------------

def flow_rhs(_, y, B=B_HALF):
    """Hamilton equations of H = p_theta^2 + p_phi^2/sin^2 for the twisted form.

    From i_X Omega = -dH with Omega = dp_theta^dtheta + dp_phi^dphi + B sin dtheta^dphi.
    """
    th, _, pt, pp = y
    s = math.sin(th)
    cs = math.cos(th)
    return [2.0 * pt,
            2.0 * pp / s ** 2,
            2.0 * cs * pp ** 2 / s ** 3 + 2.0 * B * pp / s,
            -2.0 * B * s * pt]


def first_integrals(states, B=B_HALF):
    st = np.atleast_2d(states)
    th, pt, pp = st[:, 0], st[:, 2], st[:, 3]
    return pt ** 2 + pp ** 2 / np.sin(th) ** 2, pp - B * np.cos(th)


def torus_state(t, theta, phi=0.0, branch=1):
    pt, pp = momenta(t, theta, branch)
    return PhaseState(float(theta), float(phi), pt, pp)


def integrate_flow(start, B=B_HALF, T=50.0, tol=1e-10, t_eval=None, pole_eps=1e-3):
    """Integrate the magnetic geodesic flow with an embedded 8(5,3) Runge-Kutta pair.

    ``tol`` is the accuracy asked of the run.  The step controller gets
    rtol = tol/10 and atol = tol/1000: local errors accumulate over ~10^3
    steps, and H amplifies theta errors by 1/sin^3 on passes near a pole.
    """
    if T == 0:
        raise DomainError("integration time must be non-zero")
    y0 = start.as_array() if isinstance(start, PhaseState) else np.asarray(start, dtype=float)

    def near_pole(_, y, *__):
        return math.sin(y[0]) - pole_eps
    near_pole.terminal = True

    sol = solve_ivp(flow_rhs, (0.0, T), y0, method="DOP853", rtol=0.1 * tol, atol=1e-3 * tol,
                    t_eval=t_eval, events=near_pole, args=(B,))
    if sol.status == 1:
        t_hit = float(sol.t_events[0][0])
        raise PoleProximityError(f"trajectory reached sin(theta) = {pole_eps} at t = {t_hit}",
                                 t=t_hit, state=sol.y_events[0][0])
    if not sol.success:
        raise ResolutionError(sol.message)
    states = sol.y.T
    I1, I2 = first_integrals(states, B)
    return Trajectory(times=sol.t, states=states, I1=I1, I2=I2,
                      drift_I1=float(np.max(np.abs(I1 - I1[0]))),
                      drift_I2=float(np.max(np.abs(I2 - I2[0]))))


def measure_theta_period(t, n_periods=10, tol=1e-11):
    """theta-oscillation period from successive upward zero crossings of p_theta."""
    start = torus_state(t, _central_theta(t), 0.0, 1)

    def turn(_, y, *__):
        return y[2]
    turn.direction = 1.0

    T = (n_periods + 1.5) * theta_period_exact(t)
    sol = solve_ivp(flow_rhs, (0.0, T), start.as_array(), method="DOP853",
                    rtol=tol, atol=tol, events=turn, args=(t.B,))
    hits = sol.t_events[0]
    if len(hits) < 2:
        raise ResolutionError("fewer than two turning-point crossings found")
    return float(np.mean(np.diff(hits)))


# Maslov index ----------------------------------------------------------------

def _central_theta(t):
    return math.pi / 2 if t.theta_min < math.pi / 2 < t.theta_max else t.midpoint


def _dptheta_sq(t, theta):
    # d/dtheta (band / sin^2) = P_theta * dP_theta/dtheta * 2, finite at folds
    s = np.sin(theta)
    z = np.cos(theta)
    bnd = t.a + t.b * z + t.c * z * z
    dband = -s * (t.b + 2.0 * t.c * z)
    return dband / s ** 2 - 2.0 * bnd * z / s ** 3


def regularized_jacobian(t, theta, branch, eps):
    """J^eps = dtheta/dalpha - i eps dp_theta/dalpha, alpha the mu-coordinate.

    On branch s (+1/-1) this is s P_theta - i eps P_theta P_theta'.
    """
    return branch * p_theta_abs(t, theta) - 0.5j * eps * _dptheta_sq(t, theta)


def _arg_variation(values, max_jump=math.pi / 2):
    steps = np.angle(values[1:] / values[:-1])
    if np.any(np.abs(steps) > max_jump):
        raise ResolutionError("phase jump above pi/2 between samples")
    return float(np.sum(steps))


def fold_path_variation(t, end, eps, n_samples=2001, max_refine=6):
    """var arg J^eps along sigma_+(theta_c) -> fold -> sigma_-(theta_c)."""
    end = _end(end)
    if t.end_kind(end) != FOLD:
        raise DegenerateTorusError(f"the {end} end is a pole; no fold to cross")
    f = t.end_theta(end)
    tc = _central_theta(t)
    n = n_samples
    for _ in range(max_refine):
        sig = np.linspace(1.0, -1.0, n)
        th = f + (tc - f) * sig ** 2
        branch = np.where(sig >= 0, 1.0, -1.0)
        J = regularized_jacobian(t, th, branch, eps)
        try:
            return _arg_variation(J)
        except ResolutionError:
            n = 2 * n - 1
    raise ResolutionError("could not resolve arg J^eps even after refinement")


def maslov_estimates(t, fold_end="min", eps_list=(1e-2, 5e-3, 2.5e-3), n_samples=2001):
    """Raw var(arg)/pi per eps and the eps -> 0 extrapolation (linear fit)."""
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    raw = np.array([fold_path_variation(t, fold_end, e, n_samples) / math.pi for e in eps])
    if len(eps) >= 2:
        slope, intercept = np.polyfit(eps, raw, 1)
        extrap = float(intercept)
    else:
        extrap = float(raw[0])
    return {"E": t.E, "P": t.P, "fold_end": _end(fold_end), "eps": eps.tolist(),
            "raw_estimates": raw.tolist(), "extrapolated": extrap, "index": int(round(extrap))}


def maslov_index_numeric(t, fold_end="min", eps_list=(1e-2, 5e-3, 2.5e-3), n_samples=2001):
    """Maslov index of the path from chart U+ through a fold into chart U-.

    Through theta_min this is -1.  The theta_max path runs the other way round
    the theta-cycle and gives +1 (the cycle itself has index 2).
    """
    return maslov_estimates(t, fold_end, eps_list, n_samples)["index"]


def chart_index(t, branch, eps_list=(1e-2, 5e-3, 2.5e-3)):
    """Maslov index of chart U+ (0) or U- (-1) relative to arg J = 0 at sigma_+(theta_c)."""
    tc = _central_theta(t)
    base = [float(np.angle(regularized_jacobian(t, tc, 1.0, e))) / math.pi for e in eps_list]
    base0 = float(np.polyfit(eps_list, base, 1)[1]) if len(eps_list) > 1 else base[0]
    if branch in (1, "+"):
        return int(round(base0))
    fold = "min" if t.end_kind_min == FOLD else "max"
    return int(round(base0)) + maslov_index_numeric(t, fold, eps_list)
