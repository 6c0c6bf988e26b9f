"""WKB versus exact comparison: reports, convergence sweeps, spectrum table."""
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import classical as cl
from .bundle import MonopoleBundle, apply_laplacian
from .errors import DomainError, MonoWkbError, ResolutionError
from .exact import HarmonicLabel, eigenvalue, harmonic_section, multiplicity
from .specfun import composite_rule
from .wkb import QuantumNumbers, oscillatory_domain, u0_paper, wkb_section

GRID_DEFAULT = 400
GRID_MAX = 4096
AGREE_TOL = 1e-9
RESIDUAL_POLE_COLLAR = 1e-3
GAP_DELTA = 0.2


def frac_str(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class ComparisonReport:
    label: tuple
    E_exact: Fraction
    E_hat: Fraction
    gap: Fraction
    overlap_defect: float
    rel_residual_wkb: float
    norm_wkb: float
    degenerate: bool
    u0_used: float
    u0_paper_ratio: float
    overlap: float = float("nan")
    grid_nodes: int = 0
    extension: str = "langer"
    torus: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["label"] = list(self.label)
        for key in ("E_exact", "E_hat", "gap"):
            d[key] = frac_str(getattr(self, key))
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def spectrum_table(N, j_max):
    """Rows (j, E, m, E_hat, m_hat) with exact rationals; m == m_hat and E_hat - E == 1/4."""
    if N < 1 or j_max < 0:
        raise DomainError(f"spectrum_table: need N >= 1 and j_max >= 0 (got {N}, {j_max})")
    rows = []
    for j in range(j_max + 1):
        E = eigenvalue(N, j)
        qn = QuantumNumbers(N, j, 0)
        rows.append({"N": N, "j": j, "E": E, "m": multiplicity(N, j), "E_hat": qn.E_hat, "m_hat": qn.m_hat})
    return rows


def _panels(ws):
    t = ws.torus
    if ws.degenerate:
        return list(oscillatory_domain(ws.N, t))
    return [t.theta_min, t.theta_max]


def theta_rule(breaks, n):
    """Composite Gauss-Legendre rule in theta on [0, pi] with the sin(theta) weight folded in.

    Integrating in theta rather than x = cos(theta) keeps the integrand smooth
    when a torus touches a pole (|U|^2 ~ 1/theta there).
    """
    r = composite_rule((np.asarray(breaks, dtype=float) / math.pi) * 2.0 - 1.0, n)
    theta = 0.5 * math.pi * (r.nodes + 1.0)
    weights = 0.5 * math.pi * r.weights * np.sin(theta)
    return theta, weights


def _integrals(Y, prof, theta, weights):
    u = prof(theta)
    y = np.asarray(Y.profile(theta), dtype=complex)
    w = 2.0 * math.pi * weights
    return complex(np.sum(w * np.conj(y) * u)), float(np.sum(w * np.abs(u) ** 2)), float(np.sum(w * np.abs(y) ** 2))


def run_compare(N, j, k, grid_size=GRID_DEFAULT, extension="langer", u0_mode="numeric"):
    """Compare U_{N,j,k} with the exact harmonic Y_{N,j,k} carrying the same Fourier index."""
    qn = QuantumNumbers(N, j, k)
    ws = wkb_section(qn, u0_mode)
    Y = harmonic_section(HarmonicLabel(N, j, k))
    prof = lambda th: ws.uniform_profile(th, extension)  # noqa: E731
    breaks = _panels(ws)
    n_panels = len(breaks) + 1
    n = max(int(math.ceil(grid_size / n_panels)), 8)
    prev = None
    while True:
        theta, weights = theta_rule(breaks, n)
        cur = _integrals(Y, prof, theta, weights)
        if prev is not None and max(abs(a - b) for a, b in zip(cur, prev)) <= AGREE_TOL:
            break
        if 2 * n > GRID_MAX:
            raise ResolutionError(f"overlap integrals did not settle to {AGREE_TOL} by {n} nodes per panel")
        prev = cur
        n *= 2
    ip, nu2, ny2 = cur
    norm_u = math.sqrt(nu2)
    overlap = abs(ip) / (math.sqrt(ny2) * norm_u)

    keep = np.sin(theta) >= RESIDUAL_POLE_COLLAR
    section = ws.section("uniform", extension)
    lap = apply_laplacian(MonopoleBundle(N), section, theta[keep], breakpoints=ws.breakpoints(extension))
    u = prof(theta[keep])
    w = 2.0 * math.pi * weights[keep]
    E_hat = qn.E_hat
    res = math.sqrt(float(np.sum(w * np.abs(lap.values - float(E_hat) * u) ** 2)))
    rel_res = res / (N ** 2 * norm_u)

    E_exact = eigenvalue(N, j)
    return ComparisonReport(
        label=(N, j, k), E_exact=E_exact, E_hat=E_hat, gap=E_hat - E_exact,
        overlap_defect=float(min(max(1.0 - overlap, 0.0), 1.0)),
        rel_residual_wkb=rel_res, norm_wkb=norm_u, degenerate=ws.degenerate,
        u0_used=ws.u0, u0_paper_ratio=ws.u0 / u0_paper(ws.torus),
        overlap=overlap, grid_nodes=len(theta), extension=extension, torus=ws.torus.as_dict())


def resolve_k(N, k_rule):
    """k from a rule: 'half' (k = N/2, P = 0), an int, or a callable of N."""
    if callable(k_rule):
        return int(k_rule(N))
    if k_rule == "half":
        if N % 2:
            raise DomainError(f"k = N/2 needs even N, got {N}")
        return N // 2
    return int(k_rule)


def _sweep_member(args):
    N, j, k_rule, grid_size, extension = args
    try:
        k = resolve_k(N, k_rule)
        return {"N": N, "skipped": False, "report": run_compare(N, j, k, grid_size, extension)}
    except MonoWkbError as exc:
        return {"N": N, "skipped": True, "reason": f"{type(exc).__name__}: {exc}"}


def _ratios(values):
    out = [None]
    for a, b in zip(values[:-1], values[1:]):
        out.append(None if a is None or b is None or a == 0 else b / a)
    return out


def convergence_sweep(j, k_rule, N_list, grid_size=GRID_DEFAULT, extension="langer", workers=1):
    """Reports along a family; rows ordered by N with per-doubling ratios."""
    tasks = [(int(N), int(j), k_rule, grid_size, extension) for N in sorted(N_list)]
    if workers > 1 and not callable(k_rule):
        with ProcessPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(_sweep_member, tasks))
    else:
        members = [_sweep_member(t) for t in tasks]
    rows = []
    for m in members:
        if m["skipped"]:
            rows.append({"N": m["N"], "skipped": True, "reason": m["reason"]})
            continue
        r = m["report"]
        rows.append({"N": m["N"], "skipped": False, "k": r.label[2], "overlap_defect": r.overlap_defect,
                     "norm_err": abs(r.norm_wkb - 1.0), "rel_residual_wkb": r.rel_residual_wkb,
                     "norm_wkb": r.norm_wkb, "u0_used": r.u0_used, "u0_paper_ratio": r.u0_paper_ratio,
                     "degenerate": r.degenerate})
    for key in ("overlap_defect", "norm_err", "rel_residual_wkb"):
        vals = [None if r["skipped"] else r[key] for r in rows]
        for r, q in zip(rows, _ratios(vals)):
            r[key + "_ratio"] = q
    return rows


def u0_exponent_report(rows):
    """Which exponent of (E + 1/4) in u0 gives ||U|| -> 1 along a sweep.

    The norm is linear in u0, so the paper-exponent norm is norm_wkb / u0_paper_ratio.
    """
    good = [r for r in rows if not r["skipped"]]
    if not good:
        raise DomainError("no usable sweep rows")
    plus = [r["norm_wkb"] for r in good]
    minus = [r["norm_wkb"] / r["u0_paper_ratio"] for r in good]
    err_plus = abs(plus[-1] - 1.0)
    err_minus = abs(minus[-1] - 1.0)
    return {"N": [r["N"] for r in good], "norm_exponent_plus_quarter": plus,
            "norm_exponent_minus_quarter": minus,
            "winner": "+1/4" if err_plus <= err_minus else "-1/4",
            "winning_norm_err_at_largest_N": min(err_plus, err_minus)}


def convergence_check(rows, key, max_ratio=0.7):
    ratios = [r[key + "_ratio"] for r in rows if not r["skipped"] and r.get(key + "_ratio") is not None]
    return bool(ratios) and all(q <= max_ratio for q in ratios)


def uniform_gap(N, j, k, delta=GAP_DELTA, n=2001, extension="langer"):
    """sup |uniform - oscillatory| / max |uniform| on [theta_min + delta, theta_max - delta].

    ``delta`` must not shrink with N: a collar that scales like the Airy
    length (``delta=None`` picks the fold collar) fixes the Airy coordinate of
    the window edge and the normalized gap then stays constant.
    """
    ws = wkb_section(QuantumNumbers(N, j, k))
    t = ws.torus
    if ws.degenerate:
        raise DomainError("uniform gap needs a torus with two folds")
    lo, hi = oscillatory_domain(N, t) if delta is None else (t.theta_min + delta, t.theta_max - delta)
    theta = np.linspace(lo, hi, n)[1:-1]
    uni = ws.uniform_profile(theta, extension)
    osc = ws.oscillatory_profile(theta, check=False)
    full = ws.uniform_profile(np.linspace(t.theta_min, t.theta_max, n), extension)
    return float(np.max(np.abs(uni - osc)) / np.max(np.abs(full)))


def evanescent_ratio(N, j, k, offset=0.2, extension="linear"):
    """|U(theta_min - offset)| / max interior |U|."""
    ws = wkb_section(QuantumNumbers(N, j, k))
    t = ws.torus
    th = t.theta_min - offset
    if th <= 0.0:
        raise DomainError("offset reaches the pole")
    inside = np.abs(ws.uniform_profile(np.linspace(t.theta_min, t.theta_max, 2001), extension))
    return float(abs(ws.uniform_profile(th, extension)) / np.max(inside))


def dumps(obj):
    """Deterministic JSON (sorted keys, Fractions as strings)."""
    def default(o):
        if isinstance(o, Fraction):
            return frac_str(o)
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, ComparisonReport):
            return o.to_dict()
        if isinstance(o, cl.TorusParams):
            return o.as_dict()
        raise TypeError(f"not JSON serializable: {type(o).__name__}")
    return json.dumps(obj, sort_keys=True, indent=2, default=default)
