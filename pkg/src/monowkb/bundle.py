"""Two-chart model of the monopole line bundle L^N over the 2-sphere.

Chart U1 covers the north pole (theta < pi), chart U2 the south pole
(theta > 0).  Fiber coordinates are related by the clutching function
exp(-i N phi), so a section written as profile(theta) * exp(i m phi) on U1
reads profile(theta) * exp(i (m - N) phi) on U2.
"""
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DomainError, PoleProximityError

CHARTS = ("u1", "u2")
POLE_EPS = 1e-3
_SIN_FLOOR = 1e-8


def _chart(chart):
    c = str(chart).lower()
    if c not in CHARTS:
        raise DomainError(f"unknown chart {chart!r}; expected one of {CHARTS}")
    return c


@dataclass(frozen=True)
class MonopoleBundle:
    """L^N with field strength B = N/2."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N:
            raise DomainError(f"Chern number must be an integer, got {self.N!r}")

    @property
    def B(self):
        return Fraction(int(self.N), 2)

    def clutching(self, phi):
        """Transition function g12 = exp(-i N phi) on U1 & U2."""
        return np.exp(-1j * self.N * np.asarray(phi))


@dataclass(frozen=True)
class Section:
    """profile(theta) * exp(i m1 phi) on U1; the U2 index is m1 - N."""

    N: int
    m1: int
    profile: Callable = field(compare=False)
    name: str = ""

    def __post_init__(self):
        if int(self.m1) != self.m1 or int(self.N) != self.N:
            raise DomainError("Fourier index and Chern number must be integers")

    @property
    def bundle(self):
        return MonopoleBundle(self.N)

    @property
    def m2(self):
        return self.m1 - self.N

    def index(self, chart):
        return self.m1 if _chart(chart) == "u1" else self.m2

    def __call__(self, theta, phi=0.0, chart="u1"):
        m = self.index(chart)
        return np.asarray(self.profile(np.asarray(theta, dtype=float))) * np.exp(1j * m * np.asarray(phi))

    def sample(self, theta, chart="u1"):
        theta = np.asarray(theta, dtype=float)
        values = np.asarray(self.profile(theta), dtype=complex)
        return SampledSection(N=self.N, m=self.index(chart), chart=_chart(chart), theta=theta, values=values)

    def scaled(self, factor, name=None):
        prof = self.profile
        return Section(self.N, self.m1, lambda t: factor * prof(t), name or self.name)


@dataclass(frozen=True)
class SampledSection:
    """Section profile sampled on a theta grid, in a fixed chart."""

    N: int
    m: int
    chart: str
    theta: np.ndarray
    values: np.ndarray

    def to_csv(self, fh=None):
        buf = fh if fh is not None else io.StringIO()
        write_sections_csv(buf, [self])
        if fh is None:
            return buf.getvalue()
        return None


CSV_HEADER = ("theta", "re", "im", "chart", "m", "N")


def _g17(x):
    return format(float(x), ".17g")


def write_sections_csv(fh, sections):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in sections:
        vals = np.asarray(s.values, dtype=complex)
        for t, v in zip(np.asarray(s.theta), vals):
            writer.writerow((_g17(t), _g17(v.real), _g17(v.imag), s.chart, int(s.m), int(s.N)))


def read_sections_csv(fh):
    """Inverse of write_sections_csv; groups rows by (chart, m, N)."""
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise DomainError(f"unexpected CSV header {reader.fieldnames}")
    groups = {}
    for row in reader:
        key = (row["chart"], int(row["m"]), int(row["N"]))
        groups.setdefault(key, []).append((float(row["theta"]), complex(float(row["re"]), float(row["im"]))))
    out = []
    for (chart, m, N), rows in groups.items():
        th, vals = zip(*rows)
        out.append(SampledSection(N=N, m=m, chart=chart, theta=np.array(th), values=np.array(vals)))
    return out


def vector_potential(chart, B, theta):
    """Coefficient of dphi in the chart magnetic potential."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta <= 0.0) | (theta >= math.pi)):
        raise DomainError("vector_potential: theta must lie in (0, pi)")
    B = float(B)
    if _chart(chart) == "u1":
        return B * (1.0 - np.cos(theta))
    return -B * (1.0 + np.cos(theta))


def _fd_steps(theta, h_max=1e-3, breakpoints=()):
    theta = np.asarray(theta, dtype=float)
    if theta.size > 1:
        spacing = float(np.min(np.diff(np.sort(theta))))
        spacing = spacing if spacing > 0 else h_max
    else:
        spacing = h_max
    h = np.full(theta.shape, min(spacing, h_max))
    # the stencil reaches 2h; keep it inside (0, pi) and off kinks
    h = np.minimum(h, 0.25 * theta)
    h = np.minimum(h, 0.25 * (math.pi - theta))
    for b in breakpoints:
        h = np.minimum(h, 0.25 * np.abs(theta - b))
    return h


def _derivs(f, theta, h):
    def d1(step):
        return (-f(theta + 2 * step) + 8 * f(theta + step) - 8 * f(theta - step) + f(theta - 2 * step)) / (12 * step)

    def d2(step):
        return (-f(theta + 2 * step) + 16 * f(theta + step) - 30 * f(theta)
                + 16 * f(theta - step) - f(theta - 2 * step)) / (12 * step ** 2)

    # one Richardson step on the 4th-order stencils
    fp = (16 * d1(h / 2) - d1(h)) / 15
    fpp = (16 * d2(h / 2) - d2(h)) / 15
    return fp, fpp


def apply_laplacian(bundle, section, theta, chart="u1", h_max=1e-3, breakpoints=()):
    """Apply the magnetic Laplacian to a single-mode section on a theta grid.

    For profile f and Fourier index m in the given chart returns the profile of
    -(1/sin) d/dtheta (sin df/dtheta) + ((m - A(theta))**2 / sin**2) f, where A
    is the chart potential.  Derivatives use 4th-order central differences
    with one Richardson step; ``breakpoints`` are theta values where the
    profile is only piecewise smooth and which stencils must not straddle.
    """
    if section.N != bundle.N:
        raise DomainError(f"section lives on L^{section.N}, not L^{bundle.N}")
    chart = _chart(chart)
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)
    if np.any(s < _SIN_FLOOR) or np.any((theta <= 0) | (theta >= math.pi)):
        raise PoleProximityError("apply_laplacian: grid point too close to a pole")
    m = section.index(chart)
    h = _fd_steps(theta, h_max, breakpoints)
    f = section.profile
    f0 = np.asarray(f(theta))
    fp, fpp = _derivs(f, theta, h)
    a = vector_potential(chart, bundle.B, theta)
    out = -(fpp + np.cos(theta) / s * fp) + (m - a) ** 2 / s ** 2 * f0
    return SampledSection(N=section.N, m=m, chart=chart, theta=theta, values=np.asarray(out, dtype=complex))


def inner_product(s1, s2, rule):
    """Hermitian product <s1|s2> over the sphere.

    The phi integral is exact (2 pi or 0); the x = cos(theta) integral uses
    ``rule``, whose nodes must lie in [-1, 1].
    """
    if s1.N != s2.N:
        raise DomainError(f"bundle mismatch: L^{s1.N} vs L^{s2.N}")
    if s1.m1 != s2.m1:
        return 0j
    x = np.asarray(rule.nodes)
    theta = np.arccos(x)
    v1 = np.asarray(s1.profile(theta), dtype=complex)
    v2 = np.asarray(s2.profile(theta), dtype=complex)
    return complex(2.0 * math.pi * np.sum(rule.weights * np.conj(v1) * v2))


def section_norm(s, rule):
    return math.sqrt(inner_product(s, s, rule).real)


def conjugate_section(s):
    """Complex conjugate section, living on the conjugate bundle L^{-N}."""
    prof = s.profile
    return Section(N=-s.N, m1=-s.m1, profile=lambda t: np.conj(prof(t)), name=f"conj({s.name})" if s.name else "")
