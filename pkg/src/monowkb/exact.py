"""Exact monopole harmonics Y_{N,j,k} (Wu-Yang) and the N=1 Tamm sections."""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bundle import Section, conjugate_section, inner_product
from .errors import DomainError
from .specfun import check_label, gauss_legendre, jacobi_terms, log_factorial


@dataclass(frozen=True)
class HarmonicLabel:
    N: int
    j: int
    k: int

    def __post_init__(self):
        check_label(self.N, self.j, self.k)


def eigenvalue(N, j):
    """E_{N,j} = j(j+1) + (N/2)(2j+1), exact."""
    if N < 1 or j < 0:
        raise DomainError(f"eigenvalue: need N>=1, j>=0 (got N={N}, j={j})")
    return Fraction(j * (j + 1)) + Fraction(N, 2) * (2 * j + 1)


def multiplicity(N, j):
    if N < 1 or j < 0:
        raise DomainError(f"multiplicity: need N>=1, j>=0 (got N={N}, j={j})")
    return N + 2 * j + 1


def labels(N, j):
    return [HarmonicLabel(N, j, k) for k in range(-j, N + j + 1)]


def printed_log_constant(N, j, k):
    """log of the printed prefactor [(N+2j+1)/(4 pi) (N+j+k)!(j+k)!/((N+j)! j!)]^(1/2)."""
    lf = log_factorial
    return 0.5 * (math.log((N + 2 * j + 1) / (4 * math.pi)) + lf(N + j + k) + lf(j + k) - lf(N + j) - lf(j))


def log_constant(N, j, k):
    """log of [(N+2j+1)/(4 pi) (N+j-k)!(j+k)!/((N+j)! j!)]^(1/2).

    Differs from the printed prefactor only in (N+j-k)! for (N+j+k)!; this is
    the value that reproduces the explicit N=1 profiles and unit norms.
    """
    lf = log_factorial
    return 0.5 * (math.log((N + 2 * j + 1) / (4 * math.pi)) + lf(N + j - k) + lf(j + k) - lf(N + j) - lf(j))


def _reduced_profile(N, j, k, x):
    # ((1-x)/2)^(-k/2) cancels against the smallest (1-x)/2 power in the sum,
    # leaving u^{|k|/2} v^{|N-k|/2} times a polynomial.
    _, log_abs, sign, p, q = jacobi_terms(N, j, k)
    p_shift = max(k, 0)
    q_shift = max(k - N, 0)
    u = (1.0 - x) / 2.0
    v = (1.0 + x) / 2.0
    poly = np.zeros_like(x)
    for la, sg, pi, qi in zip(log_abs, sign, p, q):
        poly = poly + sg * math.exp(la) * u ** int(pi - p_shift) * v ** int(qi - q_shift)
    return np.sqrt(u) ** abs(k) * np.sqrt(v) ** abs(N - k) * poly


def theta_profile(label, x, constant="corrected"):
    """Theta~_{N,j,k}(x), x = cos(theta).

    ``constant='printed'`` uses the printed factorial ratio instead; it agrees
    with the corrected one only for k = 0.
    """
    N, j, k = label.N, label.j, label.k
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0):
        raise DomainError("theta_profile: |x| must be <= 1")
    if constant not in ("corrected", "printed"):
        raise DomainError(f"constant must be 'corrected' or 'printed', got {constant!r}")
    log_c = log_constant(N, j, k) if constant == "corrected" else printed_log_constant(N, j, k)
    val = math.exp(log_c) * _reduced_profile(N, j, k, xa)
    if xa.ndim == 0:
        return float(val)
    return val


def norm_rule(N, j_max, k_max):
    # Theta~^2 and cross products are polynomials in x of degree <= N + 2(j + |k|)
    return gauss_legendre(N + 2 * (j_max + abs(k_max)) + 8)


@lru_cache(maxsize=1024)
def profile_norm(N, j, k, constant="corrected"):
    """L2 norm of Y_{N,j,k} built with the given constant (1 if that constant is right)."""
    label = HarmonicLabel(N, j, k)
    rule = norm_rule(N, j, k)
    vals = theta_profile(label, rule.nodes, constant)
    return math.sqrt(2.0 * math.pi * float(np.sum(rule.weights * vals ** 2)))


def printed_norm(N, j, k):
    return profile_norm(N, j, k, "printed")


def harmonic_section(label, normalize=True):
    """Y_{N,j,k} as a Section (index k on U1, k - N on U2).

    With ``normalize`` the profile is rescaled to unit norm numerically; the
    factor applied is 1 / profile_norm(N, j, k) (equal to 1 within rounding).
    """
    N, j, k = label.N, label.j, label.k
    scale = 1.0 / profile_norm(N, j, k) if normalize else 1.0
    log_c = log_constant(N, j, k)

    def profile(theta):
        return scale * math.exp(log_c) * _reduced_profile(N, j, k, np.cos(np.asarray(theta, dtype=float)))

    return Section(N=N, m1=k, profile=profile, name=f"Y({N},{j},{k})")


def normalization_table(N_max=6, j_max=3, tol=1e-8):
    """Printed-constant validation: one row per label with the norms both constants produce.

    ``ok`` refers to the printed constant; ``corrected_ok`` to log_constant.
    """
    rows = []
    for N in range(1, N_max + 1):
        for j in range(0, j_max + 1):
            for k in range(-j, N + j + 1):
                nrm = printed_norm(N, j, k)
                cor = profile_norm(N, j, k)
                rows.append({"N": N, "j": j, "k": k, "printed_norm": nrm, "ok": abs(nrm - 1.0) <= tol,
                             "corrected_norm": cor, "corrected_ok": abs(cor - 1.0) <= tol})
    return rows


def gram_matrix(N, j_max, rule=None):
    """Gram matrix of the renormalized {Y_{N,j,k}}, j <= j_max, ordered by (j, k)."""
    labs = [lab for j in range(j_max + 1) for lab in labels(N, j)]
    if rule is None:
        rule = norm_rule(N, j_max, N + j_max)
    secs = [harmonic_section(lab) for lab in labs]
    n = len(secs)
    G = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(a, n):
            G[a, b] = inner_product(secs[a], secs[b], rule)
            G[b, a] = np.conj(G[a, b])
    return labs, G


def lz_apply(label):
    """L_z eigenvalue k - N/2, checked against both chart forms."""
    N, k = label.N, label.k
    u1 = Fraction(k) - Fraction(N, 2)          # (-i d/dphi - N/2) on exp(i k phi)
    u2 = Fraction(k - N) + Fraction(N, 2)      # (-i d/dphi + N/2) on exp(i (k-N) phi)
    if u1 != u2:
        raise AssertionError("chart forms of L_z disagree")
    return u1


def tamm_sections():
    """(S_a, S_b) = cos(theta/2), sin(theta/2) exp(-i phi): sections of L^{-1}.

    Obtained by conjugating Y_{1,0,0} and Y_{1,0,1} and undoing their
    1/sqrt(2 pi) factor (and the minus sign carried by Y_{1,0,1}).
    """
    root = math.sqrt(2.0 * math.pi)
    y0 = harmonic_section(HarmonicLabel(1, 0, 0))
    y1 = harmonic_section(HarmonicLabel(1, 0, 1))
    s_a = conjugate_section(y0).scaled(root, name="S_a")
    s_b = conjugate_section(y1).scaled(-root, name="S_b")
    return s_a, s_b
