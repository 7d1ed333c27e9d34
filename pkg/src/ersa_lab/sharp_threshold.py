"""
ersa_lab.sharp_threshold
========================

Exact discrete-Fourier toolkit on {0, ..., k}^n and {0, 1}^m.

Purpose
-------
- Probability vectors, the beta staircase encoding and binary digit flips.
- Digit influences w_ell and their sum, with a rigorous tail bound.
- Influences of boolean tables under product measures, domination, and the
  influence lower bound and sharp-threshold hypothesis checkers.
- Walsh-Fourier transform, convolution and the noise operator on {0, 1}^m.

Design decisions
----------------
- Nothing here samples. Digit influences are computed with exact rational interval
  arithmetic, influences by exhaustive enumeration, spectra by dense transforms.
- A subset S of [m] is a bitmask; coordinate ell is bit ell - 1. The transform uses
  hat h(S) = 2^-m sum_A h(A) (-1)^|S & A|, so h = sum_S hat h(S) u_S.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .base import DomainError, SizeError

DEFAULT_TABLE_CAP = 2 ** 20
DEFAULT_WHT_MAX_M = 20


# ---------- probability vectors ----------

@dataclass(frozen=True)
class ProbVector:
    entries: Tuple[float, ...]

    def __init__(self, entries: Sequence[float]):
        values = tuple(float(e) for e in np.asarray(entries, dtype=float).ravel())
        if len(values) < 2:
            raise DomainError(f"a probability vector needs at least 2 entries, got {len(values)}")
        if any(e < 0 or not math.isfinite(e) for e in values):
            raise DomainError(f"probability vector entries must be finite and >= 0: {values}")
        if abs(math.fsum(values) - 1.0) > 1e-12:
            raise DomainError(f"probability vector must sum to 1 within 1e-12, got {math.fsum(values)!r}")
        object.__setattr__(self, "entries", values)

    @property
    def k(self) -> int:
        return len(self.entries) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def cumulative(self) -> np.ndarray:
        """(0, p0, p0 + p1, ..., 1)."""
        return np.concatenate([[0.0], np.cumsum(self.array)])

    def shifted(self, h: float) -> np.ndarray:
        """p + (-h, 0, ..., 0, h) as a raw array (may leave the simplex)."""
        out = self.array.copy()
        out[0] -= h
        out[-1] += h
        return out


def _weights(pv: Union[ProbVector, np.ndarray]) -> np.ndarray:
    return pv.array if isinstance(pv, ProbVector) else np.asarray(pv, dtype=float)


def beta_p(pv: ProbVector, x: float) -> int:
    """max{j : p_0 + ... + p_(j-1) <= x}."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"beta_p needs x in [0, 1), got {x}")
    cum = pv.cumulative()[: pv.k + 1]
    return int(np.searchsorted(cum, x, side="right") - 1)


def digit_flip(ell: int, x: float) -> float:
    """Invert the ell-th binary digit of x (terminating expansion)."""
    if ell < 1:
        raise DomainError(f"digit index must be >= 1, got {ell}")
    step = 2.0 ** (-ell)
    return x - step if int(math.floor(x * 2 ** ell)) % 2 else x + step


def p_max_second(pv: ProbVector) -> float:
    """Second largest entry."""
    return float(sorted(pv.entries, reverse=True)[1])


def _dominated(p: np.ndarray, q: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.all(np.cumsum(p - q)[:-1] >= -tol))


def dominates(pv_p: ProbVector, pv_q: ProbVector) -> bool:
    """True when *pv_q* dominates *pv_p*: every partial sum of p - q up to k-1 is >= 0."""
    if pv_p.k != pv_q.k:
        raise DomainError(f"vectors have different lengths: {pv_p.k + 1} vs {pv_q.k + 1}")
    return _dominated(pv_p.array, pv_q.array)


# ---------- digit influences ----------

def _fraction_cumulative(pv: ProbVector) -> List[Fraction]:
    cum = [Fraction(0)]
    for e in pv.entries:
        cum.append(cum[-1] + Fraction(e))
    return cum


def w_ell(pv: ProbVector, f: Sequence[int], ell: int) -> float:
    """
    P[f(beta(U)) != f(beta(h_ell(U)))], exactly.

    A point u with digit ell equal to 0 can only disagree with its partner u + 2^-ell
    when a cumulative boundary lies in (u, u + 2^-ell]. Those stretches are cut at every
    boundary, every boundary minus 2^-ell and every dyadic cell edge, so both sides are
    constant on each piece. Points with digit 1 mirror the digit-0 ones.
    """
    if len(f) != pv.k + 1:
        raise DomainError(f"f needs {pv.k + 1} values, got {len(f)}")
    if ell < 1:
        raise DomainError(f"digit index must be >= 1, got {ell}")
    cum = _fraction_cumulative(pv)
    inner = sorted(set(cum[1: pv.k + 1]))
    s = Fraction(1, 2 ** ell)

    def g(x: Fraction) -> int:
        return int(f[max(i for i in range(pv.k + 1) if cum[i] <= x)])

    stretches = [(max(c - s, Fraction(0)), c) for c in inner if c > 0]
    cuts = set()
    for lo, hi in stretches:
        cuts.update((lo, hi))
        edge = (lo // s + 1) * s
        while edge < hi:
            cuts.add(edge)
            edge += s
    cuts.update(c - s for c in inner if c - s > 0)
    points = sorted(cuts)

    total = Fraction(0)
    for a, b in zip(points, points[1:]):
        mid = (a + b) / 2
        if not any(lo <= mid < hi for lo, hi in stretches):
            continue
        if int(mid / s) % 2 == 0 and g(mid) != g(mid + s):
            total += b - a
    return float(2 * total)


def _tail_sum(q_star: float, l_cap: int) -> float:
    """sum over ell > l_cap of min(q_star, 2^-ell)."""
    if q_star <= 0:
        return 0.0
    first = max(l_cap + 1, int(math.ceil(math.log2(1.0 / q_star))))
    return q_star * (first - l_cap - 1) + 2.0 ** (1 - first)


def w_total(pv: ProbVector, f: Sequence[int], l_cap: int = 64) -> Tuple[float, float]:
    """(sum of w_ell for ell <= l_cap, bound on the remaining terms)."""
    value = math.fsum(w_ell(pv, f, ell) for ell in range(1, l_cap + 1))
    cum = pv.cumulative()[1: pv.k + 1]
    tail = 2.0 * math.fsum(_tail_sum(min(q, 1.0 - q), l_cap) for q in cum)
    return value, tail


def key_bound(pv: ProbVector) -> float:
    """3 k^2 p_max log(4 / p_max) with p_max the second largest entry."""
    pm = p_max_second(pv)
    return 3.0 * pv.k ** 2 * pm * math.log(4.0 / pm) if pm > 0 else 0.0


# ---------- boolean tables ----------

@dataclass(frozen=True)
class BooleanTable:
    """Dense truth table of f: {0, ..., k}^n -> {0, 1}; axis j is coordinate j + 1."""
    k: int
    n: int
    table: np.ndarray

    def __post_init__(self) -> None:
        shape = (self.k + 1,) * self.n
        if self.k < 1 or self.n < 1:
            raise DomainError(f"need k >= 1 and n >= 1, got k={self.k}, n={self.n}")
        if tuple(self.table.shape) != shape:
            raise DomainError(f"table shape {self.table.shape} does not match {shape}")

    @classmethod
    def build(cls, k: int, n: int, bits: Sequence[int], *, cap: int = DEFAULT_TABLE_CAP) -> "BooleanTable":
        """From values in lexicographic input order (first coordinate most significant)."""
        size = (k + 1) ** n
        if size > cap:
            raise SizeError(f"table size (k+1)^n = {size} exceeds cap {cap}")
        bits = np.asarray(bits).ravel()
        if bits.size != size:
            raise DomainError(f"expected {size} values for k={k}, n={n}, got {bits.size}")
        if not np.all((bits == 0) | (bits == 1)):
            raise DomainError("table values must be 0 or 1")
        return cls(k, n, bits.astype(bool).reshape((k + 1,) * n))

    @classmethod
    def from_function(cls, k: int, n: int, fn, *, cap: int = DEFAULT_TABLE_CAP) -> "BooleanTable":
        points = itertools.product(range(k + 1), repeat=n)
        return cls.build(k, n, [int(bool(fn(x))) for x in points], cap=cap)

    @property
    def size(self) -> int:
        return int(self.table.size)


def load_table(path: Union[str, Path], *, cap: int = DEFAULT_TABLE_CAP) -> BooleanTable:
    """Read a truth-table file: header "k n", then one 0/1 value per line."""
    lines = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise DomainError(f"{path}: empty truth-table file")
    try:
        k, n = (int(v) for v in lines[0].split())
        bits = [int(v) for v in lines[1:]]
    except ValueError as e:
        raise DomainError(f"{path}: malformed truth-table file ({e})") from e
    return BooleanTable.build(k, n, bits, cap=cap)


def _product_weights(pv: Union[ProbVector, np.ndarray], n: int) -> np.ndarray:
    w = _weights(pv)
    if n == 0:
        return np.ones(())
    return functools.reduce(np.multiply.outer, [w] * n)


def probability(f: BooleanTable, pv: Union[ProbVector, np.ndarray]) -> float:
    """P^n_p(f = 1)."""
    return float(np.sum(_product_weights(pv, f.n) * f.table))


def is_increasing(f: BooleanTable) -> bool:
    t = f.table.astype(np.int8)
    return all(np.all(np.diff(t, axis=j) >= 0) for j in range(f.n))


def all_tables(k: int, n: int, *, cap: int = 4096) -> Iterator[BooleanTable]:
    size = (k + 1) ** n
    if 2 ** size > cap:
        raise SizeError(f"{2 ** size} tables for k={k}, n={n} exceeds enumeration cap {cap}")
    for bits in itertools.product((0, 1), repeat=size):
        yield BooleanTable.build(k, n, bits)


def all_increasing_tables(k: int, n: int, *, cap: int = 4096) -> Iterator[BooleanTable]:
    return (f for f in all_tables(k, n, cap=cap) if is_increasing(f))


def influence(f: BooleanTable, pv: Union[ProbVector, np.ndarray], j: int) -> float:
    """
    P[coordinate j (1-based) is pivotal]. Pivotality ignores x_j itself, so only the
    other coordinates carry weight.
    """
    if not 1 <= j <= f.n:
        raise DomainError(f"coordinate {j} outside 1..{f.n}")
    axis = j - 1
    fibre_varies = f.table.any(axis=axis) & ~f.table.all(axis=axis)
    return float(np.sum(_product_weights(pv, f.n - 1) * fibre_varies))


def influences(f: BooleanTable, pv: Union[ProbVector, np.ndarray]) -> np.ndarray:
    return np.array([influence(f, pv, j) for j in range(1, f.n + 1)])


def total_influence(f: BooleanTable, pv: Union[ProbVector, np.ndarray]) -> float:
    return float(influences(f, pv).sum())


# ---------- Walsh-Fourier ----------

@dataclass(frozen=True)
class SpectralVector:
    m: int
    coefficients: np.ndarray

    def level(self) -> np.ndarray:
        """|S| for every coefficient index."""
        return subset_sizes(self.m)

    def norm2_squared(self) -> float:
        return float(np.sum(self.coefficients ** 2))


def subset_sizes(m: int) -> np.ndarray:
    idx = np.arange(2 ** m)
    sizes = np.zeros(2 ** m, dtype=int)
    for b in range(m):
        sizes += (idx >> b) & 1
    return sizes


def _check_table(h: np.ndarray, max_m: int) -> int:
    size = h.size
    m = size.bit_length() - 1
    if size < 1 or 2 ** m != size:
        raise DomainError(f"function table length must be a power of 2, got {size}")
    if m > max_m:
        raise SizeError(f"m = {m} exceeds transform cap {max_m}")
    return m


def _butterfly(a: np.ndarray) -> np.ndarray:
    """Unnormalised Sylvester-ordered Hadamard transform."""
    n = a.size
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1)
        h *= 2
    return a.reshape(n)


def wht(h: Sequence[float], *, max_m: int = DEFAULT_WHT_MAX_M) -> SpectralVector:
    """hat h(S) = <h, u_S> under the uniform measure."""
    arr = np.asarray(h, dtype=float).ravel()
    m = _check_table(arr, max_m)
    return SpectralVector(m, _butterfly(arr) / 2 ** m)


def inverse_wht(spec: SpectralVector) -> np.ndarray:
    """h = sum_S hat h(S) u_S."""
    return _butterfly(np.asarray(spec.coefficients, dtype=float))


def convolve(g: Sequence[float], h: Sequence[float], *, max_m: int = DEFAULT_WHT_MAX_M) -> np.ndarray:
    """(h * g)(S) = 2^-m sum_A h(A) g(S xor A), through the product of transforms."""
    gs, hs = wht(g, max_m=max_m), wht(h, max_m=max_m)
    if gs.m != hs.m:
        raise DomainError(f"convolve needs equal sizes, got m={gs.m} and m={hs.m}")
    return inverse_wht(SpectralVector(gs.m, gs.coefficients * hs.coefficients))


def convolve_direct(g: Sequence[float], h: Sequence[float]) -> np.ndarray:
    """Definition-level convolution (quadratic); reference for small m."""
    g, h = np.asarray(g, dtype=float).ravel(), np.asarray(h, dtype=float).ravel()
    idx = np.arange(g.size)
    return np.array([np.mean(h * g[s ^ idx]) for s in range(g.size)])


def noise(eps: float, h: Sequence[float], *, max_m: int = DEFAULT_WHT_MAX_M) -> np.ndarray:
    """T_eps h: the coefficient of S scaled by eps^|S|."""
    spec = wht(h, max_m=max_m)
    return inverse_wht(SpectralVector(spec.m, spec.coefficients * eps ** subset_sizes(spec.m)))


def norm(h: Sequence[float], r: float) -> float:
    """||h||_r under the uniform measure."""
    arr = np.abs(np.asarray(h, dtype=float))
    return float(np.mean(arr ** r) ** (1.0 / r))


def binary_influences(h: Sequence[float]) -> np.ndarray:
    """P[h(A) != h(A xor e_ell)] for ell = 1..m."""
    arr = np.asarray(h).ravel()
    m = _check_table(arr, DEFAULT_WHT_MAX_M)
    idx = np.arange(arr.size)
    return np.array([np.mean(arr != arr[idx ^ (1 << b)]) for b in range(m)])


def tau_table(pv: ProbVector, m: int) -> np.ndarray:
    """
    Value in {0, ..., k} of every A in {0, 1}^m: A read as the binary digits
    0.d_1 d_2 ... d_m (d_ell = bit ell - 1) and pushed through beta_p.
    """
    if m < 1 or m > DEFAULT_WHT_MAX_M:
        raise SizeError(f"tau_table needs 1 <= m <= {DEFAULT_WHT_MAX_M}, got {m}")
    idx = np.arange(2 ** m)
    value = np.zeros(2 ** m, dtype=np.int64)
    for ell in range(1, m + 1):
        value += ((idx >> (ell - 1)) & 1) << (m - ell)
    cum = pv.cumulative()[: pv.k + 1]
    return np.searchsorted(cum, value / 2 ** m, side="right") - 1


@dataclass(frozen=True)
class TgwCheck:
    weighted_spectrum: float
    total_influence: float

    @property
    def discrepancy(self) -> float:
        return abs(4.0 * self.weighted_spectrum - self.total_influence)

    def holds(self, tol: float = 1e-10) -> bool:
        return self.discrepancy <= tol


def check_tgw_identity(h: Sequence[int]) -> TgwCheck:
    """Compare 4 sum_S hat h(S)^2 |S| with the total digit influence of a 0/1 table."""
    arr = np.asarray(h, dtype=float).ravel()
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("check_tgw_identity needs a 0/1 table")
    spec = wht(arr)
    weighted = float(np.sum(spec.coefficients ** 2 * spec.level()))
    return TgwCheck(weighted, float(binary_influences(arr).sum()))


@dataclass(frozen=True)
class BonamiBeckner:
    noised_l2: float
    l43: float

    @property
    def holds(self) -> bool:
        return self.noised_l2 <= self.l43 + 1e-12


def bonami_beckner_spot_check(r: Sequence[float]) -> BonamiBeckner:
    """||T_(1/sqrt 3) R||_2 against ||R||_(4/3)."""
    return BonamiBeckner(norm(noise(1.0 / math.sqrt(3.0), r), 2.0), norm(r, 4.0 / 3.0))


# ---------- lemma checkers ----------

@dataclass(frozen=True)
class LeminflReport:
    a_star: float
    hypothesis_met: bool
    total_influence: float
    bound: float
    t: float
    reason: str = ""

    @property
    def holds(self) -> bool:
        """Conclusion holds (vacuously true when the hypothesis is not met)."""
        return (not self.hypothesis_met) or self.total_influence >= self.bound - 1e-12

    @property
    def margin(self) -> float:
        return self.total_influence - self.bound


def check_leminfl(f: BooleanTable, pv: ProbVector, q: float) -> LeminflReport:
    """
    Influence lower bound: with a* = max_j I_j / (q^2 log^2(4/q)) <= 1/16,
    sum_j I_j >= t (1 - t) log(1/a*) / (24 k^2 q log(4/q)).
    """
    infl = influences(f, pv)
    total = float(infl.sum())
    t = probability(f, pv)
    if min(pv.entries) <= 0:
        return LeminflReport(math.nan, False, total, math.nan, t, "pv has a zero entry")
    if not p_max_second(pv) <= q <= 1.0:
        return LeminflReport(math.nan, False, total, math.nan, t, "q outside [p_max, 1]")
    scale = q * math.log(4.0 / q)
    a_star = float(infl.max()) / scale ** 2
    if a_star > 1.0 / 16.0:
        return LeminflReport(a_star, False, total, math.nan, t, "hypothesis not met")
    if a_star == 0.0:
        return LeminflReport(a_star, True, total, 0.0, t)
    bound = t * (1.0 - t) * math.log(1.0 / a_star) / (24.0 * pv.k ** 2 * scale)
    return LeminflReport(a_star, True, total, bound, t)


@dataclass(frozen=True)
class SharpNMReport:
    ok: bool
    reasons: Tuple[str, ...]
    q_max: float
    log_m: float
    min_log_m: float

    @property
    def min_m(self) -> float:
        """Smallest symmetry order satisfying the bound (inf when it overflows a float)."""
        return math.exp(self.min_log_m) if self.min_log_m < 700 else math.inf

    def __bool__(self) -> bool:
        return self.ok


def sharpnm_hypothesis(pv_p: ProbVector, pv_q: ProbVector, gamma: float, m: int, eta: float,
                       k: Optional[int] = None) -> SharpNMReport:
    """
    Check every hypothesis of the sharp-threshold proposition; reasons name each
    failed one (eta_range, gamma_nonpositive, p0_below_gamma, pk_above_one_minus_gamma,
    no_domination, sharp_bound).
    """
    k = pv_p.k if k is None else k
    if pv_p.k != pv_q.k or pv_p.k != k:
        raise DomainError(f"vector lengths must equal k + 1 = {k + 1}")
    reasons: List[str] = []
    if not 0.0 < eta < 0.5:
        reasons.append("eta_range")
    if gamma <= 0:
        reasons.append("gamma_nonpositive")
    p = pv_p.array
    if p[0] < gamma:
        reasons.append("p0_below_gamma")
    if p[-1] > 1.0 - gamma:
        reasons.append("pk_above_one_minus_gamma")
    if not _dominated(pv_p.shifted(gamma), pv_q.array):
        reasons.append("no_domination")

    boosted = np.concatenate([p[:-1], [p[-1] + gamma]])
    q_max = float(np.sort(boosted)[-2])
    need = 200.0 * k ** 2 * math.log(1.0 / eta) * q_max * math.log(4.0 / q_max) if 0 < eta < 1 and q_max > 0 else math.inf
    min_log_m = need / gamma if gamma > 0 else math.inf
    log_m = math.log(m) if m >= 1 else -math.inf
    if not gamma * log_m >= need:
        reasons.append("sharp_bound")
    return SharpNMReport(not reasons, tuple(reasons), q_max, log_m, min_log_m)


def discrete_mr_check(f: BooleanTable, pv: ProbVector, gamma: float, step: float = 1e-4, points: int = 11) -> float:
    """
    max over h in (0, gamma) of |g'(h) - sum_j I_(f, r(h))(j)|, with g(h) = P_(r(h))(f = 1),
    r(h) = p + (-h, 0, ..., 0, h) and g' a central difference of width *step*.
    """
    if not is_increasing(f):
        raise DomainError("discrete_mr_check needs an increasing table")
    if not 0 < gamma <= pv.entries[0]:
        raise DomainError(f"gamma must lie in (0, p0 = {pv.entries[0]}], got {gamma}")
    if not 0 < 2 * step < gamma:
        raise DomainError(f"step {step} too large for gamma {gamma}")
    worst = 0.0
    for h in np.linspace(step, gamma - step, points):
        deriv = (probability(f, pv.shifted(h + step)) - probability(f, pv.shifted(h - step))) / (2 * step)
        worst = max(worst, abs(deriv - total_influence(f, pv.shifted(h))))
    return worst
