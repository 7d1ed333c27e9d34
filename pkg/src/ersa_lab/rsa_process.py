"""
ersa_lab.rsa_process
====================

Enhanced RSA on a finite window: arrival fields, jamming resolution, the affects
relation, generations, the E_dense buffer event and monotone couplings.

Model
-----
- Even octagons receive their first arrival at T = E / lambda (E standard exponential),
  odd octagons at T = E. Diamond x' is black iff its uniform variate is below p.
- The even-site delay delta is carried in its equivalent zero-time form: an odd site has
  effective time 0 when U <= 1 - exp(-delta), and T otherwise.
- Jamming: in increasing time order, an empty site becomes occupied and its |x-y|=1
  neighbours become blocked. Octagon x is black iff (x even and occupied) or
  (x odd and blocked).

Design decisions
----------------
- Jamming is resolved in vectorised rounds instead of a priority queue: in each round
  every undetermined site whose time beats all undetermined neighbours is occupied, and
  its undetermined neighbours are blocked. This is the same outcome as time-ordered
  processing and accepts leading batch axes.
- Even times are always E / lambda for one shared E, so fields can be re-evaluated at
  other lambda values (common random numbers); the same holds for p via the diamond
  uniforms and for delta via U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Tuple

import numpy as np

from .base import DomainError, ErsaObjectBase, ResampleError
from .lattice import Rect, Site, Window, neighbour_any, neighbour_min, shift
from .stats import Estimate, estimate_from_hits


class OctagonState(str, Enum):
    OCCUPIED = "occupied"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class Params:
    lam: float
    p: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive and finite, got {self.lam}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise DomainError(f"delta must be nonnegative and finite, got {self.delta}")

    @property
    def zero_prob(self) -> float:
        """Probability that an odd site has effective time 0."""
        return -math.expm1(-self.delta)

    def dual(self) -> "Params":
        """(lambda, p) -> (1/lambda, 1 - p)."""
        return Params(1.0 / self.lam, 1.0 - self.p, self.delta)

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)


# ---------- arrival fields ----------

@dataclass(frozen=True)
class ArrivalField:
    """
    Raw variates over a window.

    exp: standard exponentials per octagon (even times are exp / lambda).
    u: uniforms per octagon (only odd entries are used, for the zero-time indicator).
    diamond_u: uniforms per diamond (black iff < p).
    overrides: explicit effective times for individual octagon indices.
    """
    window: Window
    params: Params
    exp: np.ndarray
    u: np.ndarray
    diamond_u: np.ndarray
    overrides: Tuple[Tuple[Tuple[int, int], float], ...] = field(default=())

    def times(self, params: Optional[Params] = None) -> np.ndarray:
        """Effective arrival times t under *params* (defaults to the field's own)."""
        params = params or self.params
        even = self.window.even_mask()
        t = np.where(even, self.exp / params.lam, self.exp)
        zero = (~even) & (self.u <= params.zero_prob)
        t = np.where(zero, 0.0, t)
        for (i, j), value in self.overrides:
            t[i, j] = value
        return t

    def raw_time(self, site: Site, params: Optional[Params] = None) -> float:
        """T_x ignoring the zero-time indicator and overrides."""
        params = params or self.params
        i, j = self.window.index(site)
        return float(self.exp[i, j] / params.lam) if site.is_even else float(self.exp[i, j])

    def diamond_black(self, p: Optional[float] = None) -> np.ndarray:
        p = self.params.p if p is None else p
        return self.diamond_u < p

    def with_times(self, times: Mapping[Site, float]) -> "ArrivalField":
        """Copy of this field with the effective times of the given octagons pinned."""
        extra = tuple((self.window.index(s), float(t)) for s, t in times.items())
        return replace(self, overrides=self.overrides + extra)

    def with_params(self, params: Params) -> "ArrivalField":
        return replace(self, params=params)

    def restrict(self, window: Window) -> "ArrivalField":
        """The same variates seen through a smaller plane *window* (free boundary)."""
        if window.periodic:
            raise DomainError("restrict() targets a plane window")
        if not self.window.fits(window.rect):
            raise DomainError(f"window {window.rect} does not fit in {self.window.rect}")
        ii, jj = self.window.rect_index(window.rect)
        dii, djj = ii[:-1], jj[:-1]
        overrides = []
        for (i, j), value in self.overrides:
            hit_i, hit_j = np.nonzero(ii == i)[0], np.nonzero(jj == j)[0]
            if hit_i.size and hit_j.size:
                overrides.append(((int(hit_i[0]), int(hit_j[0])), value))
        return ArrivalField(
            window=window,
            params=self.params,
            exp=self.exp[np.ix_(ii, jj)],
            u=self.u[np.ix_(ii, jj)],
            diamond_u=self.diamond_u[np.ix_(dii, djj)],
            overrides=tuple(overrides),
        )


def draw_arrivals(w: Window, params: Params, rng: np.random.Generator) -> ArrivalField:
    """Draw a field from an existing generator (trial functions use this)."""
    return ArrivalField(
        window=w,
        params=params,
        exp=rng.standard_exponential(w.shape),
        u=rng.random(w.shape),
        diamond_u=rng.random(w.diamond_shape),
    )


def batch_occupied(w: Window, params: Params, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Occupied masks of shape (trials, W, H) from one vectorised draw (tiny windows)."""
    f = ArrivalField(
        window=w,
        params=params,
        exp=rng.standard_exponential((trials,) + w.shape),
        u=rng.random((trials,) + w.shape),
        diamond_u=rng.random((trials,) + w.diamond_shape),
    )
    return jam(f.times(), w.periodic)


def sample_arrivals(w: Window, params: Params, seed: int, stream: int = 0) -> ArrivalField:
    """
    Deterministic field for (seed, stream).

    The same (seed, stream, window) always gives the same field; variates are not
    aligned site-by-site across different windows (use restrict() for that).
    """
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))
    return draw_arrivals(w, params, rng)


# ---------- jamming ----------

def check_ties(t: np.ndarray, periodic: bool) -> None:
    """Raise ResampleError if two adjacent octagons share a positive time."""
    for dx, dy in ((1, 0), (0, 1)):
        other = shift(t, dx, dy, periodic, np.nan)
        if np.any((t == other) & (t > 0)):
            raise ResampleError("adjacent octagons share a positive arrival time")


def jam(t: np.ndarray, periodic: bool) -> np.ndarray:
    """
    Occupied mask for effective times *t* (shape (..., W, H)).

    Sites with time 0 are odd and mutually non-adjacent, so they are occupied in the
    first round in any order.
    """
    check_ties(t, periodic)
    undetermined = np.ones(t.shape, dtype=bool)
    occupied = np.zeros(t.shape, dtype=bool)
    while undetermined.any():
        masked = np.where(undetermined, t, np.inf)
        new = undetermined & (masked < neighbour_min(masked, periodic))
        if not new.any():
            raise ResampleError("jamming made no progress (tied or infinite arrival times)")
        occupied |= new
        undetermined &= ~new
        undetermined &= ~neighbour_any(new, periodic)
    return occupied


@dataclass(frozen=True)
class FaceColouring:
    """Black/white state of every face in a window."""
    window: Window
    octagon_black: np.ndarray
    diamond_black: np.ndarray

    def colour_of(self, site: Site) -> bool:
        i, j = self.window.index(site)
        return bool(self.octagon_black[i, j] if site.is_octagon else self.diamond_black[i, j])

    def with_diamond(self, site: Site, black: bool) -> "FaceColouring":
        i, j = self.window.index(site)
        d = self.diamond_black.copy()
        d[i, j] = black
        return replace(self, diamond_black=d)

    def extract(self, rect: Rect) -> Tuple[np.ndarray, np.ndarray]:
        """Octagon (w, h) and interior diamond (w-1, h-1) arrays of *rect*."""
        ii, jj = self.window.rect_index(rect)
        octa = self.octagon_black[np.ix_(ii, jj)]
        dia = self.diamond_black[np.ix_(ii[:-1], jj[:-1])]
        return octa, dia

    def black_set(self) -> np.ndarray:
        """Flat boolean vector of all faces (octagons then diamonds)."""
        return np.concatenate([self.octagon_black.ravel(), self.diamond_black.ravel()])


@dataclass(frozen=True)
class JammedColouring:
    window: Window
    occupied: np.ndarray
    colouring: FaceColouring

    def state(self, site: Site) -> OctagonState:
        i, j = self.window.index(site)
        return OctagonState.OCCUPIED if self.occupied[i, j] else OctagonState.BLOCKED


def octagon_colour(occupied: np.ndarray, even: np.ndarray) -> np.ndarray:
    """Black iff (even and occupied) or (odd and blocked)."""
    return occupied == even


def colour_faces(occupied: np.ndarray, f: ArrivalField, p: Optional[float] = None) -> FaceColouring:
    return FaceColouring(
        window=f.window,
        octagon_black=octagon_colour(occupied, f.window.even_mask()),
        diamond_black=f.diamond_black(p),
    )


def resolve_jamming(f: ArrivalField, params: Optional[Params] = None) -> JammedColouring:
    params = params or f.params
    occupied = jam(f.times(params), f.window.periodic)
    return JammedColouring(window=f.window, occupied=occupied, colouring=colour_faces(occupied, f, params.p))


def coupled_colouring(f: ArrivalField, params1: Params, params2: Params) -> Tuple[JammedColouring, JammedColouring]:
    """Jam the same variates under two ordered parameter sets."""
    if params2.lam < params1.lam or params2.p < params1.p or params2.delta != params1.delta:
        raise DomainError(f"params must increase in (lambda, p) with equal delta: {params1} vs {params2}")
    return resolve_jamming(f, params1), resolve_jamming(f, params2)


# ---------- affects / generations / E_dense ----------

def affected_mask(f: ArrivalField, sources: np.ndarray, params: Optional[Params] = None) -> np.ndarray:
    """
    Sites reachable from *sources* by a walk whose odd-site times never decrease.

    L holds the smallest possible last-odd-time of a walk ending at each site
    (-inf when the walk has met no odd site yet, inf when unreachable).
    """
    params = params or f.params
    t = f.times(params)
    even = f.window.even_mask()
    periodic = f.window.periodic
    L = np.full(t.shape, np.inf)
    L[sources & even] = -np.inf
    L[sources & ~even] = t[sources & ~even]
    while True:
        nb = neighbour_min(L, periodic)
        new = np.where(even, np.minimum(L, nb), np.where((nb <= t) | (L < np.inf), np.minimum(L, t), np.inf))
        if np.array_equal(new, L):
            return L < np.inf
        L = new


def affects(x: Site, y: Site, f: ArrivalField, params: Optional[Params] = None) -> bool:
    """True iff a walk from a neighbour of *x* reaches *y* with nondecreasing odd-site times."""
    if f.window.normalize(x) == f.window.normalize(y):
        raise DomainError("affects() needs two distinct sites")
    i, j = f.window.index(x)
    point = np.zeros(f.window.shape, dtype=bool)
    point[i, j] = True
    sources = neighbour_any(point, f.window.periodic)
    yi, yj = f.window.index(y)
    return bool(affected_mask(f, sources, params)[yi, yj])


def affects_bound(d: int) -> float:
    """Union bound 4^d / floor(d/2)! on P[x affects y] at graph distance d."""
    return min(1.0, 4.0 ** d / math.factorial(d // 2))


def generations(f: ArrivalField, root: Site, params: Optional[Params] = None) -> np.ndarray:
    """
    Generation index of every octagon (-1 = unassigned).

    G_0 = {root}; z joins G_{k+1} when its time beats every neighbour not yet in
    G_0..G_k.
    """
    params = params or f.params
    t = f.times(params)
    periodic = f.window.periodic
    gen = np.full(t.shape, -1, dtype=int)
    i, j = f.window.index(root)
    gen[i, j] = 0
    k = 0
    while True:
        unassigned = gen < 0
        masked = np.where(unassigned, t, np.inf)
        new = unassigned & (t < neighbour_min(masked, periodic))
        if not new.any():
            return gen
        k += 1
        gen[new] = k


def e_dense(r: Rect, buffer: int, f: ArrivalField, params: Optional[Params] = None) -> bool:
    """True iff no site of *r* is affected by any site outside r enlarged by *buffer*."""
    w = f.window
    big = r.enlarged(buffer)
    if buffer < 0 or not w.fits(big):
        raise DomainError(f"enlarged rectangle {big} does not fit in window {w.rect}")
    outside = ~w.rect_mask(big)
    if not outside.any():
        return True
    sources = neighbour_any(outside, w.periodic)
    return not bool(np.any(affected_mask(f, sources, params) & w.rect_mask(r)))


def dense_buffer(rect: Rect, factor: int) -> int:
    """Default buffer factor * ceil(sqrt(long side))."""
    return int(factor * math.ceil(math.sqrt(rect.long_side)))


def crossing_buffer(rect: Rect, factor: int) -> int:
    """Buffer for crossing estimates on R(2n, rho): factor * ceil(sqrt(2 floor(rho n)))."""
    return int(factor * math.ceil(math.sqrt(rect.width)))


# ---------- Monte Carlo helpers ----------

@dataclass(frozen=True)
class AffectsSetup:
    window: Window
    source: Site
    target: Site
    params: Params


def affects_trial(rng: np.random.Generator, setup: AffectsSetup) -> float:
    f = draw_arrivals(setup.window, setup.params, rng)
    return float(affects(setup.source, setup.target, f))


@dataclass(frozen=True)
class DenseSetup:
    window: Window
    rect: Rect
    buffer: int
    params: Params


def dense_trial(rng: np.random.Generator, setup: DenseSetup) -> float:
    return float(e_dense(setup.rect, setup.buffer, draw_arrivals(setup.window, setup.params, rng)))


@dataclass(frozen=True)
class AffectsEstimate:
    distance: int
    estimate: Estimate
    bound: float


@dataclass
class RsaProcess(ErsaObjectBase):
    """
    Range-of-dependence estimates for the arrival process.

    Factory usage:
        rsa = ErsaLab(cfg).rsa()
        row = rsa.estimate_affects_probability(6, Params(1.0, 0.5), trials=2000)
    """

    def estimate_affects_probability(self, d: int, params: Params, trials: int, seed: Optional[int] = None, *,
                                     stream: int = 0) -> AffectsEstimate:
        """Empirical P[(0,0) affects (d,0)] next to the bound 4^d / floor(d/2)!."""
        if d < 1:
            raise DomainError(f"distance must be >= 1, got {d}")
        seed = self._seed(seed)
        window = Window.around(Rect(0, d, 0, 0), d + 2)
        setup = AffectsSetup(window, Site.octagon(0, 0), Site.octagon(d, 0), params)
        out = self.runner.run(affects_trial, seed=seed, stream=stream, trials=trials, args=(setup,))
        est = estimate_from_hits(out > 0.5, self.cfg.z)
        bound = affects_bound(d)
        self.logger.info("P[affects] at distance %d: %.6f [%.6f, %.6f], bound %.6g", d, est.value, est.ci_lo, est.ci_hi, bound)
        return AffectsEstimate(d, est, bound)

    def dense_frequency(self, s: int, params: Params, trials: int, seed: Optional[int] = None, *,
                        buffer: Optional[int] = None, stream: int = 0) -> Estimate:
        """Frequency of e_dense for an s x s square with buffer 2 floor(sqrt(s)) by default."""
        if s < 1:
            raise DomainError(f"square side must be >= 1, got {s}")
        seed = self._seed(seed)
        rect = Rect(0, s - 1, 0, s - 1)
        buffer = 2 * math.isqrt(s) if buffer is None else buffer
        setup = DenseSetup(Window.around(rect, buffer + 1), rect, buffer, params)
        out = self.runner.run(dense_trial, seed=seed, stream=stream, trials=trials, args=(setup,))
        est = estimate_from_hits(out > 0.5, self.cfg.z)
        self.logger.info("e_dense frequency for side %d, buffer %d: %.6f", s, buffer, est.value)
        return est
