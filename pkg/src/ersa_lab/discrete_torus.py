"""
ersa_lab.discrete_torus
=======================

The torus model with time-block discretization.

Purpose
-------
- Four-state block marginals and the X-field on T(20n) x {-1, 0, ..., floor(n/delta)}.
- The crude event (E_n possible given X), evaluated on an extremal witness, and the
  undelayed crossing event F_n.
- The torus-versus-plane coupling gap for a small rectangle.

Design decisions
----------------
- Cell (x, k) for k >= 0 covers times [k delta, (k+1) delta); index 0 of the last axis is
  the diamond cell k = -1, so values[i, j, k + 1] holds X(x, k).
- Witness times are integer half-block ticks. An even site whose first X=3 block is k
  arrives at tick 2k (its block start), plus 4 ticks for the 2 delta delay. An odd site
  whose first X=0 block is k arrives at tick 2k + 1, which orders exactly like "just
  before the block end" against every even tick. Odd sites with no X=0 block arrive
  after every even site.
- The standalone sampler draws cells i.i.d. from the marginals; the first-arrival
  projection exists for coupling checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .base import DomainError, ErsaObjectBase
from .lattice import Rect, Window
from .percolation import CrossingSpec, has_crossing
from .rsa_process import ArrivalField, FaceColouring, Params, colour_faces, dense_buffer, draw_arrivals, jam, octagon_colour
from .sharp_threshold import ProbVector
from .stats import PairedDifference, paired_difference


def default_delta(n: int) -> float:
    """delta(n) = (log n)^(-1/2)."""
    if n < 2:
        raise DomainError(f"delta(n) = (log n)^(-1/2) needs n >= 2, got {n}")
    return 1.0 / math.sqrt(math.log(n))


def discrete_marginals(lambda0: float, p_tilde: float, lambda1: float, delta: float) -> np.ndarray:
    """(P[X=0], P[X=1], P[X=2], P[X=3]) for one block of length *delta*."""
    if delta <= 0 or lambda0 <= 0 or lambda1 <= 0:
        raise DomainError(f"need lambda0, lambda1, delta > 0, got {lambda0}, {lambda1}, {delta}")
    e0, e1 = math.exp(-lambda0 * delta), math.exp(-lambda1 * delta)
    vec = np.array([1.0 - e1, e1 - p_tilde, p_tilde + e0 - 1.0, 1.0 - e0])
    for value, entry in enumerate(vec):
        if entry < 0:
            raise DomainError(f"infeasible block marginals: P[X={value}] = {entry:.6g} < 0 "
                              f"(lambda0={lambda0}, p_tilde={p_tilde}, lambda1={lambda1}, delta={delta})")
    return vec


def block_vectors(lam: float, p: float, eps: float, delta: float) -> Tuple[ProbVector, ProbVector, float]:
    """
    Block vectors of the model (lambda, p) and of the boosted model (lambda, p + eps/2, lambda1 = 1 - ...).

    Returns (pv, qv, gamma) with gamma = min(p0 - q0, q3 - p3), the room the boosted model
    leaves for the sharp-threshold domination hypothesis.
    """
    pv = ProbVector(discrete_marginals(lam, p, 1.0, delta))
    qv = ProbVector(discrete_marginals(lam * (1.0 + eps), p + eps / 2.0, 1.0 / (1.0 + eps), delta))
    gamma = min(pv.entries[0] - qv.entries[0], qv.entries[3] - pv.entries[3])
    return pv, qv, float(gamma)


def symmetry_order(side: int) -> int:
    """Order of the group of parity-preserving translations of T(side)."""
    return side * side // 2


@dataclass(frozen=True)
class XField:
    values: np.ndarray
    n: int
    delta: float
    lambda0: float
    lambda1: float
    p_tilde: float

    @property
    def side(self) -> int:
        return int(self.values.shape[0])

    @property
    def blocks(self) -> int:
        """Number of time blocks K + 1 (k = 0..K)."""
        return int(self.values.shape[2] - 1)

    @property
    def window(self) -> Window:
        return Window.torus(self.side)

    def cell(self, x: int, y: int, k: int) -> int:
        return int(self.values[x % self.side, y % self.side, k + 1])

    def bumped(self, x: int, y: int, k: int) -> "XField":
        """Copy with X(x, k) raised by one (capped at 3)."""
        v = self.values.copy()
        i, j = x % self.side, y % self.side
        v[i, j, k + 1] = min(3, int(v[i, j, k + 1]) + 1)
        return XField(v, self.n, self.delta, self.lambda0, self.lambda1, self.p_tilde)


def _geometry(n: int, delta: Optional[float]) -> Tuple[int, float, int]:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    delta = default_delta(n) if delta is None else float(delta)
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return 20 * n, delta, int(math.floor(n / delta))


def sample_x_field(n: int, lambda0: float, p_tilde: float, rng: np.random.Generator, *,
                   lambda1: float = 1.0, delta: Optional[float] = None) -> XField:
    """Cells drawn i.i.d. from discrete_marginals."""
    side, delta, K = _geometry(n, delta)
    probs = discrete_marginals(lambda0, p_tilde, lambda1, delta)
    values = rng.choice(4, size=(side, side, K + 2), p=probs).astype(np.int8)
    return XField(values, n, delta, lambda0, lambda1, p_tilde)


def _conditional(rng: np.random.Generator, probs: np.ndarray, allowed: List[int], size: int) -> np.ndarray:
    sub = probs[allowed]
    return np.asarray(allowed)[rng.choice(len(allowed), size=size, p=sub / sub.sum())]


def project_to_x(f: ArrivalField, n: int, rng: np.random.Generator, *, delta: Optional[float] = None) -> XField:
    """
    X-field induced by the first arrivals of *f* on T(20n); unconstrained cells are filled
    from the conditional marginals.
    """
    side, delta, K = _geometry(n, delta)
    if not f.window.periodic or f.window.width != side:
        raise DomainError(f"project_to_x needs a field on T({side}), got {f.window.kind.value} {f.window.shape}")
    lam = f.params.lam
    probs = discrete_marginals(lam, f.params.p, 1.0, delta)
    values = rng.choice(4, size=(side, side, K + 2), p=probs).astype(np.int8)

    t = f.times()
    even = f.window.even_mask()
    first = np.floor(t / delta).astype(np.int64)
    ks = np.arange(K + 1)[None, None, :]
    before = ks < first[:, :, None]
    at = ks == first[:, :, None]
    blocks = values[:, :, 1:]

    even3 = even[:, :, None]
    # no arrival before the first one; the first arrival block is pinned
    mask = before & even3
    blocks[mask] = _conditional(rng, probs, [0, 1, 2], int(mask.sum()))
    blocks[at & even3] = 3
    mask = before & ~even3
    blocks[mask] = _conditional(rng, probs, [1, 2, 3], int(mask.sum()))
    blocks[at & ~even3] = 0

    black = f.diamond_black()
    values[:, :, 0][black] = _conditional(rng, probs, [2, 3], int(black.sum()))
    values[:, :, 0][~black] = _conditional(rng, probs, [0, 1], int((~black).sum()))
    return XField(values, n, delta, lam, 1.0, f.params.p)


# ---------- witness and events ----------

def witness_ticks(X: XField, *, even_delay_ticks: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """
    (witness tick times, even-site first-arrival block or -1) for every octagon.
    """
    blocks = X.values[:, :, 1:]
    K1 = blocks.shape[2]
    even = X.window.even_mask()
    late = 2 * (K1 + 2) + 2 * even_delay_ticks + 1

    has3 = (blocks == 3).any(axis=2)
    first3 = np.where(has3, np.argmax(blocks == 3, axis=2), -1)
    has0 = (blocks == 0).any(axis=2)
    first0 = np.argmax(blocks == 0, axis=2)

    t = np.where(even, np.where(has3, 2 * first3 + even_delay_ticks, late + 1), np.where(has0, 2 * first0 + 1, late))
    return t.astype(float), np.where(even, first3, -1)


def e_fast(X: XField) -> bool:
    """Every even site has a first arrival k delta < sqrt(n)."""
    _, first3 = witness_ticks(X)
    even = X.window.even_mask()
    arrived = first3[even]
    return bool(np.all(arrived >= 0) and np.all(arrived * X.delta < math.sqrt(X.n)))


def crude_rectangles(n: int) -> List[Rect]:
    """The 40 rectangles 18n x 2n with lower-left corners (5n i, 2n j), i < 4, j < 10."""
    return [Rect(5 * n * i, 5 * n * i + 18 * n - 1, 2 * n * j, 2 * n * j + 2 * n - 1) for i in range(4) for j in range(10)]


def _witness_colouring(X: XField, even_delay_ticks: int) -> FaceColouring:
    t, _ = witness_ticks(X, even_delay_ticks=even_delay_ticks)
    w = X.window
    occupied = jam(t, True)
    return FaceColouring(w, octagon_colour(occupied, w.even_mask()), X.values[:, :, 0] >= 2)


def _any_crossing(X: XField, colours: FaceColouring) -> bool:
    for rect in crude_rectangles(X.n):
        if has_crossing(CrossingSpec(rect), colours):
            return True
    return False


def crude_event(X: XField) -> bool:
    """E_n possible given X: E_fast on the witness and a delayed horizontal black crossing."""
    if not e_fast(X):
        return False
    return _any_crossing(X, _witness_colouring(X, even_delay_ticks=4))


def f_event(X: XField) -> bool:
    """F_n on the witness: an undelayed horizontal black crossing of one of the 40 rectangles."""
    return _any_crossing(X, _witness_colouring(X, even_delay_ticks=0))


# ---------- torus vs plane ----------

@dataclass(frozen=True)
class GapSetup:
    torus: Window
    plane: Window
    spec: CrossingSpec
    params: Params


def gap_trial(rng: np.random.Generator, setup: GapSetup) -> Tuple[float, float]:
    f = draw_arrivals(setup.torus, setup.params, rng)
    on_torus = has_crossing(setup.spec, colour_faces(jam(f.times(), True), f))
    g = f.restrict(setup.plane)
    on_plane = has_crossing(setup.spec, colour_faces(jam(g.times(), False), g))
    return float(on_torus), float(on_plane)


@dataclass(frozen=True)
class TorusGap:
    gap: float
    difference: PairedDifference
    h_torus: float
    h_plane: float
    trials: int


@dataclass
class DiscreteTorus(ErsaObjectBase):
    """
    Torus-model estimators.

    Factory usage:
        dt = ErsaLab(cfg).discrete_torus()
        gap = dt.torus_plane_gap(32, Rect(14, 17, 14, 17), Params(1.0, 0.5), trials=10_000)
    """

    def torus_plane_gap(self, n: int, rect: Rect, params: Params, trials: int, seed: Optional[int] = None, *,
                        stream: int = 0, buffer: Optional[int] = None) -> TorusGap:
        """|P_torus[H(rect)] - P_plane[H(rect)]| on T(2n), the plane sharing the torus variates near rect."""
        seed = self._seed(seed)
        side = 2 * n
        if rect.long_side > side - 4 * math.sqrt(side):
            raise DomainError(f"rectangle long side {rect.long_side} exceeds 2n - 4 sqrt(2n) = {side - 4 * math.sqrt(side):.3f}")
        square = Rect(0, side - 1, 0, side - 1)
        if not (square.contains(rect.x_lo, rect.y_lo) and square.contains(rect.x_hi, rect.y_hi)):
            raise DomainError(f"rectangle {rect} must lie in [0, {side - 1}]^2")
        if buffer is None:
            buffer = dense_buffer(Rect(0, side - 1, 0, 0), self.cfg.buffer_factor)
        big = rect.enlarged(buffer)
        clipped = Rect(max(big.x_lo, 0), min(big.x_hi, side - 1), max(big.y_lo, 0), min(big.y_hi, side - 1))
        setup = GapSetup(Window.torus(side), Window.around(clipped), CrossingSpec(rect), params)
        out = self.runner.run(gap_trial, seed=seed, stream=stream, trials=trials, args=(setup,))
        diff = paired_difference(out[:, 0] - out[:, 1])
        result = TorusGap(abs(diff.mean), diff, float(out[:, 0].mean()), float(out[:, 1].mean()), trials)
        self.logger.info("torus/plane gap for %s on T(%d): %.6f +/- %.6f", rect, side, result.gap, diff.stderr)
        return result

    def crude_event_frequency(self, n: int, lambda0: float, p_tilde: float, trials: int, seed: Optional[int] = None, *,
                              delta: Optional[float] = None, stream: int = 0) -> Tuple[float, float]:
        """(frequency of crude_event, frequency of f_event) over i.i.d. X-fields."""
        seed = self._seed(seed)
        out = self.runner.run(crude_trial, seed=seed, stream=stream, trials=trials, args=(n, lambda0, p_tilde, delta))
        return float(out[:, 0].mean()), float(out[:, 1].mean())


def crude_trial(rng: np.random.Generator, n: int, lambda0: float, p_tilde: float, delta: Optional[float]) -> Tuple[float, float]:
    X = sample_x_field(n, lambda0, p_tilde, rng, delta=delta)
    return float(crude_event(X)), float(f_event(X))
