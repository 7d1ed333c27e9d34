"""
ersa_lab.percolation
====================

Crossing events on the face colouring and Monte Carlo estimates of h_rho(n, lambda, p, delta).

Design decisions
----------------
- Connectivity is computed on a refined grid of shape (2w-1, 2h-1): octagons at
  even/even cells, diamonds at odd/odd cells, and a link cell between two unit-distance
  octagons that is set only when both have the colour. Labelling that grid with the
  3x3 structuring element reproduces face adjacency of the tiling exactly.
- A horizontal crossing must start in the leftmost octagon column of the rectangle and
  end in the rightmost one; diamonds are interior faces and never endpoints.
- UnionFind is a second, independent backend over the same faces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import ndimage

from .base import DomainError, ErsaObjectBase
from .lattice import Rect, Window
from .oracle import event_polynomial, window_oracle
from .rsa_process import FaceColouring, Params, colour_faces, crossing_buffer, draw_arrivals, e_dense, jam
from .stats import Estimate, estimate_from_hits


class Colour(str, Enum):
    BLACK = "black"
    WHITE = "white"


class Orientation(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class CrossingSpec:
    rect: Rect
    orientation: Orientation = Orientation.HORIZONTAL
    colour: Colour = Colour.BLACK

    def __post_init__(self) -> None:
        if self.rect.is_empty:
            raise DomainError(f"crossing rectangle {self.rect} is empty")


_EIGHT = np.ones((3, 3), dtype=bool)


def _oriented(spec: CrossingSpec, colours: FaceColouring) -> Tuple[np.ndarray, np.ndarray]:
    octa, dia = colours.extract(spec.rect)
    if spec.colour is Colour.WHITE:
        octa, dia = ~octa, ~dia
    if spec.orientation is Orientation.VERTICAL:
        octa, dia = octa.T, dia.T
    return octa, dia


def refined_grid(octa: np.ndarray, dia: np.ndarray) -> np.ndarray:
    w, h = octa.shape
    g = np.zeros((2 * w - 1, 2 * h - 1), dtype=bool)
    g[::2, ::2] = octa
    g[1::2, ::2] = octa[:-1, :] & octa[1:, :]
    g[::2, 1::2] = octa[:, :-1] & octa[:, 1:]
    g[1::2, 1::2] = dia
    return g


def crosses(octa: np.ndarray, dia: np.ndarray) -> bool:
    """Left-to-right crossing (first index) of the coloured faces."""
    labels, _ = ndimage.label(refined_grid(octa, dia), structure=_EIGHT)
    left = labels[0, ::2]
    right = labels[-1, ::2]
    return bool(np.intersect1d(left[left > 0], right[right > 0]).size)


def has_crossing(spec: CrossingSpec, colours: FaceColouring) -> bool:
    return crosses(*_oriented(spec, colours))


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int) -> bool:
        root_i, root_j = self.find(i), self.find(j)
        if root_i == root_j:
            return False
        if self.rank[root_i] < self.rank[root_j]:
            root_i, root_j = root_j, root_i
        self.parent[root_j] = root_i
        if self.rank[root_i] == self.rank[root_j]:
            self.rank[root_i] += 1
        return True


def has_crossing_uf(spec: CrossingSpec, colours: FaceColouring) -> bool:
    """Union-find over the coloured faces, with virtual nodes for the two sides."""
    octa, dia = _oriented(spec, colours)
    w, h = octa.shape
    n_oct = w * h
    first, last = n_oct + dia.size, n_oct + dia.size + 1
    uf = UnionFind(n_oct + dia.size + 2)

    def o(i: int, j: int) -> int:
        return i * h + j

    for i in range(w):
        for j in range(h):
            if not octa[i, j]:
                continue
            if i == 0:
                uf.union(o(i, j), first)
            if i == w - 1:
                uf.union(o(i, j), last)
            if i + 1 < w and octa[i + 1, j]:
                uf.union(o(i, j), o(i + 1, j))
            if j + 1 < h and octa[i, j + 1]:
                uf.union(o(i, j), o(i, j + 1))
    for i in range(w - 1):
        for j in range(h - 1):
            if dia[i, j]:
                d = n_oct + i * (h - 1) + j
                for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
                    if octa[i + di, j + dj]:
                        uf.union(d, o(i + di, j + dj))
    return uf.find(first) == uf.find(last)


# ---------- exact values on oracle instances ----------

def crossing_polynomial(window: Window, params: Params, spec: CrossingSpec, **oracle_kwargs) -> Polynomial:
    """Exact P[spec] on a tiny plane window, as a polynomial in p."""
    states = window_oracle(window, params, **oracle_kwargs).arrays(window)
    return event_polynomial(window, states, lambda c: has_crossing(spec, c))


def harris_fkg_gap(window: Window, params: Params, rect: Rect) -> float:
    """P(H and V) - P(H) P(V) for the black horizontal and vertical crossings (nonnegative by Harris-FKG)."""
    horizontal = CrossingSpec(rect, Orientation.HORIZONTAL, Colour.BLACK)
    vertical = CrossingSpec(rect, Orientation.VERTICAL, Colour.BLACK)
    states = window_oracle(window, params).arrays(window)
    both = event_polynomial(window, states, lambda c: has_crossing(horizontal, c) and has_crossing(vertical, c))
    h = event_polynomial(window, states, lambda c: has_crossing(horizontal, c))
    v = event_polynomial(window, states, lambda c: has_crossing(vertical, c))
    p = params.p
    return float(both(p) - h(p) * v(p))


# ---------- Monte Carlo ----------

@dataclass(frozen=True)
class CrossingSetup:
    """Everything a crossing trial needs; picklable for the process pool."""
    window: Window
    spec: CrossingSpec
    params: Params
    buffer: int
    track_dense: bool = True


def crossing_setup(n: int, rho: float, params: Params, *, buffer_factor: int, buffer: Optional[int] = None,
                   orientation: Orientation = Orientation.HORIZONTAL, colour: Colour = Colour.BLACK,
                   track_dense: bool = True) -> CrossingSetup:
    rect = Rect.centred(n, rho)
    if buffer is None:
        buffer = crossing_buffer(rect, buffer_factor)
    if buffer < 0:
        raise DomainError(f"buffer must be >= 0, got {buffer}")
    # one extra ring so the enlarged rectangle has outside sites to be affected from
    window = Window.around(rect, buffer + 1 if buffer > 0 else 0)
    return CrossingSetup(window, CrossingSpec(rect, orientation, colour), params, buffer, track_dense)


def crossing_trial(rng: np.random.Generator, setup: CrossingSetup) -> Tuple[float, float]:
    f = draw_arrivals(setup.window, setup.params, rng)
    occupied = jam(f.times(), setup.window.periodic)
    hit = has_crossing(setup.spec, colour_faces(occupied, f))
    dense = e_dense(setup.spec.rect, setup.buffer, f) if setup.track_dense else True
    return float(hit), float(dense)


@dataclass
class Percolation(ErsaObjectBase):
    """
    Crossing-probability estimator.

    Factory usage:
        lab = ErsaLab(cfg)
        perc = lab.percolation()
        est = perc.estimate_h(8, 1.0, Params(1.0, 0.5), trials=10_000, seed=42)
    """

    def setup(self, n: int, rho: float, params: Params, **kwargs) -> CrossingSetup:
        return crossing_setup(n, rho, params, buffer_factor=self.cfg.buffer_factor, **kwargs)

    def _check_trials(self, trials: int) -> None:
        if trials < self.cfg.min_trials:
            raise DomainError(f"crossing estimates need >= {self.cfg.min_trials} trials (cfg.min_trials), got {trials}")

    def estimate_setup(self, setup: CrossingSetup, trials: int, seed: Optional[int] = None, *, stream: int = 0) -> Estimate:
        seed = self._seed(seed)
        out = self.runner.run(crossing_trial, seed=seed, stream=stream, trials=trials, args=(setup,))
        dense_failures = int(np.sum(out[:, 1] == 0.0))
        est = estimate_from_hits(out[:, 0] > 0.5, self.cfg.z, dense_failures)
        if dense_failures:
            self.logger.warning("e_dense failed on %d/%d samples (buffer %d); samples still counted",
                                dense_failures, trials, setup.buffer)
        self.logger.info("%s %s crossing of %s at %s: %.6f [%.6f, %.6f] (%d trials)",
                         setup.spec.colour.value, setup.spec.orientation.value, setup.spec.rect,
                         setup.params, est.value, est.ci_lo, est.ci_hi, trials)
        return est

    def estimate_h(self, n: int, rho: float, params: Params, trials: int, seed: Optional[int] = None, *,
                   stream: int = 0, buffer: Optional[int] = None, track_dense: bool = True) -> Estimate:
        """h_rho(n, lambda, p, delta): horizontal black crossing of R(2n, rho)."""
        self._check_trials(trials)
        return self.estimate_setup(self.setup(n, rho, params, buffer=buffer, track_dense=track_dense), trials, seed, stream=stream)

    def estimate_h_white(self, n: int, rho: float, params: Params, trials: int, seed: Optional[int] = None, *,
                         stream: int = 0, buffer: Optional[int] = None) -> Estimate:
        """Probability of a horizontal white crossing of R(2n, rho)."""
        self._check_trials(trials)
        setup = self.setup(n, rho, params, buffer=buffer, colour=Colour.WHITE)
        return self.estimate_setup(setup, trials, seed, stream=stream)

    def estimate_curve(self, n: int, rho: float, params_list: List[Params], trials: int, seed: Optional[int] = None, *,
                       stream: int = 0, buffer: Optional[int] = None) -> List[Estimate]:
        """Several parameter points on one trial stream, so the curve is monotone sample by sample."""
        return [self.estimate_h(n, rho, params, trials, seed, stream=stream, buffer=buffer) for params in params_list]
