"""
ersa_lab.lattice
================

Geometry of the enhanced lattice: octagon sites at integer points, diamond sites at
cell centres, and the truncated square tiling whose faces they are.

Conventions
-----------
- A diamond is named by its lower-left octagon: Site(DIAMOND, x, y) is the point
  (x + 1/2, y + 1/2) and touches octagons (x, y), (x+1, y), (x, y+1), (x+1, y+1).
- Window arrays are indexed [i, j] with x = x_lo + i, y = y_lo + j.
- Plane windows have free boundary. Their diamond arrays have shape (W-1, H-1): only
  diamonds whose four octagons are all in the window exist. Torus diamond arrays have
  shape (W, H) and wrap.
- All geometry is integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np

from .base import DomainError


class SiteKind(str, Enum):
    OCTAGON = "octagon"
    DIAMOND = "diamond"


class WindowKind(str, Enum):
    PLANE = "plane"
    TORUS = "torus"


# Unit-distance octagon offsets, and the four diamond bases around an octagon
OCTAGON_STEPS: Tuple[Tuple[int, int], ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
DIAMOND_CORNERS: Tuple[Tuple[int, int], ...] = ((0, 0), (-1, 0), (0, -1), (-1, -1))


@dataclass(frozen=True)
class Site:
    kind: SiteKind
    x: int
    y: int

    @classmethod
    def octagon(cls, x: int, y: int) -> "Site":
        return cls(SiteKind.OCTAGON, int(x), int(y))

    @classmethod
    def diamond(cls, x: int, y: int) -> "Site":
        return cls(SiteKind.DIAMOND, int(x), int(y))

    @property
    def is_octagon(self) -> bool:
        return self.kind is SiteKind.OCTAGON

    @property
    def is_even(self) -> bool:
        """Octagon parity; diamonds have none."""
        if not self.is_octagon:
            raise DomainError(f"diamond site {self} has no parity")
        return (self.x + self.y) % 2 == 0

    @property
    def xy(self) -> Tuple[int, int]:
        return (self.x, self.y)

    def __str__(self) -> str:
        mark = "'" if self.kind is SiteKind.DIAMOND else ""
        return f"({self.x},{self.y}){mark}"


@dataclass(frozen=True)
class Rect:
    """Octagon rectangle with inclusive bounds."""
    x_lo: int
    x_hi: int
    y_lo: int
    y_hi: int

    @classmethod
    def centred(cls, n: int, rho: float) -> "Rect":
        """R(2n, rho) = [-floor(rho n), floor(rho n) - 1] x [-n, n - 1]."""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        half = int(np.floor(rho * n))
        if half < 1:
            raise DomainError(f"floor(rho * n) must be >= 1, got rho={rho}, n={n}")
        return cls(-half, half - 1, -n, n - 1)

    @property
    def width(self) -> int:
        return self.x_hi - self.x_lo + 1

    @property
    def height(self) -> int:
        return self.y_hi - self.y_lo + 1

    @property
    def long_side(self) -> int:
        return max(self.width, self.height)

    @property
    def is_empty(self) -> bool:
        return self.width < 1 or self.height < 1

    def contains(self, x: int, y: int) -> bool:
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi

    def enlarged(self, r: int) -> "Rect":
        return Rect(self.x_lo - r, self.x_hi + r, self.y_lo - r, self.y_hi + r)

    def rotated(self) -> "Rect":
        """Reflection in the diagonal: swaps the roles of x and y."""
        return Rect(self.y_lo, self.y_hi, self.x_lo, self.x_hi)

    def shifted(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x_lo + dx, self.x_hi + dx, self.y_lo + dy, self.y_hi + dy)


@dataclass(frozen=True)
class Window:
    kind: WindowKind
    x_lo: int
    y_lo: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DomainError(f"window must be nonempty, got {self.width}x{self.height}")
        if self.kind is WindowKind.TORUS and (self.width != self.height or self.width % 2):
            raise DomainError(f"torus side must be even and square, got {self.width}x{self.height}")

    # ---------- constructors ----------

    @classmethod
    def torus(cls, side: int) -> "Window":
        if side < 2 or side % 2:
            raise DomainError(f"torus side must be an even integer >= 2, got {side}")
        return cls(WindowKind.TORUS, 0, 0, side, side)

    @classmethod
    def plane(cls, x_lo: int, y_lo: int, width: int, height: int) -> "Window":
        return cls(WindowKind.PLANE, x_lo, y_lo, width, height)

    @classmethod
    def around(cls, rect: Rect, margin: int = 0) -> "Window":
        r = rect.enlarged(margin)
        return cls.plane(r.x_lo, r.y_lo, r.width, r.height)

    # ---------- shape / index helpers ----------

    @property
    def periodic(self) -> bool:
        return self.kind is WindowKind.TORUS

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.width, self.height)

    @property
    def diamond_shape(self) -> Tuple[int, int]:
        if self.periodic:
            return (self.width, self.height)
        return (max(self.width - 1, 0), max(self.height - 1, 0))

    @property
    def rect(self) -> Rect:
        return Rect(self.x_lo, self.x_lo + self.width - 1, self.y_lo, self.y_lo + self.height - 1)

    def normalize(self, site: Site) -> Site:
        """Canonical coordinates of *site* (wrapped into [0, side) on a torus)."""
        if not self.periodic:
            return site
        return Site(site.kind, site.x % self.width, site.y % self.height)

    def contains(self, site: Site) -> bool:
        if self.periodic:
            return True
        i, j = site.x - self.x_lo, site.y - self.y_lo
        if site.is_octagon:
            return 0 <= i < self.width and 0 <= j < self.height
        return 0 <= i < self.width - 1 and 0 <= j < self.height - 1

    def index(self, site: Site) -> Tuple[int, int]:
        """Array index of *site* in the octagon or diamond array of this window."""
        if not self.contains(site):
            raise DomainError(f"site {site} is outside the window {self.rect}")
        i, j = site.x - self.x_lo, site.y - self.y_lo
        if self.periodic:
            i, j = i % self.width, j % self.height
        return (i, j)

    def octagon_at(self, i: int, j: int) -> Site:
        return Site.octagon(self.x_lo + i, self.y_lo + j)

    def diamond_at(self, i: int, j: int) -> Site:
        return Site.diamond(self.x_lo + i, self.y_lo + j)

    def even_mask(self) -> np.ndarray:
        xs = np.arange(self.x_lo, self.x_lo + self.width)[:, None]
        ys = np.arange(self.y_lo, self.y_lo + self.height)[None, :]
        return (xs + ys) % 2 == 0

    def rect_mask(self, rect: Rect) -> np.ndarray:
        """Boolean octagon mask of the window sites that lie in *rect* (after wrapping on a torus)."""
        ii, jj = self.rect_index(rect)
        mask = np.zeros(self.shape, dtype=bool)
        mask[np.ix_(ii, jj)] = True
        return mask

    def fits(self, rect: Rect) -> bool:
        if rect.is_empty:
            return False
        if self.periodic:
            return rect.width <= self.width and rect.height <= self.height
        w = self.rect
        return w.x_lo <= rect.x_lo and rect.x_hi <= w.x_hi and w.y_lo <= rect.y_lo and rect.y_hi <= w.y_hi

    def rect_index(self, rect: Rect) -> Tuple[np.ndarray, np.ndarray]:
        """Octagon index vectors (for np.ix_) covering *rect*, in rect order."""
        if not self.fits(rect):
            raise DomainError(f"rectangle {rect} does not fit in window {self.kind.value} {self.rect}")
        ii = np.arange(rect.x_lo, rect.x_hi + 1) - self.x_lo
        jj = np.arange(rect.y_lo, rect.y_hi + 1) - self.y_lo
        if self.periodic:
            ii, jj = ii % self.width, jj % self.height
        return ii, jj

    def octagons(self) -> Iterator[Site]:
        for i in range(self.width):
            for j in range(self.height):
                yield self.octagon_at(i, j)

    def diamonds(self) -> Iterator[Site]:
        dw, dh = self.diamond_shape
        for i in range(dw):
            for j in range(dh):
                yield self.diamond_at(i, j)


# ---------- array neighbourhood helpers ----------

def shift(a: np.ndarray, dx: int, dy: int, periodic: bool, fill) -> np.ndarray:
    """
    out[..., i, j] = a[..., i + dx, j + dy]; wraps when periodic, else *fill* past the edge.

    Operates on the last two axes, so leading batch axes pass through.
    """
    if periodic:
        return np.roll(a, shift=(-dx, -dy), axis=(-2, -1))
    out = np.full_like(a, fill)
    W, H = a.shape[-2], a.shape[-1]
    src_i = slice(max(dx, 0), W + min(dx, 0))
    dst_i = slice(max(-dx, 0), W + min(-dx, 0))
    src_j = slice(max(dy, 0), H + min(dy, 0))
    dst_j = slice(max(-dy, 0), H + min(-dy, 0))
    out[..., dst_i, dst_j] = a[..., src_i, src_j]
    return out


def neighbour_min(a: np.ndarray, periodic: bool) -> np.ndarray:
    """Minimum over the four |x-y|=1 octagon neighbours (inf past a free edge)."""
    out = shift(a, 1, 0, periodic, np.inf)
    for dx, dy in OCTAGON_STEPS[1:]:
        np.minimum(out, shift(a, dx, dy, periodic, np.inf), out=out)
    return out


def neighbour_any(a: np.ndarray, periodic: bool) -> np.ndarray:
    out = shift(a, 1, 0, periodic, False)
    for dx, dy in OCTAGON_STEPS[1:]:
        out |= shift(a, dx, dy, periodic, False)
    return out


# ---------- site-level operations ----------

def octagon_neighbors(s: Site, w: Window) -> List[Site]:
    """The 4 octagon and 4 diamond neighbours of *s* that exist in *w*."""
    if not s.is_octagon:
        raise DomainError(f"{s} is not an octagon site")
    if not w.contains(s):
        raise DomainError(f"site {s} is outside the window {w.rect}")
    candidates = [Site.octagon(s.x + dx, s.y + dy) for dx, dy in OCTAGON_STEPS]
    candidates += [Site.diamond(s.x + dx, s.y + dy) for dx, dy in DIAMOND_CORNERS]
    return [w.normalize(c) for c in candidates if w.contains(c)]


def diamond_neighbors(d: Site, w: Window) -> List[Site]:
    """The 4 octagons at the corners of diamond *d*."""
    if d.is_octagon:
        raise DomainError(f"{d} is not a diamond site")
    if not w.contains(d):
        raise DomainError(f"site {d} is outside the window {w.rect}")
    return [w.normalize(Site.octagon(d.x + dx, d.y + dy)) for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1))]


def _delta(a: int, b: int, period: Optional[int]) -> int:
    d = b - a
    if period:
        d %= period
        if d > period // 2:
            d -= period
    return d


def face_adjacency(a: Site, b: Site, w: Optional[Window] = None) -> bool:
    """True iff faces *a* and *b* share a tile edge (equivalently, a and b are adjacent in the lattice)."""
    period = w.width if (w is not None and w.periodic) else None
    if a.is_octagon and b.is_octagon:
        dx, dy = _delta(a.x, b.x, period), _delta(a.y, b.y, period)
        return abs(dx) + abs(dy) == 1
    if not a.is_octagon and not b.is_octagon:
        return False
    octa, dia = (a, b) if a.is_octagon else (b, a)
    dx, dy = _delta(dia.x, octa.x, period), _delta(dia.y, octa.y, period)
    return dx in (0, 1) and dy in (0, 1)


def rect_faces(r: Rect, w: Window) -> List[Site]:
    """Octagons of *r* plus the diamonds whose four octagons all lie in *r*."""
    if r.is_empty:
        raise DomainError(f"rectangle {r} is empty")
    if not w.fits(r):
        raise DomainError(f"rectangle {r} does not fit in window {w.rect}")
    faces = [w.normalize(Site.octagon(x, y)) for x in range(r.x_lo, r.x_hi + 1) for y in range(r.y_lo, r.y_hi + 1)]
    faces += [w.normalize(Site.diamond(x, y)) for x in range(r.x_lo, r.x_hi) for y in range(r.y_lo, r.y_hi)]
    return faces


# ---------- graphs ----------

def lattice_graph(w: Window) -> nx.Graph:
    """Octagon |x-y|=1 graph of *w*, nodes carrying an ``even`` attribute."""
    g = nx.Graph()
    for s in w.octagons():
        g.add_node(s, even=s.is_even)
    for s in w.octagons():
        for dx, dy in OCTAGON_STEPS:
            t = Site.octagon(s.x + dx, s.y + dy)
            if w.contains(t):
                g.add_edge(s, w.normalize(t))
    return g


def tiling_graph(w: Window) -> nx.Graph:
    """Full lattice graph (octagons and diamonds) of *w*; octagon nodes carry ``even``."""
    g = lattice_graph(w)
    for d in w.diamonds():
        g.add_node(d)
        for o in diamond_neighbors(d, w):
            g.add_edge(d, o)
    return g
