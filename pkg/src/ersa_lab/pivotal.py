"""
ersa_lab.pivotal
================

Pivotality of odd, even and diamond sites for the horizontal black crossing, Monte Carlo
estimates of phi, and the three Margulis-Russo identities (in p, lambda and delta).

Pivotal means: the crossing occurs in the base configuration but not in the modified one.
  odd octagon   base t_x = T_x,  modified t_x = 0
  even octagon  base t_x = T_x,  modified t_x = T_x + T with an extra rate-lambda T
  diamond       base black,      modified white
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .base import DiagnosticsError, DomainError, ErsaObjectBase
from .lattice import Rect, Site, Window, lattice_graph
from .oracle import colour_weight, coupled_zero_outcomes, diamond_colourings, event_polynomial, polynomials_close, window_oracle
from .percolation import CrossingSpec, crossing_polynomial, crossing_setup, has_crossing
from .rsa_process import ArrivalField, FaceColouring, Params, colour_faces, crossing_buffer, draw_arrivals, jam, octagon_colour
from .stats import Estimate, PairedDifference, estimate_from_hits, paired_difference


class SiteClass(str, Enum):
    ODD_OCTAGON = "odd"
    EVEN_OCTAGON = "even"
    DIAMOND = "diamond"


def site_class_of(site: Site) -> SiteClass:
    if not site.is_octagon:
        return SiteClass.DIAMOND
    return SiteClass.EVEN_OCTAGON if site.is_even else SiteClass.ODD_OCTAGON


@dataclass(frozen=True)
class PivotalQuery:
    site: Site
    spec: CrossingSpec
    site_class: Optional[SiteClass] = None

    def __post_init__(self) -> None:
        actual = site_class_of(self.site)
        if self.site_class is None:
            object.__setattr__(self, "site_class", actual)
        elif self.site_class is not actual:
            raise DomainError(f"site {self.site} is {actual.value}, not {self.site_class.value}")


# ---------- single-field tests ----------

def _crossing_for_times(times: np.ndarray, f: ArrivalField, spec: CrossingSpec, p: float) -> np.ndarray:
    """Crossing indicator for each time array in a (k, W, H) batch, sharing f's diamonds."""
    occupied = jam(times, f.window.periodic)
    even = f.window.even_mask()
    dia = f.diamond_black(p)
    return np.array([
        has_crossing(spec, FaceColouring(f.window, octagon_colour(occ, even), dia)) for occ in occupied
    ])


def is_pivotal(q: PivotalQuery, f: ArrivalField, params: Optional[Params] = None, aux: Optional[float] = None) -> bool:
    params = params or f.params
    f = f.with_params(params)
    site = f.window.normalize(q.site)

    if q.site_class is SiteClass.DIAMOND:
        colours = colour_faces(jam(f.times(), f.window.periodic), f)
        return has_crossing(q.spec, colours.with_diamond(site, True)) and not has_crossing(q.spec, colours.with_diamond(site, False))

    raw = f.raw_time(site)
    if q.site_class is SiteClass.ODD_OCTAGON:
        modified_time = 0.0
    else:
        if aux is None:
            raise DomainError("even-site pivotality needs the extra rate-lambda delay (aux)")
        modified_time = raw + float(aux)
    times = np.stack([f.with_times({site: raw}).times(), f.with_times({site: modified_time}).times()])
    base, modified = _crossing_for_times(times, f, q.spec, params.p)
    return bool(base and not modified)


# ---------- trial functions ----------

@dataclass(frozen=True)
class PhiSetup:
    window: Window
    query: PivotalQuery
    params: Params


def phi_trial(rng: np.random.Generator, setup: PhiSetup) -> float:
    f = draw_arrivals(setup.window, setup.params, rng)
    aux = rng.exponential(1.0 / setup.params.lam)
    return float(is_pivotal(setup.query, f, setup.params, aux=aux))


@dataclass(frozen=True)
class RussoSetup:
    window: Window
    spec: CrossingSpec
    params: Params
    h_step: float
    sites_per_trial: int


def _fd_points(value: float, step: float, lower: float, upper: float = math.inf) -> Tuple[float, float]:
    """Central points when both fit in [lower, upper], otherwise one-sided."""
    lo = value - step if value - step >= lower else value
    hi = value + step if value + step <= upper else value
    if hi == lo:
        raise DomainError(f"no room for a finite difference at {value} with step {step}")
    return lo, hi


def russo_trial(rng: np.random.Generator, setup: RussoSetup) -> Tuple[float, ...]:
    """(D_p, S_p, D_lambda, S_lambda, D_delta, S_delta) for one field."""
    w, spec, params, h, k = setup.window, setup.spec, setup.params, setup.h_step, setup.sites_per_trial
    f = draw_arrivals(w, params, rng)
    even = w.even_mask()
    dshape = w.diamond_shape
    odd_idx = np.argwhere(~even)
    even_idx = np.argwhere(even)

    # choices are drawn up front so the stream layout does not depend on outcomes
    pick_d = rng.integers(0, dshape[0] * dshape[1], size=k)
    pick_e = rng.integers(0, len(even_idx), size=k)
    pick_o = rng.integers(0, len(odd_idx), size=k)
    aux = rng.exponential(1.0 / params.lam, size=k)

    # d/dp and the diamond sum share one octagon state
    occupied = jam(f.times(), w.periodic)
    octa = octagon_colour(occupied, even)
    p_lo, p_hi = _fd_points(params.p, h, 0.0, 1.0)

    def crosses_at(p: float) -> bool:
        return has_crossing(spec, FaceColouring(w, octa, f.diamond_black(p)))

    d_p = (crosses_at(p_hi) - crosses_at(p_lo)) / (p_hi - p_lo)
    base = FaceColouring(w, octa, f.diamond_black(params.p))
    piv_d = 0
    for flat in pick_d:
        site = w.diamond_at(*np.unravel_index(int(flat), dshape))
        piv_d += has_crossing(spec, base.with_diamond(site, True)) and not has_crossing(spec, base.with_diamond(site, False))
    s_p = piv_d * (dshape[0] * dshape[1]) / k

    # lambda term at delta = 0
    p0 = params.with_(delta=0.0)
    l_lo, l_hi = _fd_points(params.lam, h, h)
    times = np.stack([f.times(p0.with_(lam=l_hi)), f.times(p0.with_(lam=l_lo))])
    hit_hi, hit_lo = _crossing_for_times(times, f, spec, params.p)
    d_l = (float(hit_hi) - float(hit_lo)) / (l_hi - l_lo)
    f0 = f.with_params(p0)
    batch = [f0.times()]
    for n, idx in enumerate(pick_e):
        site = w.octagon_at(*even_idx[int(idx)])
        batch.append(f0.with_times({site: f0.raw_time(site) + aux[n]}).times())
    hits = _crossing_for_times(np.stack(batch), f0, spec, params.p)
    s_l = (np.sum(hits[0] & ~hits[1:]) * len(even_idx) / k) / params.lam

    # delta term
    d_lo, d_hi = _fd_points(params.delta, h, 0.0)
    times = np.stack([f.times(params.with_(delta=d_hi)), f.times(params.with_(delta=d_lo))])
    hit_hi, hit_lo = _crossing_for_times(times, f, spec, params.p)
    d_d = (float(hit_hi) - float(hit_lo)) / (d_hi - d_lo)
    batch = []
    for idx in pick_o:
        site = w.octagon_at(*odd_idx[int(idx)])
        raw = f.raw_time(site)
        batch.append(f.with_times({site: raw}).times())
        batch.append(f.with_times({site: 0.0}).times())
    hits = _crossing_for_times(np.stack(batch), f, spec, params.p).reshape(k, 2)
    s_d = -math.exp(-params.delta) * np.sum(hits[:, 0] & ~hits[:, 1]) * len(odd_idx) / k

    return (float(d_p), float(s_p), float(d_l), float(s_l), float(d_d), float(s_d))


# ---------- results ----------

@dataclass(frozen=True)
class RussoTerm:
    """One identity: finite-difference derivative vs pivotal sum, compared per trial."""
    name: str
    derivative: PairedDifference
    pivotal_sum: PairedDifference
    residual: PairedDifference

    @property
    def value(self) -> float:
        return abs(self.residual.mean)

    @property
    def stderr(self) -> float:
        return self.residual.stderr


@dataclass(frozen=True)
class RussoResiduals:
    r_p: RussoTerm
    r_lambda: RussoTerm
    r_delta: RussoTerm
    # the lambda identity is only checked at delta = 0
    lambda_at_delta_zero: bool = True

    def terms(self) -> List[RussoTerm]:
        return [self.r_p, self.r_lambda, self.r_delta]


# ---------- exact checks on oracle instances ----------

def exact_diamond_phi(window: Window, params: Params, spec: CrossingSpec, site: Site, **oracle_kwargs) -> Polynomial:
    """phi(x') as a polynomial in p."""
    idx = window.index(site)
    states = window_oracle(window, params, **oracle_kwargs).arrays(window)

    def pivotal(c: FaceColouring) -> bool:
        return has_crossing(spec, c.with_diamond(site, True)) and not has_crossing(spec, c.with_diamond(site, False))

    return event_polynomial(window, states, pivotal, fixed={idx: False})


def check_mra_exact(window: Window, params: Params, spec: CrossingSpec, tol: float = 1e-9) -> Tuple[Polynomial, Polynomial, bool]:
    """d/dp P[H] against the sum of diamond phi, coefficient by coefficient."""
    derivative = crossing_polynomial(window, params, spec).deriv()
    total = Polynomial([0.0])
    for d in window.diamonds():
        total = total + exact_diamond_phi(window, params, spec, d)
    return derivative, total, polynomials_close(derivative, total, tol)


def exact_odd_phi(window: Window, params: Params, spec: CrossingSpec, site: Site) -> float:
    """P[crossing with t_x = T_x but not with t_x = 0], exact."""
    graph = lattice_graph(window)
    outcomes = coupled_zero_outcomes(graph, params, site)
    even = window.even_mask()
    dshape = window.diamond_shape
    total_d = int(np.prod(dshape))
    result = 0.0
    for dia in diamond_colourings(dshape):
        weight = float(colour_weight(int(dia.sum()), total_d)(params.p))
        if weight == 0.0:
            continue
        for base, modified, prob in outcomes:
            b = FaceColouring(window, octagon_colour(_mask(window, base), even), dia)
            m = FaceColouring(window, octagon_colour(_mask(window, modified), even), dia)
            if has_crossing(spec, b) and not has_crossing(spec, m):
                result += weight * prob
    return result


def _mask(window: Window, occupied) -> np.ndarray:
    mask = np.zeros(window.shape, dtype=bool)
    for s in occupied:
        mask[window.index(s)] = True
    return mask


def check_mrb_exact(window: Window, params: Params, spec: CrossingSpec, eps: float = 1e-5) -> Tuple[float, float]:
    """(dh/d delta, -exp(-delta) * sum of odd phi) from the exact oracle."""
    def h(delta: float) -> float:
        return float(crossing_polynomial(window, params.with_(delta=delta), spec)(params.p))

    d = params.delta
    if d >= eps:
        lhs = (h(d + eps) - h(d - eps)) / (2 * eps)
    else:
        lhs = (-3 * h(d) + 4 * h(d + eps) - h(d + 2 * eps)) / (2 * eps)
    odd_sites = [s for s in window.octagons() if not s.is_even]
    rhs = -math.exp(-d) * sum(exact_odd_phi(window, params, spec, s) for s in odd_sites)
    return lhs, rhs


# ---------- estimator ----------

def _phi_window(base: Window, site: Site) -> Window:
    """Smallest plane window containing *base* and every octagon *site* touches."""
    r = base.rect
    x_hi = site.x + (0 if site.is_octagon else 1)
    y_hi = site.y + (0 if site.is_octagon else 1)
    x_lo, y_lo = min(r.x_lo, site.x), min(r.y_lo, site.y)
    x_hi, y_hi = max(r.x_hi, x_hi), max(r.y_hi, y_hi)
    return Window.plane(x_lo, y_lo, x_hi - x_lo + 1, y_hi - y_lo + 1)


@dataclass
class Pivotal(ErsaObjectBase):
    """
    Pivotal-probability estimator.

    Factory usage:
        piv = ErsaLab(cfg).pivotal()
        q = piv.query(Site.diamond(0, 0), n=2, rho=1.0)
        est = piv.estimate_phi(q, Params(1.0, 0.5), trials=10_000, seed=1)
    """

    def query(self, site: Site, n: int, rho: float) -> PivotalQuery:
        return PivotalQuery(site, CrossingSpec(Rect.centred(n, rho)))

    def estimate_phi(self, q: PivotalQuery, params: Params, trials: int, seed: Optional[int] = None, *,
                     stream: int = 0, buffer: Optional[int] = None) -> Estimate:
        seed = self._seed(seed)
        rect = q.spec.rect
        if buffer is None:
            buffer = crossing_buffer(rect, self.cfg.buffer_factor)
        base = Window.around(rect, buffer + 1 if buffer > 0 else 0)
        window = _phi_window(base, q.site)
        out = self.runner.run(phi_trial, seed=seed, stream=stream, trials=trials, args=(PhiSetup(window, q, params),))
        est = estimate_from_hits(out > 0.5, self.cfg.z)
        self.logger.info("phi(%s) at %s: %.6f [%.6f, %.6f]", q.site, params, est.value, est.ci_lo, est.ci_hi)
        return est

    def russo_residuals(self, n: int, rho: float, params: Params, trials: int, seed: Optional[int] = None, *,
                        h_step: Optional[float] = None, stream: int = 0, buffer: Optional[int] = None) -> RussoResiduals:
        seed = self._seed(seed)
        h_step = self.cfg.h_step if h_step is None else h_step
        setup = crossing_setup(n, rho, params, buffer_factor=self.cfg.buffer_factor, buffer=buffer, track_dense=False)
        russo = RussoSetup(setup.window, setup.spec, params, h_step, self.cfg.pivot_sites_per_trial)
        out = self.runner.run(russo_trial, seed=seed, stream=stream, trials=trials, args=(russo,))

        terms = []
        for col, name in ((0, "p"), (2, "lambda"), (4, "delta")):
            fd = paired_difference(out[:, col])
            if fd.stderr > self.cfg.max_fd_stderr:
                raise DiagnosticsError(
                    f"finite difference in {name} too noisy: stderr {fd.stderr:.3g} > {self.cfg.max_fd_stderr} "
                    f"(h_step={h_step}, trials={trials}); raise h_step or trials"
                )
            terms.append(RussoTerm(name, fd, paired_difference(out[:, col + 1]), paired_difference(out[:, col] - out[:, col + 1])))
            self.logger.info("Russo %s: derivative %.6f, pivotal sum %.6f, residual %.6f +/- %.6f",
                             name, terms[-1].derivative.mean, terms[-1].pivotal_sum.mean, terms[-1].value, terms[-1].stderr)
        if params.delta != 0.0:
            self.logger.warning("lambda identity evaluated at delta = 0; the general-delta form is unverified")
        return RussoResiduals(*terms)
