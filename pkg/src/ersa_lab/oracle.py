"""
ersa_lab.oracle
===============

Exact jamming distributions for tiny instances, used as an independent reference for
the Monte Carlo code.

Purpose
-------
- Distribution of the occupied set on a graph with at most ``max_sites`` octagons,
  with even rate lambda, odd rate 1 and the delta zero-time reformulation.
- Joint (base, modified) outcomes for an odd site whose time is moved to 0, through
  explicit enumeration of arrival orderings.
- Probabilities of colouring events as exact polynomials in p.

Design decisions
----------------
- Distributions use memoised recursion over the set of still-empty sites: by the
  memoryless property the next successful arrival among the empty sites is site v with
  probability rate_v / sum(rates), independently of the past.
- Coupled queries need the order of every arrival, so they enumerate orderings and
  weight them with the competing-exponentials product
  P[sigma] = prod_i rate(sigma_i) / sum_{j >= i} rate(sigma_j).
- Zero-time odd sites are occupied first, in lexicographic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from numpy.polynomial import Polynomial

from .base import DomainError, SizeError
from .lattice import Window, lattice_graph
from .rsa_process import FaceColouring, Params, octagon_colour

# Orderings are enumerated explicitly only up to this many positive-time sites
MAX_ORDERING_SITES = 8


def _key(node: Hashable):
    if hasattr(node, "x") and hasattr(node, "y"):
        return (node.x, node.y)
    return repr(node)


def _rate(graph: nx.Graph, node: Hashable, params: Params) -> float:
    data = graph.nodes[node]
    if "rate" in data:
        return float(data["rate"])
    if "even" not in data:
        raise DomainError(f"oracle node {node!r} needs an 'even' or 'rate' attribute")
    return params.lam if data["even"] else 1.0


def _is_odd(graph: nx.Graph, node: Hashable) -> bool:
    return not graph.nodes[node].get("even", False)


def _occupy_zero_sites(graph: nx.Graph, zero: Iterable[Hashable]) -> Tuple[FrozenSet, FrozenSet]:
    """Occupy zero-time sites in lexicographic order; return (occupied, still empty)."""
    empty = set(graph.nodes)
    occupied = set()
    for v in sorted(zero, key=_key):
        if v in empty:
            occupied.add(v)
            empty.discard(v)
            empty.difference_update(graph.neighbors(v))
    return frozenset(occupied), frozenset(empty)


def _zero_subsets(graph: nx.Graph, params: Params, forced_zero: Sequence, forced_positive: Sequence) -> Iterator[Tuple[FrozenSet, float]]:
    free = sorted((v for v in graph.nodes if _is_odd(graph, v) and v not in forced_zero and v not in forced_positive), key=_key)
    z = params.zero_prob
    for size in range(len(free) + 1):
        weight = (z ** size) * ((1.0 - z) ** (len(free) - size))
        if weight == 0.0:
            continue
        for subset in itertools.combinations(free, size):
            yield frozenset(subset) | frozenset(forced_zero), weight


@dataclass(frozen=True)
class OracleDistribution:
    """Exact law of the occupied set."""
    nodes: Tuple[Hashable, ...]
    probs: Dict[FrozenSet, float]

    @property
    def total(self) -> float:
        return float(sum(self.probs.values()))

    def occupied_probability(self, node: Hashable) -> float:
        return float(sum(p for occ, p in self.probs.items() if node in occ))

    def event_probability(self, event: Callable[[FrozenSet], bool]) -> float:
        return float(sum(p for occ, p in self.probs.items() if event(occ)))

    def arrays(self, window: Window) -> List[Tuple[np.ndarray, float]]:
        """(occupied mask, probability) pairs laid out on *window*."""
        out = []
        for occ, p in self.probs.items():
            mask = np.zeros(window.shape, dtype=bool)
            for site in occ:
                mask[window.index(site)] = True
            out.append((mask, p))
        return out


def exact_oracle(
    graph: nx.Graph,
    params: Params,
    *,
    max_sites: int = 9,
    forced_zero: Sequence[Hashable] = (),
    forced_positive: Sequence[Hashable] = (),
) -> OracleDistribution:
    """
    Exact distribution of the occupied set on *graph*.

    Nodes need an ``even`` attribute (or an explicit ``rate``). Odd sites in
    *forced_zero* always have time 0; those in *forced_positive* never do.
    """
    n = graph.number_of_nodes()
    if n > max_sites:
        raise SizeError(f"exact_oracle handles at most {max_sites} sites, got {n}")
    for v in list(forced_zero) + list(forced_positive):
        if v not in graph or not _is_odd(graph, v):
            raise DomainError(f"forced site {v!r} must be an odd node of the graph")

    rates = {v: _rate(graph, v, params) for v in graph.nodes}
    neighbours = {v: frozenset(graph.neighbors(v)) for v in graph.nodes}

    @lru_cache(maxsize=None)
    def cascade(empty: FrozenSet) -> Tuple[Tuple[FrozenSet, float], ...]:
        if not empty:
            return ((frozenset(), 1.0),)
        total = sum(rates[v] for v in empty)
        acc: Dict[FrozenSet, float] = {}
        for v in empty:
            pv = rates[v] / total
            for occ, q in cascade(empty - {v} - neighbours[v]):
                key = occ | {v}
                acc[key] = acc.get(key, 0.0) + pv * q
        return tuple(acc.items())

    probs: Dict[FrozenSet, float] = {}
    for zero, weight in _zero_subsets(graph, params, forced_zero, forced_positive):
        first, empty = _occupy_zero_sites(graph, zero)
        for occ, q in cascade(empty):
            key = first | occ
            probs[key] = probs.get(key, 0.0) + weight * q
    return OracleDistribution(nodes=tuple(graph.nodes), probs=probs)


def window_oracle(window: Window, params: Params, **kwargs) -> OracleDistribution:
    """exact_oracle on the octagon graph of a (tiny) window."""
    return exact_oracle(lattice_graph(window), params, **kwargs)


# ---------- ordering enumeration ----------

def ordering_probabilities(nodes: Sequence[Hashable], rates: Dict[Hashable, float]) -> Iterator[Tuple[Tuple[Hashable, ...], float]]:
    """Every arrival order of *nodes* with its competing-exponentials probability."""
    if len(nodes) > MAX_ORDERING_SITES:
        raise SizeError(f"ordering enumeration handles at most {MAX_ORDERING_SITES} sites, got {len(nodes)}")
    for perm in itertools.permutations(nodes):
        prob = 1.0
        remaining = sum(rates[v] for v in perm)
        for v in perm:
            prob *= rates[v] / remaining
            remaining -= rates[v]
        yield perm, prob


def _jam_order(graph: nx.Graph, first: Sequence[Hashable], order: Sequence[Hashable]) -> FrozenSet:
    empty = set(graph.nodes)
    occupied = set()
    for v in list(first) + list(order):
        if v in empty:
            occupied.add(v)
            empty.discard(v)
            empty.difference_update(graph.neighbors(v))
    return frozenset(occupied)


def coupled_zero_outcomes(graph: nx.Graph, params: Params, site: Hashable) -> List[Tuple[FrozenSet, FrozenSet, float]]:
    """
    Joint law of (occupied set with t_site = T_site, occupied set with t_site = 0).

    The other odd sites keep the delta zero-time law; *site* is positive in the base run.
    """
    if site not in graph or not _is_odd(graph, site):
        raise DomainError(f"{site!r} must be an odd node of the graph")
    rates = {v: _rate(graph, v, params) for v in graph.nodes}
    out: Dict[Tuple[FrozenSet, FrozenSet], float] = {}
    for zero, weight in _zero_subsets(graph, params, (), (site,)):
        zero_sorted = sorted(zero, key=_key)
        positive = [v for v in graph.nodes if v not in zero]
        for order, prob in ordering_probabilities(positive, rates):
            base = _jam_order(graph, zero_sorted, order)
            # the modified run puts site among the time-0 sites, in lexicographic position
            modified_first = sorted(zero_sorted + [site], key=_key)
            modified = _jam_order(graph, modified_first, [v for v in order if v != site])
            key = (base, modified)
            out[key] = out.get(key, 0.0) + weight * prob
    return [(b, m, p) for (b, m), p in out.items()]


# ---------- polynomials in p ----------

P_VAR = Polynomial([0.0, 1.0])


def colour_weight(black: int, total: int) -> Polynomial:
    """p^black (1 - p)^(total - black)."""
    return P_VAR ** black * (1.0 - P_VAR) ** (total - black)


def diamond_colourings(shape: Tuple[int, int]) -> Iterator[np.ndarray]:
    count = int(np.prod(shape))
    if count > 16:
        raise SizeError(f"diamond enumeration handles at most 16 diamonds, got {count}")
    for bits in itertools.product((False, True), repeat=count):
        yield np.array(bits, dtype=bool).reshape(shape)


def event_polynomial(
    window: Window,
    states: Iterable[Tuple[np.ndarray, float]],
    indicator: Callable[[FaceColouring], bool],
    *,
    fixed: Optional[Dict[Tuple[int, int], bool]] = None,
) -> Polynomial:
    """
    P[indicator] as a polynomial in p, summed over octagon states and diamond colourings.

    *fixed* pins individual diamonds (by array index); pinned diamonds carry no weight.
    """
    fixed = fixed or {}
    even = window.even_mask()
    dshape = window.diamond_shape
    free_total = int(np.prod(dshape)) - len(fixed)
    colourings = []
    for dia in diamond_colourings(dshape):
        if any(dia[idx] != val for idx, val in fixed.items()):
            continue
        black = int(dia.sum()) - sum(1 for val in fixed.values() if val)
        colourings.append((dia, colour_weight(black, free_total)))

    result = Polynomial([0.0])
    for occupied, prob in states:
        octa = octagon_colour(occupied, even)
        for dia, weight in colourings:
            if indicator(FaceColouring(window=window, octagon_black=octa, diamond_black=dia)):
                result = result + prob * weight
    return result


def polynomials_close(a: Polynomial, b: Polynomial, tol: float = 1e-9) -> bool:
    """Coefficientwise comparison after padding to a common degree."""
    ca, cb = np.asarray(a.coef, dtype=float), np.asarray(b.coef, dtype=float)
    size = max(ca.size, cb.size)
    ca = np.pad(ca, (0, size - ca.size))
    cb = np.pad(cb, (0, size - cb.size))
    return bool(np.all(np.abs(ca - cb) < tol))
