"""
ersa_lab.verify
===============

Property and acceptance suites run by ``ersa-lab verify``.

Each suite is a list of named checks. A check returns (passed, detail); an exception
inside a check counts as a failure with the exception as its detail, so one broken
check never hides the others.

Suites: fourier, oracle, coupling, symmetry, duality, critical, affects, discrete, all.
Scales: ``quick`` (seconds, for smoke runs) and ``full`` (acceptance sizes).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .client import ErsaLab
from .critical_surface import LAMBDA_BRACKET
from .discrete_torus import crude_event, discrete_marginals, f_event, sample_x_field
from .lattice import Rect, Site, Window
from .oracle import window_oracle
from .percolation import CrossingSpec
from .pivotal import check_mra_exact, check_mrb_exact
from .rsa_process import Params, affects, batch_occupied, draw_arrivals, jam, resolve_jamming
from .sharp_threshold import (
    ProbVector,
    all_increasing_tables,
    all_tables,
    binary_influences,
    bonami_beckner_spot_check,
    check_leminfl,
    check_tgw_identity,
    convolve_direct,
    digit_flip,
    dominates,
    key_bound,
    noise,
    norm,
    p_max_second,
    probability,
    tau_table,
    w_ell,
    w_total,
    wht,
)
from .trials import trial_rng

CheckFn = Callable[[], Tuple[bool, str]]

SUITES = ("fourier", "oracle", "coupling", "symmetry", "duality", "critical", "affects", "discrete")

# Bisection checks use a stricter interval than the run config
CRITICAL_CONFIDENCE = 0.999


@dataclass(frozen=True)
class VerifyScale:
    symmetry_trials: int
    duality_trials: int
    oracle_trials: int
    coupling_samples: int
    affects_fields: int
    critical_n: int
    critical_trials: int
    critical_max_trials: int
    marginal_fields: int
    bump_samples: int
    gap_trials: int
    fourier_k_max: int
    fourier_grid: int
    random_tables: int


SCALES: Dict[str, VerifyScale] = {
    "quick": VerifyScale(
        symmetry_trials=2_000, duality_trials=2_000, oracle_trials=20_000, coupling_samples=200,
        affects_fields=100, critical_n=8, critical_trials=400, critical_max_trials=3_200,
        marginal_fields=1, bump_samples=50, gap_trials=400, fourier_k_max=2, fourier_grid=5, random_tables=20,
    ),
    "full": VerifyScale(
        symmetry_trials=20_000, duality_trials=20_000, oracle_trials=100_000, coupling_samples=1_000,
        affects_fields=1_000, critical_n=16, critical_trials=2_000, critical_max_trials=8_000,
        marginal_fields=3, bump_samples=1_000, gap_trials=10_000, fourier_k_max=3, fourier_grid=20, random_tables=100,
    ),
}


@dataclass
class CheckSpec:
    name: str
    fn: CheckFn


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


# ---------- fourier ----------

def _pv_grid(k: int, count: int, rng: np.random.Generator) -> List[ProbVector]:
    grid = [ProbVector(np.full(k + 1, 1.0 / (k + 1)))]
    while len(grid) < count:
        v = rng.dirichlet(np.ones(k + 1))
        if v.min() > 1e-3:
            v[-1] = 1.0 - v[:-1].sum()
            grid.append(ProbVector(v))
    return grid


def fourier_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    rng = np.random.default_rng(seed)
    l_cap = lab.cfg.l_cap

    def key_bound_sweep() -> Tuple[bool, str]:
        worst, count = -math.inf, 0
        for k in range(1, scale.fourier_k_max + 1):
            for pv in _pv_grid(k, scale.fourier_grid, rng):
                bound = key_bound(pv)
                for f in itertools.product((0, 1), repeat=k + 1):
                    value, tail = w_total(pv, f, l_cap)
                    worst = max(worst, value + tail - bound)
                    count += 1
        return worst <= 1e-12, f"{count} (pv, f) pairs, max(w + tail - bound) = {worst:.3g}"

    def leminfl_sweep() -> Tuple[bool, str]:
        met = violations = 0
        for pv in (ProbVector([0.3, 0.7]), ProbVector([0.5, 0.5]), ProbVector([0.7, 0.3])):
            q = p_max_second(pv)
            for f in all_tables(1, 3):
                report = check_leminfl(f, pv, q)
                met += report.hypothesis_met
                violations += not report.holds
        return violations == 0, f"768 cases, hypothesis met in {met}, {violations} violations"

    def parseval() -> Tuple[bool, str]:
        worst = 0.0
        for _ in range(scale.random_tables):
            h = rng.normal(size=2 ** 8)
            worst = max(worst, abs(norm(h, 2.0) ** 2 - wht(h).norm2_squared()))
        return worst <= 1e-10, f"max |‖h‖² − Σ ĥ²| = {worst:.3g}"

    def convolution_theorem() -> Tuple[bool, str]:
        worst = 0.0
        for _ in range(scale.random_tables):
            g, h = rng.normal(size=2 ** 8), rng.normal(size=2 ** 8)
            lhs = wht(convolve_direct(g, h)).coefficients
            rhs = wht(g).coefficients * wht(h).coefficients
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst <= 1e-10, f"max coefficient gap {worst:.3g}"

    def involution() -> Tuple[bool, str]:
        worst = 0.0
        for _ in range(1_000):
            ell, x = int(rng.integers(1, 21)), float(rng.random())
            y = digit_flip(ell, x)
            worst = max(worst, abs(digit_flip(ell, y) - x), abs(abs(y - x) - 2.0 ** -ell))
        return worst <= 1e-10, f"max deviation {worst:.3g}"

    def domination_monotone() -> Tuple[bool, str]:
        vectors = [ProbVector([a, 1.0 - a]) for a in np.linspace(0.1, 0.9, 9)]
        tables = list(all_increasing_tables(1, 2))
        pairs = bad = 0
        for p, q in itertools.product(vectors, vectors):
            if not dominates(p, q):
                continue
            pairs += 1
            bad += sum(probability(f, q) < probability(f, p) - 1e-12 for f in tables)
        return bad == 0, f"{pairs} dominating pairs x {len(tables)} increasing tables, {bad} violations"

    def tgw_identity() -> Tuple[bool, str]:
        worst = 0.0
        for _ in range(scale.random_tables):
            worst = max(worst, check_tgw_identity(rng.integers(0, 2, size=2 ** 8)).discrepancy)
        return worst <= 1e-10, f"max |4 Σ ĥ²|S| − w| = {worst:.3g}"

    def digit_influences_match() -> Tuple[bool, str]:
        pv, m = ProbVector([0.25, 0.5, 0.25]), 6
        tau = tau_table(pv, m)
        worst = 0.0
        for f in itertools.product((0, 1), repeat=3):
            infl = binary_influences(np.asarray(f)[tau])
            worst = max(worst, max(abs(infl[ell - 1] - w_ell(pv, f, ell)) for ell in range(1, m + 1)))
        return worst <= 1e-12, f"max |digit influence − w_ell| = {worst:.3g}"

    def noise_contracts() -> Tuple[bool, str]:
        worst = -math.inf
        for _ in range(scale.random_tables):
            h, eps = rng.normal(size=2 ** 8), float(rng.random())
            worst = max(worst, norm(noise(eps, h), 2.0) - norm(h, 2.0))
        bb = bonami_beckner_spot_check(rng.normal(size=2 ** 8))
        return worst <= 1e-12, (f"max(‖T h‖ − ‖h‖) = {worst:.3g}; "
                                f"‖T R‖₂ = {bb.noised_l2:.4g} vs ‖R‖₄/₃ = {bb.l43:.4g} (reported)")

    return [
        CheckSpec("key bound on w_total", key_bound_sweep),
        CheckSpec("influence lower bound, k=1 n=3", leminfl_sweep),
        CheckSpec("Parseval, m=8", parseval),
        CheckSpec("convolution theorem, m=8", convolution_theorem),
        CheckSpec("digit flip involution", involution),
        CheckSpec("domination implies monotone probability", domination_monotone),
        CheckSpec("spectral weight equals total digit influence", tgw_identity),
        CheckSpec("dyadic digit influences equal w_ell", digit_influences_match),
        CheckSpec("noise operator contracts", noise_contracts),
    ]


# ---------- oracle ----------

def oracle_corpus() -> List[Tuple[str, Window, Params]]:
    """Small plane instances (at most 6 octagons) with mixed rates and delays."""
    return [
        ("1x1", Window.plane(0, 0, 1, 1), Params(1.0, 0.5)),
        ("1x2 lambda=2", Window.plane(0, 0, 2, 1), Params(2.0, 0.5)),
        ("3-path", Window.plane(0, 0, 3, 1), Params(1.0, 0.5)),
        ("3-path lambda=3", Window.plane(0, 0, 3, 1), Params(3.0, 0.5)),
        ("4-path delta=0.5", Window.plane(0, 0, 4, 1), Params(1.0, 0.5, 0.5)),
        ("2x2", Window.plane(0, 0, 2, 2), Params(1.0, 0.5)),
        ("2x2 lambda=0.5", Window.plane(0, 0, 2, 2), Params(0.5, 0.3)),
        ("2x2 odd corner", Window.plane(1, 0, 2, 2), Params(1.5, 0.5, 0.2)),
        ("2x3", Window.plane(0, 0, 2, 3), Params(1.0, 0.5)),
        ("3x2 lambda=2 delta=0.3", Window.plane(0, 0, 3, 2), Params(2.0, 0.7, 0.3)),
        ("5-path", Window.plane(0, 0, 5, 1), Params(1.0, 0.5)),
        ("6-path lambda=0.7", Window.plane(0, 0, 6, 1), Params(0.7, 0.5)),
    ]


def oracle_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    def three_path() -> Tuple[bool, str]:
        w = Window.plane(0, 0, 3, 1)
        value = window_oracle(w, Params(1.0, 0.5)).occupied_probability(Site.octagon(1, 0))
        return abs(value - 1.0 / 3.0) < 1e-12, f"P[centre occupied] = {value:.15f}"

    def sums_to_one() -> Tuple[bool, str]:
        worst = max(abs(window_oracle(w, params).total - 1.0) for _, w, params in oracle_corpus())
        return worst <= 1e-12, f"max |total − 1| = {worst:.3g}"

    def monte_carlo_agrees() -> Tuple[bool, str]:
        failures = []
        trials = scale.oracle_trials
        for stream, (name, w, params) in enumerate(oracle_corpus()):
            dist = window_oracle(w, params)
            occupied = batch_occupied(w, params, trials, trial_rng(seed, stream, 0))
            events = [(f"{s} occupied", dist.occupied_probability(s), occupied[(slice(None),) + w.index(s)])
                      for s in w.octagons()]
            for mask, p in dist.arrays(w):
                if p >= 0.05:
                    events.append((f"state {mask.astype(int).tolist()}", p, np.all(occupied == mask, axis=(1, 2))))
            for label, exact, hits in events:
                freq = float(np.mean(hits))
                sigma = math.sqrt(exact * (1.0 - exact) / trials)
                if abs(freq - exact) > max(4.0 * sigma, 1e-12):
                    failures.append(f"{name}: {label} freq {freq:.5f} vs {exact:.5f}")
        return not failures, "; ".join(failures) or f"{len(oracle_corpus())} instances agree within 4 sigma"

    def mra_exact() -> Tuple[bool, str]:
        failures = []
        for name, w, params in oracle_corpus():
            if w.width < 2 or w.height < 2:
                continue
            _, _, ok = check_mra_exact(w, params, CrossingSpec(w.rect))
            if not ok:
                failures.append(name)
        return not failures, "failed on " + ", ".join(failures) if failures else "d/dp P[H] = sum phi(x') on every instance"

    def mrb_exact() -> Tuple[bool, str]:
        w = Window.plane(0, 0, 2, 2)
        lhs, rhs = check_mrb_exact(w, Params(1.0, 0.5, 0.3), CrossingSpec(w.rect))
        return abs(lhs - rhs) < 1e-4, f"dh/d delta = {lhs:.6f}, -e^-delta sum phi = {rhs:.6f}"

    def delta_sign() -> Tuple[bool, str]:
        perc = lab.percolation()
        trials = scale.symmetry_trials
        h0 = perc.estimate_h(4, 1.0, Params(1.0, 0.5), trials, seed, track_dense=False)
        h1 = perc.estimate_h(4, 1.0, Params(1.0, 0.5, 0.2), trials, seed, track_dense=False)
        return h1.ci_lo <= h0.ci_hi, f"h(delta=0) = {h0.value:.5f}, h(delta=0.2) = {h1.value:.5f}"

    return [
        CheckSpec("3-path centre occupied with probability 1/3", three_path),
        CheckSpec("oracle distributions sum to 1", sums_to_one),
        CheckSpec("Monte Carlo matches oracle", monte_carlo_agrees),
        CheckSpec("d/dp identity exact on oracle instances", mra_exact),
        CheckSpec("d/d delta identity on 2x2", mrb_exact),
        CheckSpec("crossing does not increase with delta on 8x8", delta_sign),
    ]


# ---------- coupling / symmetry / duality / critical ----------

def coupling_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    def monotone() -> Tuple[bool, str]:
        w = Window.plane(0, 0, 8, 8)
        base, more_lam, more_p = Params(1.0, 0.3), Params(2.0, 0.3), Params(1.0, 0.7)
        violations = 0
        for t in range(scale.coupling_samples):
            f = draw_arrivals(w, base, trial_rng(seed, 0, t))
            b0 = resolve_jamming(f, base).colouring.black_set()
            for other in (more_lam, more_p):
                violations += bool(np.any(b0 & ~resolve_jamming(f, other).colouring.black_set()))
        return violations == 0, f"{scale.coupling_samples} samples, {violations} violations"

    return [CheckSpec("black set grows with lambda and p", monotone)]


def symmetry_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    def self_dual() -> Tuple[bool, str]:
        est = lab.percolation().estimate_h(8, 1.0, Params(1.0, 0.5), scale.symmetry_trials, seed, track_dense=False)
        sigma = math.sqrt(0.25 / est.trials)
        return abs(est.value - 0.5) <= 4.0 * sigma, f"h_1(8, 1, 1/2) = {est.value:.5f} (4 sigma = {4 * sigma:.5f})"

    return [CheckSpec("square crossing at the self-dual point is 1/2", self_dual)]


def duality_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    cs = lab.critical_surface()

    def residual() -> Tuple[bool, str]:
        r = cs.duality_residual(8, Params(2.0, 0.3), scale.duality_trials, seed)
        if r.value < 4.0 * r.stderr:
            return True, f"residual {r.value:.5f} < 4 x {r.stderr:.5f}"
        doubled = cs.duality_residual(8, Params(2.0, 0.3), scale.duality_trials, seed, buffer_scale=2)
        return doubled.value < r.value, (f"buffer bias: residual {r.value:.5f} (buffer {r.buffer}) -> "
                                         f"{doubled.value:.5f} (buffer {doubled.buffer})")

    def self_dual_identity() -> Tuple[bool, str]:
        r = cs.duality_residual(8, Params(1.0, 0.5), scale.duality_trials // 4, seed)
        gap = abs(r.value - abs(2.0 * r.h_primal - 1.0))
        return gap < 1e-12, f"residual {r.value:.6f} vs |2h - 1| {abs(2 * r.h_primal - 1):.6f}"

    return [
        CheckSpec("duality residual at (2, 0.3)", residual),
        CheckSpec("self-dual residual equals |2h - 1|", self_dual_identity),
    ]


def critical_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    strict = ErsaLab(replace(lab.cfg, confidence=CRITICAL_CONFIDENCE, max_trials=scale.critical_max_trials), logger=lab.logger)
    overrides = f"confidence={strict.cfg.confidence}, max_trials={strict.cfg.max_trials}"
    lab.logger.info("critical suite overrides cfg: %s (was confidence=%s, max_trials=%d)",
                    overrides, lab.cfg.confidence, lab.cfg.max_trials)
    cs = strict.critical_surface()
    n, trials = scale.critical_n, scale.critical_trials

    def self_dual_point() -> Tuple[bool, str]:
        row = cs.bisect_lambda_c(0.5, n, trials, tol=0.2, seed=seed, rho=1.0)
        return row.lambda_lo <= 1.0 <= row.lambda_hi, (f"[{row.lambda_lo:.4f}, {row.lambda_hi:.4f}] "
                                                      f"(converged={row.converged}; {overrides})")

    def no_enhancement() -> Tuple[bool, str]:
        row = cs.bisect_lambda_c(0.0, n, trials, tol=0.2, seed=seed, rho=3.0, bracket=LAMBDA_BRACKET)
        return row.lambda_hi < 10.0, f"[{row.lambda_lo:.4f}, {row.lambda_hi:.4f}] (converged={row.converged}; {overrides})"

    return [
        CheckSpec("pseudo-critical lambda at p=1/2 brackets 1", self_dual_point),
        CheckSpec("pseudo-critical lambda at p=0 below 10", no_enhancement),
    ]


# ---------- affects ----------

def affects_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    def locality() -> Tuple[bool, str]:
        w = Window.plane(0, 0, 8, 8)
        tested = violations = 0
        for t in range(scale.affects_fields):
            rng = trial_rng(seed, 7, t)
            params = Params(float(rng.choice([0.5, 1.0, 2.0])), 0.5)
            f = draw_arrivals(w, params, rng)
            i, j = rng.integers(0, 8, size=2)
            a, b = rng.integers(0, 8, size=2)
            x, y = w.octagon_at(int(i), int(j)), w.octagon_at(int(a), int(b))
            if x == y or affects(x, y, f):
                continue
            tested += 1
            state = jam(f.times(), False)[int(a), int(b)]
            for _ in range(10):
                exp = f.exp.copy()
                exp[int(i), int(j)] = rng.standard_exponential()
                g = replace(f, exp=exp)
                violations += bool(jam(g.times(), False)[int(a), int(b)] != state)
        return violations == 0, f"{tested} unaffected pairs x 10 resamples, {violations} violations"

    return [CheckSpec("unaffected sites ignore the source's arrival time", locality)]


# ---------- discrete ----------

def discrete_checks(lab: ErsaLab, scale: VerifyScale, seed: int) -> List[CheckSpec]:
    def marginals() -> Tuple[bool, str]:
        lam0, p_tilde, n, delta = 4.0, 0.5, 2, 0.05
        counts, cells = np.zeros(4), 0
        for t in range(scale.marginal_fields):
            field = sample_x_field(n, lam0, p_tilde, trial_rng(seed, 11, t), delta=delta)
            counts += np.bincount(field.values.ravel(), minlength=4)
            cells += field.values.size
        expected = discrete_marginals(lam0, p_tilde, 1.0, delta)
        freq = counts / cells
        sigma = np.sqrt(expected * (1 - expected) / cells)
        ok = bool(np.all(np.abs(freq - expected) <= 4 * sigma))
        return ok, f"{cells} cells, max |freq − P| / sigma = {float(np.max(np.abs(freq - expected) / sigma)):.2f}"

    def crude_monotone() -> Tuple[bool, str]:
        delta, n = 0.05, 2
        violations = true_count = 0
        for t in range(scale.bump_samples):
            rng = trial_rng(seed, 12, t)
            lam0 = float(rng.uniform(4.0, 10.0))
            low = 1.0 - math.exp(-lam0 * delta)
            p_tilde = float(rng.uniform(low, math.exp(-delta)))
            X = sample_x_field(n, lam0, p_tilde, rng, delta=delta)
            before = crude_event(X)
            true_count += before
            cand = np.argwhere(X.values < 3)
            x, y, kk = cand[int(rng.integers(0, len(cand)))]
            if before and not crude_event(X.bumped(int(x), int(y), int(kk) - 1)):
                violations += 1
        return violations == 0, f"{scale.bump_samples} bumps ({true_count} from true), {violations} violations"

    def crude_inside_f() -> Tuple[bool, str]:
        delta, n = 0.05, 2
        violations = 0
        for t in range(scale.bump_samples):
            rng = trial_rng(seed, 13, t)
            X = sample_x_field(n, float(rng.uniform(4.0, 10.0)), 0.6, rng, delta=delta)
            violations += crude_event(X) and not f_event(X)
        return violations == 0, f"{scale.bump_samples} samples, {violations} violations"

    def torus_gap() -> Tuple[bool, str]:
        gap = lab.discrete_torus().torus_plane_gap(32, Rect(30, 33, 30, 33), Params(1.0, 0.5), scale.gap_trials, seed)
        se = gap.difference.stderr
        return gap.gap <= 4.0 * se or gap.gap == 0.0, f"gap {gap.gap:.5f} (stderr {se:.5f})"

    return [
        CheckSpec("X-field marginals", marginals),
        CheckSpec("crude event increasing in X", crude_monotone),
        CheckSpec("crude event implies undelayed crossing", crude_inside_f),
        CheckSpec("torus and plane agree on a 4x4 square", torus_gap),
    ]


SUITE_BUILDERS: Dict[str, Callable[[ErsaLab, VerifyScale, int], List[CheckSpec]]] = {
    "fourier": fourier_checks,
    "oracle": oracle_checks,
    "coupling": coupling_checks,
    "symmetry": symmetry_checks,
    "duality": duality_checks,
    "critical": critical_checks,
    "affects": affects_checks,
    "discrete": discrete_checks,
}


def run_checks(suite: str, specs: Sequence[CheckSpec], logger: Optional[logging.Logger] = None) -> List[CheckResult]:
    logger = logger or logging.getLogger("ersa-lab")
    results = []
    for spec in specs:
        try:
            passed, detail = spec.fn()
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(suite, spec.name, bool(passed), detail))
        log = logger.info if passed else logger.error
        log("[%s] %s %s: %s", suite, "PASS" if passed else "FAIL", spec.name, detail)
    return results


def run_suite(lab: ErsaLab, suite: str = "all", scale: str = "full", seed: Optional[int] = None) -> List[CheckResult]:
    """Run one suite (or all) and return every check's result."""
    if scale not in SCALES:
        raise ValueError(f"Unknown scale {scale!r}; expected one of {sorted(SCALES)}")
    names = SUITES if suite == "all" else (suite,)
    unknown = [s for s in names if s not in SUITE_BUILDERS]
    if unknown:
        raise ValueError(f"Unknown suite {unknown[0]!r}; expected one of {['all', *SUITES]}")
    seed = lab.cfg.resolve_seed(seed)
    results: List[CheckResult] = []
    for name in names:
        results.extend(run_checks(name, SUITE_BUILDERS[name](lab, SCALES[scale], seed), lab.logger))
    return results
