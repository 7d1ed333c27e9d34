"""
ersa_lab.cli
============

``ersa-lab`` command line.

Every subcommand resolves its configuration (config file, then flags), prints it to
stderr, and writes one CSV table to ``--out`` (stdout when omitted). Each CSV starts
with ``# key=value`` provenance lines. Worker count is left out of the provenance so
runs that differ only in ``--workers`` produce byte-identical files.

Exit codes: 0 success, 1 failed verification, 2 usage or domain error.

CSV columns per subcommand:
    estimate-h     n, rho, lambda, p, delta, colour, value, ci_lo, ci_hi, trials, successes, dense_failures
    estimate-phi   site, kind, n, rho, lambda, p, delta, value, ci_lo, ci_hi, trials
    russo          term, derivative, derivative_se, pivotal_sum, pivotal_sum_se, residual, residual_se
    duality        n, lambda, p, residual, stderr, h_primal, h_dual, trials, buffer
    bisect         p, n, lambda_lo, lambda_hi, h_at_mid, ci_lo, ci_hi, trials, seed, converged, monotone_ok
                   (with --lambda: lam, n, p_lo, p_hi, ...)
    trace-surface  as bisect, one row per p
    torus-gap      n, rect, gap, stderr, h_torus, h_plane, trials
    crude-event    n, lambda0, p_tilde, delta, crude_frequency, f_frequency, trials
    fourier        quantity, index, value
    verify         suite, check, passed, detail
"""

import argparse
import io
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .base import DiagnosticsError, DomainError, SizeError
from .client import ErsaLab
from .config import ErsaConfig, load_config
from .critical_surface import LAMBDA_BRACKET
from .discrete_torus import default_delta
from .lattice import Rect, Site
from .percolation import Colour
from .rsa_process import Params
from .sharp_threshold import ProbVector, influences, load_table, probability, wht
from .verify import SCALES, SUITES, run_suite

logger = logging.getLogger("ersa-lab")

CONFIG_KEYS = frozenset(f.name for f in fields(ErsaConfig))
# Flags that must not change the output bytes
NON_PROVENANCE = frozenset({"workers", "chunk_size", "out", "config", "log_level", "command", "handler"})


# ---------- output ----------

def format_value(value: Any, digits: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits}g}"
    return str(value)


def write_csv(out: TextIO, provenance: Mapping[str, Any], columns: Sequence[str],
              rows: Iterable[Sequence[Any]], digits: int) -> None:
    for key in sorted(provenance):
        out.write(f"# {key}={format_value(provenance[key], digits)}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        cells = [format_value(v, digits) for v in row]
        out.write(",".join(f'"{c}"' if ("," in c or '"' in c) else c for c in cells) + "\n")


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_ints(text: str, count: int) -> List[int]:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise DomainError(f"expected {count} comma-separated integers, got {text!r}") from None
    if len(values) != count:
        raise DomainError(f"expected {count} comma-separated integers, got {text!r}")
    return values


def _params(args: argparse.Namespace) -> Params:
    return Params(args.lam, args.p, args.delta)


# ---------- subcommands ----------

def cmd_estimate_h(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    perc = lab.percolation()
    params = _params(args)
    if args.colour == Colour.WHITE.value:
        est = perc.estimate_h_white(args.n, args.rho, params, args.trials, args.seed, buffer=args.buffer)
    else:
        est = perc.estimate_h(args.n, args.rho, params, args.trials, args.seed, buffer=args.buffer)
    return {
        "columns": ["n", "rho", "lambda", "p", "delta", "colour", "value", "ci_lo", "ci_hi", "trials", "successes", "dense_failures"],
        "rows": [[args.n, args.rho, params.lam, params.p, params.delta, args.colour, est.value, est.ci_lo, est.ci_hi,
                  est.trials, est.successes, est.dense_failures]],
    }


def cmd_estimate_phi(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    x, y = _parse_ints(args.site, 2)
    site = Site.diamond(x, y) if args.kind == "diamond" else Site.octagon(x, y)
    piv = lab.pivotal()
    params = _params(args)
    est = piv.estimate_phi(piv.query(site, args.n, args.rho), params, args.trials, args.seed, buffer=args.buffer)
    return {
        "columns": ["site", "kind", "n", "rho", "lambda", "p", "delta", "value", "ci_lo", "ci_hi", "trials"],
        "rows": [[str(site), args.kind, args.n, args.rho, params.lam, params.p, params.delta, est.value, est.ci_lo, est.ci_hi, est.trials]],
    }


def cmd_russo(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    res = lab.pivotal().russo_residuals(args.n, args.rho, _params(args), args.trials, args.seed,
                                        h_step=args.h_step, buffer=args.buffer)
    rows = [[t.name, t.derivative.mean, t.derivative.stderr, t.pivotal_sum.mean, t.pivotal_sum.stderr, t.value, t.stderr]
            for t in res.terms()]
    return {
        "columns": ["term", "derivative", "derivative_se", "pivotal_sum", "pivotal_sum_se", "residual", "residual_se"],
        "rows": rows,
    }


def cmd_duality(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    params = _params(args)
    r = lab.critical_surface().duality_residual(args.n, params, args.trials, args.seed, buffer_scale=args.buffer_scale)
    return {
        "columns": ["n", "lambda", "p", "residual", "stderr", "h_primal", "h_dual", "trials", "buffer"],
        "rows": [[args.n, params.lam, params.p, r.value, r.stderr, r.h_primal, r.h_dual, r.trials, r.buffer]],
    }


def _row_table(rows: Sequence[Any]) -> Dict[str, Any]:
    dicts = [r.as_dict() for r in rows]
    columns = list(dicts[0]) if dicts else []
    return {"columns": columns, "rows": [[d[c] for c in columns] for d in dicts]}


def cmd_bisect(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    cs = lab.critical_surface()
    if (args.p is None) == (args.lam is None):
        raise DomainError("bisect needs exactly one of --p (bisect lambda) or --lambda (bisect p)")
    if args.p is not None:
        bracket = (args.lo if args.lo is not None else LAMBDA_BRACKET[0], args.hi if args.hi is not None else LAMBDA_BRACKET[1])
        row = cs.bisect_lambda_c(args.p, args.n, args.trials, args.target, args.tol, args.seed,
                                 bracket=bracket, rho=args.rho, delta=args.delta)
    else:
        bracket = (args.lo if args.lo is not None else 0.0, args.hi if args.hi is not None else 1.0)
        row = cs.bisect_p_c(args.lam, args.n, args.trials, args.target, args.tol, args.seed,
                            bracket=bracket, rho=args.rho, delta=args.delta)
    return _row_table([row])


def cmd_trace_surface(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    cs = lab.critical_surface()
    rows = cs.trace_surface(_parse_floats(args.p_grid), args.n, args.trials, args.seed,
                            target=args.target, tol=args.tol, rho=args.rho)
    for p, mid, lo, hi in cs.dual_products(rows, rho=args.rho):
        logger.info("lambda_c(%.4g) * lambda_c(%.4g): %.6f (bracket product [%.6f, %.6f])", p, 1.0 - p, mid, lo, hi)
    return _row_table(rows)


def cmd_torus_gap(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    x_lo, x_hi, y_lo, y_hi = _parse_ints(args.rect, 4)
    rect = Rect(x_lo, x_hi, y_lo, y_hi)
    gap = lab.discrete_torus().torus_plane_gap(args.n, rect, _params(args), args.trials, args.seed, buffer=args.buffer)
    return {
        "columns": ["n", "rect", "gap", "stderr", "h_torus", "h_plane", "trials"],
        "rows": [[args.n, args.rect, gap.gap, gap.difference.stderr, gap.h_torus, gap.h_plane, gap.trials]],
    }


def cmd_crude_event(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    delta = args.delta_block if args.delta_block is not None else default_delta(args.n)
    crude, f = lab.discrete_torus().crude_event_frequency(args.n, args.lambda0, args.p_tilde, args.trials, args.seed, delta=delta)
    return {
        "columns": ["n", "lambda0", "p_tilde", "delta", "crude_frequency", "f_frequency", "trials"],
        "rows": [[args.n, args.lambda0, args.p_tilde, delta, crude, f, args.trials]],
    }


def cmd_fourier(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    f = load_table(args.table, cap=lab.cfg.table_cap)
    pv = ProbVector(_parse_floats(args.pv)) if args.pv else ProbVector(np.full(f.k + 1, 1.0 / (f.k + 1)))
    if pv.k != f.k:
        raise DomainError(f"--pv has {pv.k + 1} entries but the table has k={f.k}")
    infl = influences(f, pv)
    rows: List[List[Any]] = [["probability", "", probability(f, pv)], ["total_influence", "", float(infl.sum())]]
    rows += [["influence", j, float(v)] for j, v in enumerate(infl, start=1)]
    if f.k == 1:
        spec = wht(f.table.astype(float).ravel(), max_m=lab.cfg.wht_max_m)
        levels = np.bincount(spec.level(), weights=spec.coefficients ** 2, minlength=f.n + 1)
        rows += [["spectral_weight", s, float(v)] for s, v in enumerate(levels)]
    else:
        logger.info("level spectrum is written for binary tables only (k=1); table has k=%d", f.k)
    return {"columns": ["quantity", "index", "value"], "rows": rows}


def cmd_verify(lab: ErsaLab, args: argparse.Namespace) -> Dict[str, Any]:
    results = run_suite(lab, args.suite, args.scale, args.seed)
    failed = [r for r in results if not r.passed]
    logger.info("verify %s (%s): %d/%d checks passed", args.suite, args.scale, len(results) - len(failed), len(results))
    return {
        "columns": ["suite", "check", "passed", "detail"],
        "rows": [[r.suite, r.name, r.passed, r.detail] for r in results],
        "exit": 1 if failed else 0,
    }


# ---------- parser ----------

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Flat JSON file of config keys and flag defaults.")
    common.add_argument("--workers", type=int, default=None, help="Worker processes (results do not depend on this).")
    common.add_argument("--seed", type=int, default=None, help="Master seed (falls back to the config file, then ERSA_SEED, then 0).")
    common.add_argument("--out", type=Path, default=None, help="CSV output path (stdout when omitted).")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return common


def _add_params(p: argparse.ArgumentParser, *, lam_default: Optional[float] = 1.0, p_default: Optional[float] = 0.5) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=lam_default, help="Even-site arrival rate.")
    p.add_argument("--p", type=float, default=p_default, help="Diamond enhancement probability.")
    p.add_argument("--delta", type=float, default=0.0, help="Odd-site zero-time parameter.")


def _add_geometry(p: argparse.ArgumentParser, *, n: int = 8) -> None:
    p.add_argument("--n", type=int, default=n, help="Rectangle half-height (R(2n, rho)).")
    p.add_argument("--rho", type=float, default=1.0, help="Aspect ratio.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ersa-lab", description="eRSA percolation lab on the octagon/diamond lattice.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    p = sub.add_parser("estimate-h", parents=[common], help="Crossing probability of R(2n, rho).")
    _add_geometry(p)
    _add_params(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--colour", choices=[c.value for c in Colour], default=Colour.BLACK.value)
    p.add_argument("--buffer", type=int, default=None)
    p.set_defaults(handler=cmd_estimate_h)

    p = sub.add_parser("estimate-phi", parents=[common], help="Pivotal probability of one site.")
    _add_geometry(p, n=2)
    _add_params(p)
    p.add_argument("--site", default="0,0", help="x,y")
    p.add_argument("--kind", choices=["octagon", "diamond"], default="diamond")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--buffer", type=int, default=None)
    p.set_defaults(handler=cmd_estimate_phi)

    p = sub.add_parser("russo", parents=[common], help="Finite-difference derivatives against pivotal sums.")
    _add_geometry(p, n=4)
    _add_params(p)
    p.add_argument("--trials", type=int, default=2_000)
    p.add_argument("--h-step", type=float, default=None)
    p.add_argument("--buffer", type=int, default=None)
    p.set_defaults(handler=cmd_russo)

    p = sub.add_parser("duality", parents=[common], help="|h(lambda, p) + h(1/lambda, 1-p) - 1| on the square.")
    p.add_argument("--n", type=int, default=8)
    _add_params(p, lam_default=2.0, p_default=0.3)
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--buffer-scale", type=int, default=1)
    p.set_defaults(handler=cmd_duality)

    for name, handler, help_text in (("bisect", cmd_bisect, "Pseudo-critical lambda at fixed p (or p at fixed lambda)."),
                                     ("trace-surface", cmd_trace_surface, "Pseudo-critical lambda over a p grid.")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        _add_geometry(p, n=16)
        p.add_argument("--trials", type=int, default=2_000)
        p.add_argument("--target", type=float, default=0.5)
        p.add_argument("--tol", type=float, default=0.2)
        if name == "bisect":
            _add_params(p, lam_default=None, p_default=None)
            p.add_argument("--lo", type=float, default=None, help="Lower bracket end.")
            p.add_argument("--hi", type=float, default=None, help="Upper bracket end.")
        else:
            p.add_argument("--p-grid", default="0.1,0.3,0.5,0.7,0.9", help="Comma-separated p values in (0, 1).")
        p.set_defaults(handler=handler)

    p = sub.add_parser("torus-gap", parents=[common], help="Torus against plane crossing probability of one rectangle.")
    p.add_argument("--n", type=int, default=32, help="Torus side is 2n.")
    p.add_argument("--rect", default="30,33,30,33", help="x_lo,x_hi,y_lo,y_hi")
    _add_params(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--buffer", type=int, default=None)
    p.set_defaults(handler=cmd_torus_gap)

    p = sub.add_parser("crude-event", parents=[common], help="Frequency of the crude event on random X-fields.")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--lambda0", type=float, default=6.0)
    p.add_argument("--p-tilde", type=float, default=0.5)
    p.add_argument("--delta", dest="delta_block", type=float, default=None,
                   help="Block length (default (log n)^-1/2); needs 1 - e^(-lambda0 delta) <= p_tilde <= e^-delta.")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(handler=cmd_crude_event)

    p = sub.add_parser("fourier", parents=[common], help="Influences and level spectrum of a truth table.")
    p.add_argument("--table", type=Path, required=True, help='Header "k n", then one 0/1 per line.')
    p.add_argument("--pv", default=None, help="Comma-separated probability vector (uniform when omitted).")
    p.set_defaults(handler=cmd_fourier)

    p = sub.add_parser("verify", parents=[common], help="Property and acceptance suites.")
    p.add_argument("--suite", choices=["all", *SUITES], default="all")
    p.add_argument("--scale", choices=sorted(SCALES), default="full")
    p.set_defaults(handler=cmd_verify)

    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> "tuple[argparse.Namespace, Dict[str, Any]]":
    """Parse flags; values from --config fill every flag the command line left at its default."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    file_values: Dict[str, Any] = load_config(args.config) if args.config else {}
    flag_values = {k.replace("-", "_"): v for k, v in file_values.items() if k.replace("-", "_") not in CONFIG_KEYS}
    cfg_values = {k: v for k, v in file_values.items() if k in CONFIG_KEYS}
    if flag_values:
        defaults = vars(parser.parse_args([args.command] + _required_flags(args)))
        for key, value in flag_values.items():
            if key not in defaults or key in NON_PROVENANCE:
                raise ValueError(f"Config file {args.config}: unknown key {key!r}")
            if getattr(args, key) == defaults[key]:
                setattr(args, key, value)
    return args, cfg_values


def _required_flags(args: argparse.Namespace) -> List[str]:
    # fourier --table is the only required flag
    return ["--table", str(args.table)] if args.command == "fourier" else []


def resolve_config(args: argparse.Namespace, cfg_values: Mapping[str, Any]) -> ErsaConfig:
    values = dict(cfg_values)
    if args.workers is not None:
        values["workers"] = args.workers
    if args.seed is not None:
        values["seed"] = args.seed
    cfg = ErsaConfig.from_mapping(values)
    args.seed = cfg.resolve_seed(args.seed)
    return ErsaConfig.from_mapping({**values, "seed": args.seed})


def provenance(args: argparse.Namespace, cfg: ErsaConfig) -> Dict[str, Any]:
    prov: Dict[str, Any] = {"ersa_lab_version": __version__, "command": args.command}
    prov.update({f"cfg.{k}": v for k, v in asdict(cfg).items() if k not in NON_PROVENANCE})
    for key, value in sorted(vars(args).items()):
        if key in NON_PROVENANCE or value is None:
            continue
        prov[key] = value
    return prov


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args, cfg_values = parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2
    except (ValueError, OSError) as e:
        print(f"ersa-lab: {e}", file=sys.stderr)
        return 2

    logging.basicConfig(level=getattr(logging, args.log_level), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args, cfg_values)
    except ValueError as e:
        print(f"ersa-lab: {e}", file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, "config": asdict(cfg)}, sort_keys=True), file=sys.stderr)

    lab = ErsaLab(cfg, logger=logger)
    try:
        result = args.handler(lab, args)
    except (DomainError, SizeError, OSError) as e:
        logger.error("%s", e)
        return 2
    except DiagnosticsError as e:
        logger.error("%s", e)
        return 1

    buffer = io.StringIO()
    write_csv(buffer, provenance(args, cfg), result["columns"], result["rows"], cfg.float_digits)
    if args.out is None:
        sys.stdout.write(buffer.getvalue())
    else:
        args.out.write_text(buffer.getvalue(), encoding="utf-8")
        logger.info("wrote %s", args.out)
    return int(result.get("exit", 0))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
