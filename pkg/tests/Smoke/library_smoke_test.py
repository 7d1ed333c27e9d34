"""
Smoke run of every ErsaLab helper at tiny sizes.

    python -m tests.Smoke.library_smoke_test
"""

from __future__ import annotations

from ersa_lab.client import ErsaLab
from ersa_lab.config import ErsaConfig
from ersa_lab.lattice import Rect, Site
from ersa_lab.rsa_process import Params

from tests.Smoke._smoke_harness import CallSpec, run_smoke


def main() -> None:
    lab = ErsaLab(ErsaConfig(seed=11, max_trials=400, min_trials=1))
    rsa = lab.rsa()
    perc = lab.percolation()
    piv = lab.pivotal()
    cs = lab.critical_surface()
    torus = lab.discrete_torus()
    params = Params(1.0, 0.5)

    specs = [
        # Arrival process
        CallSpec("rsa.estimate_affects_probability()", lambda: rsa.estimate_affects_probability(2, params, 20)),
        CallSpec("rsa.dense_frequency()", lambda: rsa.dense_frequency(4, params, 20)),

        # Crossings
        CallSpec("percolation.estimate_h()", lambda: perc.estimate_h(1, 1.0, params, 20, buffer=1)),
        CallSpec("percolation.estimate_h_white()", lambda: perc.estimate_h_white(1, 1.0, params, 20, buffer=1)),
        CallSpec("percolation.estimate_curve()",
                 lambda: perc.estimate_curve(1, 1.0, [Params(0.5, 0.5), Params(2.0, 0.5)], 20, buffer=1)),

        # Pivotals
        CallSpec("pivotal.estimate_phi(diamond)",
                 lambda: piv.estimate_phi(piv.query(Site.diamond(0, 0), 1, 1.0), params, 20, buffer=1)),
        CallSpec("pivotal.russo_residuals()", lambda: piv.russo_residuals(2, 1.0, params, 30, buffer=1)),

        # Critical surface
        CallSpec("critical_surface.duality_residual()", lambda: cs.duality_residual(2, Params(2.0, 0.3), 20)),
        CallSpec("critical_surface.bisect_lambda_c()", lambda: cs.bisect_lambda_c(0.5, 2, 50, tol=2.0, rho=1.0)),
        CallSpec("critical_surface.trace_surface()", lambda: cs.trace_surface([0.3, 0.7], 2, 50, tol=2.0, rho=1.0)),

        # Discrete torus
        CallSpec("discrete_torus.torus_plane_gap()", lambda: torus.torus_plane_gap(4, Rect(2, 3, 2, 3), params, 20)),
        CallSpec("discrete_torus.crude_event_frequency()",
                 lambda: torus.crude_event_frequency(1, 6.0, 0.5, 4, delta=0.05)),
    ]

    run_smoke("ErsaLab smoke (all helpers)", specs)


if __name__ == "__main__":
    main()
