"""Oracle-agreement checks: analytic tables against simulation and backends against each other."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import Backend, SnrCdf, integer_order
from .harq import HarqConfig, combined_spectrum, dlt_from_table, link_spectrum, outage_table
from .montecarlo import SimEstimate, simulate

__all__ = ["BACKEND_TOL", "Check", "binomial_agreement", "validate_config"]

BACKEND_TOL = 1e-8
SIGMAS = 3.0


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    observed: float
    allowed: float

    @property
    def margin(self) -> float:
        """Allowed deviation minus actual deviation; negative means failure."""
        return self.allowed - abs(self.observed - self.expected)

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0


def binomial_agreement(p: float, est: SimEstimate, sigmas: float = SIGMAS) -> float:
    """Allowed |p_hat - p| for a binomial proportion.

    Uses the larger of the variances implied by the analytic value and by the
    estimate, so a zero-count estimate is not trivially exact.
    """
    q = est.mean
    var = max(p * (1.0 - p), q * (1.0 - q)) / est.n
    return sigmas * math.sqrt(var)


def validate_config(cfg: HarqConfig, episodes: int, seed: int, sim_cfg: HarqConfig | None = None) -> list[Check]:
    """Compare every outage-table entry and the DLT with simulation of ``sim_cfg``.

    ``sim_cfg`` defaults to ``cfg``; passing a different one is how the
    checks themselves are exercised.  For integer fading order every
    spectrum is additionally evaluated by contour inversion and by partial
    fractions.
    """
    sim_cfg = sim_cfg or cfg
    table = outage_table(cfg)
    summary = simulate(sim_cfg, episodes, seed)
    checks = []
    for r, est in enumerate(summary.relay_outage(), start=1):
        checks.append(Check(f"relay_outage[r={r}]", table.relay[r], est.mean, binomial_agreement(table.relay[r], est)))
    for k, est in enumerate(summary.outage(), start=1):
        checks.append(Check(f"dest_outage[k={k}]", table.dest[k], est.mean, binomial_agreement(table.dest[k], est)))
    d = summary.dlt()
    checks.append(Check("dlt", dlt_from_table(table, cfg.rate), d.mean, d.half_width_3sigma))

    thr = cfg.threshold
    spectra = {f"sr[r={r}]": link_spectrum(cfg.links.sr, cfg.scale, r) for r in range(1, cfg.K + 1)}
    for k in range(1, cfg.K + 1):
        for r in range(k + 1):
            spectra[f"dest[k={k},r={r}]"] = combined_spectrum(cfg.links, cfg.scale, k, r)
    for name, spectrum in spectra.items():
        if integer_order(spectrum.multiplicity) is None:
            continue
        exact = SnrCdf(spectrum, Backend.PARTIAL_FRACTION).cdf(thr)
        contour = SnrCdf(spectrum, Backend.CONTOUR, cfg.contour).cdf(thr)
        checks.append(Check(f"backend_agreement[{name}]", exact, contour, BACKEND_TOL))
    return checks
