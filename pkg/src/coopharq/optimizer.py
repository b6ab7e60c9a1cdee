"""Throughput-optimal rate selection by golden-section search."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .harq import HarqConfig, dlt

__all__ = ["RateResult", "RateSearch", "default_search", "dlt_curve", "golden_section_max", "optimal_rate"]

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0
COARSE_POINTS = 16


@dataclass(frozen=True)
class RateSearch:
    lo: float = 0.01
    hi: float = 10.0
    tol: float = 1e-3
    max_iters: int = 200

    def __post_init__(self):
        if not 0.0 <= self.lo < self.hi:
            raise ValueError(f"need 0 <= lo < hi, got lo={self.lo}, hi={self.hi}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")


@dataclass(frozen=True)
class RateResult:
    rate_opt: float
    dlt_opt: float
    iterations: int
    bracket_width: float
    status: str = "ok"  # "ok", "multimodal" or "max_iters"


def default_search(cfg: HarqConfig, tol: float = 1e-3) -> RateSearch:
    """Bracket [0.01, log2(1 + K * gamma_T * max Omega) + 2]."""
    links = cfg.links
    omega_max = max(max(link.omega) for link in (links.sd, links.sr, links.rd))
    hi = math.log2(1.0 + cfg.K * cfg.scale.gamma_t * omega_max) + 2.0
    return RateSearch(lo=0.01, hi=hi, tol=tol)


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float, max_iters: int = 200):
    """Shrink [a, b] around the maximum of a unimodal ``f``.

    Returns ``(a, b, iterations)``; each iteration costs one evaluation and
    multiplies the width by ``INV_PHI``.  Ties move the bracket left.
    """
    h = b - a
    c = a + INV_PHI_SQ * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    iterations = 0
    while b - a > tol and iterations < max_iters:
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INV_PHI_SQ * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
        iterations += 1
    return a, b, iterations


def _count_humps(values: Sequence[float]) -> int:
    scale = max(abs(v) for v in values) or 1.0
    eps = 1e-9 * scale
    n = len(values)
    humps = 0
    for i, v in enumerate(values):
        left = values[i - 1] if i > 0 else -math.inf
        right = values[i + 1] if i < n - 1 else -math.inf
        if v > left + eps and v > right + eps:
            humps += 1
    return humps


def optimal_rate(cfg: HarqConfig, search: RateSearch | None = None) -> RateResult:
    """Rate maximizing the delay-limited throughput; ``cfg.rate`` is ignored.

    A 16-point coarse scan guards the unimodality assumption: if it shows more
    than one local maximum the golden-section search is confined to the
    neighbourhood of the best scan point and the result is flagged
    ``"multimodal"``.
    """
    search = search or default_search(cfg)

    def objective(rate: float) -> float:
        return dlt(cfg.with_rate(rate))

    step = (search.hi - search.lo) / (COARSE_POINTS - 1)
    grid = [search.lo + i * step for i in range(COARSE_POINTS)]
    coarse = [objective(r) for r in grid]
    status = "ok"
    a, b = search.lo, search.hi
    if _count_humps(coarse) > 1:
        best = max(range(COARSE_POINTS), key=coarse.__getitem__)
        a = grid[max(best - 1, 0)]
        b = grid[min(best + 1, COARSE_POINTS - 1)]
        status = "multimodal"
        log.warning("DLT curve has several local maxima on [%g, %g]; refining around %g", search.lo, search.hi, grid[best])

    a, b, iterations = golden_section_max(objective, a, b, search.tol, search.max_iters)
    if b - a > search.tol and status == "ok":
        status = "max_iters"
    rate = 0.5 * (a + b)
    return RateResult(rate_opt=rate, dlt_opt=objective(rate), iterations=iterations, bracket_width=b - a, status=status)


def dlt_curve(cfg: HarqConfig, rates: Sequence[float]) -> list[tuple[float, float]]:
    """``(rate, dlt)`` pairs over an ascending rate grid."""
    rates = list(rates)
    if not rates:
        raise ValueError("rate grid is empty")
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError("grid must ascend")
    return [(r, dlt(cfg.with_rate(r))) for r in rates]
