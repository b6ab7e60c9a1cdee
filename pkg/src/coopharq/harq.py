"""Outage probability and delay-limited throughput of cooperative HARQ-CC.

Phase I: the source broadcasts to relay and destination, which both combine
all copies by MRC.  Once the relay decodes after round ``r``, phase II
starts and the destination also combines the relay's copies from rounds
``r + 1`` onward.  The destination outage after ``k`` rounds follows from the
law of total probability over the relay decode round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .channel import LinkModel, ModelError, SnrScale, concat_spectra, spectrum_of
from .distributions import SnrCdf
from .specfun import DEFAULT_CONTOUR, ContourParams

__all__ = [
    "HarqConfig",
    "Links",
    "OutageTable",
    "dlt",
    "outage_dest",
    "outage_dest_given_relay",
    "outage_relay",
    "outage_table",
    "snr_threshold",
]


@dataclass(frozen=True)
class Links:
    sd: LinkModel
    sr: LinkModel
    rd: LinkModel


@dataclass(frozen=True)
class HarqConfig:
    """Protocol parameters for one operating point.

    ``payload_bits`` is carried for bookkeeping only; no metric depends on it.
    """

    K: int
    rate: float
    scale: SnrScale
    links: Links
    contour: ContourParams = DEFAULT_CONTOUR
    payload_bits: int | None = None

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ModelError(f"K must be a positive integer, got {self.K!r}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ModelError(f"rate must be positive, got {self.rate!r}")
        for name in ("sd", "sr", "rd"):
            link = getattr(self.links, name)
            if link.rounds < self.K:
                raise ModelError(f"{name} link describes {link.rounds} rounds but K={self.K}")

    def with_rate(self, rate: float) -> "HarqConfig":
        return replace(self, rate=rate)

    @property
    def threshold(self) -> float:
        return snr_threshold(self.rate)


@dataclass(frozen=True)
class OutageTable:
    """Outage probabilities for every round of one configuration.

    relay[r]                  P_R^out(r), r = 0..K
    dest[k]                   P_D^out(k), k = 0..K
    dest_given_relay[k-1, r]  P_D^out(k | r), k = 1..K, r = 0..K
    """

    relay: tuple[float, ...]
    dest: tuple[float, ...]
    dest_given_relay: np.ndarray

    @property
    def K(self) -> int:
        return len(self.dest) - 1

    def given(self, k: int, r: int) -> float:
        return float(self.dest_given_relay[k - 1, r])


def snr_threshold(rate: float) -> float:
    """SNR at which ``log2(1 + snr)`` reaches ``rate``."""
    if not rate > 0.0:
        raise ModelError(f"rate must be positive, got {rate!r}")
    return math.expm1(rate * math.log(2.0))


# Spectra depend on the link and scale only, not on the rate, so they are
# shared across the rate sweeps of the optimizer.
@lru_cache(maxsize=8192)
def link_spectrum(link: LinkModel, scale: SnrScale, rounds: int, first: int = 0):
    return spectrum_of(link, scale, rounds, first)


@lru_cache(maxsize=8192)
def combined_spectrum(links: Links, scale: SnrScale, k: int, r: int):
    sd = link_spectrum(links.sd, scale, k)
    if r >= k:
        return sd
    return concat_spectra(sd, link_spectrum(links.rd, scale, k - r, first=r))


def _prob(spectrum, cfg: HarqConfig) -> float:
    return SnrCdf(spectrum, contour=cfg.contour).cdf(cfg.threshold)


def outage_relay(cfg: HarqConfig, r: int) -> float:
    """P_R^out(r): relay still fails after combining ``r`` rounds."""
    if not 0 <= r <= cfg.K:
        raise ValueError(f"r must lie in 0..{cfg.K}, got {r}")
    if r == 0:
        return 1.0
    return _prob(link_spectrum(cfg.links.sr, cfg.scale, r), cfg)


def outage_dest_given_relay(cfg: HarqConfig, k: int, r: int) -> float:
    """P_D^out(k | r): destination fails after ``k`` rounds, relay decoded at ``r``.

    For ``r >= k`` only the direct link has contributed; otherwise the relay
    adds its copies from rounds ``r + 1 .. k``.
    """
    if not 1 <= k <= cfg.K:
        raise ValueError(f"k must lie in 1..{cfg.K}, got {k}")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    return _prob(combined_spectrum(cfg.links, cfg.scale, k, min(r, k)), cfg)


def _dest_from(relay, given_k, k: int) -> float:
    # the tail r >= k of the total-probability sum collapses into one term
    total = 0.0
    for r in range(1, k):
        total += (relay[r - 1] - relay[r]) * given_k[r]
    return total + given_k[k] * relay[k - 1]


def outage_dest(cfg: HarqConfig, k: int) -> float:
    """P_D^out(k): destination still fails after ``k`` rounds."""
    if not 0 <= k <= cfg.K:
        raise ValueError(f"k must lie in 0..{cfg.K}, got {k}")
    if k == 0:
        return 1.0
    relay = [outage_relay(cfg, r) for r in range(k)]
    given_k = [outage_dest_given_relay(cfg, k, r) for r in range(k + 1)]
    return _dest_from(relay, given_k, k)


def outage_table(cfg: HarqConfig) -> OutageTable:
    """All relay, conditional and destination outages for rounds up to K."""
    K = cfg.K
    relay = tuple(outage_relay(cfg, r) for r in range(K + 1))
    given = np.empty((K, K + 1))
    for k in range(1, K + 1):
        phase_one = outage_dest_given_relay(cfg, k, k)
        for r in range(K + 1):
            given[k - 1, r] = phase_one if r >= k else outage_dest_given_relay(cfg, k, r)
    dest = (1.0,) + tuple(_dest_from(relay, given[k - 1], k) for k in range(1, K + 1))
    return OutageTable(relay=relay, dest=dest, dest_given_relay=given)


def dlt_from_table(table: OutageTable, rate: float) -> float:
    return sum(rate / k * (table.dest[k - 1] - table.dest[k]) for k in range(1, table.K + 1))


def dlt(cfg: HarqConfig) -> float:
    """Delay-limited throughput in bits/s/Hz."""
    return dlt_from_table(outage_table(cfg), cfg.rate)
