"""Monte Carlo simulation of the two-phase cooperative HARQ-CC protocol.

Correlated Nakagami-m power gains are generated by Gaussian squaring: with
``2m`` independent Gaussian vectors ``x_j ~ N(0, C)``,
``z_k = beta_k / 2 * sum_j x_jk**2`` is Gamma(m, beta_k) and
``corr(z_i, z_j) = C_ij**2``.  This needs ``2m`` to be an integer.

Episodes are processed in fixed-size chunks.  Chunk ``i`` of link ``l`` draws
from ``SeedSequence(seed, spawn_key=(i, l))``, so the outcome stream only
depends on the seed, never on how chunks are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import LinkModel, SnrScale, build_correlation
from .harq import HarqConfig

__all__ = [
    "EpisodeOutcome",
    "SimEstimate",
    "SimSummary",
    "SimulatorUnsupported",
    "estimate_dlt",
    "estimate_outage",
    "run_episode",
    "sample_correlated_gamma",
    "simulate",
]

CHUNK = 1 << 16
MIN_EPISODES = 10_000
_LINK_ORDER = ("sd", "sr", "rd")


class SimulatorUnsupported(ValueError):
    """The sampler cannot represent the requested fading order."""


@dataclass(frozen=True)
class EpisodeOutcome:
    relay_decode_round: int | None
    dest_decode_round: int | None
    rounds_used: int


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    half_width_3sigma: float
    n: int

    def contains(self, value: float) -> bool:
        return abs(self.mean - value) <= self.half_width_3sigma


def _shape_copies(m: float) -> int:
    two_m = 2.0 * m
    k = round(two_m)
    if k < 1 or abs(two_m - k) > 1e-12:
        raise SimulatorUnsupported(f"simulator needs 2m to be a positive integer, got m={m!r}")
    return int(k)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def sample_correlated_gamma(
    link: LinkModel, scale: SnrScale, rounds: int, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Per-round SNRs ``z_1..z_rounds`` of one link, shape ``(size, rounds)``.

    ``z_k`` is marginally Gamma(m, Omega_k * gamma_T / m); the
    squared-envelope correlation follows the link's correlation model.
    """
    copies = _shape_copies(link.m)
    if rounds > link.rounds:
        raise ValueError(f"link describes {link.rounds} rounds, asked for {rounds}")
    n = 1 if size is None else size
    chol = np.linalg.cholesky(build_correlation(rounds, link.rho, link.correlation))
    beta = np.asarray(link.omega[:rounds]) * scale.gamma_t / link.m
    g = rng.standard_normal((n, copies, rounds)) @ chol.T
    z = 0.5 * beta * np.einsum("ncr,ncr->nr", g, g)
    return z[0] if size is None else z


def _episodes(cfg: HarqConfig, n: int, rngs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized episodes: relay decode round, destination decode round (0 = never), combined SNRs."""
    K = cfg.K
    thr = cfg.threshold
    sd, sr, rd = (
        sample_correlated_gamma(getattr(cfg.links, name), cfg.scale, K, rng, n) for name, rng in zip(_LINK_ORDER, rngs)
    )
    rounds = np.arange(1, K + 1)

    relay_ok = np.cumsum(sr, axis=1) >= thr
    relay_round = np.where(relay_ok.any(axis=1), relay_ok.argmax(axis=1) + 1, 0)
    # relay copies join from the round after the relay decodes
    rd_active = (relay_round[:, None] > 0) & (rounds[None, :] > relay_round[:, None])
    combined = np.cumsum(sd + np.where(rd_active, rd, 0.0), axis=1)
    dest_ok = combined >= thr
    dest_round = np.where(dest_ok.any(axis=1), dest_ok.argmax(axis=1) + 1, 0)
    return relay_round, dest_round, combined


def run_episode(cfg: HarqConfig, rng: np.random.Generator) -> EpisodeOutcome:
    """One protocol episode driven by ``rng``."""
    # one sub-stream per link, in the same order as the batch kernel
    rngs = [np.random.Generator(np.random.Philox(rng.integers(0, 2**63, size=2))) for _ in _LINK_ORDER]
    relay_round, dest_round, _ = _episodes(cfg, 1, rngs)
    r, d = int(relay_round[0]), int(dest_round[0])
    return EpisodeOutcome(
        relay_decode_round=r or None,
        dest_decode_round=d or None,
        rounds_used=d if d else cfg.K,
    )


@dataclass(frozen=True)
class _Counts:
    n: int
    relay_fail: np.ndarray  # [r-1] -> episodes with relay not decoded after r rounds
    dest_fail: np.ndarray  # [k-1] -> destination not decoded after k rounds
    inv_round_sum: float  # sum over successes of 1 / decode round
    inv_round_sq: float
    rounds_used: int


def _chunk_counts(cfg: HarqConfig, seed: int, index: int, n: int) -> _Counts:
    rngs = [_rng(seed, index, l) for l in range(len(_LINK_ORDER))]
    relay_round, dest_round, _ = _episodes(cfg, n, rngs)
    K = cfg.K
    rounds = np.arange(1, K + 1)
    relay_fail = ((relay_round[:, None] == 0) | (relay_round[:, None] > rounds)).sum(axis=0)
    dest_fail = ((dest_round[:, None] == 0) | (dest_round[:, None] > rounds)).sum(axis=0)
    ok = dest_round > 0
    inv = 1.0 / dest_round[ok]
    used = int(np.where(ok, dest_round, K).sum())
    return _Counts(n, relay_fail, dest_fail, float(inv.sum()), float((inv * inv).sum()), used)


@dataclass(frozen=True)
class SimSummary:
    """Aggregated episode statistics for one configuration."""

    cfg: HarqConfig
    n: int
    relay_fail: tuple[int, ...]
    dest_fail: tuple[int, ...]
    inv_round_sum: float
    inv_round_sq: float
    rounds_used: int

    def _proportion(self, count: int) -> SimEstimate:
        p = count / self.n
        return SimEstimate(p, 3.0 * math.sqrt(p * (1.0 - p) / self.n), self.n)

    def outage(self) -> list[SimEstimate]:
        """Destination outage after k = 1..K rounds."""
        return [self._proportion(c) for c in self.dest_fail]

    def relay_outage(self) -> list[SimEstimate]:
        """Relay outage after r = 1..K rounds."""
        return [self._proportion(c) for c in self.relay_fail]

    def dlt(self) -> SimEstimate:
        rate = self.cfg.rate
        mean = rate * self.inv_round_sum / self.n
        second = rate * rate * self.inv_round_sq / self.n
        var = max(second - mean * mean, 0.0)
        return SimEstimate(mean, 3.0 * math.sqrt(var / self.n), self.n)

    @property
    def mean_rounds(self) -> float:
        return self.rounds_used / self.n


def _chunk_task(args):
    cfg, seed, index, n = args
    return _chunk_counts(cfg, seed, index, n)


def simulate(cfg: HarqConfig, n: int, seed: int, workers: int = 1) -> SimSummary:
    """Run ``n`` episodes; results are bit-identical for any ``workers``."""
    if n < MIN_EPISODES:
        raise ValueError(f"need at least {MIN_EPISODES} episodes, got {n}")
    for name in _LINK_ORDER:
        _shape_copies(getattr(cfg.links, name).m)
    tasks = [(cfg, seed, i, min(CHUNK, n - start)) for i, start in enumerate(range(0, n, CHUNK))]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_task, tasks))
    else:
        parts = [_chunk_task(t) for t in tasks]
    # reduce in chunk order so float sums do not depend on scheduling
    relay = np.zeros(cfg.K, dtype=np.int64)
    dest = np.zeros(cfg.K, dtype=np.int64)
    inv_sum = inv_sq = 0.0
    used = 0
    for part in parts:
        relay += part.relay_fail
        dest += part.dest_fail
        inv_sum += part.inv_round_sum
        inv_sq += part.inv_round_sq
        used += part.rounds_used
    return SimSummary(cfg, n, tuple(int(c) for c in relay), tuple(int(c) for c in dest), inv_sum, inv_sq, used)


def estimate_outage(cfg: HarqConfig, n: int, seed: int, workers: int = 1) -> list[SimEstimate]:
    """Empirical destination outage for k = 1..K with 3-sigma binomial half-widths."""
    return simulate(cfg, n, seed, workers).outage()


def estimate_dlt(cfg: HarqConfig, n: int, seed: int, workers: int = 1) -> SimEstimate:
    """Empirical ``E[rate / decode round]`` (zero for failed episodes)."""
    return simulate(cfg, n, seed, workers).dlt()
