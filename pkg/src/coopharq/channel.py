"""Time-correlated Nakagami-m links and their correlated-Gamma spectra.

A per-round SNR ``z_k = gamma_T * |h_k|**2`` is Gamma(m, beta_k) with
``beta_k = Omega_k * gamma_T / m``.  The sum over rounds of an exponentially
correlated sequence has transform ``prod_k (1 + delta_k * s) ** -m`` where
``delta_k`` are the eigenvalues of ``D @ C`` (``D = diag(beta)``, ``C`` the
Gaussian-level correlation matrix).  ``GammaSumSpectrum`` carries those
eigenvalues and the shared shape ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "CORRELATION_MODELS",
    "GammaSumSpectrum",
    "LinkModel",
    "ModelError",
    "SnrScale",
    "build_correlation",
    "concat_spectra",
    "spectrum_of",
]

CORRELATION_MODELS = ("exponential", "product")

# relative gap below which two eigenvalues are treated as one repeated pole
CLUSTER_RTOL = 1e-9


class ModelError(ValueError):
    """Inconsistent or degenerate channel description."""


@dataclass(frozen=True)
class SnrScale:
    """Transmit SNR ``P_s / sigma**2`` on a linear scale."""

    gamma_t: float

    def __post_init__(self):
        if not (self.gamma_t > 0.0 and math.isfinite(self.gamma_t)):
            raise ModelError(f"transmit SNR must be positive and finite, got {self.gamma_t!r}")

    @classmethod
    def from_db(cls, db: float) -> "SnrScale":
        return cls(10.0 ** (db / 10.0))

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.gamma_t)


@dataclass(frozen=True)
class LinkModel:
    """One hop: fading order, per-round mean power and time correlation.

    ``correlation`` selects how the squared-envelope correlation between
    rounds i and j is built from ``rho``: ``"exponential"`` uses
    ``rho ** |i - j|``, ``"product"`` uses ``rho ** ((i + j) / 2)``.
    """

    m: float
    omega: tuple[float, ...]
    rho: float = 0.0
    correlation: str = "exponential"

    def __post_init__(self):
        omega = self.omega
        if np.isscalar(omega):
            omega = (omega,)
        object.__setattr__(self, "omega", tuple(float(w) for w in omega))
        if not (self.m > 0.0 and math.isfinite(self.m)):
            raise ModelError(f"fading order m must be positive, got {self.m!r}")
        if not self.omega:
            raise ModelError("omega must list at least one round")
        if any(not (w > 0.0 and math.isfinite(w)) for w in self.omega):
            raise ModelError(f"mean powers must be positive, got {self.omega!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ModelError(f"rho must lie in [0, 1), got {self.rho!r}")
        if self.correlation not in CORRELATION_MODELS:
            raise ModelError(f"unknown correlation model {self.correlation!r}")

    @classmethod
    def constant(cls, m: float, omega: float, rho: float, rounds: int, correlation: str = "exponential") -> "LinkModel":
        """Same mean power in every one of ``rounds`` rounds."""
        return cls(m=m, omega=(float(omega),) * rounds, rho=rho, correlation=correlation)

    @property
    def rounds(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class GammaSumSpectrum:
    """Eigenvalues of a correlated-Gamma sum sharing one shape ``multiplicity``."""

    eigenvalues: tuple[float, ...]
    multiplicity: float

    def __post_init__(self):
        eig = tuple(float(e) for e in self.eigenvalues)
        object.__setattr__(self, "eigenvalues", eig)
        if not self.multiplicity > 0.0:
            raise ModelError(f"multiplicity must be positive, got {self.multiplicity!r}")
        if any(not (e > 0.0 and math.isfinite(e)) for e in eig):
            raise ModelError(f"eigenvalues must be positive, got {eig!r}")

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def mean(self) -> float:
        return self.multiplicity * sum(self.eigenvalues)

    @property
    def total_shape(self) -> float:
        return self.multiplicity * len(self.eigenvalues)

    def clustered(self, rtol: float = CLUSTER_RTOL) -> list[tuple[float, int]]:
        """Distinct eigenvalues with their repeat counts.

        Values within ``rtol`` of the first member of a cluster are merged and
        represented by the cluster mean.
        """
        groups: list[list[float]] = []
        for e in sorted(self.eigenvalues):
            if groups and abs(e - groups[-1][0]) <= rtol * groups[-1][0]:
                groups[-1].append(e)
            else:
                groups.append([e])
        return [(sum(g) / len(g), len(g)) for g in groups]

    @cached_property
    def _clusters(self) -> list[tuple[float, int]]:
        return self.clustered()

    def mgf(self, s):
        """``E[exp(-s X)] = prod (1 + delta * s) ** -m`` on the principal branch."""
        s = np.asarray(s, dtype=complex)
        log_m = np.zeros_like(s)
        for delta, count in self._clusters:
            log_m = log_m + count * np.log1p(delta * s)
        return np.exp(-self.multiplicity * log_m)


def build_correlation(rounds: int, rho: float, model: str = "exponential", first: int = 0) -> np.ndarray:
    """Gaussian-level correlation matrix for ``rounds`` consecutive rounds.

    Entry (i, j) is the square root of the squared-envelope correlation
    between absolute rounds ``first + i + 1`` and ``first + j + 1``; the
    diagonal is one.  ``first`` only matters for the product model.
    """
    if rounds < 0:
        raise ModelError(f"round count must be nonnegative, got {rounds}")
    if not 0.0 <= rho < 1.0:
        raise ModelError(f"rho must lie in [0, 1), got {rho!r}")
    idx = np.arange(first + 1, first + rounds + 1, dtype=float)
    if model == "exponential":
        c = rho ** (np.abs(idx[:, None] - idx[None, :]) / 2.0)
    elif model == "product":
        c = rho ** ((idx[:, None] + idx[None, :]) / 4.0)
    else:
        raise ModelError(f"unknown correlation model {model!r}")
    np.fill_diagonal(c, 1.0)
    return c


def spectrum_of(link: LinkModel, scale: SnrScale, rounds: int, first: int = 0) -> GammaSumSpectrum:
    """Spectrum of ``sum_{k=first+1}^{first+rounds} z_k`` for one link.

    Eigenvalues of ``D C`` are taken from the symmetric matrix
    ``D^{1/2} C D^{1/2}``, which has the same spectrum.
    """
    if first < 0 or rounds < 0 or first + rounds > link.rounds:
        raise ModelError(
            f"rounds {first + 1}..{first + rounds} exceed the {link.rounds} rounds described by the link"
        )
    if rounds == 0:
        return GammaSumSpectrum((), link.m)
    beta = np.asarray(link.omega[first:first + rounds]) * scale.gamma_t / link.m
    c = build_correlation(rounds, link.rho, link.correlation, first)
    try:
        np.linalg.cholesky(c)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"correlation matrix is not positive definite (rho={link.rho})") from exc
    if not np.any(c - np.eye(rounds)):
        return GammaSumSpectrum(tuple(sorted(beta, reverse=True)), link.m)
    root = np.sqrt(beta)
    eig = np.linalg.eigvalsh(root[:, None] * c * root[None, :])
    if eig[0] <= 0.0:
        raise ModelError(f"non-positive eigenvalue {eig[0]:.3e}; correlation too close to 1")
    return GammaSumSpectrum(tuple(eig[::-1]), link.m)


def concat_spectra(a: GammaSumSpectrum, b: GammaSumSpectrum) -> GammaSumSpectrum:
    """Spectrum of the sum of two independent correlated-Gamma sums."""
    if a.multiplicity != b.multiplicity:
        raise ModelError(f"fading orders differ: {a.multiplicity} vs {b.multiplicity}")
    return GammaSumSpectrum(a.eigenvalues + b.eigenvalues, a.multiplicity)


def as_omega(values: float | Sequence[float], rounds: int) -> tuple[float, ...]:
    """Expand a scalar mean power to ``rounds`` rounds; lists pass through."""
    if np.isscalar(values):
        return (float(values),) * rounds
    return tuple(float(v) for v in values)
