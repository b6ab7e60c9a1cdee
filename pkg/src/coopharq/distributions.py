"""CDFs and densities of combined SNRs (sums of correlated Gamma variables).

``SnrCdf`` picks an evaluation backend from the spectrum:

* empty spectrum: the sum is identically zero, so the CDF is a unit step;
* a single eigenvalue: a plain Gamma law, regularized incomplete gamma;
* otherwise: numerical Laplace inversion of ``M(s) / s``.

For integer fading order the transform is rational and
``cdf_partial_fraction`` inverts it exactly; it is the reference the
contour path is checked against.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .channel import GammaSumSpectrum
from .specfun import (
    DEFAULT_CONTOUR,
    ContourParams,
    DomainError,
    invert_laplace,
    log_gamma_complex,
    reg_lower_incomplete_gamma,
)

__all__ = [
    "Backend",
    "SnrCdf",
    "cdf",
    "cdf_partial_fraction",
    "gamma_ratio_transform",
    "pdf",
    "pdf_partial_fraction",
]


class Backend(str, enum.Enum):
    CONTOUR = "contour"
    PARTIAL_FRACTION = "partial_fraction"
    INCOMPLETE_GAMMA = "incomplete_gamma"
    DEGENERATE = "degenerate"


def integer_order(m: float) -> int | None:
    k = round(m)
    return int(k) if k >= 1 and abs(m - k) < 1e-12 else None


@dataclass(frozen=True)
class SnrCdf:
    """Distribution of a combined SNR together with its evaluation backend.

    Leaving ``backend`` as None selects one from the spectrum size.
    """

    spectrum: GammaSumSpectrum
    backend: Backend | None = None
    contour: ContourParams = DEFAULT_CONTOUR

    def __post_init__(self):
        n = len(self.spectrum)
        backend = self.backend
        if backend is None:
            backend = Backend.DEGENERATE if n == 0 else Backend.INCOMPLETE_GAMMA if n == 1 else Backend.CONTOUR
        backend = Backend(backend)
        object.__setattr__(self, "backend", backend)
        if backend is Backend.DEGENERATE and n != 0:
            raise DomainError("degenerate backend requires an empty spectrum")
        if backend is Backend.INCOMPLETE_GAMMA and n != 1:
            raise DomainError("incomplete-gamma backend requires exactly one eigenvalue")
        if backend is Backend.PARTIAL_FRACTION and integer_order(self.spectrum.multiplicity) is None:
            raise DomainError("partial-fraction backend requires an integer fading order")
        if backend is Backend.CONTOUR and n == 0:
            raise DomainError("contour backend requires a nonempty spectrum")

    def cdf(self, y: float) -> float:
        return cdf(self, y)

    def pdf(self, y: float) -> float:
        return pdf(self, y)


def cdf(dist: SnrCdf, y: float) -> float:
    """P(X <= y) for the combined SNR ``X`` described by ``dist``."""
    if y < 0.0:
        return 0.0
    spectrum = dist.spectrum
    backend = dist.backend
    if backend is Backend.DEGENERATE:
        return 1.0
    if y == 0.0:
        return 0.0
    if backend is Backend.INCOMPLETE_GAMMA:
        return reg_lower_incomplete_gamma(spectrum.multiplicity, y / spectrum.eigenvalues[0])
    if backend is Backend.PARTIAL_FRACTION:
        return cdf_partial_fraction(spectrum, y)
    value = invert_laplace(lambda s: spectrum.mgf(s) / s, y, dist.contour)
    return min(1.0, max(0.0, value))


def pdf(dist: SnrCdf, y: float) -> float:
    """Density of the combined SNR at ``y``."""
    spectrum = dist.spectrum
    if dist.backend is Backend.DEGENERATE:
        raise DomainError("a point mass at zero has no density")
    if y < 0.0:
        return 0.0
    shape = spectrum.total_shape
    if y == 0.0:
        if shape > 1.0 + 1e-12:
            return 0.0
        if shape < 1.0 - 1e-12:
            return math.inf
        return 1.0 / spectrum.eigenvalues[0]
    if dist.backend is Backend.INCOMPLETE_GAMMA:
        m, beta = spectrum.multiplicity, spectrum.eigenvalues[0]
        return math.exp((m - 1.0) * math.log(y) - y / beta - math.lgamma(m) - m * math.log(beta))
    if dist.backend is Backend.PARTIAL_FRACTION:
        return pdf_partial_fraction(spectrum, y)
    return max(0.0, invert_laplace(spectrum.mgf, y, dist.contour))


# Residues of nearby poles are huge and alternate in sign, so the expansion
# is summed in extended precision; the working precision grows with the
# largest term so that the final double is correct to rounding.
_BASE_DPS = 30
_GUARD_DIGITS = 25


def _residue_terms(groups):
    terms = []
    for k, (dk, nk) in enumerate(groups):
        # Taylor coefficients in t of everything except (1 + dk s)^-nk, at s = -1/dk + t
        s0 = -1 / dk
        series = [(-1) ** i / s0 ** (i + 1) for i in range(nk)]
        for l, (dl, nl) in enumerate(groups):
            if l == k:
                continue
            e = 1 - dl / dk
            factor = [math.comb(nl + i - 1, i) * (-dl / e) ** i * e ** (-nl) for i in range(nk)]
            series = [mpmath.fsum(series[i] * factor[n - i] for i in range(n + 1)) for n in range(nk)]
        # (1 + dk s)^-nk = (dk t)^-nk
        coeffs = tuple(series[nk - j] * dk ** (-nk) for j in range(1, nk + 1))
        terms.append((1 / dk, coeffs))
    return terms


def _lost_digits(terms) -> float:
    # max over y of |a| y^(j-1) e^(-y/delta) / (j-1)! is at most |a| delta^(j-1)
    worst = mpmath.mpf(1)
    for pole, coeffs in terms:
        for j, a in enumerate(coeffs, start=1):
            worst = max(worst, abs(a) / pole ** (j - 1))
    return float(mpmath.log10(worst))


@lru_cache(maxsize=4096)
def _residues(spectrum: GammaSumSpectrum):
    """Coefficients ``A[k][j-1]`` of ``M(s)/s = 1/s + sum A_kj / (s + 1/delta_k)**j``.

    Returns ``(dps, terms)`` with mpmath values and the decimal precision
    needed to sum them.
    """
    m = integer_order(spectrum.multiplicity)
    if m is None:
        raise DomainError(f"partial fractions need an integer fading order, got {spectrum.multiplicity!r}")
    dps = _BASE_DPS
    while True:
        with mpmath.workdps(dps):
            groups = [(mpmath.mpf(delta), m * count) for delta, count in spectrum.clustered()]
            terms = _residue_terms(groups)
            needed = math.ceil(_lost_digits(terms)) + _GUARD_DIGITS
        if needed <= dps:
            return dps, tuple(terms)
        dps = needed


def cdf_partial_fraction(spectrum: GammaSumSpectrum, y: float) -> float:
    """Exact CDF for integer fading order by residue expansion."""
    if y < 0.0:
        raise DomainError(f"y must be nonnegative, got {y!r}")
    if len(spectrum) == 0:
        return 1.0
    dps, terms = _residues(spectrum)
    with mpmath.workdps(dps):
        y = mpmath.mpf(y)
        parts = [mpmath.mpf(1)]
        for pole, coeffs in terms:
            decay = mpmath.exp(-pole * y)
            power = mpmath.mpf(1)  # y^(j-1) / (j-1)!
            for j, a in enumerate(coeffs, start=1):
                parts.append(a * power * decay)
                power *= y / j
        total = float(mpmath.fsum(parts))
    return min(1.0, max(0.0, total))


def pdf_partial_fraction(spectrum: GammaSumSpectrum, y: float) -> float:
    """Derivative of ``cdf_partial_fraction`` in ``y``."""
    if y < 0.0:
        raise DomainError(f"y must be nonnegative, got {y!r}")
    dps, terms = _residues(spectrum)
    with mpmath.workdps(dps):
        y = mpmath.mpf(y)
        parts = []
        for pole, coeffs in terms:
            decay = mpmath.exp(-pole * y)
            prev = mpmath.mpf(0)  # y^(j-2) / (j-2)!
            power = mpmath.mpf(1)
            for j, a in enumerate(coeffs, start=1):
                parts.append(a * (prev - pole * power) * decay)
                prev = power
                power *= y / j
        total = float(mpmath.fsum(parts))
    return max(0.0, total)


_vector_log_gamma = np.frompyfunc(log_gamma_complex, 1, 1)


def gamma_ratio_transform(spectrum: GammaSumSpectrum):
    """The transform written as a product of Gamma-function ratios.

    ``prod_k [delta_k**-1 Gamma(delta_k**-1 + s) / Gamma(1 + delta_k**-1 + s)] ** m``

    which equals ``spectrum.mgf`` but is evaluated through complex
    log-gamma.  Slow; intended for cross-checking.
    """
    m = spectrum.multiplicity

    def transform(s):
        s = np.asarray(s, dtype=complex)
        acc = np.zeros_like(s)
        for delta in spectrum.eigenvalues:
            a = 1.0 / delta
            acc = acc + (math.log(a) + _vector_log_gamma(a + s).astype(complex)
                         - _vector_log_gamma(1.0 + a + s).astype(complex))
        return np.exp(m * acc)

    return transform
