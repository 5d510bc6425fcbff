"""Haar maximal-overlap wavelet transform.

The level-j filter averages two adjacent blocks of 2^(j-1) samples and takes
half their difference, so for white noise the coefficient variance at scale
tau_j = 2^j is sigma^2 / tau_j. No circular wrap-around is used: only the
M_j = T - 2^j + 1 fully supported coefficients are kept, which is what the
unbiased per-scale variance estimator averages.

Each level is computed from one shared cumulative sum in O(T), so a full
decomposition costs O(T log T).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["HaarFilter", "WaveletDecomposition", "haar_filter", "max_scales", "modwt_haar"]


@dataclass(frozen=True)
class HaarFilter:
    """Level-j Haar filter: +1/2^j on the first 2^(j-1) taps, -1/2^j after.

    Tap l multiplies the sample 2^j - 1 - l positions ahead of the coefficient
    time index, so the positive taps sit on the later half-window.
    """

    level: int
    coefficients: np.ndarray
    scale: int


def haar_filter(level):
    if level < 1:
        raise ValueError("filter level must be >= 1")
    length = 2 ** level
    h = np.empty(length)
    h[: length // 2] = 1.0 / length
    h[length // 2:] = -1.0 / length
    h.flags.writeable = False
    return HaarFilter(level=level, coefficients=h, scale=length)


def max_scales(n_obs):
    """Largest decomposition depth floor(log2(T)) for a series of length T."""
    n_obs = int(n_obs)
    if n_obs < 2:
        raise DataError("need at least 2 observations to decompose")
    return n_obs.bit_length() - 1


@dataclass(frozen=True)
class WaveletDecomposition:
    """Per-scale coefficient vectors W_j for j = 1..J plus the source length."""

    n_obs: int
    coeffs: tuple  # coeffs[j-1] is the length-M_j coefficient array of level j

    @property
    def n_levels(self):
        return len(self.coeffs)

    @property
    def scales(self):
        return 2 ** np.arange(1, self.n_levels + 1)

    @property
    def counts(self):
        return np.array([w.size for w in self.coeffs])

    def level(self, j):
        return self.coeffs[j - 1]


def modwt_haar(values, n_levels=None):
    """Haar MODWT of a series, keeping boundary-free coefficients only.

    ``values`` may be a plain array or anything exposing ``.values``. The
    decomposition depth defaults to floor(log2(T)).
    """
    y = np.asarray(getattr(values, "values", values), dtype=float)
    if y.ndim != 1:
        raise DataError("expected a one-dimensional series")
    n = y.size
    j_max = max_scales(n)
    if n_levels is None:
        n_levels = j_max
    elif not 1 <= n_levels <= j_max:
        raise DataError(
            f"decomposition depth must lie in 1..{j_max} for T={n}, got {n_levels}")
    cums = np.empty(n + 1)
    cums[0] = 0.0
    np.cumsum(y, out=cums[1:])
    coeffs = []
    for j in range(1, n_levels + 1):
        length = 2 ** j
        half = length // 2
        m = n - length + 1
        w = cums[length:length + m] - 2.0 * cums[half:half + m] + cums[:m]
        w /= length
        w.flags.writeable = False
        coeffs.append(w)
    return WaveletDecomposition(n_obs=n, coeffs=tuple(coeffs))
