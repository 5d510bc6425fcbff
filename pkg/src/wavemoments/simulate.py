"""Sample-path generation for every supported model, with per-term breakdowns.

Reproducibility contract: all randomness flows through numpy Generators whose
SeedSequence is derived as ``SeedSequence(master_seed, spawn_key=(tag, index))``.
Tags: 0 = model component streams (index = term position), 1 = contamination.
Other modules reserve further tags (2 = bootstrap replicates, 3 = ranking
candidate streams). Identical ``(spec, n, seed)`` therefore reproduce
identical paths on any platform or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import DataError, ModelError
from .models import validate_model

__all__ = [
    "TimeSeries",
    "LatentBreakdown",
    "child_rng",
    "gen_series",
    "gen_latent",
    "contaminate",
]

_TAG_COMPONENT = 0
_TAG_CONTAMINATION = 1
TAG_BOOTSTRAP = 2


def child_rng(master_seed, tag, index=0):
    """Deterministic sub-stream (tag, index) of a 64-bit master seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class TimeSeries:
    """An ordered sequence of real observations with a sampling interval."""

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise DataError("a time series needs at least 2 values")
        if not np.all(np.isfinite(values)):
            raise DataError("time series contains non-finite values")
        if not self.dt > 0:
            raise DataError("sampling interval must be positive")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class LatentBreakdown:
    """Per-term sample paths plus their sum."""

    components: tuple  # of (label, TimeSeries)
    total: TimeSeries


def _burn_in(p, q, ar):
    """Warm-up length: 10 (p+q+1) max(1, ceil(1/(1-rho))) with rho the
    slowest AR decay rate."""
    rho = 0.0
    if len(ar):
        poly = np.concatenate(([1.0], -np.asarray(ar, dtype=float)))
        roots = np.roots(poly[::-1])
        if roots.size:
            rho = float(np.max(1.0 / np.abs(roots)))
    if rho >= 1.0:
        raise ModelError("nonstationary AR block")
    return 10 * (p + q + 1) * max(1, math.ceil(1.0 / (1.0 - rho)))


def _sim_arma(ar, ma, sigma2, n, rng):
    """Gaussian ARMA recursion through lfilter, with burn-in discarded."""
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    burn = _burn_in(ar.size, ma.size, ar)
    eps = rng.normal(0.0, math.sqrt(sigma2), size=n + burn)
    num = np.concatenate(([1.0], ma))
    den = np.concatenate(([1.0], -ar))
    return signal.lfilter(num, den, eps)[burn:]


def _expand_seasonal(coeffs, seasonal, period):
    """Combine phi(B) and PHI(B^s) into one lag polynomial's coefficients.

    Input and output use the recursion sign convention (coefficients of the
    lag polynomial 1 - c1 B - c2 B^2 - ...).
    """
    poly = np.concatenate(([1.0], -np.asarray(coeffs, dtype=float)))
    seas = np.zeros(len(seasonal) * period + 1)
    seas[0] = 1.0
    for k, c in enumerate(seasonal, start=1):
        seas[k * period] = -c
    full = np.polymul(poly, seas)
    return -full[1:]


def _sarima_blocks(term):
    p, d, q, sp, sd, sq, s = term.orders
    values = term.params
    idx = np.cumsum([0, p, q, sp, sq])
    ar = np.array(values[idx[0]:idx[1]], dtype=float)
    ma = np.array(values[idx[1]:idx[2]], dtype=float)
    sar = np.array(values[idx[2]:idx[3]], dtype=float)
    sma = np.array(values[idx[3]:idx[4]], dtype=float)
    sigma2 = values[-1]
    ar_full = _expand_seasonal(ar, sar, s) if sp else ar
    # the MA side uses the "+" sign convention, so flip into and out of the
    # recursion convention that _expand_seasonal works in
    ma_full = -_expand_seasonal(-ma, -sma, s) if sq else ma
    return ar_full, ma_full, sigma2, d, sd, s


def _seasonal_cumsum(y, period):
    out = y.copy()
    for i in range(period):
        out[i::period] = np.cumsum(out[i::period])
    return out


def _gen_term(term, n, rng):
    kind = term.kind
    if kind == "WN":
        (sigma2,) = term.params
        return rng.normal(0.0, math.sqrt(sigma2), size=n)
    if kind == "QN":
        (q2,) = term.params
        z = rng.normal(0.0, math.sqrt(q2), size=n + 1)
        return np.diff(z)
    if kind == "RW":
        (gamma2,) = term.params
        return np.cumsum(rng.normal(0.0, math.sqrt(gamma2), size=n))
    if kind == "DR":
        (omega,) = term.params
        return omega * np.arange(1, n + 1, dtype=float)
    if kind == "AR1":
        phi, sigma2 = term.params
        return _sim_arma([phi], [], sigma2, n, rng)
    if kind == "MA1":
        theta, sigma2 = term.params
        return _sim_arma([], [theta], sigma2, n, rng)
    if kind == "ARMA11":
        phi, theta, sigma2 = term.params
        return _sim_arma([phi], [theta], sigma2, n, rng)
    if kind == "ARMA":
        p, q = term.orders
        ar = term.params[:p]
        ma = term.params[p:p + q]
        return _sim_arma(ar, ma, term.params[-1], n, rng)
    # SARIMA: simulate the stationary core, then integrate
    ar_full, ma_full, sigma2, d, sd, s = _sarima_blocks(term)
    y = _sim_arma(ar_full, ma_full, sigma2, n, rng)
    if sd:
        y = _seasonal_cumsum(y, s)
    if d:
        y = np.cumsum(y)
    return y


def _term_labels(spec):
    counts = {}
    labels = []
    for term in spec.terms:
        counts[term.kind] = counts.get(term.kind, 0) + 1
        labels.append(f"{term.kind}#{counts[term.kind]}")
    return labels


def gen_latent(spec, n, seed):
    """Simulate each term on its own sub-stream and return paths plus sum."""
    validate_model(spec)
    if not spec.is_fully_valued():
        raise ModelError("cannot simulate: the model has unvalued parameters")
    n = int(n)
    if n < 2:
        raise DataError("need n >= 2")
    labels = _term_labels(spec)
    components = []
    total = np.zeros(n)
    for index, (label, term) in enumerate(zip(labels, spec.terms)):
        rng = child_rng(seed, _TAG_COMPONENT, index)
        path = _gen_term(term, n, rng)
        total += path
        components.append((label, TimeSeries(path)))
    return LatentBreakdown(components=tuple(components), total=TimeSeries(total))


def gen_series(spec, n, seed):
    """Simulate one sample path; equals ``gen_latent(...).total`` exactly."""
    return gen_latent(spec, n, seed).total


def contaminate(ts, fraction, noise_sd, seed):
    """Add Gaussian noise to a without-replacement sample of positions.

    Exactly ``round(fraction * T)`` distinct positions are hit; everything
    else is returned unchanged.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError("contamination fraction must lie in (0, 1)")
    if noise_sd < 0:
        raise DataError("noise_sd must be >= 0")
    values = np.asarray(getattr(ts, "values", ts), dtype=float)
    n = values.size
    k = int(round(fraction * n))
    if k < 1:
        raise DataError(
            f"fraction {fraction} of T={n} rounds to zero contaminated points")
    rng = child_rng(seed, _TAG_CONTAMINATION)
    positions = rng.choice(n, size=k, replace=False)
    out = values.copy()
    out[positions] += rng.normal(0.0, noise_sd, size=k)
    dt = ts.dt if isinstance(ts, TimeSeries) else 1.0
    return TimeSeries(out, dt=dt)
