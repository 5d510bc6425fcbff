"""Model-implied wavelet variance, exactly, for every supported term.

The normative route is model-agnostic: write the level-j coefficient process
as a finite filter applied to a stationary core, then evaluate

    nu_j^2 = sum_{l,m} g_l g_m gamma(|l - m|)

with gamma the core autocovariance. For stationary terms the filter g is the
Haar filter itself; a single regular integration (RW, or d = 1) turns g into
the running partial sums of the Haar taps, which stay finitely supported
because the taps sum to zero. A seasonal integration uses stride-s partial
sums instead, which are finitely supported only when the season divides the
half-window 2^(j-1); otherwise the coefficient process is genuinely
nonstationary and the implied variance does not exist, so we raise rather
than truncate. Two integrations exceed the single vanishing moment of the
Haar filter and are rejected the same way.

Closed forms exist for the simple kinds and act as a fast path; they must
agree with the normative route to 1e-10 relative (enforced by tests).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal

from .errors import ModelError
from .models import ModelTerm, set_params, validate_model
from .wavelet import haar_filter

__all__ = ["ImpliedWv", "ImpliedEvaluator", "arma_acvf", "model_acvf",
           "implied_wv", "implied_wv_term"]


# ---------------------------------------------------------------------------
# ARMA autocovariance (linear system for the first lags, recursion after)
# ---------------------------------------------------------------------------

def arma_acvf(phi, theta, sigma2, maxlag):
    """Autocovariance gamma(0..maxlag) of a causal ARMA process.

    Conventions: y_t = sum phi_i y_{t-i} + e_t + sum theta_j e_{t-j} with
    innovation variance sigma2.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if phi.size and phi.ndim != 1 or theta.size and theta.ndim != 1:
        raise ModelError("coefficient blocks must be one-dimensional")
    p, q = phi.size, theta.size
    if sigma2 <= 0:
        raise ModelError("innovation variance must be > 0")
    if p:
        roots = np.roots(np.concatenate(([1.0], -phi))[::-1])
        if roots.size and np.min(np.abs(roots)) <= 1.0 + 1e-12:
            raise ModelError("nonstationary core")
    if p == 0 and q == 0:
        gamma = np.zeros(maxlag + 1)
        gamma[0] = sigma2
        return gamma

    theta_full = np.concatenate(([1.0], theta))
    psi = np.zeros(q + 1)
    psi[0] = 1.0
    for k in range(1, q + 1):
        acc = theta_full[k]
        for i in range(1, min(k, p) + 1):
            acc += phi[i - 1] * psi[k - i]
        psi[k] = acc

    m = max(p, q) + 1
    rhs = np.zeros(m)
    for k in range(min(m, q + 1)):
        rhs[k] = sigma2 * float(np.dot(theta_full[k:], psi[:q + 1 - k]))
    a = np.zeros((m, m))
    for k in range(m):
        a[k, k] += 1.0
        for i in range(1, p + 1):
            a[k, abs(k - i)] -= phi[i - 1]
    head = np.linalg.solve(a, rhs)

    gamma = np.zeros(max(maxlag + 1, m))
    gamma[:m] = head
    if maxlag + 1 > m and p:
        ar_poly = np.concatenate(([1.0], -phi))
        zi = signal.lfiltic([1.0], ar_poly, gamma[:m][::-1])
        gamma[m:maxlag + 1] = signal.lfilter(
            [1.0], ar_poly, np.zeros(maxlag + 1 - m), zi=zi)[0]
    return gamma[:maxlag + 1]


def _term_core(term):
    """(phi, theta, sigma2, d, sd, s) of the stationary core behind a term.

    QN is special-cased in :func:`model_acvf`; DR never reaches here.
    """
    kind = term.kind
    if kind == "WN":
        return (), (), term.params[0], 0, 0, 1
    if kind == "RW":
        return (), (), term.params[0], 1, 0, 1
    if kind == "AR1":
        return (term.params[0],), (), term.params[1], 0, 0, 1
    if kind == "MA1":
        return (), (term.params[0],), term.params[1], 0, 0, 1
    if kind == "ARMA11":
        return (term.params[0],), (term.params[1],), term.params[2], 0, 0, 1
    if kind == "ARMA":
        p, q = term.orders
        return term.params[:p], term.params[p:p + q], term.params[-1], 0, 0, 1
    if kind == "SARIMA":
        from .simulate import _sarima_blocks

        ar_full, ma_full, sigma2, d, sd, s = _sarima_blocks(term)
        return tuple(ar_full), tuple(ma_full), sigma2, d, sd, s
    raise ModelError(f"{kind} has no stationary core")


def _term_integration(term):
    """(d, sd, s) without needing parameter values."""
    if term.kind == "RW":
        return 1, 0, 1
    if term.kind == "SARIMA":
        p, d, q, sp, sd, sq, s = term.orders
        return d, sd, s
    return 0, 0, 1


def model_acvf(term, maxlag):
    """Autocovariance of the stationary core of a term, gamma(0..maxlag).

    For integrated terms (RW, SARIMA with d or D set) this is the ACVF of the
    increment process; the integration itself is folded into the filter by
    the implied-variance routine. DR is deterministic and has a zero core.
    The filter support bounds how many lags a caller ever needs, so no tail
    truncation is involved.
    """
    if not term.is_fully_valued():
        raise ModelError("term has unvalued parameters")
    if term.kind == "DR":
        return np.zeros(maxlag + 1)
    if term.kind == "QN":
        gamma = np.zeros(maxlag + 1)
        q2 = term.params[0]
        gamma[0] = 2.0 * q2
        if maxlag >= 1:
            gamma[1] = -q2
        return gamma
    phi, theta, sigma2, _, _, _ = _term_core(term)
    return arma_acvf(phi, theta, sigma2, maxlag)


# ---------------------------------------------------------------------------
# Filters on the core process and their autocorrelations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=512)
def _gain_autocorr(level, d, sd, season):
    """Autocorrelation r_g(0..L-1) of the effective core filter at a level."""
    h = haar_filter(level).coefficients
    if d and sd:
        raise ModelError(
            "implied wavelet variance needs at most one integration in total; "
            "the Haar filter has a single vanishing moment")
    if d:
        g = np.cumsum(h)
    elif sd:
        length = h.size
        residues = np.array([h[r::season].sum() for r in range(min(season, length))])
        if np.max(np.abs(residues)) > 1e-12:
            raise ModelError(
                f"seasonally integrated coefficients are nonstationary at "
                f"scale {2 ** level} (period {season} does not divide the "
                f"half-window {length // 2}); implied wavelet variance is "
                "undefined")
        g = np.empty(length)
        for r in range(min(season, length)):
            g[r::season] = np.cumsum(h[r::season])
    else:
        g = h
    full = np.correlate(g, g, mode="full")
    r = full[g.size - 1:]
    r.flags.writeable = False
    return r


def _levels_from_scales(scales):
    scales = np.asarray(scales)
    if scales.ndim != 1 or scales.size == 0:
        raise ModelError("need a non-empty list of scales")
    levels = np.log2(scales.astype(float))
    rounded = np.rint(levels).astype(int)
    if np.any(np.abs(levels - rounded) > 1e-9) or np.any(rounded < 1):
        raise ModelError("scales must be powers of two >= 2")
    return rounded


def _drift_nu2(omega, levels):
    """Deterministic route for DR: apply the filter to a unit ramp."""
    out = np.empty(levels.size)
    for i, j in enumerate(levels):
        h = haar_filter(int(j)).coefficients
        length = h.size
        # tap l multiplies the sample at offset L-1-l of the window
        out[i] = (omega * float(np.dot(h, np.arange(length - 1, -1, -1.0)))) ** 2
    return out


def _normative_term(term, levels):
    if term.kind == "DR":
        return _drift_nu2(term.params[0], levels)
    d, sd, season = _term_integration(term)
    autocorrs = [_gain_autocorr(int(j), d, sd, season) for j in levels]
    maxlag = max(r.size for r in autocorrs) - 1
    gamma = model_acvf(term, maxlag)
    out = np.empty(levels.size)
    for i, r in enumerate(autocorrs):
        lags = r.size
        out[i] = r[0] * gamma[0] + 2.0 * float(np.dot(r[1:], gamma[1:lags]))
    return out


# ---------------------------------------------------------------------------
# Closed-form fast path
# ---------------------------------------------------------------------------

def _two_point_nu2(g0, g1, taus):
    """Any core with gamma(k) = 0 for k >= 2 (MA(1)-like, QN)."""
    n = taus // 2
    return 2.0 * (n * g0 + (2 * n - 3) * g1) / taus.astype(float) ** 2


def _ar1_shape_nu2(gamma0, phi, taus):
    """Haar variance of a gamma0 * phi^|k| autocovariance."""
    n = taus // 2
    tau_f = taus.astype(float)
    bracket = (n * (1.0 - phi * phi) - 3.0 * phi
               + 4.0 * np.power(phi, n + 1) - np.power(phi, 2 * n + 1))
    return 2.0 * gamma0 * bracket / ((1.0 - phi) ** 2 * tau_f ** 2)


def _closed_values(kind, params, taus):
    tau_f = taus.astype(float)
    if kind == "WN":
        return params[0] / tau_f
    if kind == "QN":
        return 6.0 * params[0] / tau_f ** 2
    if kind == "RW":
        return params[0] * (tau_f ** 2 + 2.0) / (12.0 * tau_f)
    if kind == "DR":
        return params[0] ** 2 * tau_f ** 2 / 16.0
    if kind == "AR1":
        phi, sigma2 = params
        if abs(phi) < 1e-12:
            return sigma2 / tau_f
        return _ar1_shape_nu2(sigma2 / (1.0 - phi * phi), phi, taus)
    if kind == "MA1":
        theta, sigma2 = params
        return _two_point_nu2(sigma2 * (1.0 + theta * theta), sigma2 * theta, taus)
    if kind == "ARMA11":
        phi, theta, sigma2 = params
        g0 = sigma2 * (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi)
        g1 = sigma2 * (1.0 + phi * theta) * (phi + theta) / (1.0 - phi * phi)
        if abs(phi) < 1e-12:
            return _two_point_nu2(g0, g1, taus)
        base = g1 / phi
        n = taus // 2
        return _ar1_shape_nu2(base, phi, taus) + 2.0 * n * (g0 - base) / tau_f ** 2
    return None


_CLOSED_KINDS = frozenset({"WN", "QN", "RW", "DR", "AR1", "MA1", "ARMA11"})


def implied_wv_term(term, scales, method="auto"):
    """Implied wavelet variance of one term at the given power-of-two scales.

    ``method`` selects the closed form (``"closed"``), the filter-ACVF
    normative algorithm (``"normative"``) or the closed form whenever one
    exists (``"auto"``).
    """
    if not term.is_fully_valued():
        raise ModelError("term has unvalued parameters")
    taus = np.asarray(scales, dtype=np.int64)
    levels = _levels_from_scales(taus)
    if method == "closed" or (method == "auto" and term.kind in _CLOSED_KINDS):
        out = _closed_values(term.kind, term.params, taus)
        if out is None:
            raise ModelError(f"no closed form for {term.kind}")
        return out
    if method in ("auto", "normative"):
        return _normative_term(term, levels)
    raise ModelError(f"unknown implied-WV method {method!r}")


@dataclass(frozen=True)
class ImpliedWv:
    """Total implied WV plus the per-term contributions, aligned on scales."""

    scales: np.ndarray
    total: np.ndarray
    contributions: tuple  # of (label, np.ndarray)


def implied_wv(spec, theta=None, scales=None, method="auto"):
    """Implied wavelet variance of a full model at the given scales."""
    if scales is None:
        raise ModelError("scales are required")
    if theta is not None:
        spec = set_params(spec, theta)
    validate_model(spec)
    taus = np.asarray(scales, dtype=np.int64)
    counts = {}
    contributions = []
    total = np.zeros(taus.size)
    for term in spec.terms:
        counts[term.kind] = counts.get(term.kind, 0) + 1
        label = f"{term.kind}#{counts[term.kind]}"
        nu2 = implied_wv_term(term, taus, method=method)
        total += nu2
        contributions.append((label, nu2))
    return ImpliedWv(scales=taus, total=total, contributions=tuple(contributions))


# ---------------------------------------------------------------------------
# Hot-path evaluator used by the minimum-distance objective
# ---------------------------------------------------------------------------

class ImpliedEvaluator:
    """Evaluate theta -> total implied WV repeatedly against fixed scales.

    Precomputes the slot layout per term so that an evaluation of a
    closed-form model is a handful of small vector operations; only general
    ARMA/SARIMA terms pay for an autocovariance solve per call.
    """

    def __init__(self, spec, scales, method="auto"):
        self.spec = spec
        self.taus = np.asarray(scales, dtype=np.int64)
        self.levels = _levels_from_scales(self.taus)
        self.method = method
        self._plan = []
        pos = 0
        for term, row in zip(spec.terms, spec.free):
            free_idx = tuple(i for i, f in enumerate(row) if f)
            theta_slice = slice(pos, pos + len(free_idx))
            pos += len(free_idx)
            closed = method != "normative" and term.kind in _CLOSED_KINDS
            if not closed and term.kind != "DR":
                # fail fast on unsupported integrations
                d, sd, season = _term_integration(term)
                for j in self.levels:
                    _gain_autocorr(int(j), d, sd, season)
            self._plan.append((term, free_idx, theta_slice, closed))
        self.n_free = pos

    def total(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(self.taus.size)
        for term, free_idx, theta_slice, closed in self._plan:
            if free_idx:
                params = list(term.params)
                for i, v in zip(free_idx, theta[theta_slice]):
                    params[i] = float(v)
            else:
                params = term.params
            if closed:
                out += _closed_values(term.kind, params, self.taus)
            else:
                filled = ModelTerm(term.kind, tuple(params), term.orders)
                out += _normative_term(filled, self.levels)
        return out
