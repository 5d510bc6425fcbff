"""Minimum-distance estimation: weighting matrix, objective, optimizer,
parametric-bootstrap uncertainty.

The estimator minimizes (nu_hat - nu(theta))' Omega (nu_hat - nu(theta)) over
the unconstrained reparametrization of theta, using a deterministic
Nelder-Mead simplex with one restart from the incumbent. Uncertainty comes
from a parametric bootstrap: B series are simulated from theta_hat on
sub-seeded streams, each replicate is refit the same way the original series
was (rebuilding the default weighting from its own estimated WV, or reusing
an explicitly supplied one), and percentile intervals are read off the
replicate estimates.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ModelError, NumericalError
from .implied import ImpliedEvaluator
from .models import (
    from_unconstrained,
    param_vector,
    set_params,
    to_unconstrained,
    validate_model,
)
from .simulate import TAG_BOOTSTRAP, gen_series
from .wavelet import max_scales, modwt_haar
from .wv import edof, wv_classical, wv_robust

__all__ = ["WeightMatrix", "FitResult", "fit", "nelder_mead", "objective",
           "omega_default", "omega_identity"]


@dataclass(frozen=True)
class WeightMatrix:
    """Positive-semidefinite weighting for the quadratic distance.

    Degenerate scales (zero estimated WV) carry zero weight and are
    effectively excluded from the objective; ``degenerate_scales`` records
    them.
    """

    matrix: np.ndarray
    kind: str                      # "default-diagonal" | "identity" | "user-supplied"
    degenerate_scales: tuple = ()

    @property
    def diagonal(self):
        return np.diag(self.matrix)


def omega_default(wv):
    """Diagonal weights: inverse of the chi-square variance approximation
    2 (nu_j^2)^2 / eta_j of each scale's wavelet-variance estimate."""
    nu2 = np.asarray(wv.nu2, dtype=float)
    eta = edof(wv.counts, wv.scales)
    variances = 2.0 * nu2 ** 2 / eta
    weights = np.zeros(nu2.size)
    alive = variances > 0.0
    if not np.any(alive):
        raise DataError("all scales have degenerate (zero) wavelet variance")
    weights[alive] = 1.0 / variances[alive]
    degenerate = tuple(int(s) for s in np.asarray(wv.scales)[~alive])
    if degenerate:
        warnings.warn(
            f"scales {degenerate} have zero estimated WV and were removed "
            "from the objective", UserWarning, stacklevel=2)
    return WeightMatrix(matrix=np.diag(weights), kind="default-diagonal",
                        degenerate_scales=degenerate)


def omega_identity(n_scales):
    return WeightMatrix(matrix=np.eye(int(n_scales)), kind="identity")


def _omega_user(matrix, n_scales):
    m = np.asarray(matrix, dtype=float)
    if m.shape != (n_scales, n_scales):
        raise DataError(f"weighting matrix must be {n_scales}x{n_scales}")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise DataError("weighting matrix must be symmetric")
    if np.any(np.diag(m) <= 0):
        raise DataError("weighting matrix needs a strictly positive diagonal")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise DataError("weighting matrix must be positive definite") from None
    return WeightMatrix(matrix=m, kind="user-supplied")


def objective(theta, wv, omega, spec):
    """Quadratic distance at a constrained theta; +inf outside the
    parameter space (the optimizer's rejection sentinel)."""
    nu_hat = np.asarray(getattr(wv, "nu2", wv), dtype=float)
    mat = omega.matrix if isinstance(omega, WeightMatrix) else np.asarray(omega)
    try:
        filled = validate_model(set_params(spec, theta))
        evaluator = ImpliedEvaluator(filled, _scales_for(nu_hat.size))
        resid = nu_hat - evaluator.total(param_vector(filled))
    except ModelError:
        return float("inf")
    value = float(resid @ mat @ resid)
    return value if math.isfinite(value) else float("inf")


def _scales_for(n_scales):
    return 2 ** np.arange(1, n_scales + 1)


# ---------------------------------------------------------------------------
# Nelder-Mead
# ---------------------------------------------------------------------------

def nelder_mead(fn, x0, *, step=0.25, ftol=1e-8, max_iter=2000, restarts=1):
    """Derivative-free simplex minimizer, deterministic given its inputs.

    Convergence is declared when the spread of objective values across the
    simplex falls below ``ftol``; after the first convergence (or half the
    budget) the simplex is rebuilt once around the incumbent with a smaller
    step, which guards against premature collapse.
    Returns (x_best, f_best, iterations, n_evals, converged).
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        v = fn(x)
        return v if math.isfinite(v) else float("inf")

    def make_simplex(center, spread):
        pts = [center.copy()]
        for i in range(n):
            p = center.copy()
            p[i] += spread
            pts.append(p)
        values = [call(p) for p in pts]
        order = np.argsort(values, kind="stable")
        return [pts[i] for i in order], [values[i] for i in order]

    pts, vals = make_simplex(x0, step)
    iterations = 0
    restarts_left = restarts
    converged = False
    while iterations < max_iter:
        iterations += 1
        if vals[-1] - vals[0] <= ftol:
            if restarts_left > 0:
                restarts_left -= 1
                pts, vals = make_simplex(pts[0], step * 0.2)
                continue
            converged = True
            break
        centroid = np.mean(pts[:-1], axis=0)
        worst = pts[-1]
        reflected = centroid + (centroid - worst)
        f_reflected = call(reflected)
        if f_reflected < vals[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_expanded = call(expanded)
            if f_expanded < f_reflected:
                pts[-1], vals[-1] = expanded, f_expanded
            else:
                pts[-1], vals[-1] = reflected, f_reflected
        elif f_reflected < vals[-2]:
            pts[-1], vals[-1] = reflected, f_reflected
        else:
            contracted = centroid + 0.5 * (worst - centroid)
            f_contracted = call(contracted)
            if f_contracted < vals[-1]:
                pts[-1], vals[-1] = contracted, f_contracted
            else:
                best = pts[0]
                pts = [best] + [best + 0.5 * (p - best) for p in pts[1:]]
                vals = [vals[0]] + [call(p) for p in pts[1:]]
        order = np.argsort(vals, kind="stable")
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
    else:
        # budget exhausted; report the spread-based convergence state
        converged = vals[-1] - vals[0] <= ftol
    return pts[0], vals[0], iterations, evals, converged


# ---------------------------------------------------------------------------
# Starting values
# ---------------------------------------------------------------------------

_VARIANCE_NAMES = frozenset({"sigma2", "q2", "gamma2"})
_PHI_GRID = (0.1, 0.5, 0.9)


def _start_candidates(spec, nu_hat, scales):
    """Heuristic starting vectors in constrained space.

    Variances split the small-scale energy nu_1 tau_1 equally; AR1
    coefficients come from a stratified grid (every combination is offered
    and the caller keeps the best by objective); drift slope is read off the
    last scale through the DR closed form; remaining coefficients start
    small.
    """
    from .models import _pacf_to_coeffs

    energy = max(float(nu_hat[0] * scales[0]), 1e-12)
    n_var_terms = sum(
        1 for term in spec.terms
        if any(name in _VARIANCE_NAMES for name in term.slot_names()))
    share = energy / max(n_var_terms, 1)
    omega0 = 4.0 * math.sqrt(max(float(nu_hat[-1]), 1e-12)) / float(scales[-1])

    base = []
    ar1_positions = []
    pos = 0
    for term, row in zip(spec.terms, spec.free):
        names = term.slot_names()
        blocks = {}
        for start, stop, _ in term.coefficient_blocks():
            if stop - start > 1:
                partials = _pacf_to_coeffs(
                    np.array([0.2 / (k + 1) for k in range(stop - start)]))
                for offset, i in enumerate(range(start, stop)):
                    blocks[i] = partials[offset]
        for i, (name, is_free) in enumerate(zip(names, row)):
            if not is_free:
                continue
            if i in blocks:
                base.append(float(blocks[i]))
            elif name in _VARIANCE_NAMES:
                base.append(share)
            elif name == "omega":
                base.append(omega0)
            elif name == "phi":
                if term.kind == "AR1":
                    ar1_positions.append(pos)
                    base.append(0.5)
                else:
                    base.append(0.3)
            else:  # single theta coefficient
                base.append(0.1)
            pos += 1

    base = np.asarray(base, dtype=float)
    if not ar1_positions:
        return [base]
    candidates = []
    k = len(ar1_positions)
    if k <= len(_PHI_GRID):
        from itertools import combinations

        combos = list(combinations(_PHI_GRID, k))
    else:
        combos = [tuple(_PHI_GRID[i % len(_PHI_GRID)] for i in range(k))]
    for combo in combos:
        cand = base.copy()
        # larger coefficients on earlier terms; exchangeable anyway
        for position, value in zip(ar1_positions, sorted(combo, reverse=True)):
            cand[position] = value
        candidates.append(cand)
    return candidates


# ---------------------------------------------------------------------------
# Fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Point estimate, weighting, uncertainty and optimizer diagnostics."""

    spec: object
    theta: np.ndarray
    objective_value: float
    omega: WeightMatrix
    wv: object
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_boot: int
    seed: int
    alpha: float
    n_obs: int
    n_levels: int
    robust: bool
    eff: float
    iterations: int
    n_evals: int
    converged: bool
    n_boot_failed: int = 0

    @property
    def labels(self):
        return self.spec.free_slot_labels()

    def fitted_spec(self):
        return set_params(self.spec, self.theta)


def _estimate_wv(values, n_levels, robust, eff, alpha):
    decomp = modwt_haar(values, n_levels)
    if robust:
        return wv_robust(decomp, eff=eff, alpha=alpha)
    return wv_classical(decomp, alpha=alpha)


def _make_objective(spec, nu_hat, omega):
    evaluator = ImpliedEvaluator(spec, _scales_for(nu_hat.size))
    mat = omega.matrix
    diag = np.diag(mat)
    diagonal_only = np.count_nonzero(mat - np.diag(diag)) == 0

    def fn(x):
        try:
            theta = from_unconstrained(x, spec)
            nu_model = evaluator.total(theta)
        except (ModelError, FloatingPointError):
            return float("inf")
        resid = nu_hat - nu_model
        if diagonal_only:
            value = float(np.dot(diag, resid * resid))
        else:
            value = float(resid @ mat @ resid)
        return value if math.isfinite(value) else float("inf")

    return fn


def _minimize(spec, nu_hat, omega, x0, max_iter=2000):
    """Nelder-Mead on the objective normalized by its start value.

    The normalization makes the 1e-8 spread tolerance scale-free, so
    rescaling Omega by any positive constant reproduces the identical
    optimizer path and argmin. An exact fit at the start returns
    immediately.
    """
    fn = _make_objective(spec, nu_hat, omega)
    f0 = fn(x0)
    if f0 == 0.0:
        return from_unconstrained(x0, spec), 0.0, 0, 1, True
    scale = f0 if math.isfinite(f0) and f0 > 0.0 else 1.0
    x_best, _, iterations, n_evals, converged = nelder_mead(
        lambda x: fn(x) / scale, x0, ftol=1e-8, max_iter=max_iter)
    return (from_unconstrained(x_best, spec), fn(x_best), iterations,
            n_evals, converged)


def _derive_seed(master, tag, index):
    ss = np.random.SeedSequence(int(master), spawn_key=(int(tag), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def bootstrap_replicates(spec, theta_hat, n_obs, omega, *, n_boot, seed,
                         robust=False, eff=0.6, alpha=0.05, n_levels=None,
                         threads=1):
    """Simulate-and-refit replicates used by SEs, the GoF test and the WIC.

    Returns (theta_b, nu_b, objective_b, n_failed) with rows ordered by
    replicate index regardless of thread count. When the original fit used
    the data-driven default weighting, every replicate rebuilds it from its
    own estimated WV — the bootstrap must mirror the full estimator or its
    objectives are not exchangeable with the observed one (reusing the
    observed weights makes the fit test severely conservative, since those
    weights are anti-correlated with the observed residuals). An explicit
    user weighting is part of the procedure and is reused as supplied.
    """
    fitted = set_params(spec, theta_hat)
    x_hat = to_unconstrained(theta_hat, spec)
    rebuild = omega.kind == "default-diagonal"

    def one(b):
        series = gen_series(fitted, n_obs, _derive_seed(seed, TAG_BOOTSTRAP, b))
        wv_b = _estimate_wv(series.values, n_levels, robust, eff, alpha)
        try:
            omega_b = omega_default(wv_b) if rebuild else omega
            theta_b, obj_b, _, _, converged = _minimize(
                spec, wv_b.nu2, omega_b, x_hat, max_iter=600)
        except (ModelError, NumericalError, DataError):
            return None
        if not converged:
            return None
        return theta_b, wv_b.nu2, obj_b

    indices = range(n_boot)
    # one filter change around the whole loop: per-replicate warnings are
    # noise, and touching the (global) warning state from pool workers is
    # not thread-safe
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                raw = list(pool.map(one, indices))
        else:
            raw = [one(b) for b in indices]
    kept = [r for r in raw if r is not None]
    n_failed = n_boot - len(kept)
    if n_failed > 0.1 * n_boot:
        raise NumericalError(
            f"{n_failed} of {n_boot} bootstrap replicates failed")
    theta_b = np.array([r[0] for r in kept])
    nu_b = np.array([r[1] for r in kept])
    obj_b = np.array([r[2] for r in kept])
    return theta_b, nu_b, obj_b, n_failed


def fit(spec, ts, *, robust=False, eff=0.6, omega="default", n_boot=100,
        alpha=0.05, seed=1337, n_levels=None, threads=1):
    """Estimate a model on a series and attach bootstrap uncertainty.

    ``omega`` is "default" (inverse approximate variances on the diagonal),
    "identity", or an explicit positive-definite matrix. ``n_boot=0`` skips
    the bootstrap (SEs and CIs come back as NaN), which the inference module
    uses for its replicate refits.
    """
    validate_model(spec)
    values = np.asarray(getattr(ts, "values", ts), dtype=float)
    n_obs = values.size
    j_max = max_scales(n_obs)
    if n_levels is None:
        n_levels = j_max
    elif not 1 <= n_levels <= j_max:
        raise DataError(f"scale cap must lie in 1..{j_max}")
    if n_levels < spec.n_free:
        raise DataError(
            f"model has {spec.n_free} free parameters but only {n_levels} "
            "scales are available; use a longer series or a smaller model")

    wv = _estimate_wv(values, n_levels, robust, eff, alpha)
    if isinstance(omega, str):
        if omega == "default":
            omega_used = omega_default(wv)
        elif omega == "identity":
            omega_used = omega_identity(wv.n_scales)
        else:
            raise DataError(f"unknown weighting choice {omega!r}")
    else:
        omega_used = omega if isinstance(omega, WeightMatrix) \
            else _omega_user(omega, wv.n_scales)

    if spec.is_fully_valued():
        candidates = [param_vector(spec)]
    else:
        candidates = _start_candidates(spec, wv.nu2, wv.scales)
    fn = _make_objective(spec, wv.nu2, omega_used)
    starts = [to_unconstrained(theta, spec) for theta in candidates]
    x0 = starts[int(np.argmin([fn(x) for x in starts]))] if len(starts) > 1 \
        else starts[0]

    theta_hat, value, iterations, n_evals, converged = _minimize(
        spec, wv.nu2, omega_used, x0)
    start_value = fn(x0)
    if value > start_value + 1e-12:  # monotone-improvement guarantee
        raise NumericalError("optimizer worsened the objective")

    if n_boot:
        theta_b, _, _, n_failed = bootstrap_replicates(
            spec, theta_hat, n_obs, omega_used, n_boot=n_boot, seed=seed,
            robust=robust, eff=eff, alpha=alpha, n_levels=n_levels,
            threads=threads)
        se = np.std(theta_b, axis=0, ddof=1)
        ci_low = np.percentile(theta_b, 100.0 * alpha / 2.0, axis=0)
        ci_high = np.percentile(theta_b, 100.0 * (1.0 - alpha / 2.0), axis=0)
        # percentile intervals are anchored at the point estimate
        ci_low = np.minimum(ci_low, theta_hat)
        ci_high = np.maximum(ci_high, theta_hat)
    else:
        nan = np.full(theta_hat.size, np.nan)
        se, ci_low, ci_high, n_failed = nan, nan.copy(), nan.copy(), 0

    return FitResult(
        spec=spec, theta=theta_hat, objective_value=value, omega=omega_used,
        wv=wv, se=se, ci_low=ci_low, ci_high=ci_high, n_boot=n_boot,
        seed=seed, alpha=alpha, n_obs=n_obs, n_levels=n_levels, robust=robust,
        eff=eff if robust else None, iterations=iterations, n_evals=n_evals,
        converged=converged, n_boot_failed=n_failed)
