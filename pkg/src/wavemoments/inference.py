"""Bootstrap goodness-of-fit test, the covariance-penalty information
criterion, and ranking of candidate models.

The goodness-of-fit statistic is the minimized objective itself; its null
distribution comes from simulate-and-refit replicates at theta_hat, and the
p-value uses the (1 + count) / (B + 1) convention so it can never be exactly
zero. The criterion adds to the objective an "optimism" penalty,
2 tr{cov[nu_hat, nu(theta_hat)] Omega'}, with the covariance estimated
across the same kind of parametric-bootstrap replicates; noisy covariance
estimates can make the optimism negative, which is reported as is.

All replicates reuse the weighting matrix of the original fit, which makes
every objective directly comparable and leaves p-values invariant under a
positive rescaling of the weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .gmwm import bootstrap_replicates, fit
from .implied import ImpliedEvaluator
from .models import validate_model

__all__ = ["GofResult", "WicResult", "RankTable", "gof_test", "wic", "rank_models"]


@dataclass(frozen=True)
class GofResult:
    """Bootstrapped over-identification test outcome."""

    statistic: float
    p_value: float
    p_ci: tuple
    n_boot: int
    seed: int


@dataclass(frozen=True)
class WicResult:
    """Objective value, optimism penalty and their exact sum."""

    obj_fun: float
    optimism: float
    criterion: float
    n_boot: int
    seed: int


@dataclass(frozen=True)
class RankRow:
    label: str
    wic: WicResult


@dataclass(frozen=True)
class RankTable:
    """Candidate models sorted ascending by criterion."""

    rows: tuple

    def render_text(self):
        """Three-column table in the style of the ranking summary output."""
        lines = ["            Obj Fun Optimism Criterion"]
        width = max(len(r.label) for r in self.rows)
        for i, row in enumerate(self.rows, start=1):
            lines.append(
                f"{i}. {row.label:<{width}}  "
                f"{row.wic.obj_fun:8.4f} {row.wic.optimism:8.4f} "
                f"{row.wic.criterion:9.4f}")
        return "\n".join(lines)


def _require_converged(fit_result):
    if not fit_result.converged:
        raise NumericalError("fit did not converge; inference is unavailable")


def gof_test(fit_result, n_boot=100, seed=1337, threads=1):
    """Parametric-bootstrap J-test on a converged fit.

    The statistic is the minimized objective; each replicate simulates
    at theta_hat, re-estimates the wavelet variance, refits, and records its
    own minimized objective.
    """
    _require_converged(fit_result)
    statistic = float(fit_result.objective_value)
    _, _, obj_b, _ = bootstrap_replicates(
        fit_result.spec, fit_result.theta, fit_result.n_obs, fit_result.omega,
        n_boot=n_boot, seed=seed, robust=fit_result.robust,
        eff=fit_result.eff if fit_result.robust else 0.6,
        alpha=fit_result.alpha, n_levels=fit_result.n_levels, threads=threads)
    count = int(np.sum(obj_b >= statistic))
    p = (1.0 + count) / (n_boot + 1.0)
    half_width = 1.96 * math.sqrt(p * (1.0 - p) / n_boot)
    p_ci = (max(p - half_width, 0.0), min(p + half_width, 1.0))
    return GofResult(statistic=statistic, p_value=p, p_ci=p_ci,
                     n_boot=n_boot, seed=seed)


def wic(fit_result, n_boot=100, seed=1337, threads=1):
    """Covariance-penalty criterion of a converged fit.

    optimism = 2 tr{cov[nu_hat_b, nu(theta_hat_b)] Omega'} over the
    parametric-bootstrap replicates; criterion = objective + optimism,
    exactly.
    """
    _require_converged(fit_result)
    theta_b, nu_b, _, _ = bootstrap_replicates(
        fit_result.spec, fit_result.theta, fit_result.n_obs, fit_result.omega,
        n_boot=n_boot, seed=seed, robust=fit_result.robust,
        eff=fit_result.eff if fit_result.robust else 0.6,
        alpha=fit_result.alpha, n_levels=fit_result.n_levels, threads=threads)
    evaluator = ImpliedEvaluator(fit_result.spec, fit_result.wv.scales)
    implied_b = np.array([evaluator.total(theta) for theta in theta_b])
    kept = nu_b.shape[0]
    if kept < 2:
        raise NumericalError("need at least 2 replicates for the optimism term")
    nu_centered = nu_b - nu_b.mean(axis=0)
    implied_centered = implied_b - implied_b.mean(axis=0)
    cross_cov = nu_centered.T @ implied_centered / (kept - 1)
    optimism = 2.0 * float(np.sum(cross_cov * fit_result.omega.matrix))
    obj = float(fit_result.objective_value)
    return WicResult(obj_fun=obj, optimism=optimism, criterion=obj + optimism,
                     n_boot=n_boot, seed=seed)


def _rank_label(spec):
    return " ".join(term.kind for term in spec.terms)


def rank_models(specs, ts, *, n_boot=100, seed=1337, robust=False, eff=0.6,
                alpha=0.05, n_levels=None, threads=1):
    """Fit every candidate against one shared WV and weighting, compute each
    criterion with a sub-seeded bootstrap, and sort ascending.

    Ties (identical criteria up to float equality) resolve by label, and
    duplicate labels get a #k suffix so rows stay unique.
    """
    specs = list(specs)
    if len(specs) < 2:
        raise DataError("ranking needs at least 2 candidate models")
    for spec in specs:
        validate_model(spec)

    values = np.asarray(getattr(ts, "values", ts), dtype=float)
    # one fit per candidate; the first fit's default weighting is shared so
    # criteria are comparable across models
    shared_omega = None
    rows = []
    seen = {}
    for spec in specs:
        fit_result = fit(
            spec, values, robust=robust, eff=eff,
            omega="default" if shared_omega is None else shared_omega,
            n_boot=0, alpha=alpha, seed=seed, n_levels=n_levels,
            threads=threads)
        if shared_omega is None:
            shared_omega = fit_result.omega
        result = wic(fit_result, n_boot=n_boot,
                     seed=_candidate_seed(seed, spec), threads=threads)
        label = _rank_label(spec)
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label} #{seen[label]}"
        rows.append(RankRow(label=label, wic=result))
    rows.sort(key=lambda row: (row.wic.criterion, row.label))
    return RankTable(rows=tuple(rows))


def _candidate_seed(master, spec):
    """Candidate bootstrap stream keyed on the canonical model text, so
    identical candidates tie exactly and labels break the tie."""
    import hashlib

    from .models import print_model

    digest = hashlib.sha256(print_model(spec).encode()).digest()
    key = int.from_bytes(digest[:8], "big")
    ss = np.random.SeedSequence(int(master), spawn_key=(3, key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
