"""Operation layer shared by the CLI and the HTTP service.

Every operation validates inputs, runs the pipeline and returns a plain
JSON-ready dict carrying the versioned envelope (schema, package version,
command, full config including the seed), which is enough to replay the run
bit-identically. File and transport concerns live in the callers.
"""

from __future__ import annotations

import time
import warnings

import numpy as np

from . import __version__
from .errors import DataError
from .gmwm import fit as gmwm_fit
from .implied import implied_wv
from .inference import gof_test, rank_models, wic
from .models import parse_model, print_model
from .simulate import gen_latent, gen_series
from .wavelet import modwt_haar
from .wv import wv_classical, wv_robust

SCHEMA_VERSION = 1


def _envelope(command, config):
    return {"schema": SCHEMA_VERSION, "version": __version__,
            "command": command, "config": config}


def _floats(array):
    return [float(v) for v in np.asarray(array)]


def _collect_warnings(caught):
    # deduplicated and sorted: replicate warnings may arrive in any order
    # under a thread pool, and the JSON artifacts must be byte-stable
    return sorted({str(w.message) for w in caught})


def _wv_payload(est):
    payload = {
        "scales": [int(s) for s in est.scales],
        "nu2": _floats(est.nu2),
        "ci_low": _floats(est.ci_low),
        "ci_high": _floats(est.ci_high),
        "counts": [int(c) for c in est.counts],
        "estimator": est.estimator,
        "alpha": est.alpha,
    }
    if est.estimator == "robust":
        payload["eff"] = est.eff
        payload["fallback_scales"] = list(est.fallback_scales)
    return payload


def op_simulate(model, n, seed, latent=False):
    """Simulate a model; returns named columns (components plus total when
    ``latent`` is set, a single ``value`` column otherwise)."""
    spec = parse_model(model)
    config = {"model": print_model(spec), "n": int(n), "seed": int(seed),
              "latent": bool(latent)}
    out = _envelope("simulate", config)
    if latent:
        breakdown = gen_latent(spec, n, seed)
        columns = [(label, _floats(ts.values))
                   for label, ts in breakdown.components]
        columns.append(("total", _floats(breakdown.total.values)))
    else:
        columns = [("value", _floats(gen_series(spec, n, seed).values))]
    out["columns"] = [name for name, _ in columns]
    out["values"] = {name: data for name, data in columns}
    return out


def _estimate(values, robust, eff, alpha, n_levels):
    values = np.asarray(values, dtype=float)
    decomp = modwt_haar(values, n_levels)
    if robust:
        return wv_robust(decomp, eff=eff, alpha=alpha)
    return wv_classical(decomp, alpha=alpha)


def op_wvar(values, *, robust=False, eff=0.6, alpha=0.05, n_levels=None):
    """Estimate the wavelet variance of one series."""
    config = {"robust": bool(robust), "eff": float(eff) if robust else None,
              "alpha": float(alpha), "n_levels": n_levels}
    out = _envelope("wvar", config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = _estimate(values, robust, eff, alpha, n_levels)
    out.update(_wv_payload(est))
    out["warnings"] = _collect_warnings(caught)
    if np.all(est.nu2 == 0.0):
        out["warnings"].append("constant series: all wavelet variances are zero")
    return out


def op_compare(series, *, both=False, robust=False, eff=0.6, alpha=0.05,
               n_levels=None):
    """Overlay wavelet variances of several series, or the classical and
    robust estimates of a single one (``both``)."""
    series = list(series)
    if both:
        if len(series) != 1:
            raise DataError("--both compares the two estimators of one series")
        label, values = series[0]
        jobs = [(f"{label} (classical)", values, False),
                (f"{label} (robust)", values, True)]
    else:
        if len(series) < 2:
            raise DataError("compare needs at least 2 series "
                            "(or one series with both estimators)")
        jobs = [(label, values, robust) for label, values in series]
    config = {"both": bool(both), "robust": bool(robust), "eff": float(eff),
              "alpha": float(alpha), "n_levels": n_levels,
              "labels": [j[0] for j in jobs]}
    out = _envelope("compare", config)
    curves = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for label, values, use_robust in jobs:
            est = _estimate(values, use_robust, eff, alpha, n_levels)
            payload = _wv_payload(est)
            payload["label"] = label
            curves.append(payload)
    out["curves"] = curves
    deltas = []
    first = curves[0]
    for other in curves[1:]:
        k = min(len(first["nu2"]), len(other["nu2"]))
        gap = float(np.max(np.abs(
            np.array(first["nu2"][:k]) - np.array(other["nu2"][:k]))))
        deltas.append({"a": first["label"], "b": other["label"],
                       "max_abs_nu2_delta": gap})
    out["deltas"] = deltas
    out["warnings"] = _collect_warnings(caught)
    return out


def _fit_payload(result):
    labels = result.labels
    estimates = []
    for i, label in enumerate(labels):
        term, param = label.split(".", 1)
        estimates.append({
            "label": label,
            "term": term,
            "param": param,
            "estimate": float(result.theta[i]),
            "ci_low": float(result.ci_low[i]),
            "ci_high": float(result.ci_high[i]),
            "se": float(result.se[i]),
        })
    return {
        "model": print_model(result.spec),
        "estimates": estimates,
        "objective": float(result.objective_value),
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "n_obs": int(result.n_obs),
        "n_boot": int(result.n_boot),
        "n_boot_failed": int(result.n_boot_failed),
        "wv": _wv_payload(result.wv),
        "omega": {"kind": result.omega.kind,
                  "diagonal": _floats(result.omega.diagonal)},
    }


def op_fit(values, model, *, robust=False, eff=0.6, n_boot=100, alpha=0.05,
           seed=1337, gof=False, decomp=False, n_levels=None, threads=1):
    """Fit a model, optionally with a goodness-of-fit block and the
    per-term implied decomposition."""
    spec = parse_model(model)
    config = {"model": print_model(spec), "robust": bool(robust),
              "eff": float(eff) if robust else None, "B": int(n_boot),
              "alpha": float(alpha), "seed": int(seed), "gof": bool(gof),
              "decomp": bool(decomp), "n_levels": n_levels,
              "threads": int(threads)}
    out = _envelope("fit", config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = gmwm_fit(spec, np.asarray(values, dtype=float), robust=robust,
                          eff=eff, n_boot=n_boot, alpha=alpha, seed=seed,
                          n_levels=n_levels, threads=threads)
        out.update(_fit_payload(result))
        implied = implied_wv(result.fitted_spec(), scales=result.wv.scales)
        out["implied"] = {"total": _floats(implied.total)}
        if decomp:
            out["implied"]["per_term"] = [
                {"label": label, "nu2": _floats(values_)}
                for label, values_ in implied.contributions]
        if gof:
            test = gof_test(result, n_boot=n_boot, seed=seed, threads=threads)
            out["gof"] = {"statistic": test.statistic,
                          "p_value": test.p_value,
                          "p_ci": [test.p_ci[0], test.p_ci[1]],
                          "B": test.n_boot, "seed": test.seed}
    out["warnings"] = _collect_warnings(caught)
    return out, result


def op_rank(values, models, *, n_boot=100, seed=1337, alpha=0.05,
            robust=False, eff=0.6, n_levels=None, threads=1):
    """Rank candidate models by the information criterion."""
    specs = [parse_model(m) for m in models]
    config = {"models": [print_model(s) for s in specs], "B": int(n_boot),
              "seed": int(seed), "alpha": float(alpha),
              "robust": bool(robust), "eff": float(eff) if robust else None,
              "n_levels": n_levels, "threads": int(threads)}
    out = _envelope("rank", config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        table = rank_models(specs, np.asarray(values, dtype=float),
                            n_boot=n_boot, seed=seed, robust=robust, eff=eff,
                            alpha=alpha, n_levels=n_levels, threads=threads)
    out["rows"] = [{"label": row.label, "obj_fun": row.wic.obj_fun,
                    "optimism": row.wic.optimism,
                    "criterion": row.wic.criterion} for row in table.rows]
    out["warnings"] = _collect_warnings(caught)
    return out, table


def op_bench(sizes, *, repetitions=3, robust=False, eff=0.6, seed=1337):
    """Median wall time of the WV computation per sample size.

    The timings are measurements and vary run to run; everything else in the
    report is deterministic.
    """
    import platform

    sizes = [int(s) for s in sizes]
    if any(s < 2 for s in sizes):
        raise DataError("benchmark sizes must be >= 2")
    config = {"sizes": sizes, "repetitions": int(repetitions),
              "robust": bool(robust), "eff": float(eff) if robust else None,
              "seed": int(seed)}
    out = _envelope("bench", config)
    spec = parse_model("WN(sigma2=1)")
    results = []
    for size in sizes:
        series = gen_series(spec, size, seed).values
        entry = {"n": size}
        classical = []
        for _ in range(repetitions):
            start = time.perf_counter()
            wv_classical(modwt_haar(series))
            classical.append(time.perf_counter() - start)
        entry["classical_median_s"] = float(np.median(classical))
        if robust:
            rob = []
            for _ in range(repetitions):
                start = time.perf_counter()
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    wv_robust(modwt_haar(series), eff=eff)
                rob.append(time.perf_counter() - start)
            entry["robust_median_s"] = float(np.median(rob))
        results.append(entry)
    out["results"] = results
    out["machine"] = {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    return out
