"""Bundled reference data and the precomputed implied-WV oracle table.

Fixtures ship as CSV inside the package and are checksummed so silent
corruption (or an accidental regeneration drift) fails loudly.

``nile``: annual flow of the Nile at Ashwan, 1871-1970, 100 public-domain
values.

``wv_oracle``: rows of (kind, params, tau, nu2) produced by the normative
filter-ACVF algorithm at packaging time; regenerating the table must
reproduce the file bit-for-bit, which pins the algorithm against drift.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .models import ModelTerm

__all__ = ["Fixture", "load_fixture", "oracle_rows"]

_DATA_DIR = Path(__file__).parent / "data"

_CHECKSUMS = {
    "nile": "0503ab7acd7a93fa67929fdb53f7b20fa43ece523630cbcf4f06ecfcb2141086",
    "wv_oracle": "52836971747c9e5cad2befce63e57243afb837c1d084556af3b732f5a8e593e5",
}

_PROVENANCE = {
    "nile": "public-domain annual Nile flow record, 1871-1970",
    "wv_oracle": "generated by the filter-ACVF implied-WV algorithm at build time",
}

# (kind, params) rows the oracle table is built from; fixed so regeneration
# is reproducible
_ORACLE_TERMS = (
    ("WN", (1.0,)),
    ("WN", (0.37,)),
    ("QN", (1.0,)),
    ("QN", (0.5,)),
    ("RW", (1.0,)),
    ("RW", (0.75,)),
    ("DR", (1.0,)),
    ("DR", (0.1,)),
    ("AR1", (0.9, 0.1)),
    ("AR1", (-0.6, 2.0)),
    ("MA1", (0.3, 0.5)),
    ("ARMA11", (0.9, 0.2, 1.0)),
)
_ORACLE_SCALES = tuple(int(2 ** j) for j in range(1, 11))


@dataclass(frozen=True)
class Fixture:
    name: str
    data: object
    provenance: str
    sha256: str


def _file_for(name):
    return _DATA_DIR / f"{name}.csv"


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_fixture(name):
    """Load a bundled fixture by name, verifying its checksum."""
    if name not in _CHECKSUMS:
        raise DataError(f"unknown fixture {name!r}; "
                        f"available: {sorted(_CHECKSUMS)}")
    path = _file_for(name)
    digest = _digest(path)
    if digest != _CHECKSUMS[name]:
        raise DataError(f"fixture {name!r} failed its checksum")
    if name == "nile":
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        data = np.array([float(r["value"]) for r in rows])
    else:
        with path.open(newline="") as fh:
            data = list(csv.DictReader(fh))
    return Fixture(name=name, data=data, provenance=_PROVENANCE[name],
                   sha256=digest)


def oracle_rows():
    """Recompute the oracle table rows from the normative algorithm."""
    from .implied import implied_wv_term

    rows = []
    scales = np.array(_ORACLE_SCALES)
    for kind, params in _ORACLE_TERMS:
        term = ModelTerm(kind, params)
        nu2 = implied_wv_term(term, scales, method="normative")
        for tau, value in zip(scales, nu2):
            rows.append({
                "kind": kind,
                "params": ";".join(repr(p) for p in params),
                "tau": str(int(tau)),
                "nu2": repr(float(value)),
                "method": "filter-acvf",
            })
    return rows


def _write_oracle(path=None):
    """Regenerate the bundled oracle CSV (packaging helper)."""
    path = Path(path) if path else _file_for("wv_oracle")
    rows = oracle_rows()
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["kind", "params", "tau", "nu2", "method"])
        writer.writeheader()
        writer.writerows(rows)
