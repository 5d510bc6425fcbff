"""Model terms, the "+"-composition grammar, validation and parameter transforms.

A model is a sum of component terms, e.g. ``3*AR1()+RW()+WN()``. Each term
carries an ordered parameter tuple whose entries are either floats (used both
as fixed values and as optimizer starting values) or ``None`` for a free slot
without a starting value. A per-slot boolean mask records which slots the
estimator may move; by default every slot is free.

Supported kinds and their parameter slots:

=========  =====================================================  ==========
kind       parameter slots (ordered)                              orders
=========  =====================================================  ==========
WN         sigma2                                                 --
QN         q2                                                     --
RW         gamma2                                                 --
DR         omega                                                  --
AR1        phi, sigma2                                            --
MA1        theta, sigma2                                          --
ARMA11     phi, theta, sigma2                                     --
ARMA       phi_1..phi_p, theta_1..theta_q, sigma2                 (p, q)
SARIMA     ar block, ma block, sar block, sma block, sigma2       (p,d,q,P,D,Q,s)
=========  =====================================================  ==========

``ARIMA(p, d, q)`` is accepted by the grammar and normalized onto a SARIMA
term without a seasonal part.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

__all__ = [
    "ModelTerm",
    "ModelSpec",
    "parse_model",
    "print_model",
    "validate_model",
    "param_vector",
    "set_params",
    "to_unconstrained",
    "from_unconstrained",
]

KINDS = ("WN", "QN", "RW", "DR", "AR1", "MA1", "ARMA11", "ARMA", "SARIMA")

# Only one of each of these kinds is identifiable in a latent sum.
SINGLETON_KINDS = frozenset({"WN", "QN", "RW", "DR"})

# Slot roles drive both constraint checks and the unconstrained transform.
_VAR = "var"          # strictly positive, log-transformed
_COEF = "coef"        # single coefficient in (-1, 1), atanh-transformed
_DRIFT = "drift"      # unconstrained real, identity transform
_ARBLOCK = "arblock"  # stationarity region of an AR(p), partial-coefficient transform
_MABLOCK = "mablock"  # invertibility region of an MA(q), same transform

_FIXED_SLOTS = {
    "WN": (("sigma2", _VAR),),
    "QN": (("q2", _VAR),),
    "RW": (("gamma2", _VAR),),
    "DR": (("omega", _DRIFT),),
    "AR1": (("phi", _COEF), ("sigma2", _VAR)),
    "MA1": (("theta", _COEF), ("sigma2", _VAR)),
    "ARMA11": (("phi", _COEF), ("theta", _COEF), ("sigma2", _VAR)),
}


@dataclass(frozen=True)
class ModelTerm:
    """One component of a latent sum.

    ``params`` entries are floats or None (free slot without starting value).
    ``orders`` is ``(p, q)`` for ARMA and ``(p, d, q, P, D, Q, s)`` for SARIMA,
    empty for the fixed-arity kinds.
    """

    kind: str
    params: tuple = ()
    orders: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(
            None if p is None else float(p) for p in self.params))
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        if self.kind == "ARMA":
            if len(self.orders) != 2 or min(self.orders) < 0:
                raise ModelError("ARMA needs orders (p, q) with p, q >= 0")
            if sum(self.orders) == 0:
                raise ModelError("ARMA(0,0) has no coefficients; use WN instead")
        elif self.kind == "SARIMA":
            if len(self.orders) != 7:
                raise ModelError("SARIMA needs orders (p, d, q, P, D, Q, s)")
        elif self.orders:
            raise ModelError(f"{self.kind} takes no order specification")
        n = len(self.slot_names())
        if not self.params:
            object.__setattr__(self, "params", (None,) * n)
        elif len(self.params) != n:
            raise ModelError(
                f"{self.kind} expects {n} parameter value(s), got {len(self.params)}")

    def slot_names(self):
        """Ordered parameter slot names for this term."""
        if self.kind in _FIXED_SLOTS:
            return tuple(name for name, _ in _FIXED_SLOTS[self.kind])
        if self.kind == "ARMA":
            p, q = self.orders
            return tuple([f"phi{i + 1}" for i in range(p)]
                         + [f"theta{i + 1}" for i in range(q)] + ["sigma2"])
        p, _, q, sp, _, sq, _ = self.orders
        return tuple([f"ar{i + 1}" for i in range(p)]
                     + [f"ma{i + 1}" for i in range(q)]
                     + [f"sar{i + 1}" for i in range(sp)]
                     + [f"sma{i + 1}" for i in range(sq)] + ["sigma2"])

    def slot_roles(self):
        """Role of every slot, expanding AR/MA blocks for the block transform."""
        if self.kind in _FIXED_SLOTS:
            return tuple(role for _, role in _FIXED_SLOTS[self.kind])
        if self.kind == "ARMA":
            p, q = self.orders
            return (_ARBLOCK,) * p + (_MABLOCK,) * q + (_VAR,)
        p, _, q, sp, _, sq, _ = self.orders
        return (_ARBLOCK,) * p + (_MABLOCK,) * q + (_ARBLOCK,) * sp \
            + (_MABLOCK,) * sq + (_VAR,)

    def coefficient_blocks(self):
        """Contiguous (start, stop, role) runs of AR/MA block slots."""
        roles = self.slot_roles()
        blocks, start = [], None
        for i, role in enumerate(roles + (None,)):
            if role in (_ARBLOCK, _MABLOCK):
                if start is None or roles[start] != role:
                    if start is not None:
                        blocks.append((start, i, roles[start]))
                    start = i
            elif start is not None:
                blocks.append((start, i, roles[start]))
                start = None
        return blocks

    @property
    def n_params(self):
        return len(self.params)

    def is_fully_valued(self):
        return all(p is not None for p in self.params)


@dataclass(frozen=True)
class ModelSpec:
    """A validated sum of terms plus the free-slot mask.

    Instances are immutable; estimation works on a flat vector holding the
    free slots in term order (see :func:`param_vector`).
    """

    terms: tuple
    free: tuple = field(default=())

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ModelError("a model needs at least one term")
        object.__setattr__(self, "terms", terms)
        if not self.free:
            mask = tuple((True,) * t.n_params for t in terms)
        else:
            mask = tuple(tuple(bool(b) for b in row) for row in self.free)
            if len(mask) != len(terms) or any(
                    len(row) != t.n_params for row, t in zip(mask, terms)):
                raise ModelError("free mask does not match term parameters")
        object.__setattr__(self, "free", mask)

    @property
    def n_free(self):
        return sum(sum(row) for row in self.free)

    def free_slot_labels(self):
        """Unique labels like 'AR1#1.phi' for every free slot, in order."""
        counts = {}
        labels = []
        for term, row in zip(self.terms, self.free):
            counts[term.kind] = counts.get(term.kind, 0) + 1
            tag = f"{term.kind}#{counts[term.kind]}"
            for name, is_free in zip(term.slot_names(), row):
                if is_free:
                    labels.append(f"{tag}.{name}")
        return labels

    def is_fully_valued(self):
        return all(t.is_fully_valued() for t in self.terms)

    def __str__(self):
        return print_model(self)


# ---------------------------------------------------------------------------
# Grammar
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[()*+,=])
""", re.VERBOSE)

_GRAMMAR_ALIASES = {"ARIMA": "SARIMA"}


class _Tokens:
    def __init__(self, text):
        self.text = text
        self.items = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ModelError(
                    f"syntax error at position {pos}: unexpected {text[pos]!r}")
            if m.lastgroup != "ws":
                self.items.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.items[self.i] if self.i < len(self.items) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.next()
        if text != value:
            raise ModelError(
                f"syntax error at position {pos}: expected {value!r}, got {text!r}")


def parse_model(text):
    """Parse a model-grammar string into a :class:`ModelSpec`.

    ``k*TERM`` expands into k copies, empty parentheses leave every slot free
    and named or positional arguments set starting values. The result is
    validated before being returned.
    """
    if not isinstance(text, str) or not text.strip():
        raise ModelError("empty model string")
    toks = _Tokens(text)
    terms = [*_parse_term(toks)]
    while toks.peek()[1] == "+":
        toks.next()
        terms.extend(_parse_term(toks))
    kind, tok, pos = toks.peek()
    if kind is not None:
        raise ModelError(f"syntax error at position {pos}: unexpected {tok!r}")
    return validate_model(ModelSpec(tuple(terms)))


def _parse_term(toks):
    repeat = 1
    kind, tok, pos = toks.next()
    if kind == "num":
        if "." in tok or "e" in tok.lower():
            raise ModelError(f"syntax error at position {pos}: repeat count must be an integer")
        repeat = int(tok)
        if repeat < 1:
            raise ModelError(f"syntax error at position {pos}: repeat count must be >= 1")
        toks.expect("*")
        kind, tok, pos = toks.next()
    if kind != "name":
        raise ModelError(f"syntax error at position {pos}: expected a model kind")
    name = tok.upper()
    grammar_name = _GRAMMAR_ALIASES.get(name, name)
    if grammar_name not in KINDS:
        raise ModelError(f"unknown model kind {tok!r} at position {pos}")
    toks.expect("(")
    args, kwargs = _parse_args(toks)
    term = _build_term(name, args, kwargs, pos)
    return [term] * repeat


def _parse_args(toks):
    args, kwargs = [], {}
    if toks.peek()[1] == ")":
        toks.next()
        return args, kwargs
    while True:
        kind, tok, pos = toks.peek()
        follower = toks.items[toks.i + 1][1] if toks.i + 1 < len(toks.items) else None
        if kind == "name" and follower == "=":
            toks.next()
            toks.next()
            kwargs[tok.lower()] = _parse_value(toks)
        else:
            if kwargs:
                raise ModelError(
                    f"syntax error at position {pos}: positional argument after named one")
            args.append(_parse_value(toks))
        kind, tok, pos = toks.next()
        if tok == ")":
            return args, kwargs
        if tok != ",":
            raise ModelError(f"syntax error at position {pos}: expected ',' or ')'")


def _parse_value(toks):
    """A scalar, or a vector written ``(v1, v2, ...)`` / R-style ``c(...)``."""
    kind, tok, pos = toks.next()
    if kind == "name" and tok == "c" and toks.peek()[1] == "(":
        kind, tok, pos = toks.next()
    if tok == "(":
        values = []
        while True:
            kind, tok, pos = toks.next()
            if kind != "num":
                raise ModelError(f"syntax error at position {pos}: expected a number")
            values.append(float(tok))
            kind, tok, pos = toks.next()
            if tok == ")":
                return tuple(values)
            if tok != ",":
                raise ModelError(f"syntax error at position {pos}: expected ',' or ')'")
    if kind != "num":
        raise ModelError(f"syntax error at position {pos}: expected a number")
    return float(tok)


def _as_vector(value):
    if value is None:
        return ()
    return tuple(value) if isinstance(value, tuple) else (float(value),)


def _is_int_literal(x):
    return isinstance(x, float) and float(x).is_integer()


def _build_term(name, args, kwargs, pos):
    if name in _FIXED_SLOTS:
        slots = [s for s, _ in _FIXED_SLOTS[name]]
        values = [None] * len(slots)
        if args and kwargs:
            raise ModelError(f"{name}: mix of positional and named arguments")
        if args:
            if len(args) > len(slots):
                raise ModelError(f"{name} takes at most {len(slots)} arguments")
            for i, a in enumerate(args):
                if isinstance(a, tuple):
                    raise ModelError(f"{name}: scalar argument expected")
                values[i] = a
        for key, val in kwargs.items():
            if key not in slots:
                raise ModelError(f"{name}: unknown parameter {key!r}")
            if isinstance(val, tuple):
                raise ModelError(f"{name}: scalar argument expected for {key!r}")
            values[slots.index(key)] = val
        return ModelTerm(name, tuple(values))

    if name == "ARMA":
        if args and not kwargs:
            if len(args) == 2 and all(_is_int_literal(a) for a in args):
                return ModelTerm("ARMA", (), (int(args[0]), int(args[1])))
            raise ModelError(
                "ARMA: use ARMA(p, q) for free orders or named ar=/ma=/sigma2= values")
        if args:
            raise ModelError("ARMA: positional and named arguments cannot be mixed")
        if not kwargs:
            raise ModelError("ARMA() needs orders, e.g. ARMA(3, 1)")
        bad = set(kwargs) - {"ar", "ma", "sigma2"}
        if bad:
            raise ModelError(f"ARMA: unknown parameter {sorted(bad)[0]!r}")
        ar = _as_vector(kwargs.get("ar"))
        ma = _as_vector(kwargs.get("ma"))
        sigma2 = kwargs.get("sigma2")
        if isinstance(sigma2, tuple):
            raise ModelError("ARMA: sigma2 must be a scalar")
        return ModelTerm("ARMA", ar + ma + (sigma2,), (len(ar), len(ma)))

    # SARIMA (and the ARIMA alias, which has no seasonal part)
    if args and not kwargs:
        want = 7 if name == "SARIMA" else 3
        if len(args) == want and all(_is_int_literal(a) for a in args):
            orders = tuple(int(a) for a in args)
            if name == "ARIMA":
                orders = orders + (0, 0, 0, 1)
            return ModelTerm("SARIMA", (), orders)
        raise ModelError(
            f"{name}: use {name}({', '.join('pdqPDQs'[:want])}) integer orders "
            "or named arguments")
    if args:
        raise ModelError(f"{name}: positional and named arguments cannot be mixed")
    allowed = {"ar", "ma", "sar", "sma", "i", "si", "s", "sigma2"}
    bad = set(kwargs) - allowed
    if bad:
        raise ModelError(f"{name}: unknown parameter {sorted(bad)[0]!r}")
    if name == "ARIMA" and (set(kwargs) & {"sar", "sma", "si", "s"}):
        raise ModelError("ARIMA has no seasonal part; use SARIMA")
    ar = _as_vector(kwargs.get("ar"))
    ma = _as_vector(kwargs.get("ma"))
    sar = _as_vector(kwargs.get("sar"))
    sma = _as_vector(kwargs.get("sma"))
    d = kwargs.get("i", 0.0)
    sd = kwargs.get("si", 0.0)
    s = kwargs.get("s", 1.0 if not (sar or sma or sd) else None)
    if s is None:
        raise ModelError("SARIMA with a seasonal part needs the period s")
    for label, v in (("i", d), ("si", sd), ("s", s)):
        if isinstance(v, tuple) or not _is_int_literal(v):
            raise ModelError(f"SARIMA: {label} must be an integer")
    sigma2 = kwargs.get("sigma2")
    orders = (len(ar), int(d), len(ma), len(sar), int(sd), len(sma), int(s))
    return ModelTerm("SARIMA", ar + ma + sar + sma + (sigma2,), orders)


def print_model(spec):
    """Canonical text for a spec; ``parse_model`` is its inverse.

    Free coefficient blocks of ARMA/SARIMA terms force the integer-orders
    form, which cannot carry values for the remaining slots; the grammar has
    no syntax for that mixed case.
    """
    parts = []
    for term in spec.terms:
        values = term.params
        if term.kind == "ARMA":
            p, q = term.orders
            if any(v is None for v in values[:p + q]):
                args = [str(p), str(q)]
            else:
                groups = [("ar", values[:p]), ("ma", values[p:p + q])]
                args = [_format_group(g, v) for g, v in groups if v]
                if values[-1] is not None:
                    args.append(f"sigma2={_fmt(values[-1])}")
        elif term.kind == "SARIMA":
            p, d, q, sp, sd, sq, s = term.orders
            if any(v is None for v in values[:-1]):
                args = [str(o) for o in term.orders]
            else:
                idx = np.cumsum([0, p, q, sp, sq])
                groups = [("ar", values[idx[0]:idx[1]]), ("ma", values[idx[1]:idx[2]]),
                          ("sar", values[idx[2]:idx[3]]), ("sma", values[idx[3]:idx[4]])]
                args = [_format_group(g, v) for g, v in groups if v]
                args += [f"i={d}", f"si={sd}"]
                if values[-1] is not None:
                    args.append(f"sigma2={_fmt(values[-1])}")
                args.append(f"s={s}")
        else:
            names = term.slot_names()
            args = [f"{n}={_fmt(v)}" for n, v in zip(names, values) if v is not None]
        parts.append(f"{term.kind}({','.join(args)})")
    return "+".join(parts)


def _fmt(v):
    return repr(float(v))


def _format_group(name, values):
    if len(values) == 1:
        return f"{name}={_fmt(values[0])}"
    return f"{name}=({','.join(_fmt(v) for v in values)})"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _poly_roots_outside(coeffs):
    """True when 1 - c1 z - ... - ck z^k has all roots strictly outside |z|=1."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return True
    poly = np.concatenate(([1.0], -c))       # ascending powers
    roots = np.roots(poly[::-1])
    return bool(roots.size == 0 or np.min(np.abs(roots)) > 1.0)


def _check_term_values(term, index):
    """Constraint checks on whichever slots carry values."""
    names = term.slot_names()
    roles = term.slot_roles()
    where = f"term {index + 1} ({term.kind})"
    for name, role, value in zip(names, roles, term.params):
        if value is None:
            continue
        if not math.isfinite(value):
            raise ModelError(f"{where}: {name} must be finite")
        if role == _VAR and value <= 0:
            raise ModelError(f"{where}: {name} must be > 0, got {value}")
        if role == _COEF and not -1.0 < value < 1.0:
            raise ModelError(
                f"{where}: {name} must lie strictly in (-1, 1), got {value}")
    for start, stop, role in term.coefficient_blocks():
        block = term.params[start:stop]
        if any(v is None for v in block):
            if not all(v is None for v in block):
                raise ModelError(
                    f"{where}: coefficient block {names[start]}..{names[stop - 1]} "
                    "must be fully valued or fully free")
            continue
        if not _poly_roots_outside(block):
            what = "nonstationary" if role == _ARBLOCK else "noninvertible"
            raise ModelError(
                f"{where}: {what} coefficient block "
                f"{names[start]}..{names[stop - 1]}")
    if term.kind == "SARIMA":
        p, d, q, sp, sd, sq, s = term.orders
        if d not in (0, 1) or sd not in (0, 1):
            raise ModelError(
                f"{where}: integration orders beyond 1 are not supported "
                "(the Haar filter removes a single integration)")
        if (sp or sq or sd) and s < 2:
            raise ModelError(f"{where}: seasonal period s must be >= 2")
        if s < 1:
            raise ModelError(f"{where}: seasonal period s must be >= 1")


def validate_model(spec):
    """Check all ModelSpec invariants; returns the spec unchanged when valid."""
    seen_singletons = set()
    for i, term in enumerate(spec.terms):
        if term.kind in SINGLETON_KINDS:
            if term.kind in seen_singletons:
                raise ModelError(
                    f"duplicate {term.kind} term: WN, QN, RW and DR may appear "
                    "at most once in a latent sum")
            seen_singletons.add(term.kind)
        _check_term_values(term, i)
    if any(t.kind == "SARIMA" for t in spec.terms) and len(spec.terms) > 1:
        raise ModelError("SARIMA cannot be combined with other terms in a sum")
    arma_family = [t.kind for t in spec.terms if t.kind in ("MA1", "ARMA11", "ARMA")]
    if arma_family and sum(
            t.kind in ("AR1", "MA1", "ARMA11", "ARMA") for t in spec.terms) > 1:
        warnings.warn(
            "a sum containing several ARMA-type terms may not be identifiable",
            UserWarning, stacklevel=2)
    if spec.n_free < 1:
        raise ModelError("the model has no free parameters to estimate")
    return spec


# ---------------------------------------------------------------------------
# Parameter vector and the unconstrained transform
# ---------------------------------------------------------------------------

def param_vector(spec):
    """Flat vector of the free-slot values, in term order.

    Every free slot must carry a value (validated starting values double as
    the parameter vector).
    """
    out = []
    for term, row in zip(spec.terms, spec.free):
        for value, is_free in zip(term.params, row):
            if is_free:
                if value is None:
                    raise ModelError(
                        f"{term.kind} has a free parameter without a value")
                out.append(value)
    return np.asarray(out, dtype=float)


def set_params(spec, theta):
    """Return a copy of ``spec`` with ``theta`` written into the free slots."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_free,):
        raise ModelError(
            f"parameter vector has length {theta.size}, expected {spec.n_free}")
    pos = 0
    terms = []
    for term, row in zip(spec.terms, spec.free):
        values = list(term.params)
        for i, is_free in enumerate(row):
            if is_free:
                values[i] = float(theta[pos])
                pos += 1
        terms.append(ModelTerm(term.kind, tuple(values), term.orders))
    return ModelSpec(tuple(terms), spec.free)


def _pacf_to_coeffs(r):
    """Map partial coefficients in (-1,1)^k onto a stationary AR block."""
    phi = np.zeros(0)
    for k, rk in enumerate(r, start=1):
        prev = phi
        phi = np.empty(k)
        phi[k - 1] = rk
        if k > 1:
            phi[:k - 1] = prev - rk * prev[::-1]
    return phi


def _coeffs_to_pacf(phi):
    """Inverse of :func:`_pacf_to_coeffs`; fails off the stationary region."""
    phi = np.asarray(phi, dtype=float)
    r = np.empty(phi.size)
    work = phi.copy()
    for k in range(phi.size, 0, -1):
        rk = work[k - 1]
        if not -1.0 < rk < 1.0:
            raise ModelError("coefficient block is outside the stationary region")
        r[k - 1] = rk
        if k > 1:
            head = work[:k - 1]
            work = (head + rk * head[::-1]) / (1.0 - rk * rk)
    return r


def _free_slot_roles(spec):
    """Roles of the free slots plus block grouping info, in theta order."""
    roles = []
    for term, row in zip(spec.terms, spec.free):
        term_roles = term.slot_roles()
        blocks = {}
        for start, stop, role in term.coefficient_blocks():
            if stop - start > 1:
                frees = [row[i] for i in range(start, stop)]
                if any(frees) and not all(frees):
                    raise ModelError(
                        "an AR/MA coefficient block must be entirely free or "
                        "entirely fixed")
                for i in range(start, stop):
                    blocks[i] = (start, stop)
        pos_in_term = []
        for i, is_free in enumerate(row):
            if is_free:
                pos_in_term.append((term_roles[i], blocks.get(i)))
        roles.extend(pos_in_term)
    return roles


def to_unconstrained(theta, spec):
    """Map a constrained parameter vector onto unconstrained optimizer space.

    log for variances, atanh for single coefficients, identity for drift.
    Multi-lag AR/MA blocks go through the partial-coefficient recursion so
    the whole stationarity (invertibility) region is covered, then atanh.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ModelError("non-finite parameter value")
    roles = _free_slot_roles(spec)
    if len(roles) != theta.size:
        raise ModelError("parameter vector length does not match the spec")
    out = np.empty_like(theta)
    i = 0
    while i < theta.size:
        role, block = roles[i]
        if block is not None:
            width = block[1] - block[0]
            out[i:i + width] = np.arctanh(_coeffs_to_pacf(theta[i:i + width]))
            i += width
        elif role == _VAR:
            if theta[i] <= 0:
                raise ModelError("variance parameter must be > 0")
            out[i] = math.log(theta[i])
            i += 1
        elif role in (_COEF, _ARBLOCK, _MABLOCK):
            # width-1 blocks reduce to a single coefficient in (-1, 1)
            out[i] = math.atanh(theta[i])
            i += 1
        else:
            out[i] = theta[i]
            i += 1
    return out


def from_unconstrained(x, spec):
    """Inverse of :func:`to_unconstrained`; never emits a constraint violation."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ModelError("non-finite unconstrained value")
    roles = _free_slot_roles(spec)
    if len(roles) != x.size:
        raise ModelError("vector length does not match the spec")
    out = np.empty_like(x)
    i = 0
    while i < x.size:
        role, block = roles[i]
        if block is not None:
            width = block[1] - block[0]
            out[i:i + width] = _pacf_to_coeffs(np.tanh(x[i:i + width]))
            i += width
        elif role == _VAR:
            out[i] = math.exp(x[i])
            i += 1
        elif role in (_COEF, _ARBLOCK, _MABLOCK):
            out[i] = math.tanh(x[i])
            i += 1
        else:
            out[i] = x[i]
            i += 1
    return out
