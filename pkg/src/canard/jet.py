"""Truncated multivariate power-series (jet) arithmetic.

Every coordinate change in the blow-up pipeline (scaling substitution,
recentering at an equilibrium, linear normalization) is an exact
polynomial operation on truncated series.  A Jet stores coefficients of
a polynomial in up to 4 variables, truncated at a total-degree bound.

Conventions:
  * absent multi-indices mean coefficient 0;
  * composition requires zero constant terms in the substituted jets,
    because the tail of a truncated series is unknown; recentering,
    which treats the stored coefficients as a complete polynomial, is
    provided separately via jet_recenter.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

from .errors import DomainError

Multi = Tuple[int, ...]

DEFAULT_DEGREE = 4  # cubic jets plus one guard order


@dataclass(frozen=True)
class Jet:
    """Polynomial truncated at total degree `degree` in `nvars` variables."""

    nvars: int
    degree: int
    coeffs: Dict[Multi, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.nvars <= 4:
            raise DomainError(f"nvars must be in 1..4, got {self.nvars}")
        if self.degree < 0:
            raise DomainError(f"degree bound must be >= 0, got {self.degree}")
        clean = {}
        for mi, c in self.coeffs.items():
            mi = tuple(int(e) for e in mi)
            if len(mi) != self.nvars or any(e < 0 for e in mi):
                raise DomainError(f"bad multi-index {mi} for nvars={self.nvars}")
            if sum(mi) > self.degree:
                raise DomainError(f"multi-index {mi} exceeds degree bound {self.degree}")
            c = float(c)
            if not math.isfinite(c):
                raise DomainError(f"non-finite coefficient at {mi}")
            if c != 0.0:
                clean[mi] = c
        object.__setattr__(self, "coeffs", clean)

    def coeff(self, mi: Sequence[int]) -> float:
        mi = tuple(int(e) for e in mi)
        if len(mi) != self.nvars:
            raise DomainError(f"multi-index length {len(mi)} != nvars {self.nvars}")
        if sum(mi) > self.degree:
            raise DomainError(f"queried multi-index {mi} beyond degree bound {self.degree}")
        return self.coeffs.get(mi, 0.0)


def jet_from_terms(nvars: int, degree: int, terms: Mapping[Multi, float]) -> Jet:
    return Jet(nvars, degree, dict(terms))


def jet_zero(nvars: int, degree: int = DEFAULT_DEGREE) -> Jet:
    return Jet(nvars, degree, {})


def jet_const(nvars: int, degree: int, value: float) -> Jet:
    return Jet(nvars, degree, {(0,) * nvars: float(value)})


def jet_var(nvars: int, degree: int, index: int) -> Jet:
    """The coordinate function x_index as a jet."""
    if not 0 <= index < nvars:
        raise DomainError(f"variable index {index} out of range for nvars={nvars}")
    mi = tuple(1 if k == index else 0 for k in range(nvars))
    return Jet(nvars, degree, {mi: 1.0})


def _check_same_nvars(a: Jet, b: Jet) -> None:
    if a.nvars != b.nvars:
        raise DomainError(f"nvars mismatch: {a.nvars} vs {b.nvars}")


def jet_add(a: Jet, b: Jet) -> Jet:
    _check_same_nvars(a, b)
    degree = min(a.degree, b.degree)
    out: Dict[Multi, float] = {}
    for mi, c in itertools.chain(a.coeffs.items(), b.coeffs.items()):
        if sum(mi) <= degree:
            out[mi] = out.get(mi, 0.0) + c
    return Jet(a.nvars, degree, out)


def jet_scale(a: Jet, s: float) -> Jet:
    return Jet(a.nvars, a.degree, {mi: s * c for mi, c in a.coeffs.items()})


def jet_mul(a: Jet, b: Jet) -> Jet:
    _check_same_nvars(a, b)
    degree = min(a.degree, b.degree)
    out: Dict[Multi, float] = {}
    for mi, c in a.coeffs.items():
        da = sum(mi)
        for mj, d in b.coeffs.items():
            if da + sum(mj) > degree:
                continue
            key = tuple(i + j for i, j in zip(mi, mj))
            out[key] = out.get(key, 0.0) + c * d
    return Jet(a.nvars, degree, out)


def jet_diff(a: Jet, var: int) -> Jet:
    """Formal partial derivative; the degree bound is kept as stored."""
    if not 0 <= var < a.nvars:
        raise DomainError(f"variable index {var} out of range for nvars={a.nvars}")
    out: Dict[Multi, float] = {}
    for mi, c in a.coeffs.items():
        e = mi[var]
        if e == 0:
            continue
        key = tuple(x - 1 if k == var else x for k, x in enumerate(mi))
        out[key] = e * c
    return Jet(a.nvars, a.degree, out)


def jet_eval(a: Jet, point: Sequence[float]) -> float:
    """Horner-style evaluation of the truncated polynomial."""
    if len(point) != a.nvars:
        raise DomainError(f"point length {len(point)} != nvars {a.nvars}")
    pt = tuple(float(v) for v in point)
    return _horner(a.coeffs, pt, 0)


def _horner(terms: Mapping[Multi, float], point: Tuple[float, ...], axis: int) -> float:
    if not terms:
        return 0.0
    if axis == len(point):
        return sum(terms.values())
    groups: Dict[int, Dict[Multi, float]] = {}
    for mi, c in terms.items():
        groups.setdefault(mi[axis], {})[mi] = c
    acc = 0.0
    for k in range(max(groups), -1, -1):
        acc = acc * point[axis]
        sub = groups.get(k)
        if sub is not None:
            acc += _horner(sub, point, axis + 1)
    return acc


def jet_compose(target: Jet, subs: Sequence[Jet]) -> Jet:
    """Substitute subs[i] for variable i of target; exact up to truncation.

    Each substituted jet must have zero constant term (the tail of a
    truncated series is unknown, so constant offsets would silently
    introduce truncation error; use jet_recenter for affine shifts).
    """
    if len(subs) != target.nvars:
        raise DomainError(f"need {target.nvars} substitutions, got {len(subs)}")
    nv = subs[0].nvars
    for s in subs:
        if s.nvars != nv:
            raise DomainError("substituted jets disagree on nvars")
        if s.coeff((0,) * nv) != 0.0:
            raise DomainError("constant-term substitution into a truncated series")
    degree = min([target.degree] + [s.degree for s in subs])
    one = jet_const(nv, degree, 1.0)
    # power cache per substituted jet
    pows = [[one, jet_truncate(s, degree)] for s in subs]
    for i, s in enumerate(subs):
        for _ in range(2, target.degree + 1):
            pows[i].append(jet_mul(pows[i][-1], pows[i][1]))
    out = jet_zero(nv, degree)
    for mi, c in target.coeffs.items():
        term = jet_const(nv, degree, c)
        for i, e in enumerate(mi):
            if e:
                term = jet_mul(term, pows[i][e])
        out = jet_add(out, term)
    return out


def jet_recenter(a: Jet, point: Sequence[float]) -> Jet:
    """Coefficients of a(x + point), re-expanded exactly.

    This treats the stored coefficients as a complete polynomial of its
    true degree; for jets produced by truncating a longer series the
    caller is accepting the same truncation order at the new center.
    """
    if len(point) != a.nvars:
        raise DomainError(f"point length {len(point)} != nvars {a.nvars}")
    pt = tuple(float(v) for v in point)
    out: Dict[Multi, float] = {}
    for mi, c in a.coeffs.items():
        parts = []
        for e, h in zip(mi, pt):
            parts.append([(k, math.comb(e, k) * h ** (e - k)) for k in range(e + 1)])
        for combo in itertools.product(*parts):
            key = tuple(k for k, _ in combo)
            w = c
            for _, f in combo:
                w *= f
            out[key] = out.get(key, 0.0) + w
    return Jet(a.nvars, a.degree, out)


def jet_truncate(a: Jet, degree: int) -> Jet:
    if degree >= a.degree:
        return Jet(a.nvars, degree, dict(a.coeffs))
    return Jet(a.nvars, degree, {mi: c for mi, c in a.coeffs.items() if sum(mi) <= degree})
