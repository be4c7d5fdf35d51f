"""Hamiltonians as truncated half-power series in the action.

``H(r, phi) = sum_j psi_j(phi) * r**(j/2)`` with integer half-indices
``j >= 2`` and :class:`~hamstab.trigpoly.TrigPoly` coefficients.  All order
bookkeeping uses the integer ``j``; exponents only become floats at
evaluation time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import NegativeAction, OnlyLinear, ParseError, PreconditionError
from .trigpoly import TrigPoly


@dataclass(frozen=True)
class CartesianState:
    x: float
    y: float


@dataclass(frozen=True)
class AngleActionState:
    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise NegativeAction(f"action must be non-negative, got r={self.r}")


def to_action_angle(s: CartesianState) -> AngleActionState:
    """``x = sqrt(2r) cos(phi)``, ``y = sqrt(2r) sin(phi)``; the origin maps to phi = 0."""
    r = 0.5 * (s.x * s.x + s.y * s.y)
    if r == 0.0:
        return AngleActionState(0.0, 0.0)
    phi = math.atan2(s.y, s.x) % (2 * math.pi)
    return AngleActionState(r, phi)


def to_cartesian(s: AngleActionState) -> CartesianState:
    rho = math.sqrt(2.0 * s.r)
    return CartesianState(rho * math.cos(s.phi), rho * math.sin(s.phi))


@dataclass(frozen=True)
class DegeneratePair:
    """Leading pair ``r**alpha psi0 + r**(alpha+gamma) psi1`` of a Hamiltonian.

    ``gamma`` is ``None`` when no second order is present; ``psi1`` is then
    the zero polynomial.
    """

    psi0: TrigPoly
    psi1: TrigPoly
    alpha: Fraction
    gamma: Fraction | None = None

    def __post_init__(self):
        if self.psi0.is_zero:
            raise PreconditionError("psi0 must not be identically zero")
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if self.gamma is not None:
            g = Fraction(self.gamma)
            if g < Fraction(1, 2):
                raise PreconditionError("gamma must be at least 1/2")
            object.__setattr__(self, "gamma", g)

    def truncated(self) -> "HalfPowerSeries":
        """The two-term Hamiltonian ``r**alpha psi0 + r**(alpha+gamma) psi1``."""
        terms = {int(2 * self.alpha): self.psi0}
        if self.gamma is not None and not self.psi1.is_zero:
            terms[int(2 * (self.alpha + self.gamma))] = self.psi1
        return HalfPowerSeries(terms)

    def psi(self, r: float) -> TrigPoly:
        """``psi0 + r**gamma psi1`` at a fixed action."""
        if self.gamma is None:
            return self.psi0
        return self.psi0 + self.psi1 * float(r) ** float(self.gamma)


class HalfPowerSeries:
    """Truncated series ``sum_j psi_j(phi) r**(j/2)``, ``j >= 2``.

    Parameters
    ----------
    terms : mapping of int to TrigPoly
        Half-index ``j`` to coefficient; zero coefficients are dropped.
    J : int, optional
        Truncation order (largest retained half-index). Defaults to the
        largest key; the implied remainder is ``O(r**((J+1)/2))``.
    """

    def __init__(self, terms: Mapping[int, TrigPoly], J: int | None = None):
        clean = {}
        for j, psi in sorted(terms.items()):
            j = int(j)
            if j < 2:
                raise ValueError(f"half-index must be >= 2, got {j}")
            if not psi.is_zero:
                clean[j] = psi
        top = max(clean, default=2)
        if J is None:
            J = top
        if J < top:
            raise ValueError(f"truncation order J={J} below stored half-index {top}")
        self._terms = clean
        self.J = int(J)

    @property
    def terms(self) -> dict[int, TrigPoly]:
        return dict(self._terms)

    def __getitem__(self, j: int) -> TrigPoly:
        return self._terms.get(j, TrigPoly())

    def __eq__(self, other) -> bool:
        if not isinstance(other, HalfPowerSeries):
            return NotImplemented
        return self.J == other.J and self._terms == other._terms

    def __repr__(self) -> str:
        body = ", ".join(f"{j}: {p!r}" for j, p in self._terms.items())
        return f"HalfPowerSeries({{{body}}}, J={self.J})"

    def __add__(self, other: "HalfPowerSeries") -> "HalfPowerSeries":
        keys = set(self._terms) | set(other._terms)
        return HalfPowerSeries({j: self[j] + other[j] for j in keys}, max(self.J, other.J))

    def scaled(self, c: float) -> "HalfPowerSeries":
        return HalfPowerSeries({j: p * c for j, p in self._terms.items()}, self.J)

    def shifted(self, c: float) -> "HalfPowerSeries":
        """Every coefficient replaced by ``phi -> psi_j(phi - c)``."""
        return HalfPowerSeries({j: p.shift(c) for j, p in self._terms.items()}, self.J)

    # -- vectorised evaluation ------------------------------------------
    @cached_property
    def _tables(self):
        js = np.array(sorted(self._terms), dtype=int)
        nmax = max((p.degree for p in self._terms.values()), default=0)
        C = np.zeros((js.size, nmax + 1))
        S = np.zeros((js.size, nmax + 1))
        for row, j in enumerate(js):
            p = self._terms[j]
            C[row, 0] = p.a0
            C[row, 1 : p.degree + 1] = p.cos
            S[row, 1 : p.degree + 1] = p.sin
        return js, np.arange(nmax + 1), C, S

    def _angle_parts(self, phi):
        """Per-term values of psi_j and psi_j' at phi (shape terms x ...)."""
        js, n, C, S = self._tables
        arg = np.multiply.outer(np.asarray(phi, dtype=float), n)
        cs, sn = np.cos(arg), np.sin(arg)
        val = np.tensordot(C, cs, axes=([1], [-1])) + np.tensordot(S, sn, axes=([1], [-1]))
        dval = np.tensordot(S * n, cs, axes=([1], [-1])) - np.tensordot(C * n, sn, axes=([1], [-1]))
        return js, val, dval

    @staticmethod
    def _check_r(r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise NegativeAction("action must be non-negative")
        return r

    def _powers(self, r, shift: float):
        js = self._tables[0]
        r = self._check_r(r)
        expo = js / 2.0 - shift
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.power.outer(r, expo)
        return np.moveaxis(pw, -1, 0)

    def evaluate(self, r, phi):
        """H(r, phi); broadcasts over array arguments."""
        r, phi = np.broadcast_arrays(np.asarray(r, float), np.asarray(phi, float))
        if not self._terms:
            return np.zeros(r.shape)[()]
        js, val, _ = self._angle_parts(phi)
        return np.sum(val * self._powers(r, 0.0), axis=0)[()]

    def partial_r(self, r, phi):
        r, phi = np.broadcast_arrays(np.asarray(r, float), np.asarray(phi, float))
        if not self._terms:
            return np.zeros(r.shape)[()]
        js, val, _ = self._angle_parts(phi)
        coef = (js / 2.0).reshape((-1,) + (1,) * r.ndim)
        return np.sum(coef * val * self._powers(r, 1.0), axis=0)[()]

    def partial_rr(self, r, phi):
        r, phi = np.broadcast_arrays(np.asarray(r, float), np.asarray(phi, float))
        if not self._terms:
            return np.zeros(r.shape)[()]
        js, val, _ = self._angle_parts(phi)
        h = js / 2.0
        coef = (h * (h - 1.0)).reshape((-1,) + (1,) * r.ndim)
        pw = self._powers(r, 2.0)
        # terms with h in {0, 1} have zero coefficient; avoid 0 * inf at r = 0
        return np.sum(np.where(coef == 0.0, 0.0, coef * val * pw), axis=0)[()]

    def partial_phi(self, r, phi):
        r, phi = np.broadcast_arrays(np.asarray(r, float), np.asarray(phi, float))
        if not self._terms:
            return np.zeros(r.shape)[()]
        js, _, dval = self._angle_parts(phi)
        return np.sum(dval * self._powers(r, 0.0), axis=0)[()]

    def vector_field(self, r, phi):
        """``(dr/dt, dphi/dt) = (-dH/dphi, dH/dr)``."""
        r, phi = np.broadcast_arrays(np.asarray(r, float), np.asarray(phi, float))
        js, val, dval = self._angle_parts(phi)
        pw0 = self._powers(r, 0.0)
        pw1 = self._powers(r, 1.0)
        coef = (js / 2.0).reshape((-1,) + (1,) * r.ndim)
        rdot = -np.sum(dval * pw0, axis=0)
        phidot = np.sum(coef * val * pw1, axis=0)
        return rdot, phidot

    def energy_scale(self, r):
        """``sum_j ||psi_j||_1 r**(j/2)``, a bound on |H| used to normalise drift."""
        r = self._check_r(r)
        total = np.zeros(r.shape)
        for j, p in self._terms.items():
            total = total + p.coefficient_scale() * r ** (j / 2.0)
        return total[()]

    # -- structure --------------------------------------------------------
    def leading_pair(self) -> DegeneratePair:
        """Extract ``(psi0, psi1, alpha, gamma)`` from the lowest two orders >= 3.

        A constant ``j = 2`` term (pure rotation) is ignored.
        """
        terms = dict(self._terms)
        rot = terms.pop(2, None)
        if rot is not None and rot.degree > 0:
            raise PreconditionError("the r**1 coefficient depends on the angle; not a rotation term")
        orders = sorted(terms)
        if not orders:
            raise OnlyLinear("no term of order r**(3/2) or higher")
        m = orders[0]
        if len(orders) == 1:
            return DegeneratePair(terms[m], TrigPoly(), Fraction(m, 2), None)
        n = orders[1]
        return DegeneratePair(terms[m], terms[n], Fraction(m, 2), Fraction(n - m, 2))

    # -- text format ------------------------------------------------------
    def to_text(self) -> str:
        lines = ["# j n kind coeff", f"# J={self.J}"]
        for j, p in self._terms.items():
            for n, kind, c in p.terms():
                lines.append(f"{j} {n} {kind} {c!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "HalfPowerSeries":
        """Parse lines ``j n kind coeff`` (kind in c, s, 1); ``#`` starts a comment.

        A comment of the form ``# J=<int>`` sets the truncation order.
        """
        acc: dict[int, dict[tuple[int, str], float]] = {}
        J = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            stripped = raw.strip()
            if stripped.startswith("#"):
                m = re.fullmatch(r"#\s*J\s*=\s*(\d+)\s*", stripped)
                if m:
                    J = int(m.group(1))
                continue
            if not stripped:
                continue
            tokens = _tokens(raw)
            if len(tokens) != 4:
                raise ParseError(f"expected 4 fields 'j n kind coeff', got {len(tokens)}", lineno, tokens[0][0] if tokens else 1)
            (cj, sj), (cn, sn), (ck, kind), (cc, sc) = tokens
            j = _parse_int(sj, lineno, cj)
            n = _parse_int(sn, lineno, cn)
            if j < 2:
                raise ParseError(f"half-index must be >= 2, got {j}", lineno, cj)
            if n < 0:
                raise ParseError(f"harmonic must be >= 0, got {n}", lineno, cn)
            if kind not in ("c", "s", "1"):
                raise ParseError(f"kind must be one of c, s, 1, got {kind!r}", lineno, ck)
            if kind == "1" and n != 0:
                raise ParseError("constant terms must use harmonic 0", lineno, cn)
            coeff = _parse_float(sc, lineno, cc)
            key = (n, "1" if n == 0 and kind == "c" else kind)
            if n == 0 and kind == "s":
                continue  # sin(0) vanishes
            bucket = acc.setdefault(j, {})
            bucket[key] = bucket.get(key, 0.0) + coeff
        terms = {}
        for j, bucket in acc.items():
            N = max(n for n, _ in bucket)
            c = np.zeros(N)
            s = np.zeros(N)
            a0 = 0.0
            for (n, kind), v in bucket.items():
                if kind == "1":
                    a0 += v
                elif kind == "c":
                    c[n - 1] += v
                else:
                    s[n - 1] += v
            terms[j] = TrigPoly(a0, c, s)
        try:
            return cls(terms, J)
        except ValueError as exc:
            raise ParseError(str(exc), 0) from exc


def _tokens(line: str) -> list[tuple[int, str]]:
    """Whitespace-separated tokens with their 1-based start columns."""
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line.split("#", 1)[0])]


def _parse_int(tok: str, line: int, col: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", line, col) from None


def _parse_float(tok: str, line: int, col: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"expected a real number, got {tok!r}", line, col) from None
    if not math.isfinite(v):
        raise ParseError(f"coefficient must be finite, got {tok!r}", line, col)
    return v


def eval_H(H: HalfPowerSeries, s: AngleActionState) -> float:
    return float(H.evaluate(s.r, s.phi))


def partial_r(H: HalfPowerSeries, s: AngleActionState) -> float:
    return float(H.partial_r(s.r, s.phi))


def partial_phi(H: HalfPowerSeries, s: AngleActionState) -> float:
    return float(H.partial_phi(s.r, s.phi))


def leading_pair(H: HalfPowerSeries) -> DegeneratePair:
    return H.leading_pair()
