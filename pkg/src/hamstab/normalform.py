"""Resonance bookkeeping and Lie normal-form checks for time-periodic series.

A time-periodic Hamiltonian is stored in the complex angle form

    H(r, phi, t) = sum_{mu, nu, l} c[mu, nu, l] exp(i (mu - nu) phi + i l t) r**((mu + nu)/2)

which is real when ``c[mu, nu, l] == conj(c[nu, mu, -l])``.  With
``H2 = omega r`` the normal-form condition reduces to
``omega dH/dphi = dH/dt``, i.e. every mode must satisfy
``l == omega (mu - nu)``.  Only verification, projection onto the resonant
modes and the autonomizing rotation ``phi -> phi + omega t`` live here; the
normalizing transformation itself is not computed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, gcd
from typing import Mapping

import numpy as np

from .errors import NonResonantHarmonic, NotInNormalForm, ParseError
from .hamiltonian import HalfPowerSeries
from .trigpoly import TrigPoly

AUTONOMIZE_TOL = 1e-10


@dataclass(frozen=True)
class Frequency:
    """Rational characteristic frequency ``omega = p / k`` in lowest terms."""

    p: int
    k: int

    def __post_init__(self):
        if self.p < 1 or self.k < 1:
            raise ValueError("p and k must be positive integers")
        if gcd(self.p, self.k) != 1:
            raise ValueError(f"{self.p}/{self.k} is not in lowest terms")

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.k)

    def __float__(self) -> float:
        return self.p / self.k

    def __str__(self) -> str:
        return f"{self.p}/{self.k}"

    @classmethod
    def parse(cls, text: str) -> "Frequency | Nonresonant":
        text = text.strip()
        if text.lower().startswith("nonresonant"):
            _, _, rest = text.partition(":")
            return Nonresonant(float(rest) if rest else None)
        m = re.fullmatch(r"(\d+)\s*/\s*(\d+)|(\d+)", text)
        if not m:
            raise ValueError(f"cannot parse frequency {text!r}; expected 'p/k' or 'nonresonant'")
        if m.group(3):
            return cls(int(m.group(3)), 1)
        p, k = int(m.group(1)), int(m.group(2))
        g = gcd(p, k)
        return cls(p // g, k // g)


@dataclass(frozen=True)
class Nonresonant:
    """Marker for a frequency with ``M_omega = {0}``; ``value`` is optional."""

    value: float | None = None

    def __float__(self) -> float:
        if self.value is None:
            raise ValueError("nonresonant frequency has no numeric value attached")
        return float(self.value)

    def __str__(self) -> str:
        return "nonresonant" if self.value is None else f"nonresonant:{self.value!r}"


@dataclass(frozen=True)
class ResonanceModule:
    """``M_omega = {n in Z : n omega in Z}``, i.e. ``order * Z`` or ``{0}``."""

    order: int | None

    def __contains__(self, n: int) -> bool:
        if self.order is None:
            return n == 0
        return n % self.order == 0

    def __str__(self) -> str:
        if self.order is None:
            return "{0} (no resonance relations)"
        return f"{self.order}Z"


def resonance_module(f: Frequency | Nonresonant) -> ResonanceModule:
    """Order ``k`` of the resonance and the module ``M_omega``."""
    if isinstance(f, Nonresonant):
        return ResonanceModule(None)
    return ResonanceModule(f.k)


def _mode_defect(omega: Frequency | Nonresonant, harmonic: int, l: int) -> float:
    """``|omega (mu - nu) - l|``; exact zero on resonant modes."""
    if isinstance(omega, Nonresonant):
        if harmonic == 0 and l == 0:
            return 0.0
        if omega.value is None:
            return 1.0
        return abs(omega.value * harmonic - l)
    return float(abs(omega.value * harmonic - l))


def _is_resonant(omega: Frequency | Nonresonant, harmonic: int, l: int) -> bool:
    if isinstance(omega, Nonresonant):
        return harmonic == 0 and l == 0
    return omega.value * harmonic == l


@dataclass
class TimePeriodicSeries:
    """Coefficients ``c[(mu, nu)][l]`` of the complex angle form.

    ``J`` is the truncation order (largest ``mu + nu``).
    """

    entries: dict[tuple[int, int], dict[int, complex]] = field(default_factory=dict)
    J: int | None = None

    def __post_init__(self):
        clean: dict[tuple[int, int], dict[int, complex]] = {}
        for (mu, nu), modes in self.entries.items():
            if mu < 0 or nu < 0 or mu + nu < 2:
                raise ValueError(f"invalid index pair ({mu}, {nu}); need mu, nu >= 0 and mu + nu >= 2")
            kept = {int(l): complex(c) for l, c in modes.items() if c != 0}
            if kept:
                clean[(int(mu), int(nu))] = kept
        self.entries = clean
        top = max((mu + nu for mu, nu in clean), default=2)
        if self.J is None:
            self.J = top

    def items(self):
        """Iterate ``(mu, nu, l, c)`` in a fixed order."""
        for (mu, nu) in sorted(self.entries):
            modes = self.entries[(mu, nu)]
            for l in sorted(modes):
                yield mu, nu, l, modes[l]

    def reality_defect(self) -> float:
        """``max |c[mu,nu,l] - conj(c[nu,mu,-l])|`` over all stored modes."""
        worst = 0.0
        for mu, nu, l, c in self.items():
            partner = self.entries.get((nu, mu), {}).get(-l, 0.0)
            worst = max(worst, abs(c - np.conj(partner)))
        return worst

    def evaluate(self, r, phi, t):
        """Real value of the series (imaginary round-off is discarded)."""
        r, phi, t = np.broadcast_arrays(*(np.asarray(a, float) for a in (r, phi, t)))
        total = np.zeros(r.shape, dtype=complex)
        for mu, nu, l, c in self.items():
            total += c * np.exp(1j * ((mu - nu) * phi + l * t)) * r ** ((mu + nu) / 2.0)
        return total.real[()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimePeriodicSeries):
            return NotImplemented
        return self.J == other.J and self.entries == other.entries

    # -- construction from the Cartesian expansion ---------------------
    @classmethod
    def from_cartesian(cls, coeffs: Mapping[tuple[int, int], Mapping[int, complex]]) -> "TimePeriodicSeries":
        """Convert ``h_{ab}(t) x**a y**b`` (Fourier modes in t) to angle form.

        Uses ``x = sqrt(2r) cos(phi)``, ``y = sqrt(2r) sin(phi)``.  The
        ``(a, b) = (mu, nu)`` labels of the input are monomial exponents; the
        output labels are ``mu' - nu' = harmonic``, ``mu' + nu' = a + b``.
        """
        out: dict[tuple[int, int], dict[int, complex]] = {}
        for (a, b), modes in coeffs.items():
            j = a + b
            pref = 2.0 ** (j / 2.0) / (2.0**j * (1j) ** b)
            for p in range(a + 1):
                for q in range(b + 1):
                    n = 2 * (p + q) - j
                    w = pref * comb(a, p) * comb(b, q) * (-1) ** (b - q)
                    key = ((j + n) // 2, (j - n) // 2)
                    bucket = out.setdefault(key, {})
                    for l, c in modes.items():
                        bucket[l] = bucket.get(l, 0.0) + w * c
        cleaned = {k: {l: c for l, c in m.items() if abs(c) > 1e-15 * max(1.0, abs(c))} for k, m in out.items()}
        return cls(cleaned)

    # -- text format ----------------------------------------------------
    def to_text(self) -> str:
        lines = ["# mu nu l re im"]
        for mu, nu, l, c in self.items():
            lines.append(f"{mu} {nu} {l} {c.real!r} {c.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "TimePeriodicSeries":
        entries: dict[tuple[int, int], dict[int, complex]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", body)]
            if not toks:
                continue
            if len(toks) != 5:
                raise ParseError(f"expected 5 fields 'mu nu l re im', got {len(toks)}", lineno, toks[0][0])
            vals = []
            for pos, (col, tok) in enumerate(toks):
                try:
                    vals.append(int(tok) if pos < 3 else float(tok))
                except ValueError:
                    kind = "an integer" if pos < 3 else "a real number"
                    raise ParseError(f"expected {kind}, got {tok!r}", lineno, col) from None
            mu, nu, l, re_, im_ = vals
            if mu < 0 or nu < 0 or mu + nu < 2:
                raise ParseError(f"invalid index pair ({mu}, {nu})", lineno, toks[0][0])
            if not (math.isfinite(re_) and math.isfinite(im_)):
                raise ParseError("coefficient must be finite", lineno, toks[3][0])
            bucket = entries.setdefault((mu, nu), {})
            bucket[l] = bucket.get(l, 0.0) + complex(re_, im_)
        return cls(entries)


@dataclass
class NormalFormReport:
    """Residual of the normal-form equation and, when resonant, the structure."""

    residual: float
    order: int | None
    structure: dict[int, tuple[float, list[tuple[float, float]]]] | None = None

    def as_dict(self) -> dict:
        out = {"residual": self.residual, "order": self.order, "in_normal_form": self.residual <= AUTONOMIZE_TOL}
        if self.structure is not None:
            out["structure"] = {
                str(s): {"A": a, "BC": [[b, c] for b, c in bc]} for s, (a, bc) in sorted(self.structure.items())
            }
        return out


def nf_residual(Hm: TimePeriodicSeries, omega: Frequency | Nonresonant) -> float:
    """l1 norm of ``omega dH/dphi - dH/dt`` in coefficient space.

    Equals ``sum |omega (mu - nu) - l| |c|``; zero iff ``Hm`` is in normal form.
    For a :class:`Nonresonant` marker without a value every non-secular mode
    is weighted by one.
    """
    return float(sum(_mode_defect(omega, mu - nu, l) * abs(c) for mu, nu, l, c in Hm.items()))


def resonant_project(Hm: TimePeriodicSeries, omega: Frequency | Nonresonant) -> TimePeriodicSeries:
    """Keep exactly the modes with ``l == omega (mu - nu)``."""
    kept: dict[tuple[int, int], dict[int, complex]] = {}
    for mu, nu, l, c in Hm.items():
        if _is_resonant(omega, mu - nu, l):
            kept.setdefault((mu, nu), {})[l] = c
    return TimePeriodicSeries(kept, Hm.J)


def autonomize(Hm: TimePeriodicSeries, omega: Frequency | Nonresonant) -> HalfPowerSeries:
    """Remove the time dependence with ``phi~ = phi + omega t``.

    The generating function ``S = r~ (phi + omega t)`` contributes
    ``-dS/dt = -omega r``, which cancels the rotation term.

    Raises
    ------
    NotInNormalForm
        If :func:`nf_residual` exceeds ``1e-10``.
    """
    res = nf_residual(Hm, omega)
    if res > AUTONOMIZE_TOL:
        raise NotInNormalForm(f"normal-form residual {res:.3g} exceeds {AUTONOMIZE_TOL:g}")
    by_order: dict[int, dict[int, complex]] = {}
    for mu, nu, l, c in Hm.items():
        if not _is_resonant(omega, mu - nu, l):
            continue  # below tolerance; dropped
        bucket = by_order.setdefault(mu + nu, {})
        bucket[mu - nu] = bucket.get(mu - nu, 0.0) + c
    terms = {j: TrigPoly.from_exp(coeffs) for j, coeffs in by_order.items()}
    if not isinstance(omega, Nonresonant) or omega.value is not None:
        w = float(omega)
        terms[2] = terms.get(2, TrigPoly()) - w
    else:
        # rotation rate unknown: drop the secular r**1 term entirely
        terms.pop(2, None)
    terms = {j: p.trimmed(1e-15) if not p.is_zero else p for j, p in terms.items()}
    return HalfPowerSeries(terms, Hm.J)


def structure(H: HalfPowerSeries, k: int) -> dict[int, tuple[float, list[tuple[float, float]]]]:
    """Read off ``A_s`` and ``(B_sj, C_sj)`` with ``H_s = A_s + sum_j B cos(jk phi) + C sin(jk phi)``."""
    out = {}
    for s, psi in H.terms.items():
        cut = 1e-13 * psi.coefficient_scale()
        bc = []
        for n in range(1, psi.degree + 1):
            b, c = float(psi.cos[n - 1]), float(psi.sin[n - 1])
            if n % k:
                if abs(b) > cut or abs(c) > cut:
                    raise NonResonantHarmonic(f"order {s}: harmonic {n} is not a multiple of k={k}")
                continue
            bc.append((b, c))
        out[s] = (float(psi.a0), bc)
    return out


def synthesize(struct: Mapping[int, tuple[float, list[tuple[float, float]]]], k: int, J: int | None = None) -> HalfPowerSeries:
    """Inverse of :func:`structure`."""
    terms = {}
    for s, (a, bc) in struct.items():
        n = len(bc) * k
        cos = np.zeros(n)
        sin = np.zeros(n)
        for jj, (b, c) in enumerate(bc, start=1):
            cos[jj * k - 1] = b
            sin[jj * k - 1] = c
        terms[s] = TrigPoly(a, cos, sin)
    return HalfPowerSeries(terms, J)


def degenerate_reduce(A: float, B: float, C: float, k: int, rel_tol: float = 1e-10):
    """Detect ``|A| == sqrt(B**2 + C**2)`` and return the squared-cosine form.

    Returns ``(is_degenerate, psi0, phase)`` where, when degenerate,
    ``psi0 = 2 A cos**2((k phi + phase) / 2) = A + A cos(k phi + phase)``
    agrees pointwise with ``A + B cos(k phi) + C sin(k phi)``.
    """
    R = math.hypot(B, C)
    scale = max(abs(A), R)
    if scale == 0.0 or abs(abs(A) - R) > rel_tol * scale:
        return False, None, None
    phase = math.atan2(-C, B) if A > 0 else math.atan2(C, -B)
    # A cos(phase) = B and -A sin(phase) = C on the degenerate set; use B, C as given
    cos = np.zeros(k)
    sin = np.zeros(k)
    cos[k - 1] = B
    sin[k - 1] = C
    return True, TrigPoly(A, cos, sin), phase


def deautonomize(H: HalfPowerSeries, omega: Frequency) -> TimePeriodicSeries:
    """Inverse of :func:`autonomize`: rotate back with ``phi = phi~ - omega t`` and add ``omega r``.

    Every harmonic ``n`` of ``psi_j`` becomes the mode ``(mu, nu, l)`` with
    ``mu - nu = n``, ``mu + nu = j`` and ``l = omega n``, which must be an
    integer.
    """
    entries: dict[tuple[int, int], dict[int, complex]] = {}
    terms = H.terms
    terms[2] = terms.get(2, TrigPoly()) + float(omega)
    for j, psi in terms.items():
        c = psi.exp_coeffs()
        N = psi.degree
        for n in range(-N, N + 1):
            if c[n + N] == 0:
                continue
            if (j + n) % 2:
                raise NonResonantHarmonic(f"harmonic {n} cannot occur at order {j}")
            l = omega.value * n
            if l.denominator != 1:
                raise NonResonantHarmonic(f"harmonic {n} is not resonant for omega = {omega}")
            entries.setdefault(((j + n) // 2, (j - n) // 2), {})[int(l)] = complex(c[n + N])
    return TimePeriodicSeries(entries, H.J)
