"""Closed-form example Hamiltonians with known stability behaviour."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import HalfPowerSeries
from .normalform import Frequency
from .trigpoly import TrigPoly


@dataclass(frozen=True)
class Example:
    """An autonomous normal form and, when it has one, its resonance frequency."""

    name: str
    H: HalfPowerSeries
    omega: Frequency | None
    params: dict


def _one_minus_cos(q: int) -> TrigPoly:
    return TrigPoly(1.0) - TrigPoly.cos_term(q)


def mansilla_vidal(q: int, s: float = 1.0, kappa: float = 0.0) -> Example:
    """``(1 - cos q phi) r**(q/2) + (s + kappa (1 - cos q phi)) r**(q/2 + 1)``, ``q > 2`` even."""
    if q <= 2 or q % 2:
        raise ValueError("q must be an even integer greater than 2")
    psi0 = _one_minus_cos(q)
    H = HalfPowerSeries({q: psi0, q + 2: TrigPoly(s) + psi0 * kappa})
    return Example("mansilla-vidal", H, Frequency(1, q), {"q": q, "s": s, "kappa": kappa})


def markeyev(s: float = 1.0, kappa: float = 0.0) -> Example:
    """Fourth-order resonance: the ``q = 4`` member of :func:`mansilla_vidal`."""
    ex = mansilla_vidal(4, s, kappa)
    return Example("markeyev", ex.H, ex.omega, {"s": s, "kappa": kappa})


def intro_example(a: float = 1.0) -> Example:
    """``(1 + sin phi) r**2 + a r**3``; not a resonant normal form, so no frequency."""
    H = HalfPowerSeries({4: TrigPoly(1.0, [0.0], [1.0]), 6: TrigPoly(a)})
    return Example("intro-example", H, None, {"a": a})


def cubic_family(k: int = 1, B: float = 1.0, s: float = 1.0) -> Example:
    """``4 B cos(k phi)**3 r**(3k/2) + s cos(k phi) r**(3k/2 + 1)``.

    Every zero of the leading coefficient has multiplicity three.
    """
    cos = np.zeros(3 * k)
    cos[k - 1], cos[3 * k - 1] = 3.0 * B, B
    H = HalfPowerSeries({3 * k: TrigPoly(0.0, cos), 3 * k + 2: TrigPoly.cos_term(k, s)})
    return Example("cubic-family", H, Frequency(1, k) if k >= 3 else None, {"k": k, "B": B, "s": s})


def quartic_family(k: int = 1, B: float = 1.0, s: float = 1.0) -> Example:
    """``8 B cos(k phi)**4 r**(2k) + s r**(2k + 1)``.

    Every zero of the leading coefficient has multiplicity four.
    """
    cos = np.zeros(4 * k)
    cos[2 * k - 1], cos[4 * k - 1] = 4.0 * B, B
    H = HalfPowerSeries({4 * k: TrigPoly(3.0 * B, cos), 4 * k + 2: TrigPoly(s)})
    return Example("quartic-family", H, Frequency(1, k) if k >= 3 else None, {"k": k, "B": B, "s": s})


FAMILIES = {
    "markeyev": markeyev,
    "mansilla-vidal": mansilla_vidal,
    "intro-example": intro_example,
    "cubic-family": cubic_family,
    "quartic-family": quartic_family,
}
