"""Stability decision tree for the leading pair and its numerical certificates.

The pipeline is: no-zero / simple-zero test on ``psi0``, then the odd
multiplicity criterion, then the even multiplicity criterion.  Every verdict
carries the zeros and the sign products it was decided on.

Two certificates complement the sign tests.  :func:`chetaev_certificate`
samples an instability region for ``V = delta r**(2a+g) - r**(2a) psi**2``
and :func:`twist_check` evaluates the non-degeneracy integral of the averaged
Hamiltonian together with a finite-difference cross-check.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import (
    CertificateFailed,
    NewtonDiverged,
    NoComponent,
    NotMonotone,
    PreconditionError,
)
from .hamiltonian import DegeneratePair, HalfPowerSeries
from .normalform import degenerate_reduce, synthesize
from .trigpoly import DEFAULT_TOLERANCES, TWO_PI, RootTolerances, TrigPoly, ZeroInfo, find_zeros

STABLE = "Stable"
UNSTABLE = "Unstable"
INCONCLUSIVE = "Inconclusive"

CRITERIA = (
    "TheoremA-nozero",
    "TheoremA-simplezero",
    "Even-A",
    "Even-B",
    "Odd",
    "Prescreen-oddB",
    "Prescreen-CgtD",
    "Prescreen-CltD",
    "None",
)

# relative cutoff below which psi1(phi0) or psi1'(phi0) counts as zero
VANISH_TOL = 1e-10


@dataclass(frozen=True)
class Witness:
    """A zero of ``psi0`` with the sign data a criterion used.

    ``quantity`` names the second factor: ``"psi1"`` (even case),
    ``"dpsi1"`` (odd case) or ``"none"`` (zero test only).
    """

    phi0: float
    mult: int
    lead: float
    quantity: str = "none"
    value: float = 0.0

    @property
    def product(self) -> float:
        return self.lead * self.value

    @classmethod
    def of(cls, z: ZeroInfo, quantity: str = "none", value: float = 0.0) -> "Witness":
        return cls(z.phi0, z.mult, z.lead, quantity, float(value))

    def as_dict(self) -> dict:
        out = {"phi0": self.phi0, "mult": self.mult, "lead": self.lead}
        if self.quantity == "psi1":
            out["psi1_value"] = self.value
            out["product"] = self.product
        elif self.quantity == "dpsi1":
            out["psi1_derivative"] = self.value
            out["product"] = self.product
        return out


@dataclass(frozen=True)
class Verdict:
    kind: str
    criterion: str = "None"
    witnesses: tuple[Witness, ...] = ()
    note: str = ""

    def __post_init__(self):
        if self.kind not in (STABLE, UNSTABLE, INCONCLUSIVE):
            raise ValueError(f"unknown verdict kind {self.kind!r}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.kind != INCONCLUSIVE and self.criterion == "None":
            raise ValueError("a decided verdict needs a criterion tag")
        object.__setattr__(self, "witnesses", tuple(self.witnesses))

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "criterion": self.criterion, "witnesses": [w.as_dict() for w in self.witnesses]}
        if self.note:
            out["note"] = self.note
        return out


def _vanishes(value: float, p: TrigPoly, order: int, tol: float) -> bool:
    return abs(value) <= tol * max(p.coefficient_scale(order), np.finfo(float).tiny)


def classify_theorem_A(psi: TrigPoly, tol: RootTolerances = DEFAULT_TOLERANCES) -> Verdict:
    """No real zero: stable.  Any simple zero: unstable.  Otherwise undecided."""
    zeros = find_zeros(psi, tol)
    if not zeros:
        return Verdict(STABLE, "TheoremA-nozero", (), "leading coefficient has no real zero")
    simple = [Witness.of(z) for z in zeros if z.mult == 1]
    if simple:
        return Verdict(UNSTABLE, "TheoremA-simplezero", simple)
    return Verdict(INCONCLUSIVE, "None", tuple(Witness.of(z) for z in zeros), "all zeros are multiple")


def classify_even(
    pair: DegeneratePair, tol: RootTolerances = DEFAULT_TOLERANCES, vanish_tol: float = VANISH_TOL
) -> Verdict:
    """Sign of ``psi0^(m)(phi0) psi1(phi0)`` over the zero set of ``psi0``.

    Requires every zero to have even multiplicity.
    """
    zeros = find_zeros(pair.psi0, tol)
    odd = [z for z in zeros if z.mult % 2]
    if odd:
        raise PreconditionError(f"zero at phi={odd[0].phi0:.12g} has odd multiplicity {odd[0].mult}")
    if not zeros:
        raise PreconditionError("psi0 has no zeros; the even criterion does not apply")
    wits = tuple(Witness.of(z, "psi1", float(pair.psi1(z.phi0))) for z in zeros)
    if pair.gamma is None or any(_vanishes(w.value, pair.psi1, 0, vanish_tol) for w in wits):
        return Verdict(
            INCONCLUSIVE,
            "None",
            wits,
            "psi1 vanishes at a zero of psi0; recurse with higher-order terms",
        )
    negative = [w for w in wits if w.product < 0]
    if negative:
        return Verdict(UNSTABLE, "Even-B", tuple(negative))
    return Verdict(STABLE, "Even-A", wits)


def classify_odd(
    pair: DegeneratePair, tol: RootTolerances = DEFAULT_TOLERANCES, vanish_tol: float = VANISH_TOL
) -> Verdict:
    """Unstable when ``psi0^(m)(phi0) psi1'(phi0) > 0`` at a zero of odd ``m > 1``."""
    zeros = find_zeros(pair.psi0, tol)
    dpsi1 = pair.psi1.derivative()
    checked = []
    for z in zeros:
        if z.mult % 2 == 0 or z.mult == 1:
            continue
        d = float(dpsi1(z.phi0))
        if _vanishes(d, pair.psi1, 1, vanish_tol):
            d = 0.0
        checked.append(Witness.of(z, "dpsi1", d))
    if pair.gamma is not None:
        hits = tuple(w for w in checked if w.product > 0)
        if hits:
            return Verdict(UNSTABLE, "Odd", hits)
    note = "no odd-multiplicity zero" if not checked else "sign condition fails at every odd zero"
    return Verdict(INCONCLUSIVE, "None", tuple(checked), note)


def classify(
    pair: DegeneratePair, tol: RootTolerances = DEFAULT_TOLERANCES, vanish_tol: float = VANISH_TOL
) -> Verdict:
    """Zero test, then the odd criterion, then the even criterion."""
    v = classify_theorem_A(pair.psi0, tol)
    if v.kind != INCONCLUSIVE:
        return v
    v = classify_odd(pair, tol, vanish_tol)
    if v.kind != INCONCLUSIVE:
        return v
    zeros = find_zeros(pair.psi0, tol)
    if any(z.mult % 2 for z in zeros):
        return Verdict(
            INCONCLUSIVE,
            "None",
            v.witnesses,
            "mixed multiplicities and the odd sign condition fails; no criterion applies",
        )
    return classify_even(pair, tol, vanish_tol)


def prescreen(
    struct: Mapping[int, tuple[float, list[tuple[float, float]]]],
    k: int,
    rel_tol: float = 1e-10,
    tol: RootTolerances = DEFAULT_TOLERANCES,
) -> Verdict | DegeneratePair:
    """Decide directly from the order-``k`` resonant term when possible.

    ``struct`` is the output of :func:`hamstab.normalform.structure`.  Lower
    constant terms ``A_s`` (``3 <= s < k``) that are nonzero decide stability
    at once; an order-``k`` term decides it unless ``|A_k|`` equals the
    harmonic amplitude, in which case the degenerate pair is returned.
    """
    if k < 3:
        raise PreconditionError("resonances of order 1 and 2 are not handled")
    orders = sorted(s for s, (a, bc) in struct.items() if s >= 3 and (a != 0 or any(b or c for b, c in bc)))
    for s in orders:
        if s >= k:
            break
        a, _ = struct[s]
        if a != 0:
            return Verdict(STABLE, "TheoremA-nozero", (), f"constant term A_{s} = {a:.12g} is nonzero")
    if k not in orders:
        H = synthesize({s: struct[s] for s in orders}, k)
        return H.leading_pair()
    a, bc = struct[k]
    b1, c1 = bc[0] if bc else (0.0, 0.0)
    amp = math.hypot(b1, c1)
    psi_k = synthesize({k: (a, [(b1, c1)])}, k)[k]
    if k % 2:
        zeros = tuple(Witness.of(z) for z in find_zeros(psi_k, tol))
        return Verdict(UNSTABLE, "Prescreen-oddB", zeros, f"harmonic amplitude {amp:.12g} at odd order {k}")
    degenerate, psi0, phase = degenerate_reduce(a, b1, c1, k, rel_tol)
    if not degenerate:
        if abs(a) > amp:
            return Verdict(STABLE, "Prescreen-CgtD", (), f"|A_k| = {abs(a):.12g} > {amp:.12g}")
        zeros = tuple(Witness.of(z) for z in find_zeros(psi_k, tol))
        return Verdict(UNSTABLE, "Prescreen-CltD", zeros, f"|A_k| = {abs(a):.12g} < {amp:.12g}")
    higher = [s for s in orders if s > k]
    if not higher:
        return DegeneratePair(psi0, TrigPoly(), Fraction(k, 2), None)
    n = higher[0]
    psi1 = synthesize({n: struct[n]}, k)[n]
    return DegeneratePair(psi0, psi1, Fraction(k, 2), Fraction(n - k, 2))


# -- Chetaev certificate ---------------------------------------------------


@dataclass
class ChetaevCertificate:
    """Sampled evidence that ``V`` is a Chetaev function on a region ``Omega``.

    ``Omega`` is the connected component of ``{V >= 0, r < a, dpsi/dphi < 0}``
    that reaches the innermost sampled radius.  ``min_V`` and ``min_Vdot``
    are minima over interior samples; ``min_Vdot_bracket`` recomputes the
    derivative as the Poisson bracket of ``V`` with the truncated Hamiltonian.
    """

    delta: float
    a: float
    alpha: Fraction
    gamma: Fraction
    grid: tuple[int, int]
    radii: int
    samples: int
    min_V: float
    min_Vdot: float
    min_Vdot_bracket: float
    inner_interval: tuple[float, float]

    def as_dict(self) -> dict:
        out = asdict(self)
        out["alpha"] = str(self.alpha)
        out["gamma"] = str(self.gamma)
        out["grid"] = f"{self.grid[0]}x{self.grid[1]}"
        out["inner_interval"] = list(self.inner_interval)
        return out


def _stationary_delta(pair: DegeneratePair, radii: np.ndarray, tol: RootTolerances) -> float | None:
    """``min psi(r, phi~)**2`` over stationary angles ``phi~`` at the sampled radii."""
    best = None
    for r in radii:
        psi = pair.psi(r)
        d = psi.derivative()
        if d.is_zero:
            continue
        for z in find_zeros(d, tol):
            v = float(psi(z.phi0)) ** 2
            best = v if best is None else min(best, v)
    return best


def _slice_intervals(psi: TrigPoly, bound: float, tol: RootTolerances) -> list[tuple[float, float]]:
    """Angular intervals where ``|psi| <= bound`` and ``psi`` decreases at the midpoint."""
    cuts = sorted({z.phi0 for z in find_zeros(psi - bound, tol)} | {z.phi0 for z in find_zeros(psi + bound, tol)})
    if not cuts:
        mid = np.linspace(0.0, TWO_PI, 64, endpoint=False)
        if np.all(np.abs(psi(mid)) <= bound):
            return [(0.0, TWO_PI)]
        return []
    dpsi = psi.derivative()
    out = []
    for i, lo in enumerate(cuts):
        hi = cuts[i + 1] if i + 1 < len(cuts) else cuts[0] + TWO_PI
        mid = 0.5 * (lo + hi)
        if abs(psi(mid)) < bound and dpsi(mid) < 0:
            out.append((lo, hi))
    return out


def _angular_gap(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Cyclic distance between interval centres."""
    d = abs(0.5 * (a[0] + a[1]) - 0.5 * (b[0] + b[1])) % TWO_PI
    return min(d, TWO_PI - d)


def chetaev_certificate(
    pair: DegeneratePair,
    a: float = 0.1,
    grid: tuple[int, int] = (256, 64),
    delta: float | None = None,
    delta_fraction: float = 0.5,
    tol: RootTolerances = DEFAULT_TOLERANCES,
) -> ChetaevCertificate:
    """Build ``V`` and check ``V > 0``, ``dV/dt > 0`` on a sampled component of ``D_a^-``.

    Parameters
    ----------
    pair : DegeneratePair
        Must carry a second term (``gamma`` set).
    a : float
        Region radius in ``r``; ``0 < a < 1``.
    grid : (angles, radii)
        Radii are ``a i / R`` for ``i = 1..R``; at every radius the
        component's angular interval is sampled at ``angles`` interior points.
    delta : float, optional
        Overrides the automatic rule ``delta = delta_fraction * min psi**2``
        over stationary angles of ``psi(r, .)`` at the sampled radii.

    Raises
    ------
    NoComponent
        If ``D_a^-`` has no interval at the innermost radius.
    CertificateFailed
        At the first sample with ``V <= 0`` or ``dV/dt <= 0``; ``witness``
        holds the point and the offending values.
    """
    if pair.gamma is None:
        raise PreconditionError("the certificate needs psi1 and gamma")
    if not 0.0 < a < 1.0:
        raise PreconditionError("a must lie in (0, 1)")
    n_ang, n_rad = grid
    if n_ang < 1 or n_rad < 1:
        raise PreconditionError("grid resolutions must be positive")
    alpha, gamma = float(pair.alpha), float(pair.gamma)
    radii = a * np.arange(1, n_rad + 1) / n_rad
    if delta is None:
        best = _stationary_delta(pair, radii, tol)
        # no stationary angle at all: any positive delta is admissible
        delta = 1.0 if best is None else delta_fraction * best
    if not delta > 0.0:
        raise CertificateFailed(
            "delta rule gives zero: psi vanishes at a stationary angle", {"delta": float(delta)}
        )

    current = None
    chain: list[tuple[float, tuple[float, float]]] = []
    for r in radii:
        psi = pair.psi(r)
        ivs = _slice_intervals(psi, math.sqrt(delta * r**gamma), tol)
        if current is None:
            if not ivs:
                raise NoComponent(f"D_a^- is empty at r = {r:.6g} with delta = {delta:.6g}")
            current = ivs[0]
        else:
            # bands drift in angle as r grows; follow the nearest one
            if not ivs:
                break
            current = min(ivs, key=lambda iv: _angular_gap(current, iv))
        chain.append((float(r), current))

    H = pair.truncated()
    min_V = min_Vd = min_Vb = math.inf
    count = 0
    for r, (lo, hi) in chain:
        phi = lo + (np.arange(n_ang) + 0.5) / n_ang * (hi - lo)
        psi = pair.psi(r)
        pv = psi(phi)
        dpv = psi.derivative()(phi)
        bound = math.sqrt(delta * r**gamma)
        V = r ** (2 * alpha) * (bound - pv) * (bound + pv)
        Vdot = -delta * (2 * alpha + gamma) * r ** (3 * alpha + gamma - 1) * dpv
        # dV/dt = V_r (-H_phi) + V_phi H_r, with psi_r = gamma r**(gamma-1) psi1
        psi_r = gamma * r ** (gamma - 1) * pair.psi1(phi)
        V_r = (
            delta * (2 * alpha + gamma) * r ** (2 * alpha + gamma - 1)
            - 2 * alpha * r ** (2 * alpha - 1) * pv**2
            - 2 * r ** (2 * alpha) * pv * psi_r
        )
        V_phi = -2 * r ** (2 * alpha) * pv * dpv
        rr = np.full_like(phi, r)
        Vbr = -V_r * H.partial_phi(rr, phi) + V_phi * H.partial_r(rr, phi)
        bad = np.nonzero((V <= 0) | (Vdot <= 0))[0]
        if bad.size:
            i = int(bad[0])
            raise CertificateFailed(
                f"sample violates the Chetaev conditions at r={r:.6g}, phi={phi[i]:.12g}",
                {"r": r, "phi": float(phi[i]), "V": float(V[i]), "Vdot": float(Vdot[i]), "delta": delta},
            )
        scale = r ** (2 * alpha + gamma)
        min_V = min(min_V, float(np.min(V / scale)))
        vscale = r ** (3 * alpha + gamma - 1)
        min_Vd = min(min_Vd, float(np.min(Vdot / vscale)))
        min_Vb = min(min_Vb, float(np.min(Vbr / vscale)))
        count += phi.size
    return ChetaevCertificate(
        delta=float(delta),
        a=float(a),
        alpha=pair.alpha,
        gamma=pair.gamma,
        grid=(n_ang, n_rad),
        radii=len(chain),
        samples=count,
        min_V=min_V,
        min_Vdot=min_Vd,
        min_Vdot_bracket=min_Vb,
        inner_interval=chain[0][1],
    )


# -- twist condition ---------------------------------------------------------


@dataclass
class TwistReport:
    """Averaged-Hamiltonian data on the level ``H0 = h0``.

    ``d2h_dI2`` is the quadrature value, ``d2h_dI2_fd`` the second finite
    difference of the inverted action ``I(h)`` with step ``mu``.
    """

    h0: float
    action: float
    lambda_: float
    d2h_dI2: float
    d2h_dI2_fd: float
    mu: float
    nodes: int
    rel_diff: float = field(init=False)

    def __post_init__(self):
        denom = max(abs(self.d2h_dI2), abs(self.d2h_dI2_fd))
        self.rel_diff = 0.0 if denom == 0.0 else abs(self.d2h_dI2 - self.d2h_dI2_fd) / denom

    def as_dict(self) -> dict:
        return {
            "h0": self.h0,
            "action": self.action,
            "lambda": self.lambda_,
            "d2h_dI2": self.d2h_dI2,
            "d2h_dI2_fd": self.d2h_dI2_fd,
            "rel_diff": self.rel_diff,
            "mu": self.mu,
            "nodes": self.nodes,
        }


RAY_SAMPLES = 32


def level_radius(
    H0: HalfPowerSeries, h0: float, phi: np.ndarray, rtol: float = 1e-12, max_iter: int = 50
) -> np.ndarray:
    """Solve ``H0(r, phi_i) = h0`` for ``r > 0`` at every node.

    Brackets by doubling, then runs Newton steps safeguarded by bisection.
    """
    if h0 <= 0:
        raise PreconditionError("energy level must be positive")
    phi = np.asarray(phi, float)
    lo = np.zeros_like(phi)
    hi = np.full_like(phi, 1e-3)
    for _ in range(200):
        low = H0.evaluate(hi, phi) < h0
        if not low.any():
            break
        lo = np.where(low, hi, lo)
        hi = np.where(low, 2.0 * hi, hi)
    else:
        raise NewtonDiverged("could not bracket the level curve")
    r = hi.copy()
    for _ in range(max_iter):
        f = H0.evaluate(r, phi) - h0
        lo = np.where(f < 0, r, lo)
        hi = np.where(f > 0, r, hi)
        d = H0.partial_r(r, phi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, f / d, np.inf)
        cand = r - step
        out = ~((cand > lo) & (cand < hi))
        new = np.where(out, 0.5 * (lo + hi), cand)
        done = np.abs(new - r) <= rtol * np.abs(new)
        r = new
        if done.all():
            return r
    raise NewtonDiverged(f"level curve Newton did not converge in {max_iter} iterations")


def _action(H0: HalfPowerSeries, h: float, phi: np.ndarray) -> float:
    return float(np.mean(level_radius(H0, h, phi)))


def twist_check(H0: HalfPowerSeries, h0: float, nodes: int = 256, mu: float | None = None) -> TwistReport:
    """Frequency ``lambda = dh/dI`` and twist ``d2h/dI2`` on the level ``H0 = h0``.

    Both integrals use the periodic trapezoid rule on ``nodes`` equispaced
    angles.  The cross-check differentiates ``I(h) = mean_phi r(phi, h)``
    numerically: ``h'' = -I''/I'**3``.

    Raises
    ------
    NotMonotone
        If ``dH0/dr <= 0`` at a node, or anywhere on the ray from the
        origin out to it (sampled at ``RAY_SAMPLES`` radii).
    NewtonDiverged
        If the level curve cannot be solved.
    """
    phi = np.arange(nodes) * (TWO_PI / nodes)
    r = level_radius(H0, h0, phi)
    Hr = H0.partial_r(r, phi)
    # the level must be reached monotonically along each ray, not just crossed
    t = np.arange(1, RAY_SAMPLES + 1) / RAY_SAMPLES
    ray = H0.partial_r(np.outer(t, r), np.broadcast_to(phi, (t.size, phi.size)))
    if np.any(ray <= 0):
        i, j = np.unravel_index(int(np.argmin(ray)), ray.shape)
        raise NotMonotone(f"dH0/dr = {ray[i, j]:.6g} <= 0 at r = {t[i] * r[j]:.6g}, phi = {phi[j]:.12g}")
    Hrr = H0.partial_rr(r, phi)
    lam = 1.0 / np.mean(1.0 / Hr)
    d2 = lam**3 * np.mean(Hrr / Hr**3)
    if mu is None:
        mu = 1e-3 * h0
    Ip, I0, Im = (_action(H0, h, phi) for h in (h0 + mu, h0, h0 - mu))
    d1 = (Ip - Im) / (2 * mu)
    dd = (Ip - 2 * I0 + Im) / mu**2
    fd = -dd / d1**3
    return TwistReport(float(h0), float(np.mean(r)), float(lam), float(d2), float(fd), float(mu), nodes)
