"""Numerical flow in action-angle variables and escape experiments.

The integrator is the Dormand-Prince 5(4) pair with per-trajectory step
control, advanced in lock-step over a batch of initial conditions.  For an
autonomous Hamiltonian every accepted step is also screened by the change in
energy, so drift spikes are rejected even when the local error estimate is
small.  Simulations are evidence only; they never feed a verdict.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import HamstabError, PreconditionError, StepUnderflow
from .hamiltonian import AngleActionState, HalfPowerSeries
from .trigpoly import TrigPoly, find_zeros

# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class StepControl:
    """Step-size control.

    ``rtol`` bounds the local error of ``r`` relative to ``|r|`` (plus
    ``atol``) and of ``phi`` in radians.  ``energy_tol`` bounds the energy
    change per accepted step relative to ``H.energy_scale(r)``; ``None``
    disables the monitor.
    """

    rtol: float = 1e-10
    atol: float = 1e-14
    energy_tol: float | None = 1e-11
    max_steps: int = 2_000_000
    h_min_rel: float = 1e-13

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.energy_tol is not None and not self.energy_tol > 0:
            raise ValueError("energy_tol must be positive")


DEFAULT_CONTROL = StepControl()


@dataclass
class Trajectory:
    """Accepted samples ``(t, r, phi, H)`` of one solution.

    ``status`` is ``"completed"``, ``"escaped"``, ``"origin"`` (r reached 0)
    or ``"stopped"`` (user stop condition).  ``drift`` is the absolute energy
    drift and ``rel_drift`` divides it by the largest energy scale seen.
    """

    t: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    H: np.ndarray
    status: str = "completed"
    escape_time: float | None = None
    rel_drift: float = 0.0
    steps: int = 0
    rejected: int = 0

    @property
    def escaped(self) -> bool:
        return self.status == "escaped"

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.H - self.H[0]))) if self.H.size else 0.0

    @property
    def max_r(self) -> float:
        return float(np.max(self.r))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,r,phi,H\n")
        for row in zip(self.t, self.r, self.phi, self.H):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def _initial_step(f0: np.ndarray, y0: np.ndarray, span: float, ctrl: StepControl) -> np.ndarray:
    scale = np.maximum(np.abs(y0), 1.0) * ctrl.rtol ** (1 / 5)
    speed = np.max(np.abs(f0) / scale, axis=1)
    with np.errstate(divide="ignore"):
        h = np.where(speed > 0, 0.5 / speed, abs(span))
    return np.minimum(h, abs(span))


def dp54(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    T: float,
    ctrl: StepControl = DEFAULT_CONTROL,
    energy: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
    stop: Callable[[np.ndarray], np.ndarray] | None = None,
):
    """Integrate ``y' = rhs(y)`` for a batch ``y0`` of shape ``(n, d)`` up to ``T > 0``.

    ``energy(y)`` returns ``(H, scale)`` per row and activates the drift
    monitor.  ``stop(y)`` returns an integer code per row, ``0`` meaning
    continue; a nonzero code ends that row after the step that produced it.

    Returns one ``(t, y, code, steps, rejected)`` tuple per row, where ``t``
    and ``y`` hold every accepted sample and ``code`` is ``0`` if the row ran
    to ``T``.  Rows whose step underflows carry ``code = -1``.
    """
    if not T > 0:
        raise PreconditionError("horizon must be positive")
    y = np.array(y0, dtype=float, copy=True)
    n = y.shape[0]
    t = np.zeros(n)
    f = rhs(y)
    h = _initial_step(f, y, T, ctrl)
    rec_i, rec_t, rec_y = [np.arange(n)], [t.copy()], [y.copy()]
    codes = np.zeros(n, dtype=int)
    steps = np.zeros(n, dtype=int)
    rejected = np.zeros(n, dtype=int)
    E0 = energy(y)[0] if energy is not None else None
    E = E0.copy() if E0 is not None else None
    active = np.arange(n)
    total = 0
    while active.size:
        total += 1
        if total > ctrl.max_steps:
            codes[active] = -1
            break
        ya, fa, ha = y[active], f[active], np.minimum(h[active], T - t[active])
        K = [fa]
        for s in range(1, 7):
            acc = ya + ha[:, None] * sum(_A[s][j] * K[j] for j in range(s))
            K.append(rhs(acc))
        ynew = acc  # stage 7 is evaluated at the 5th-order solution (FSAL)
        err = ha[:, None] * sum(_E[j] * K[j] for j in range(7) if _E[j] != 0.0)
        sc = np.empty_like(ya)
        sc[:, 0] = ctrl.atol + ctrl.rtol * np.maximum(np.abs(ya[:, 0]), np.abs(ynew[:, 0]))
        sc[:, 1:] = ctrl.rtol
        ratio = np.max(np.abs(err) / sc, axis=1)
        ok = np.isfinite(ratio) & (ratio <= 1.0)
        if energy is not None:
            En, Es = energy(ynew)
            jump = np.abs(En - E[active])
            spike = jump > ctrl.energy_tol * np.maximum(Es, np.finfo(float).tiny)
            ok &= ~(spike & (ha > ctrl.h_min_rel * np.maximum(1.0, t[active]) * 16))
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(np.isfinite(ratio), 0.9 * np.where(ratio > 0, ratio, 1e-10) ** -0.2, 0.2)
        fac = np.clip(fac, 0.2, 5.0)
        h_next = np.where(ok, ha * fac, ha * np.minimum(fac, 0.5))
        acc_idx = active[ok]
        t[acc_idx] += ha[ok]
        y[acc_idx] = ynew[ok]
        f[acc_idx] = K[6][ok]
        if energy is not None:
            E[acc_idx] = En[ok]
        steps[acc_idx] += 1
        rejected[active[~ok]] += 1
        h[active] = h_next
        finished = np.zeros(n, dtype=bool)
        if acc_idx.size:
            rec_i.append(acc_idx)
            rec_t.append(t[acc_idx])
            rec_y.append(y[acc_idx])
            code_now = stop(y[acc_idx]) if stop is not None else np.zeros(acc_idx.size, dtype=int)
            hit = code_now != 0
            codes[acc_idx[hit]] = code_now[hit]
            finished[acc_idx[hit | (t[acc_idx] >= T * (1 - 1e-15))]] = True
        tiny = h[active] < ctrl.h_min_rel * np.maximum(1.0, t[active])
        for i in active[tiny & ~finished[active]]:
            codes[i] = -1
            finished[i] = True
        active = active[~finished[active]]
    idx = np.concatenate(rec_i)
    order = np.argsort(idx, kind="stable")
    tt, yy = np.concatenate(rec_t)[order], np.concatenate(rec_y)[order]
    bounds = np.searchsorted(idx[order], np.arange(n + 1))
    return [
        (tt[bounds[i] : bounds[i + 1]], yy[bounds[i] : bounds[i + 1]], int(codes[i]), int(steps[i]), int(rejected[i]))
        for i in range(n)
    ]


_ESCAPED, _ORIGIN = 1, 2


class _FlowKernel:
    """Flat-array evaluation of the flow and energy for a batch of states.

    Same quantities as :meth:`HalfPowerSeries.vector_field`, specialised to
    1-D inputs to keep per-step overhead low.
    """

    def __init__(self, H: HalfPowerSeries):
        terms = H.terms
        js = np.array(sorted(terms), dtype=float)
        nmax = max((p.degree for p in terms.values()), default=0)
        self.n = np.arange(nmax + 1, dtype=float)
        self.C = np.zeros((js.size, nmax + 1))
        self.S = np.zeros((js.size, nmax + 1))
        self.norm = np.zeros(js.size)
        for row, j in enumerate(sorted(terms)):
            p = terms[j]
            self.C[row, 0] = p.a0
            self.C[row, 1 : p.degree + 1] = p.cos
            self.S[row, 1 : p.degree + 1] = p.sin
            self.norm[row] = p.coefficient_scale()
        self.h = js / 2.0
        self.dC = (self.S * self.n).T
        self.dS = (-self.C * self.n).T
        self.CT, self.ST = self.C.T, self.S.T

    def _trig(self, phi):
        arg = phi[:, None] * self.n
        return np.cos(arg), np.sin(arg)

    def rhs(self, y):
        r = np.maximum(y[:, 0], 0.0)
        cs, sn = self._trig(y[:, 1])
        val = cs @ self.CT + sn @ self.ST
        dval = cs @ self.dC + sn @ self.dS
        pw = r[:, None] ** self.h
        with np.errstate(divide="ignore", invalid="ignore"):
            pw1 = np.where(self.h == 1.0, 1.0, r[:, None] ** (self.h - 1.0))
        out = np.empty_like(y)
        out[:, 0] = -np.sum(dval * pw, axis=1)
        out[:, 1] = np.sum(self.h * val * pw1, axis=1)
        return out

    def energy(self, y):
        r = np.maximum(y[:, 0], 0.0)
        cs, sn = self._trig(y[:, 1])
        pw = r[:, None] ** self.h
        return np.sum((cs @ self.CT + sn @ self.ST) * pw, axis=1), pw @ self.norm


def integrate_many(
    H: HalfPowerSeries,
    inits: Sequence[AngleActionState],
    T: float,
    ctrl: StepControl = DEFAULT_CONTROL,
    epsilon: float | None = None,
) -> list[Trajectory]:
    """Integrate several initial conditions of the same system.

    With ``epsilon`` set, a trajectory stops as ``"escaped"`` at the first
    accepted step with ``r > epsilon``.

    Raises
    ------
    StepUnderflow
        If any trajectory's step size underflows; ``trajectory`` holds the
        first such partial trajectory.
    """
    if any(s.r <= 0 for s in inits):
        raise PreconditionError("initial action must be positive")
    kern = _FlowKernel(H)
    rhs, energy = kern.rhs, kern.energy

    def stop(y):
        code = np.where(y[:, 0] <= 0.0, _ORIGIN, 0)
        if epsilon is not None:
            code = np.where(y[:, 0] > epsilon, _ESCAPED, code)
        return code

    y0 = np.array([[s.r, s.phi] for s in inits], dtype=float)
    raw = dp54(rhs, y0, T, ctrl, energy if ctrl.energy_tol is not None else None, stop)
    out = []
    for t, y, code, steps, rej in raw:
        r = np.maximum(y[:, 0], 0.0)
        Hv = H.evaluate(r, y[:, 1])
        scale = float(np.max(H.energy_scale(r)))
        drift = float(np.max(np.abs(Hv - Hv[0])))
        status = {0: "completed", _ESCAPED: "escaped", _ORIGIN: "origin", -1: "underflow"}[code]
        traj = Trajectory(
            t, r, y[:, 1], Hv, status,
            escape_time=float(t[-1]) if code == _ESCAPED else None,
            rel_drift=drift / scale if scale > 0 else drift,
            steps=steps, rejected=rej,
        )
        if code == -1:
            raise StepUnderflow(f"step size underflow at t = {t[-1]:.6g}", traj)
        out.append(traj)
    return out


def integrate(
    H: HalfPowerSeries,
    init: AngleActionState,
    T: float,
    ctrl: StepControl = DEFAULT_CONTROL,
    epsilon: float | None = None,
) -> Trajectory:
    """Single-trajectory form of :func:`integrate_many`."""
    return integrate_many(H, [init], T, ctrl, epsilon)[0]


def intro_hamiltonian(a: float) -> HalfPowerSeries:
    """``(1 + sin phi) r**2 + a r**3``."""
    return HalfPowerSeries({4: TrigPoly(1.0, [0.0], [1.0]), 6: TrigPoly(a)})


def level_orbit(
    mu: float,
    ctrl: StepControl = StepControl(rtol=1e-12, atol=1e-16, energy_tol=None),
    stop_phi: float = -math.pi,
    t_max: float = 1e7,
) -> Trajectory:
    """Orbit of ``phi' = -(1 + sin phi)**2``, ``r' = -r**2 cos phi`` on ``r = 1 + sin phi``.

    Starts at ``phi = -pi/2 - mu``, ``r = 2 sin(mu/2)**2`` and stops once
    ``phi`` passes ``stop_phi`` (where ``r`` reaches 1).  The ``H`` column is
    ``(1 + sin phi) r**2 - r**3``, which vanishes on the level.
    """
    if not 0 < mu < math.pi / 2:
        raise PreconditionError("mu must lie in (0, pi/2)")

    def rhs(y):
        r, phi = y[:, 0], y[:, 1]
        return np.stack([-(r**2) * np.cos(phi), -((1 + np.sin(phi)) ** 2)], axis=1)

    def stop(y):
        return np.where(y[:, 1] <= stop_phi, 1, 0)

    y0 = np.array([[2 * math.sin(mu / 2) ** 2, -math.pi / 2 - mu]])
    t, y, code, steps, rej = dp54(rhs, y0, t_max, ctrl, None, stop)[0]
    H = intro_hamiltonian(-1.0)
    r = np.maximum(y[:, 0], 0.0)
    Hv = H.evaluate(r, y[:, 1])
    traj = Trajectory(t, r, y[:, 1], Hv, "stopped" if code == 1 else "completed", steps=steps, rejected=rej)
    traj.rel_drift = float(np.max(np.abs(Hv))) / float(np.max(H.energy_scale(r)))
    if code == -1:
        raise StepUnderflow("step size underflow on the level orbit", traj)
    return traj


def level_error(traj: Trajectory) -> float:
    """``max |r - (1 + sin phi)|`` along a level orbit."""
    return float(np.max(np.abs(traj.r - (1 + np.sin(traj.phi)))))


@dataclass
class EscapeResult:
    r0: float
    phi0: float
    escaped: bool
    escape_time: float | None
    max_r: float
    rel_drift: float
    steps: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class EscapeSummary:
    epsilon: float
    T: float
    results: list[EscapeResult] = field(default_factory=list)

    @property
    def escapes(self) -> int:
        return sum(r.escaped for r in self.results)

    @property
    def max_rel_drift(self) -> float:
        return max((r.rel_drift for r in self.results), default=0.0)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "T": self.T,
            "runs": len(self.results),
            "escapes": self.escapes,
            "max_rel_drift": self.max_rel_drift,
            "results": [r.as_dict() for r in self.results],
        }


DEFAULT_R0_FRACTIONS = (1e-3, 1e-2, 0.1, 0.3, 0.6, 0.9)


def default_inits(H: HalfPowerSeries, epsilon: float, r0_fractions: Sequence[float] = DEFAULT_R0_FRACTIONS):
    """Initial conditions at the zeros of the leading coefficient.

    On a level curve of the truncated system the action is largest where
    the leading coefficient is smallest, so these angles are where escape
    happens first.  Without zeros, eight equispaced angles are used.
    """
    try:
        psi0 = H.leading_pair().psi0
        angles = [z.phi0 for z in find_zeros(psi0)]
    except HamstabError:
        angles = []
    if not angles:
        angles = list(np.arange(8) * (2 * math.pi / 8))
    return [AngleActionState(f * epsilon, phi) for f in r0_fractions for phi in angles]


def escape_experiment(
    H: HalfPowerSeries,
    epsilon: float = 0.1,
    inits: Sequence[AngleActionState] | None = None,
    T: float = 1e4,
    ctrl: StepControl = DEFAULT_CONTROL,
) -> EscapeSummary:
    """Count trajectories whose action exceeds ``epsilon`` before time ``T``."""
    if inits is None:
        inits = default_inits(H, epsilon)
    if any(s.r >= epsilon for s in inits):
        raise PreconditionError("every initial action must be below epsilon")
    trajs = integrate_many(H, inits, T, ctrl, epsilon)
    summary = EscapeSummary(float(epsilon), float(T))
    for s, tr in zip(inits, trajs):
        summary.results.append(
            EscapeResult(s.r, s.phi, tr.escaped, tr.escape_time, tr.max_r, tr.rel_drift, tr.steps)
        )
    return summary
