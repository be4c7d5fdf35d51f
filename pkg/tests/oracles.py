"""Independent reference computations used to freeze expected values.

None of these routines share code paths with the library implementations
they check: zero locations come from dense sampling plus extended-precision
bisection, multiplicities from an exact square-free factorisation.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import sympy as sp

from hamstab.trigpoly import TrigPoly

mp.mp.dps = 110


def _mp_eval(p: TrigPoly, phi, order: int = 0):
    """Evaluate the order-th derivative of p at phi in extended precision."""
    w = mp.expj(mp.mpf(phi))
    total = mp.mpf(p.a0) if order == 0 else mp.mpf(0)
    rot = mp.mpc(0, 1) ** order  # d^k/dphi^k exp(i n phi) = (i n)^k exp(i n phi)
    zn = mp.mpc(1)
    for n in range(1, p.degree + 1):
        zn *= w
        cn = mp.mpf(p.cos[n - 1]) - 1j * mp.mpf(p.sin[n - 1])
        total += (n**order * cn * rot * zn).real
    return total


def _bisect(f, lo, hi, iters=100):
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    flo = f(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def sampled_zeros(p: TrigPoly, samples: int = 100_000) -> list[float]:
    """Zero locations on [0, 2pi) by dense sampling and bisection.

    Samples are taken in double precision; any sample small enough for
    round-off to matter is re-evaluated at 110 digits before its sign is used.
    """
    phi = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    step = phi[1]
    v = p(phi)
    scale = p.coefficient_scale()
    small = np.nonzero(np.abs(v) <= 1e-12 * scale)[0]
    for i in small:
        v[i] = float(_mp_eval(p, phi[i]))
    sign = np.sign(v)
    roots = [mp.mpf(phi[i]) for i in np.nonzero(sign == 0)[0]]
    nxt = np.roll(sign, -1)
    for i in np.nonzero(sign * nxt < 0)[0]:
        roots.append(_bisect(lambda x: _mp_eval(p, x), phi[i], phi[i] + step))
    # touching zeros: local minima of |p| with a tiny value
    av = np.abs(v)
    cand = (av <= np.roll(av, 1)) & (av <= np.roll(av, -1)) & (av <= 1e-3 * scale) & (sign != 0)
    tiny = mp.mpf(10) ** -40 * scale
    for i in np.nonzero(cand)[0]:
        lo, hi = phi[i] - step, phi[i] + step
        dlo, dhi = _mp_eval(p, lo, 1), _mp_eval(p, hi, 1)
        if (dlo > 0) == (dhi > 0) and dlo != 0 and dhi != 0:
            continue
        c = _bisect(lambda x: _mp_eval(p, x, 1), lo, hi)
        if abs(_mp_eval(p, c)) <= tiny:
            roots.append(c)
    out = []
    for r in sorted(float(mp.fmod(r + 2 * mp.pi, 2 * mp.pi)) for r in roots):
        if r >= 2 * math.pi - 1e-12:
            r = 0.0
        if out and abs(r - out[-1]) < 1e-9:
            continue
        out.append(r)
    out.sort()
    if len(out) > 1 and out[0] + 2 * math.pi - out[-1] < 1e-9:
        out.pop()
    return out


def exact_multiplicities(p: TrigPoly, zeros: list[float]) -> list[int]:
    """Multiplicity of each zero from the square-free factorisation over Q(i).

    Requires coefficients that are exact binary fractions (integer-grid input).
    """
    z = sp.Symbol("z")
    c = p.exp_coeffs()
    coeffs = [sp.Rational(x.real) + sp.I * sp.Rational(x.imag) for x in c[::-1]]
    poly = sp.Poly(coeffs, z, domain="QQ_I")
    _, factors = poly.sqf_list()
    mults = []
    for phi in zeros:
        zz = mp.expj(mp.mpf(phi))
        best, best_m = None, None
        for f, m in factors:
            fc = [complex(a) for a in f.all_coeffs()]
            val = mp.mpc(0)
            for a in fc:
                val = val * zz + mp.mpc(a.real, a.imag)
            norm = sum(abs(a) for a in fc)
            rel = abs(val) / norm
            if best is None or rel < best:
                best, best_m = rel, m
        mults.append(int(best_m))
    return mults


def derivative_at(p: TrigPoly, phi: float, order: int) -> float:
    """Symbolic derivative of the trig expression, evaluated with sympy."""
    x = sp.Symbol("x")
    expr = sp.Rational(p.a0)
    for n in range(1, p.degree + 1):
        expr += sp.Rational(p.cos[n - 1]) * sp.cos(n * x) + sp.Rational(p.sin[n - 1]) * sp.sin(n * x)
    return float(sp.diff(expr, x, order).subs(x, phi).evalf(30))
