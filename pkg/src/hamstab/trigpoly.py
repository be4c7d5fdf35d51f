"""Real trigonometric polynomials in one angle and their real zeros.

A :class:`TrigPoly` stores ``a0 + sum_n (cos[n-1] cos(n phi) + sin[n-1] sin(n phi))``
in real cosine/sine form, so realness holds by construction.  Zeros on
``[0, 2*pi)`` are found through the companion matrix of the associated
algebraic polynomial in ``z = exp(i phi)``; multiplicities come from the
derivative chain at the polished zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import IdenticallyZero, IllConditioned

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Finite real Fourier polynomial in canonical (trimmed) form."""

    a0: float
    cos: np.ndarray
    sin: np.ndarray

    def __init__(self, a0: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = ()):
        c = np.asarray(cos, dtype=float).ravel()
        s = np.asarray(sin, dtype=float).ravel()
        n = max(c.size, s.size)
        c = np.pad(c, (0, n - c.size))
        s = np.pad(s, (0, n - s.size))
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s)) and math.isfinite(a0)):
            raise ValueError("TrigPoly coefficients must be finite")
        nz = np.nonzero((c != 0.0) | (s != 0.0))[0]
        top = int(nz[-1]) + 1 if nz.size else 0
        c = c[:top].copy()
        s = s[:top].copy()
        c.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "a0", float(a0))
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls(value)

    @classmethod
    def cos_term(cls, n: int, coeff: float = 1.0) -> "TrigPoly":
        if n == 0:
            return cls(coeff)
        c = np.zeros(n)
        c[n - 1] = coeff
        return cls(0.0, c)

    @classmethod
    def sin_term(cls, n: int, coeff: float = 1.0) -> "TrigPoly":
        if n == 0:
            return cls(0.0)
        s = np.zeros(n)
        s[n - 1] = coeff
        return cls(0.0, (), s)

    @classmethod
    def from_exp(cls, coeffs: dict[int, complex]) -> "TrigPoly":
        """Build from complex exponential coefficients ``{n: c_n}``.

        Only the Hermitian part is kept: the result equals
        ``sum_n c_n exp(i n phi)`` whenever ``c_{-n} = conj(c_n)``.
        """
        N = max((abs(n) for n in coeffs), default=0)
        full = np.zeros(2 * N + 1, dtype=complex)
        for n, c in coeffs.items():
            full[n + N] += c
        herm = 0.5 * (full + np.conj(full[::-1]))
        a0 = herm[N].real
        pos = herm[N + 1 :]
        return cls(a0, 2.0 * pos.real, -2.0 * pos.imag)

    # -- basic properties ---------------------------------------------
    @property
    def degree(self) -> int:
        return int(self.cos.size)

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.a0 == 0.0

    def coefficient_scale(self, order: int = 0) -> float:
        """``order! * (|a0|*[order == 0] + sum_n n**order (|a_n| + |b_n|))``."""
        n = np.arange(1, self.degree + 1, dtype=float)
        total = float(np.sum(n**order * (np.abs(self.cos) + np.abs(self.sin))))
        if order == 0:
            total += abs(self.a0)
        return math.factorial(order) * total

    def exp_coeffs(self) -> np.ndarray:
        """Complex coefficients ``c_{-N}..c_N`` with ``p = sum c_n z**n``."""
        N = self.degree
        out = np.zeros(2 * N + 1, dtype=complex)
        out[N] = self.a0
        pos = 0.5 * (self.cos - 1j * self.sin)
        out[N + 1 :] = pos
        out[:N] = np.conj(pos[::-1])
        return out

    def _padded(self, N: int) -> tuple[np.ndarray, np.ndarray]:
        """Cosine/sine arrays indexed by harmonic 0..N (sine[0] = 0)."""
        c = np.zeros(N + 1)
        s = np.zeros(N + 1)
        c[0] = self.a0
        c[1 : self.degree + 1] = self.cos
        s[1 : self.degree + 1] = self.sin
        return c, s

    # -- evaluation ---------------------------------------------------
    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self.degree == 0:
            return np.full(phi.shape, self.a0)[()] if phi.ndim else self.a0
        n = np.arange(1, self.degree + 1)
        arg = np.multiply.outer(phi, n)
        val = self.a0 + np.cos(arg) @ self.cos + np.sin(arg) @ self.sin
        return val[()] if np.ndim(val) == 0 else val

    # -- calculus and arithmetic --------------------------------------
    def derivative(self, order: int = 1) -> "TrigPoly":
        p = self
        for _ in range(order):
            n = np.arange(1, p.degree + 1, dtype=float)
            p = TrigPoly(0.0, n * p.sin, -n * p.cos)
        return p

    def shift(self, c: float) -> "TrigPoly":
        """Return ``phi -> p(phi - c)``."""
        n = np.arange(1, self.degree + 1, dtype=float)
        cc, sc = np.cos(n * c), np.sin(n * c)
        return TrigPoly(self.a0, self.cos * cc - self.sin * sc, self.sin * cc + self.cos * sc)

    def dilate(self, k: int) -> "TrigPoly":
        """Return ``phi -> p(k * phi)`` for a positive integer ``k``."""
        if k < 1:
            raise ValueError("dilation factor must be a positive integer")
        c = np.zeros(self.degree * k)
        s = np.zeros(self.degree * k)
        c[k - 1 :: k] = self.cos
        s[k - 1 :: k] = self.sin
        return TrigPoly(self.a0, c, s)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return TrigPoly(self.a0 + other, self.cos, self.sin)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        N = max(self.degree, other.degree)
        c1, s1 = self._padded(N)
        c2, s2 = other._padded(N)
        return TrigPoly(c1[0] + c2[0], (c1 + c2)[1:], (s1 + s2)[1:])

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self.a0, -self.cos, -self.sin)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return TrigPoly(self.a0 * other, self.cos * other, self.sin * other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return multiply(self, other)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return (
            self.a0 == other.a0
            and np.array_equal(self.cos, other.cos)
            and np.array_equal(self.sin, other.sin)
        )

    def __hash__(self) -> int:
        return hash((self.a0, self.cos.tobytes(), self.sin.tobytes()))

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        N = max(self.degree, other.degree)
        c1, s1 = self._padded(N)
        c2, s2 = other._padded(N)
        return bool(np.allclose(c1, c2, rtol=0, atol=atol) and np.allclose(s1, s2, rtol=0, atol=atol))

    def trimmed(self, rel_tol: float) -> "TrigPoly":
        """Zero every coefficient below ``rel_tol`` times the coefficient scale."""
        cut = rel_tol * self.coefficient_scale()
        c = np.where(np.abs(self.cos) > cut, self.cos, 0.0)
        s = np.where(np.abs(self.sin) > cut, self.sin, 0.0)
        a0 = self.a0 if abs(self.a0) > cut else 0.0
        return TrigPoly(a0, c, s)

    def terms(self) -> Iterable[tuple[int, str, float]]:
        """Nonzero ``(harmonic, kind, coeff)`` triples; kind is '1', 'c' or 's'."""
        if self.a0 != 0.0:
            yield 0, "1", self.a0
        for n in range(1, self.degree + 1):
            if self.cos[n - 1] != 0.0:
                yield n, "c", float(self.cos[n - 1])
            if self.sin[n - 1] != 0.0:
                yield n, "s", float(self.sin[n - 1])

    def __repr__(self) -> str:
        parts = []
        for n, kind, c in self.terms():
            parts.append(f"{c!r}" if kind == "1" else f"{c!r}*{'cos' if kind == 'c' else 'sin'}({n}φ)")
        return "TrigPoly(" + (" + ".join(parts) if parts else "0") + ")"


def evaluate(p: TrigPoly, phi):
    return p(phi)


def derivative(p: TrigPoly, order: int = 1) -> TrigPoly:
    return p.derivative(order)


def multiply(p: TrigPoly, q: TrigPoly) -> TrigPoly:
    """Product via the product-to-sum identities, degree <= N_p + N_q."""
    Np, Nq = p.degree, q.degree
    N = Np + Nq
    cp, sp = p._padded(Np)
    cq, sq = q._padded(Nq)
    C = np.zeros(N + 1)
    S = np.zeros(N + 1)
    n = np.arange(Nq + 1)
    for m in range(Np + 1):
        plus = m + n
        diff = m - n
        adiff = np.abs(diff)
        sgn = np.sign(diff)
        # cos m cos n, sin m sin n
        np.add.at(C, plus, 0.5 * (cp[m] * cq - sp[m] * sq))
        np.add.at(C, adiff, 0.5 * (cp[m] * cq + sp[m] * sq))
        # sin m cos n, cos m sin n
        np.add.at(S, plus, 0.5 * (sp[m] * cq + cp[m] * sq))
        np.add.at(S, adiff, 0.5 * sgn * (sp[m] * cq - cp[m] * sq))
    return TrigPoly(C[0], C[1:], S[1:])


@dataclass(frozen=True)
class ZeroInfo:
    """A real zero ``phi0`` of multiplicity ``mult``; ``lead`` is p^(mult)(phi0)."""

    phi0: float
    mult: int
    lead: float

    def as_dict(self) -> dict:
        return {"phi0": self.phi0, "mult": self.mult, "lead": self.lead}


@dataclass(frozen=True)
class RootTolerances:
    """Tolerances of :func:`find_zeros`.

    ``circle`` bounds ``||z| - 1|`` for a kept root (or cluster centroid),
    ``cluster`` is the finest clustering radius and the angular merge radius,
    ``mult`` is the relative derivative-chain cutoff, ``max_cluster`` the
    coarsest radius tried when grouping a perturbed multiple root, and
    ``ambiguous`` the band beyond ``circle`` that is reported rather than
    silently dropped.
    """

    circle: float = 1e-8
    cluster: float = 1e-7
    mult: float = 1e-7
    max_cluster: float = 1e-2
    ambiguous: float = 1e-6
    trim: float = 1e-15


DEFAULT_TOLERANCES = RootTolerances()


class _Chain:
    """Derivative chain p, p', p'', ... with the matching scale factors."""

    def __init__(self, p: TrigPoly, tol: float):
        self.tol = tol
        self.polys = [p]
        self.scales = [p.coefficient_scale(0)]
        self.cap = 2 * p.degree

    def poly(self, m: int) -> TrigPoly:
        while len(self.polys) <= m:
            k = len(self.polys)
            self.polys.append(self.polys[-1].derivative())
            self.scales.append(self.polys[0].coefficient_scale(k))
        return self.polys[m]

    def multiplicity(self, phi: float) -> int:
        """Smallest m with |p^(m)(phi)| > tol * scale_m."""
        for m in range(self.cap + 1):
            if abs(self.poly(m)(phi)) > self.tol * self.scales[m]:
                return m
        raise IllConditioned(f"multiplicity at phi={phi:.17g} exceeds the cap 2N={self.cap}")

    def polish(self, phi: float, m: int, max_move: float) -> float | None:
        """Newton on p^(m-1), which has a simple zero where p has an m-fold one."""
        f = self.poly(m - 1)
        df = self.poly(m)
        x = phi
        for _ in range(30):
            d = df(x)
            if d == 0.0:
                return None
            step = f(x) / d
            x -= step
            if abs(x - phi) > max_move:
                return None
            if abs(step) <= 4e-16 * max(1.0, abs(x)):
                break
        return x


def _single_linkage(z: np.ndarray, idx: list[int], radius: float) -> list[list[int]]:
    parent = {i: i for i in idx}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a_pos, a in enumerate(idx):
        for b in idx[a_pos + 1 :]:
            if abs(z[a] - z[b]) <= radius:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for i in idx:
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _wrap(phi: float) -> float:
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    if TWO_PI - phi < 1e-13:
        phi = 0.0
    return phi


def companion_roots(p: TrigPoly) -> np.ndarray:
    """Eigenvalues of the companion matrix of ``z**N p(z)`` (degree 2N)."""
    c = p.exp_coeffs()  # ascending powers of z after multiplying by z**N
    deg = c.size - 1
    if deg == 0:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((deg, deg), dtype=complex)
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(comp)


def find_zeros(p: TrigPoly, tol: RootTolerances = DEFAULT_TOLERANCES) -> list[ZeroInfo]:
    """All distinct real zeros of ``p`` on ``[0, 2*pi)`` with multiplicities.

    Raises
    ------
    IdenticallyZero
        If ``p`` is the zero polynomial.
    IllConditioned
        If a root cluster cannot be resolved consistently: the eigenvalue
        cluster size and the derivative-chain multiplicity disagree at every
        clustering radius, or a root sits in the ambiguous band just off the
        unit circle.
    """
    if p.is_zero:
        raise IdenticallyZero("cannot locate zeros of the zero polynomial")
    q = p.trimmed(tol.trim)
    if q.is_zero:
        raise IdenticallyZero("polynomial vanishes after trimming round-off")
    if q.degree == 0:
        return []
    chain = _Chain(q, tol.mult)
    z = companion_roots(q)
    found: list[tuple[float, int]] = []

    def resolve(idx: list[int], radius: float) -> None:
        size = len(idx)
        centroid = complex(np.mean(z[idx]))
        off = abs(abs(centroid) - 1.0)
        if off <= tol.circle:
            phi = math.atan2(centroid.imag, centroid.real)
            polished = chain.polish(phi, size, max(radius, tol.cluster))
            if polished is not None and chain.multiplicity(polished) == size:
                found.append((polished, size))
                return
        if size > 1:
            r = radius / 10.0
            while r >= tol.cluster:
                parts = _single_linkage(z, idx, r)
                if len(parts) > 1:
                    for part in parts:
                        resolve(part, r)
                    return
                r /= 10.0
        if off <= tol.ambiguous:
            raise IllConditioned(
                f"unresolved root cluster of size {size} near phi="
                f"{math.atan2(centroid.imag, centroid.real):.12g} (||z|-1| = {off:.3g})"
            )
        # genuinely complex (off-circle) roots: no real zero here

    for group in _single_linkage(z, list(range(z.size)), tol.max_cluster):
        resolve(group, tol.max_cluster)

    zeros: list[tuple[float, int]] = []
    for phi, m in sorted((_wrap(phi), m) for phi, m in found):
        if zeros:
            prev_phi, prev_m = zeros[-1]
            if phi - prev_phi <= tol.cluster:
                if prev_m != m:
                    raise IllConditioned(f"conflicting multiplicities near phi={phi:.12g}")
                continue
        zeros.append((phi, m))
    if len(zeros) > 1 and zeros[0][0] + TWO_PI - zeros[-1][0] <= tol.cluster:
        if zeros[0][1] != zeros[-1][1]:
            raise IllConditioned("conflicting multiplicities near phi=0")
        zeros.pop()
    if sum(m for _, m in zeros) > 2 * q.degree:
        raise IllConditioned("total multiplicity exceeds 2N")
    return [ZeroInfo(phi, m, float(chain.poly(m)(phi))) for phi, m in zeros]
