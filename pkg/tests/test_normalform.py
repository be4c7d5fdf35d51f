import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamstab.errors import NonResonantHarmonic, NotInNormalForm, ParseError
from hamstab.families import cubic_family, markeyev, quartic_family
from hamstab.hamiltonian import HalfPowerSeries
from hamstab.normalform import (
    Frequency,
    Nonresonant,
    TimePeriodicSeries,
    autonomize,
    deautonomize,
    degenerate_reduce,
    nf_residual,
    resonance_module,
    resonant_project,
    structure,
    synthesize,
)
from hamstab.trigpoly import TrigPoly

from corpus import random_frequency, random_resonant_series

PI = math.pi
seeds = st.integers(0, 2**32 - 1)


def resonant_case(seed):
    rng = np.random.default_rng(seed)
    w = random_frequency(rng)
    return w, random_resonant_series(rng, w)


# -- frequencies --------------------------------------------------------------


@pytest.mark.parametrize(
    "omega, order, text",
    [(Frequency(1, 4), 4, "4Z"), (Frequency(2, 3), 3, "3Z"), (Frequency(3, 1), 1, "1Z"), (Nonresonant(), None, "{0} (no resonance relations)")],
)
def test_resonance_module(omega, order, text):
    M = resonance_module(omega)
    assert M.order == order and str(M) == text
    assert 0 in M
    if order:
        assert order in M and -2 * order in M and (order == 1 or 1 not in M)
    else:
        assert 1 not in M


def test_frequency_parsing():
    assert Frequency.parse("2/8") == Frequency(1, 4)
    assert Frequency.parse("3") == Frequency(3, 1)
    assert Frequency.parse("nonresonant") == Nonresonant()
    assert Frequency.parse("nonresonant:1.4142") == Nonresonant(1.4142)
    with pytest.raises(ValueError):
        Frequency.parse("pi")
    with pytest.raises(ValueError):
        Frequency(2, 4)


# -- residual and projection -------------------------------------------------


def test_residual_examples():
    w = Frequency(1, 4)
    on = TimePeriodicSeries({(4, 0): {1: 0.5}, (0, 4): {-1: 0.5}})
    assert nf_residual(on, w) == 0.0
    off = TimePeriodicSeries({(4, 0): {1: 0.5}, (0, 4): {-1: 0.5}, (3, 1): {0: 2.0}, (1, 3): {0: 2.0}})
    # harmonics +-2 with l = 0 are each off by 1/2
    assert nf_residual(off, w) == pytest.approx(2 * 0.5 * 2.0, abs=1e-15)


def test_nonresonant_residual_weights():
    H = TimePeriodicSeries({(1, 1): {0: 1.0}, (2, 2): {0: 3.0}, (3, 1): {0: 0.5}, (1, 3): {0: 0.5}})
    assert nf_residual(H, Nonresonant()) == pytest.approx(1.0)
    assert nf_residual(H, Nonresonant(math.sqrt(2))) == pytest.approx(2 * (2 * math.sqrt(2) * 0.5))  # both conjugate modes


@settings(max_examples=50)
@given(seeds)
def test_resonant_series_have_zero_residual(seed):
    w, H = resonant_case(seed)
    assert nf_residual(H, w) == 0.0


@settings(max_examples=50)
@given(seeds, st.floats(1e-3, 10), st.integers(-5, 5))
def test_injected_mode_residual(seed, mag, shift):
    w, H = resonant_case(seed)
    mu, nu = 3, 1
    l = int(w.value * 2) + (shift or 1) if (w.value * 2).denominator == 1 else 0
    entries = {key: dict(m) for key, m in H.entries.items()}
    entries.setdefault((mu, nu), {})
    entries[(mu, nu)][l] = entries[(mu, nu)].get(l, 0) + mag
    bumped = TimePeriodicSeries(entries)
    expected = float(abs(w.value * 2 - l)) * mag
    assert nf_residual(bumped, w) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50)
@given(seeds, seeds)
def test_projection_is_idempotent(seed, noise_seed):
    w, H = resonant_case(seed)
    rng = np.random.default_rng(noise_seed)
    entries = {key: dict(m) for key, m in H.entries.items()}
    for _ in range(3):
        entries.setdefault((int(rng.integers(0, 4)), int(rng.integers(2, 5))), {})[int(rng.integers(-3, 4))] = rng.normal()
    noisy = TimePeriodicSeries(entries)
    P = resonant_project(noisy, w)
    assert nf_residual(P, w) == 0.0
    assert resonant_project(P, w) == P


# -- autonomization -----------------------------------------------------------


@settings(max_examples=50)
@given(seeds, st.floats(0, 1), st.floats(0, 2 * PI), st.floats(-20, 20))
def test_autonomize_matches_rotating_frame(seed, r, phi, t):
    w, H = resonant_case(seed)
    A = autonomize(H, w)
    lhs = H.evaluate(r, phi, t) - float(w) * r
    assert A.evaluate(r, phi + float(w) * t) == pytest.approx(lhs, abs=1e-12 * (1 + abs(lhs)))


@settings(max_examples=50)
@given(seeds)
def test_reality_is_preserved(seed):
    w, H = resonant_case(seed)
    assert H.reality_defect() == 0.0
    back = deautonomize(autonomize(H, w), w)
    assert back.reality_defect() <= 1e-15


def test_autonomize_rejects_non_normal_form():
    H = TimePeriodicSeries({(3, 1): {0: 1.0}, (1, 3): {0: 1.0}})
    with pytest.raises(NotInNormalForm):
        autonomize(H, Frequency(1, 4))


def test_autonomize_markeyev_round_trip():
    ex = markeyev(-1.0, 2.0)
    tps = deautonomize(ex.H, ex.omega)
    assert nf_residual(tps, ex.omega) == 0.0
    assert autonomize(tps, ex.omega) == ex.H


def test_rotation_term_is_cancelled():
    H = TimePeriodicSeries({(1, 1): {0: 0.25}, (2, 2): {0: 1.0}})
    A = autonomize(H, Frequency(1, 4))
    assert 2 not in A.terms and A[4] == TrigPoly(1.0)


# -- resonant structure -------------------------------------------------------


def test_structure_of_one_plus_cos():
    H = HalfPowerSeries({5: TrigPoly(1, [0, 0, 0, 0, 1])})
    assert structure(H, 5) == {5: (1.0, [(1.0, 0.0)])}


def test_structure_of_cubic_and_quartic_families():
    c = structure(cubic_family(3, 2.0, -1.0).H, 3)
    assert c[9] == (0.0, [(6.0, 0.0), (0.0, 0.0), (2.0, 0.0)])
    assert c[11] == (0.0, [(-1.0, 0.0)])
    q = structure(quartic_family(3, 1.0).H, 3)
    assert q[12] == (3.0, [(0.0, 0.0), (4.0, 0.0), (0.0, 0.0), (1.0, 0.0)])


def test_structure_rejects_foreign_harmonic():
    with pytest.raises(NonResonantHarmonic):
        structure(HalfPowerSeries({4: TrigPoly(1, [0, 0, 0, 1], [0.1, 0, 0, 0])}), 4)


@st.composite
def structures(draw):
    k = draw(st.integers(3, 6))
    f = st.floats(-3, 3, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-6)
    out = {}
    for s in draw(st.sets(st.integers(3, 12), min_size=1, max_size=3)):
        m = draw(st.integers(0, 2))
        bc = [(draw(f), draw(f)) for _ in range(m)]
        while bc and bc[-1] == (0.0, 0.0):
            bc.pop()
        a = draw(f)
        if a == 0 and not bc:
            a = 1.0
        out[s] = (a, bc)
    return k, out


@given(structures())
def test_structure_inverts_synthesize(case):
    k, struct = case
    assert structure(synthesize(struct, k), k) == struct


def test_degenerate_reduce_examples():
    ok, psi, phase = degenerate_reduce(1, 1, 0, 4)
    assert ok and psi == TrigPoly(1, [0, 0, 0, 1]) and phase == 0.0
    ok, psi, phase = degenerate_reduce(1, -1, 0, 4)
    assert ok and psi == TrigPoly(1, [0, 0, 0, -1]) and phase == pytest.approx(PI)
    assert degenerate_reduce(2, 1, 0, 4) == (False, None, None)
    assert degenerate_reduce(0, 0, 0, 4) == (False, None, None)


@given(st.floats(0.1, 5), st.floats(0, 2 * PI), st.sampled_from([-1, 1]), st.integers(3, 8))
def test_degenerate_reduce_pointwise(R, theta, sign, k):
    A, B, C = sign * R, R * math.cos(theta), R * math.sin(theta)
    ok, psi, phase = degenerate_reduce(A, B, C, k)
    assert ok
    phi = np.arange(16) * (2 * PI / 16)
    direct = A + B * np.cos(k * phi) + C * np.sin(k * phi)
    squared = 2 * A * np.cos((k * phi + phase) / 2) ** 2
    assert np.allclose(psi(phi), direct, atol=1e-12 * R)
    assert np.allclose(squared, direct, atol=1e-12 * R)


# -- Cartesian input and text format ------------------------------------------


def test_from_cartesian_matches_direct_evaluation():
    coeffs = {(4, 0): {0: 0.5}, (2, 2): {1: 0.25j, -1: -0.25j}, (1, 3): {0: -1.0}, (2, 0): {0: 0.5}, (0, 2): {0: 0.5}}
    H = TimePeriodicSeries.from_cartesian(coeffs)
    assert H.reality_defect() <= 1e-15
    for r, phi, t in [(0.3, 0.4, 0.0), (0.7, 2.5, 1.3), (0.05, 5.0, -2.0)]:
        x, y = math.sqrt(2 * r) * math.cos(phi), math.sqrt(2 * r) * math.sin(phi)
        direct = sum(
            (sum(c * np.exp(1j * l * t) for l, c in m.items()) * x**a * y**b).real for (a, b), m in coeffs.items()
        )
        assert H.evaluate(r, phi, t) == pytest.approx(direct, abs=1e-14)


@settings(max_examples=50)
@given(seeds)
def test_text_round_trip(seed):
    _, H = resonant_case(seed)
    assert TimePeriodicSeries.parse(H.to_text()) == H


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        TimePeriodicSeries.parse("# mu nu l re im\n2 2 0 1.0 0.0\n4 0 1 x 0.0\n")
    assert (info.value.line, info.value.column) == (3, 7)
    with pytest.raises(ParseError) as info:
        TimePeriodicSeries.parse("1 0 0 1.0 0.0\n")
    assert info.value.line == 1
