import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from relqprot.wavepacket import (
    StretchedState,
    Waveform,
    Window,
    delayed_overlap,
    translate,
    window_mass,
)

INF = math.inf


def quad_mass(profile, lo, hi):
    """Independent quadrature of |f|^2, the oracle for all mass claims."""
    val, _ = integrate.quad(profile.density, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


@pytest.mark.parametrize("width", [0.3, 1.0, 2.5])
def test_compact_profile_normalized(width):
    w = Waveform(width)
    assert abs(quad_mass(w, -width, width) - 1.0) < 1e-12
    assert abs(w.mass(-INF, INF) - 1.0) < 1e-12


@pytest.mark.parametrize("xi", [1.0, 2.0, 6.0])
def test_tailed_profile_normalized_and_tail_mass(xi):
    w = Waveform(1.0, tail_exponent=xi)
    assert abs(quad_mass(w, -60 * w.sigma, 60 * w.sigma) - 1.0) < 1e-12
    outside = w.mass(-INF, -1.0) + w.mass(1.0, INF)
    assert abs(outside - math.exp(-xi)) < 1e-9
    assert abs(w.tail_mass - math.exp(-xi)) < 1e-15


def test_compact_support_is_exact():
    w = Waveform(1.0, center=0.5)
    taus = np.array([-0.6, -0.5001, 1.5001, 3.0])
    assert np.all(w.density(taus) == 0.0)
    assert w.mass(1.5, 10.0) == 0.0


def test_mass_matches_quadrature_inside_support():
    w = Waveform(0.8, center=-0.2)
    for lo, hi in [(-1.0, -0.5), (-0.9, 0.55), (0.0, 0.3)]:
        assert abs(w.mass(lo, hi) - quad_mass(w, lo, hi)) < 1e-12


def test_window_mass_trivia():
    s = StretchedState.create(1.0, 8.0, bit=0)
    assert abs(window_mass(s, Window(-INF, INF)) - 1.0) < 1e-12
    assert abs(window_mass(s, Window(-1.0, 1.0)) - 0.5) < 1e-12
    assert window_mass(s, Window(2.0, 6.0)) == 0.0
    # front plus rear windows carry everything
    total = window_mass(s, Window(-1.0, 1.0)) + window_mass(s, Window(7.0, 9.0))
    assert abs(total - 1.0) < 1e-12


@pytest.mark.parametrize("xi", [2.0, 4.0])
def test_tailed_window_masses(xi):
    s = StretchedState.create(1.0, 8.0, bit=1, tail_exponent=xi)
    per_hump = window_mass(s, Window(-1.0, 1.0))
    assert abs(per_hump - (0.5 - 0.5 * math.exp(-xi))) < 1e-9
    covering = window_mass(s, Window(-1.0, 9.0))
    assert covering < 1.0
    assert 1.0 - covering <= math.exp(-xi)


def test_translate_identity_and_bit():
    s = StretchedState.create(1.0, 8.0, bit=1)
    assert translate(s, 0.0) == s
    moved = translate(s, 3.25)
    assert moved.bit == 1
    assert moved.translation == pytest.approx(3.25)


def test_translate_shifted_front_mass():
    s = StretchedState.create(1.0, 8.0, bit=0)
    delta = 2.75
    moved = translate(s, delta)
    expected = 0.5 * quad_mass(s.front, -1.0, 1.0)
    assert abs(window_mass(moved, Window(-1 + delta, 1 + delta)) - expected) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    delta=st.floats(-20, 20, allow_nan=False),
    lo=st.floats(-12, 10, allow_nan=False),
    span=st.floats(0.05, 15, allow_nan=False),
    xi=st.one_of(st.none(), st.floats(0.5, 8)),
)
def test_mass_is_translation_invariant(delta, lo, span, xi):
    s = StretchedState.create(1.0, 8.0, bit=0, tail_exponent=xi)
    w = Window(lo, lo + span)
    before = window_mass(s, w)
    after = window_mass(translate(s, delta), w.shifted(delta))
    assert after == pytest.approx(before, abs=1e-12)


def test_ppf_inverts_cdf():
    for wf in (Waveform(1.3, center=0.7), Waveform(1.0, tail_exponent=3.0)):
        q = np.linspace(1e-6, 1 - 1e-6, 2001)
        back = wf.cdf(wf.ppf(q))
        assert np.max(np.abs(back - q)) < 1e-9


def test_sampled_fire_times_match_window_mass():
    rng = np.random.default_rng(1234)
    s = StretchedState.create(1.0, 8.0, bit=0)
    n = 100_000
    taus = s.sample_fire_time(rng, size=n)
    for horizon in [-0.5, 1.0, 4.0, 7.5, 9.0]:
        p = window_mass(s, Window(-INF, horizon)) if horizon > -1 else 0.0
        freq = np.count_nonzero(taus <= horizon) / n
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(freq - p) <= max(3 * sigma, 2e-4)


def test_delayed_overlap_rear_copy_is_half():
    s = StretchedState.create(1.0, 8.0, bit=0)
    assert delayed_overlap(s.rear, s) == pytest.approx(0.5, abs=1e-9)


def test_delayed_overlap_outside_supports_is_zero():
    s = StretchedState.create(1.0, 8.0, bit=0)
    far = Waveform(1.0, center=20.0)
    assert delayed_overlap(far, s) == pytest.approx(0.0, abs=1e-12)


def test_delayed_overlap_rejects_front_cover():
    s = StretchedState.create(1.0, 8.0, bit=0)
    with pytest.raises(ValueError):
        delayed_overlap(Waveform(1.0, center=0.5), s)
    with pytest.raises(ValueError):
        delayed_overlap(s, s)


@pytest.mark.parametrize(
    "delayed",
    [
        Waveform(1.0, center=8.0),
        Waveform(0.4, center=8.0),
        Waveform(0.7, center=7.9),
        Waveform(1.0, center=9.5),
        Waveform(2.0, center=5.0),
        StretchedState.create(0.5, 4.0, 0, translation=4.5),
    ],
)
def test_delayed_overlap_never_beats_half(delayed):
    s = StretchedState.create(1.0, 8.0, bit=0)
    assert delayed_overlap(delayed, s) <= 0.5 + 1e-9


@pytest.mark.parametrize("xi", [2.0, 5.0])
def test_tailed_delayed_overlap_bound(xi):
    s = StretchedState.create(1.0, 8.0, bit=0, tail_exponent=xi)
    val = delayed_overlap(s.rear, s)
    assert val <= 0.5 + math.exp(-xi)


def test_validation_errors():
    with pytest.raises(ValueError):
        Waveform(-1.0)
    with pytest.raises(ValueError):
        Waveform(1.0, tail_exponent=0.0)
    with pytest.raises(ValueError):
        Window(2.0, 2.0)
    with pytest.raises(ValueError):
        StretchedState.create(1.0, 1.5, bit=0)  # overlapping compact humps
    with pytest.raises(ValueError):
        StretchedState.create(1.0, 8.0, bit=2)
    with pytest.raises(ValueError):
        Waveform(1.0).sigma
    with pytest.raises(ValueError):
        Waveform(1.0).mass(2.0, 1.0)
