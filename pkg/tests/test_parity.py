import math
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relqprot.parity import (
    BlockCode,
    EnumerationBoundError,
    InconsistentEvidenceError,
    alpha,
    block_string_parity,
    count_block_strings,
    count_block_strings_closed,
    exact_parity_guesser,
    p_acc_fixed,
    p_fixed_block,
    parity_posterior,
    pc_parity_block_bound,
    pc_parity_plain,
    random_block_code,
    sample_secret,
)


def pairs_up_to(total_bits):
    return [
        (n, k)
        for n in range(1, total_bits + 1)
        for k in range(1, total_bits + 1)
        if n * k <= total_bits
    ]


# ------------------------------------------------------------------ counting


def test_counting_examples():
    assert count_block_strings(1, 1) == (1, 1)
    assert count_block_strings(2, 2) == (2, 6)
    assert count_block_strings_closed(2, 2) == (2, 6)
    assert sum(count_block_strings_closed(2, 2)) == 8


@pytest.mark.parametrize("n", [1, 3, 6, 10])
def test_unit_blocks_split_evenly(n):
    even, odd = count_block_strings_closed(n, 1)
    assert even == odd == 2 ** (n - 1)


@pytest.mark.parametrize("n,k", pairs_up_to(14))
def test_closed_form_matches_enumeration(n, k):
    assert count_block_strings_closed(n, k) == count_block_strings(n, k)


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (2, 3), (5, 2), (4, 3)])
def test_counts_match_direct_binomial_sums(n, k):
    even = sum(comb(n * k, level * k) for level in range(0, n + 1, 2))
    odd = sum(comb(n * k, level * k) for level in range(1, n + 1, 2))
    assert count_block_strings_closed(n, k) == (even, odd)


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (2, 4), (4, 2), (8, 2), (4, 4)])
def test_enumeration_agrees_with_pure_python_walk(n, k):
    """Double-count check with an oracle that shares no code with the library."""
    even = odd = 0
    for bits in product((0, 1), repeat=n * k):
        ones = sum(bits)
        if ones % k:
            continue
        if (ones // k) % 2:
            odd += 1
        else:
            even += 1
    assert count_block_strings(n, k) == (even, odd)


def test_enumeration_bound_enforced():
    with pytest.raises(EnumerationBoundError):
        count_block_strings(3, 7)
    assert count_block_strings(3, 7, enum_bound=21) == count_block_strings_closed(3, 7)


def test_large_closed_counts_stay_exact():
    even, odd = count_block_strings_closed(40, 5)
    assert even + odd == sum(comb(200, 5 * level) for level in range(41))


# --------------------------------------------------------------- closed forms


def test_alpha_values():
    assert alpha(1, 1) == pytest.approx(1.0)
    assert alpha(2, 2) == pytest.approx(0.75)


def test_valid_fraction_decreases_with_block_length():
    # Longer blocks leave fewer valid strings per channel string, so the
    # valid fraction S / 2^(N k) falls monotonically.  The entropy ratio
    # alpha itself is not monotone: it dips below 1 and climbs back as the
    # dominant binomial swallows the exponent.
    for n in (2, 4, 7):
        fractions = []
        for k in range(1, 9):
            even, odd = count_block_strings_closed(n, k)
            fractions.append(Fraction(even + odd, 2 ** (n * k)))
        assert all(a > b for a, b in zip(fractions, fractions[1:]))
        assert all(alpha(n, k) < 1.0 for k in range(2, 9))
        assert alpha(n, 1) == pytest.approx(1.0)


def test_pc_parity_plain():
    assert pc_parity_plain(1) == pytest.approx(0.75)
    assert pc_parity_plain(10) == pytest.approx(0.5 + 2.0**-11)
    assert pc_parity_plain(400) == pytest.approx(0.5)


def test_pc_parity_block_bound():
    for n in (1, 3, 6):
        assert pc_parity_block_bound(n, 1) == pytest.approx(0.5 + 2.0**-n)
    assert pc_parity_block_bound(2, 2) == pytest.approx(0.5 + 2.0**-3)
    assert pc_parity_block_bound(60, 10) == pytest.approx(0.5)


def test_fixed_block_probabilities():
    assert p_fixed_block(1) == pytest.approx(0.5)
    assert p_fixed_block(3) == pytest.approx(7 / 8)
    assert p_acc_fixed(4, 3) == pytest.approx((7 / 8) ** 4)


def test_public_positions_beat_scattered_identification():
    for n, k in pairs_up_to(12):
        scattered = 2.0 ** (-alpha(n, k) * n * k)
        assert p_acc_fixed(n, k) >= scattered - 1e-12


# -------------------------------------------------------------------- guesser


def brute_posterior(n, k, fired):
    """Enumerate every completion of the evidence, weighting strings the way
    the honest sender samples them; fully independent of the library path."""
    nk = n * k
    silent = [c for c in range(nk) if c not in fired]
    weights = [Fraction(0), Fraction(0)]
    for bits in product((0, 1), repeat=len(silent)):
        full = dict(fired)
        full.update(dict(zip(silent, bits)))
        ones = sum(full.values())
        if ones % k:
            continue
        level = ones // k
        if level > n:
            continue
        weights[level % 2] += Fraction(comb(n, level), comb(nk, level * k))
    return weights


@settings(max_examples=120, deadline=None)
@given(data=st.data())
def test_posterior_matches_brute_enumeration(data):
    n = data.draw(st.integers(1, 4))
    k = data.draw(st.integers(1, 3))
    nk = n * k
    n_fired = data.draw(st.integers(0, nk))
    channels = data.draw(
        st.lists(st.integers(0, nk - 1), min_size=n_fired, max_size=n_fired, unique=True)
    )
    fired = {c: data.draw(st.integers(0, 1)) for c in channels}
    expected = brute_posterior(n, k, fired)
    unfired = nk - len(fired)
    ones = sum(fired.values())
    if expected[0] + expected[1] == 0:
        with pytest.raises(InconsistentEvidenceError):
            parity_posterior(n, k, unfired, ones)
        return
    got = parity_posterior(n, k, unfired, ones)
    assert got == tuple(expected)


def test_guesser_examples():
    assert exact_parity_guesser({}, 3, 2) == (0, 0.5)
    guess, conf = exact_parity_guesser({0: 1, 1: 1, 2: 0, 3: 0}, 2, 2)
    assert (guess, conf) == (1, 1.0)
    assert exact_parity_guesser({1: 0}, 2, 1) == (0, 0.5)
    assert exact_parity_guesser({0: 1}, 2, 1) == (0, 0.5)


def test_guesser_certain_when_both_values_seen_small_blocks():
    # any 1 and any 0 visible pins the single one-block, hence the parity
    guess, conf = exact_parity_guesser({0: 1, 3: 0}, 2, 2)
    assert (guess, conf) == (1, 1.0)


def test_guesser_inconsistent_evidence():
    with pytest.raises(InconsistentEvidenceError):
        exact_parity_guesser({0: 1, 1: 0}, 1, 2)


def test_guesser_input_validation():
    with pytest.raises(ValueError):
        exact_parity_guesser({7: 1}, 2, 2)
    with pytest.raises(ValueError):
        exact_parity_guesser({0: 2}, 2, 2)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_guess_success_matches_plain_formula(n):
    rng = np.random.default_rng(100 + n)
    trials = 30_000
    hits = 0
    for _ in range(trials):
        secret = sample_secret(n, 1, rng)
        fired = {
            c: secret.channel_bits[c] for c in range(n) if rng.random() < 0.5
        }
        hits += exact_parity_guesser(fired, n, 1).guess == secret.parity
    ref = pc_parity_plain(n)
    sigma = math.sqrt(ref * (1 - ref) / trials)
    assert abs(hits / trials - ref) <= 3 * sigma
    assert 0.5 - 3 * sigma <= hits / trials


# ------------------------------------------------------------------ sampling


def test_block_code_structure():
    code = BlockCode(2, 2, (3, 0, 2, 1))
    assert code.n_channels == 4
    assert [code.block_of(c) for c in range(4)] == [1, 0, 1, 0]
    assert code.channel_bits((0, 1)) == (1, 0, 1, 0)
    with pytest.raises(ValueError):
        BlockCode(2, 2, (0, 0, 1, 2))
    with pytest.raises(ValueError):
        code.channel_bits((0,))


def test_random_code_is_permutation():
    rng = np.random.default_rng(8)
    code = random_block_code(3, 4, rng)
    assert sorted(code.assignment) == list(range(12))


def test_sample_secret_consistency():
    rng = np.random.default_rng(9)
    parities = 0
    for _ in range(2000):
        secret = sample_secret(3, 2, rng)
        assert secret.parity == sum(secret.values) % 2
        assert block_string_parity(secret.channel_bits, 2) == secret.parity
        parities += secret.parity
    assert abs(parities / 2000 - 0.5) <= 3 * math.sqrt(0.25 / 2000)


def test_block_string_parity_rejects_invalid():
    with pytest.raises(ValueError):
        block_string_parity((1, 0, 0, 0), 2)
    assert block_string_parity((1, 1, 0, 0), 2) == 1
