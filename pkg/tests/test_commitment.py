import numpy as np
import pytest
from scipy import stats

from relativistic_zk.commitment.fq_commitment import (Commitment, CommitmentKeys, DegenerateOpeningError, commit,
                                                      derive_prover_key, derive_verifier_key, extract_b, verify_reveal)
from relativistic_zk.field.fq import FieldParams, fe_mul, fe_random, fe_sub
from relativistic_zk.field.randomness import seed_from_text

F31 = FieldParams.test_mode(31)
F127 = FieldParams.mersenne(127)


def test_honest_opening_verifies(rng):
    z, a, b = (fe_random(F127, rng) for _ in range(3))
    y = commit(z, a, b)
    assert verify_reveal(y, b, z, a)
    assert not verify_reveal(y, b, z, fe_sub(a, F127.one()))


def test_small_field_commitment():
    keys = CommitmentKeys(a=F31.element(7), b=F31.element(5))
    y = keys.commit(F31.element(3))
    assert y.y == F31.element(22)
    assert keys.verify(y, F31.element(3))
    assert not keys.verify(y, F31.element(4))
    # a second opening of the same y to z = 2 needs a = 12
    assert extract_b(y, F31.element(3), keys.a, F31.element(2), F31.element(12)) == keys.b


def test_reveal_across_fields_is_rejected():
    y = commit(F31.one(), F31.one(), F31.one())
    assert not verify_reveal(y, F127.one(), F127.one(), F127.one())


def test_double_opening_reveals_b(rng):
    b = fe_random(F127, rng)
    y = Commitment(fe_random(F127, rng))
    z1, z2 = F127.element(5), F127.element(9)
    # a_i = y - z_i * b opens y to z_i
    a1 = fe_sub(y.y, fe_mul(z1, b))
    a2 = fe_sub(y.y, fe_mul(z2, b))
    assert verify_reveal(y, b, z1, a1) and verify_reveal(y, b, z2, a2)
    assert extract_b(y, z1, a1, z2, a2) == b


def test_extract_needs_distinct_values():
    with pytest.raises(DegenerateOpeningError):
        extract_b(Commitment(F31.one()), F31.one(), F31.one(), F31.one(), F31.zero())


def _binding_game(trials: int, seed: int) -> float:
    """Prover commits before b is drawn and must open to both 0 and 1; best play guesses b"""
    rng = np.random.default_rng(seed)
    zero, one = F31.zero(), F31.one()
    wins = 0
    for _ in range(trials):
        y = Commitment(fe_random(F31, rng))
        guess = fe_random(F31, rng)
        a0, a1 = y.y, fe_sub(y.y, guess)
        b = fe_random(F31, rng)
        wins += verify_reveal(y, b, zero, a0) and verify_reveal(y, b, one, a1)
    return wins / trials


def test_binding_rate_quick():
    p, trials = 1 / 31, 10_000
    sigma = (p * (1 - p) / trials) ** 0.5
    assert abs(_binding_game(trials, 11) - p) < 4 * sigma


@pytest.mark.slow
def test_binding_rate():
    p, trials = 1 / 31, 100_000
    sigma = (p * (1 - p) / trials) ** 0.5
    assert abs(_binding_game(trials, 12) - p) < 3 * sigma


@pytest.mark.slow
def test_hiding_commitment_is_uniform():
    rng = np.random.default_rng(5)
    z, b = F31.element(7), F31.element(19)
    counts = np.zeros(31, dtype=int)
    for _ in range(100_000):
        counts[int(commit(z, fe_random(F31, rng), b).y)] += 1
    assert stats.chisquare(counts).pvalue > 0.01


def test_hiding_is_a_bijection_in_a():
    """For any fixed (z, b), a -> y is a permutation of F_Q, so uniform a gives uniform y"""
    for z in (0, 3, 30):
        for b in (1, 2, 29):
            ys = {int(commit(F31.element(z), F31.element(a), F31.element(b)).y) for a in range(31)}
            assert ys == set(range(31))


def test_key_derivation():
    seed = seed_from_text("keys")
    assert derive_prover_key(seed, 1, F127) == derive_prover_key(seed, 1, F127)
    assert derive_prover_key(seed, 1, F127) != derive_prover_key(seed, 2, F127)
    assert derive_verifier_key(seed, 3, 1, F127) != derive_verifier_key(seed, 4, 1, F127)
