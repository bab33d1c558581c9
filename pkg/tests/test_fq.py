import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from relativistic_zk.coding.syndrome import BitVector, Permutation
from relativistic_zk.field.fq import (CapacityError, FieldDivisionByZeroError, FieldParams, MappingFailure,
                                      NonCanonicalEncodingError, ParameterMismatchError, decode_bitvec,
                                      decode_perm_syndrome, encode_bitvec, encode_perm_syndrome, fe_add, fe_from_bytes,
                                      fe_inv, fe_mul, fe_neg, fe_pow, fe_random, fe_sub, fe_to_bytes,
                                      perm_syndrome_range)
from relativistic_zk.field.randomness import derive_rng, derive_seed, seed_from_text

F127 = FieldParams.mersenne(127, n_embed=20)
F31 = FieldParams.test_mode(31)

FIELDS = [FieldParams.mersenne(q) for q in (5, 7, 127, 521, 23209)]
FIELD_IDS = ["Q31", "Q127", "M127", "M521", "M23209"]


def test_mersenne_modulus():
    assert F127.modulus == 2 ** 127 - 1
    assert F127.is_mersenne
    assert F127.byte_width == 16


def test_rejects_non_mersenne_exponent():
    with pytest.raises(ValueError):
        FieldParams.mersenne(11)


def test_test_mode_requires_prime():
    with pytest.raises(ValueError):
        FieldParams.test_mode(33)
    assert FieldParams.test_mode(31).modulus == 31


def test_for_code_length_picks_smallest_fit():
    params = FieldParams.for_code_length(12)
    assert params.q_exponent == 61
    assert params.modulus >= perm_syndrome_range(12)


def test_published_field_embeds_full_length():
    params = FieldParams.mersenne(23209, n_embed=1704)
    assert math.log2(perm_syndrome_range(1704)) < 23209


def draw_element(data, params, nonzero=False):
    return params.element(data.draw(st.integers(min_value=1 if nonzero else 0, max_value=params.modulus - 1)))


@pytest.mark.parametrize("params", FIELDS, ids=FIELD_IDS)
@settings(max_examples=30, deadline=None)
@given(st.data())
def test_mul_matches_schoolbook_product(params, data):
    x, y = draw_element(data, params), draw_element(data, params)
    assert int(fe_mul(x, y)) == int(x) * int(y) % params.modulus


@pytest.mark.parametrize("params", FIELDS, ids=FIELD_IDS)
@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.data_too_large])
@given(st.data())
def test_ring_axioms(params, data):
    x, y, z = (draw_element(data, params) for _ in range(3))
    assert fe_sub(fe_add(x, y), y) == x
    assert fe_add(x, fe_neg(x)) == params.zero()
    assert fe_mul(x, y) == fe_mul(y, x)
    assert fe_mul(fe_mul(x, y), z) == fe_mul(x, fe_mul(y, z))
    assert fe_mul(x, fe_add(y, z)) == fe_add(fe_mul(x, y), fe_mul(x, z))


@pytest.mark.parametrize("params", FIELDS, ids=FIELD_IDS)
@settings(max_examples=5, deadline=None)
@given(st.data())
def test_inverse(params, data):
    x = draw_element(data, params, nonzero=True)
    assert fe_mul(x, fe_inv(x)) == params.one()


@pytest.mark.parametrize("params", FIELDS, ids=FIELD_IDS)
def test_mul_folds_largest_product(params):
    top = params.element(params.modulus - 1)
    assert int(fe_mul(top, top)) == 1
    assert fe_mul(top, params.element(2)) == params.element(params.modulus - 2)


def test_small_field_examples():
    Q127 = FieldParams.mersenne(7)
    assert int(fe_mul(Q127.element(100), Q127.element(100))) == 94
    assert int(fe_inv(Q127.element(5))) == 51


def test_inverse_of_zero():
    with pytest.raises(FieldDivisionByZeroError):
        fe_inv(F127.zero())


def test_fermat():
    x = F31.element(17)
    assert fe_pow(x, 30) == F31.one()


def test_mixed_fields_rejected():
    with pytest.raises(ParameterMismatchError):
        fe_add(F127.one(), F31.one())


def test_random_is_roughly_uniform():
    from scipy import stats

    rng = np.random.default_rng(3)
    counts = np.bincount([int(fe_random(F31, rng)) for _ in range(100_000)], minlength=31)
    assert stats.chisquare(counts).pvalue > 0.001


def test_bytes_round_trip_and_canonical_check():
    x = F127.element(123456789)
    assert fe_from_bytes(fe_to_bytes(x), F127) == x
    with pytest.raises(NonCanonicalEncodingError):
        fe_from_bytes(F127.modulus.to_bytes(16, "big"), F127)
    with pytest.raises(NonCanonicalEncodingError):
        fe_from_bytes(b"\x01", F127)


def test_bitvec_encoding_is_little_endian():
    v = BitVector.from_bits([1, 0, 1, 1])
    assert int(encode_bitvec(v, F127)) == 0b1101
    assert decode_bitvec(F127.element(0b1101), 4) == v


def test_bitvec_decode_rejects_high_bits():
    result = decode_bitvec(F127.element(1 << 5), 5)
    assert isinstance(result, MappingFailure)


def test_bitvec_capacity():
    with pytest.raises(CapacityError):
        encode_bitvec(BitVector.zeros(21), F127)


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=math.factorial(8) - 1), st.integers(min_value=0, max_value=255))
def test_perm_syndrome_encoding(rank, low):
    params = FieldParams.mersenne(61, n_embed=8)
    sigma = Permutation.unrank(8, rank)
    s = BitVector.from_int(low, 8)
    x = encode_perm_syndrome(sigma, s, params)
    assert int(x) == rank * 256 + low
    assert decode_perm_syndrome(x, 8) == (sigma, s)


def test_perm_syndrome_decode_out_of_range():
    params = FieldParams.mersenne(61, n_embed=8)
    assert isinstance(decode_perm_syndrome(params.element(perm_syndrome_range(8)), 8), MappingFailure)


def test_perm_syndrome_capacity():
    with pytest.raises(CapacityError):
        encode_perm_syndrome(Permutation.identity(30), BitVector.zeros(30), FieldParams.mersenne(61))


def test_seed_derivation_is_deterministic_and_separated():
    seed = seed_from_text("abc")
    assert derive_seed(seed, "x", 1) == derive_seed(seed, "x", 1)
    assert derive_seed(seed, "x", 1) != derive_seed(seed, "x", 2)
    assert derive_seed(seed, "x") != derive_seed(seed, "y")
    assert derive_rng(seed, "x").integers(1 << 62) == derive_rng(seed, "x").integers(1 << 62)


def test_seed_from_hex_is_literal():
    assert seed_from_text("00ff") == b"\x00\xff"
