import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relativistic_zk.coding.gf2 import gf2_rank, gf2_solve
from relativistic_zk.coding.syndrome import (BitVector, LengthMismatchError, ParameterError, ParityCheckMatrix,
                                             Permutation, SdInstance, SdWitness, SearchSpaceError,
                                             UnsupportedInstanceError, brute_force_solve, gen_no_instance,
                                             gen_yes_instance, hamming_weight, instance_from_dict, instance_to_dict,
                                             invert, is_valid_witness, load_instance, load_witness, mat_vec_mul,
                                             permute, save_instance, save_witness)

bit_lists = st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=200)


@given(bit_lists)
def test_bits_and_int_agree(bits):
    v = BitVector.from_bits(bits)
    assert v.to_bits().tolist() == bits
    assert v.to_int() == sum(b << i for i, b in enumerate(bits))
    assert hamming_weight(v) == sum(bits)


@given(bit_lists, st.data())
def test_xor(bits, data):
    other = data.draw(st.lists(st.integers(0, 1), min_size=len(bits), max_size=len(bits)))
    out = BitVector.from_bits(bits) ^ BitVector.from_bits(other)
    assert out.to_bits().tolist() == [a ^ b for a, b in zip(bits, other)]


def test_xor_length_mismatch():
    with pytest.raises(LengthMismatchError):
        BitVector.zeros(3) ^ BitVector.zeros(4)


def test_random_weight(rng):
    v = BitVector.random_weight(130, 17, rng)
    assert hamming_weight(v) == 17 and len(v) == 130
    with pytest.raises(ParameterError):
        BitVector.random_weight(5, 6, rng)


def test_tail_bits_are_masked():
    v = BitVector(np.array([0xFFFFFFFFFFFFFFFF], dtype="<u8"), 3)
    assert v.to_int() == 7


def test_mat_vec_mul_matches_dense(rng):
    H = ParityCheckMatrix.random(70, 30, rng)
    v = BitVector.random(70, rng)
    dense = H.to_bit_matrix().astype(int) @ v.to_bits().astype(int) % 2
    assert mat_vec_mul(H, v).to_bits().tolist() == dense.tolist()


def test_mat_vec_mul_is_linear(rng):
    H = ParityCheckMatrix.random(40, 12, rng)
    x, y = BitVector.random(40, rng), BitVector.random(40, rng)
    assert mat_vec_mul(H, x ^ y) == mat_vec_mul(H, x) ^ mat_vec_mul(H, y)


def test_permute_moves_coordinate_i_to_sigma_i():
    sigma = Permutation([2, 0, 1])
    assert permute(sigma, BitVector.from_bits([1, 0, 0])).to_bits().tolist() == [0, 0, 1]


@settings(max_examples=30)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2 ** 32))
def test_permute_preserves_weight_and_inverts(n, seed):
    rng = np.random.default_rng(seed)
    sigma = Permutation.random(n, rng)
    v = BitVector.random(n, rng)
    assert hamming_weight(permute(sigma, v)) == hamming_weight(v)
    assert permute(invert(sigma), permute(sigma, v)) == v
    assert sigma.compose(invert(sigma)) == Permutation.identity(n)


def test_lehmer_rank_extremes():
    assert Permutation.identity(6).rank() == 0
    assert Permutation([5, 4, 3, 2, 1, 0]).rank() == math.factorial(6) - 1


def test_lehmer_rank_is_lexicographic():
    from itertools import permutations

    ranks = [Permutation(p).rank() for p in permutations(range(5))]
    assert ranks == list(range(math.factorial(5)))


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=math.factorial(10) - 1))
def test_unrank_inverts_rank(rank):
    assert Permutation.unrank(10, rank).rank() == rank


def test_unrank_out_of_range():
    with pytest.raises(ParameterError):
        Permutation.unrank(4, 24)


def test_invalid_permutation():
    with pytest.raises(ParameterError):
        Permutation([0, 0, 1])


def test_yes_instance_has_witness(rng):
    instance, witness = gen_yes_instance(40, 20, 5, rng)
    assert is_valid_witness(instance, witness)
    assert instance.s.length == 20


def test_no_instance_is_certified(small_no):
    assert brute_force_solve(small_no) is None


def test_brute_force_finds_planted_solution(rng):
    instance, witness = gen_yes_instance(14, 6, 3, rng)
    found = brute_force_solve(instance)
    assert found is not None and is_valid_witness(instance, found)


def test_brute_force_cap(rng):
    instance, _ = gen_yes_instance(60, 30, 10, rng)
    with pytest.raises(SearchSpaceError):
        brute_force_solve(instance)


def test_no_instance_is_reproducible_from_its_seed():
    first = gen_no_instance(12, 4, 2, np.random.default_rng(11))
    second = gen_no_instance(12, 4, 2, np.random.default_rng(11))
    assert instance_to_dict(first) == instance_to_dict(second)
    assert brute_force_solve(first) is None


def test_no_instance_size_limit(rng):
    with pytest.raises(UnsupportedInstanceError):
        gen_no_instance(30, 10, 3, rng)


def test_bad_parameters(rng):
    with pytest.raises(ParameterError):
        gen_yes_instance(10, 10, 2, rng)
    with pytest.raises(ParameterError):
        gen_yes_instance(10, 4, 0, rng)


def test_instance_validation(rng):
    H = ParityCheckMatrix.random(10, 4, rng)
    with pytest.raises(LengthMismatchError):
        SdInstance(H=H, s=BitVector.zeros(5), w=2)


def test_gf2_solve(rng):
    H = ParityCheckMatrix.random(30, 12, rng)
    s = BitVector.random(18, rng)
    e = gf2_solve(H, s)
    if gf2_rank(H) == H.m:
        assert e is not None
    if e is not None:
        assert mat_vec_mul(H, e) == s


def test_gf2_solve_inconsistent():
    H = ParityCheckMatrix.from_bit_matrix(np.array([[1, 1, 0, 0], [1, 1, 0, 0]]), k=2)
    assert gf2_rank(H) == 1
    assert gf2_solve(H, BitVector.from_bits([1, 0])) is None
    e = gf2_solve(H, BitVector.from_bits([1, 1]))
    assert mat_vec_mul(H, e) == BitVector.from_bits([1, 1])


def test_instance_files(tmp_path, rng):
    instance, witness = gen_yes_instance(75, 40, 6, rng)
    save_instance(instance, tmp_path / "instance.json")
    save_witness(witness, tmp_path / "witness.json")
    loaded = load_instance(tmp_path / "instance.json")
    assert loaded.H == instance.H and loaded.s == instance.s and loaded.w == instance.w
    assert is_valid_witness(loaded, load_witness(tmp_path / "witness.json"))
    assert instance_from_dict(instance_to_dict(instance)).H == instance.H


def test_witness_check_rejects_wrong_weight(small_yes):
    instance, witness = small_yes
    assert not is_valid_witness(instance, SdWitness(e=witness.e ^ BitVector.from_int(1, instance.n)))
