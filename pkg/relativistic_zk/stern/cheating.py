# Cheating Provers - the standard Stern cheats that pass two of the three challenges without a witness
import logging
from typing import Optional

from ..coding.gf2 import gf2_solve
from ..coding.syndrome import BitVector, Permutation, SdInstance, SdWitness, mat_vec_mul
from ..field.fq import FieldParams
from ..field.randomness import TAG_PROVER_ROUND, derive_rng
from .stern_protocol import CHALLENGES, InvalidChallengeError, ProverRoundState, assemble_state, prover_preprocess

logger = logging.getLogger(__name__)

# Resampling cap when looking for a weight-w e' with H.e' != s
MAX_WRONG_SYNDROME_DRAWS = 1000


def cheating_preprocess(instance: SdInstance, fail_challenge: int, round_seed: bytes,
                        params: FieldParams) -> ProverRoundState:
    """Round state that answers both challenges other than fail_challenge"""
    if fail_challenge not in CHALLENGES:
        raise InvalidChallengeError(f"fail_challenge must be 1, 2 or 3, got {fail_challenge!r}")
    rng = derive_rng(round_seed, TAG_PROVER_ROUND)
    n, w, H, s = instance.n, instance.w, instance.H, instance.s
    sigma = Permutation.random(n, rng)
    t = BitVector.random(n, rng)
    Ht = mat_vec_mul(H, t)

    if fail_challenge == 1:
        e_prime = gf2_solve(H, s)
        if e_prime is not None:
            return assemble_state(sigma, t, Ht, e_prime, round_seed, params)
        logger.debug("H.e' = s has no solution, failing challenge 2 instead")
        fail_challenge = 2

    if fail_challenge == 2:
        e_prime = BitVector.random_weight(n, w, rng)
        for _ in range(MAX_WRONG_SYNDROME_DRAWS):
            if mat_vec_mul(H, e_prime) != s:
                break
            e_prime = BitVector.random_weight(n, w, rng)
        return assemble_state(sigma, t, Ht, e_prime, round_seed, params)

    e_prime = BitVector.random_weight(n, w, rng)
    s_prime = Ht ^ mat_vec_mul(H, e_prime) ^ s
    return assemble_state(sigma, t, s_prime, e_prime, round_seed, params)


def rotating_fail_challenge(round_index: int) -> int:
    """1, 2, 3, 1, ... for rounds 1, 2, 3, 4, ..."""
    return (round_index - 1) % 3 + 1


def passing_fail_challenge(c: int) -> int:
    """A challenge to fail that is not the one being asked"""
    return c % 3 + 1


def informed_preprocess(instance: SdInstance, c: int, round_seed: bytes, params: FieldParams,
                        witness: Optional[SdWitness] = None) -> ProverRoundState:
    """State built after learning the phase-2 challenge; only reachable by signalling between the provers"""
    if witness is not None:
        return prover_preprocess(instance, witness, round_seed, params)
    return cheating_preprocess(instance, passing_fail_challenge(c), round_seed, params)
