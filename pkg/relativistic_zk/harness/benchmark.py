# Loopback Benchmark - per-round phase timings over a local socket pair and the per-round cheat rate
import logging
import socket
import threading
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..coding.syndrome import SdInstance, SdWitness, gen_yes_instance
from ..commitment.fq_commitment import derive_verifier_key
from ..field.fq import FieldParams
from ..field.randomness import TAG_INSTANCE, TAG_PROVER_ROUND, derive_rng, derive_seed, fresh_seed
from ..params.security_calculator import sd_hardness_bits
from ..roles.verifier_roles import verifier_challenge
from ..stern.cheating import cheating_preprocess, rotating_fail_challenge
from ..stern.stern_protocol import (Phase1Message, Phase2Message, ProverRoundState, p1_respond, p2_respond,
                                    prover_preprocess, run_round, verifier_check)
from ..transport.drivers import recv_exact
from ..transport.wire import (HEADER, MessageType, decode_frame, decode_phase1_challenge, decode_phase1_response,
                              decode_phase2_challenge, decode_phase2_response, encode_phase1_challenge,
                              encode_phase1_response, encode_phase2_challenge, encode_phase2_response, parse_header)

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["round", "phase1_us", "phase2_us", "challenge", "accepted"]


def read_frame(sock: socket.socket):
    header = recv_exact(sock, HEADER.size)
    _, _, length = parse_header(header)
    return decode_frame(header + recv_exact(sock, length))


def bench_instance(n: int, rng: np.random.Generator) -> Tuple[SdInstance, SdWitness]:
    """YES instance with k and w at the attack-optimal ratios for n"""
    _, k, w = sd_hardness_bits(n)
    return gen_yes_instance(n, min(max(k, 1), n - 1), max(w, 1), rng)


def _bench_params(n: int, q_exponent: Optional[int]) -> FieldParams:
    return FieldParams.for_code_length(n) if q_exponent is None else FieldParams.mersenne(q_exponent, n_embed=n)


class LoopbackProver(threading.Thread):
    """Both provers behind one socket: answers B with commitments and c with openings"""

    def __init__(self, sock: socket.socket, states: Dict[int, ProverRoundState], params: FieldParams):
        super().__init__(name="loopback-prover", daemon=True)
        self.sock = sock
        self.states = states
        self.params = params
        self.error: Optional[BaseException] = None

    def run(self):
        try:
            while True:
                try:
                    frame = read_frame(self.sock)
                except ConnectionError:
                    return
                state = self.states[frame.round_index]
                if frame.msg_type is MessageType.PHASE1_CHALLENGE:
                    B = decode_phase1_challenge(frame.payload, self.params)
                    reply = encode_phase1_response(frame.round_index, p1_respond(state, B))
                else:
                    c = decode_phase2_challenge(frame.payload)
                    reply = encode_phase2_response(frame.round_index, p2_respond(state, c))
                self.sock.sendall(reply)
        except Exception as e:
            logger.error(f"Loopback prover failed: {e}")
            self.error = e


@dataclass
class BenchResult:
    n: int
    q_exponent: int
    frame: pd.DataFrame
    prepare_s: float

    def summary(self) -> Dict[str, float]:
        phase1, phase2 = self.frame["phase1_us"], self.frame["phase2_us"]
        return {
            "n": self.n,
            "q_exponent": self.q_exponent,
            "rounds": len(self.frame),
            "phase1_median_us": float(phase1.median()),
            "phase1_p99_us": float(phase1.quantile(0.99)),
            "phase1_max_us": float(phase1.max()),
            "phase2_median_us": float(phase2.median()),
            "phase2_p99_us": float(phase2.quantile(0.99)),
            "phase2_max_us": float(phase2.max()),
            "accept_rate": float(self.frame["accepted"].mean()),
            "prepare_s": round(self.prepare_s, 3),
        }


def run_loopback(n: int, rounds: int, q_exponent: Optional[int] = None, seed: Optional[bytes] = None) -> BenchResult:
    """Time `rounds` honest rounds: each phase is send challenge -> prover answers -> full reply read"""
    if rounds <= 0:
        raise ValueError(f"rounds must be positive, got {rounds}")
    seed = seed or fresh_seed()
    params = _bench_params(n, q_exponent)
    instance, witness = bench_instance(n, derive_rng(seed, TAG_INSTANCE))
    prover_seed, verifier_seed = derive_seed(seed, "prover-pair"), derive_seed(seed, "verifier-pair")

    started = time.perf_counter()
    states = {i: prover_preprocess(instance, witness, derive_seed(prover_seed, TAG_PROVER_ROUND, i), params)
              for i in range(1, rounds + 1)}
    prepare_s = time.perf_counter() - started

    verifier_sock, prover_sock = socket.socketpair()
    prover = LoopbackProver(prover_sock, states, params)
    prover.start()
    rows = []
    try:
        for i in range(1, rounds + 1):
            B = Phase1Message(b=tuple(derive_verifier_key(verifier_seed, i, slot, params) for slot in (1, 2, 3)))
            c = Phase2Message(c=verifier_challenge(verifier_seed, i))
            challenge1, challenge2 = encode_phase1_challenge(i, B), encode_phase2_challenge(i, c)

            t0 = time.perf_counter_ns()
            verifier_sock.sendall(challenge1)
            reply1 = read_frame(verifier_sock)
            t1 = time.perf_counter_ns()
            verifier_sock.sendall(challenge2)
            reply2 = read_frame(verifier_sock)
            t2 = time.perf_counter_ns()

            Y = decode_phase1_response(reply1.payload, params)
            AZ = decode_phase2_response(reply2.payload, params, c.c)
            verdict = verifier_check(instance, B, Y, c, AZ)
            rows.append((i, (t1 - t0) / 1000, (t2 - t1) / 1000, c.c, verdict.accepted))
    finally:
        verifier_sock.close()
        prover.join(timeout=5)
        prover_sock.close()
    if prover.error is not None:
        raise prover.error

    frame = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    result = BenchResult(n=n, q_exponent=params.q_exponent, frame=frame, prepare_s=prepare_s)
    stats = result.summary()
    logger.info(f"Bench n={n}: phase1 median {stats['phase1_median_us']:.1f} us, "
                f"phase2 median {stats['phase2_median_us']:.1f} us over {rounds} rounds")
    return result


def sweep(n_values: Iterable[int], rounds: int, q_exponent: Optional[int] = None,
          seed: Optional[bytes] = None) -> List[BenchResult]:
    seed = seed or fresh_seed()
    return [run_loopback(n, rounds, q_exponent, derive_seed(seed, "bench", n)) for n in n_values]


def summary_table(results: Iterable[BenchResult]) -> pd.DataFrame:
    return pd.DataFrame([r.summary() for r in results])


def per_round_cheat_rate(instance: SdInstance, params: FieldParams, rounds: int, seed: bytes,
                         fail_challenge: Optional[int] = None) -> float:
    """Fraction of rounds a cheating pair passes without any timing; rotating fail challenge unless fixed"""
    prover_seed, verifier_seed = derive_seed(seed, "prover-pair"), derive_seed(seed, "verifier-pair")
    passed = 0
    for i in range(1, rounds + 1):
        fail = fail_challenge or rotating_fail_challenge(i)
        state = cheating_preprocess(instance, fail, derive_seed(prover_seed, TAG_PROVER_ROUND, i), params)
        B = Phase1Message(b=tuple(derive_verifier_key(verifier_seed, i, slot, params) for slot in (1, 2, 3)))
        c = Phase2Message(c=verifier_challenge(verifier_seed, i))
        passed += run_round(instance, state, B, c).accepted
    rate = passed / rounds
    logger.info(f"Cheating pair passed {passed}/{rounds} rounds ({rate:.4f})")
    return rate
