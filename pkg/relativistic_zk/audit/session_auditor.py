# Session Auditor - merges the verifiers' half-transcripts and decides the session
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..coding.syndrome import SdInstance
from ..field.fq import FieldParams
from ..stern.stern_protocol import (Phase1Message, Phase1Response, Phase2Message, Phase2Response, Verdict,
                                    VerdictReason, verifier_check)
from ..commitment.fq_commitment import Commitment
from ..transport.timing import allowed_losses, check_timing
from ..transport.wire import WireFormatError, decode_phase2_response, elements_from_hex, elements_to_hex

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class V1RoundRecord:
    """What V1 saw in round i; theta1 is None when no answer came back"""
    i: int
    tau1: int
    theta1: Optional[int]
    B: Phase1Message
    Y: Optional[Phase1Response]
    malformed: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {"i": self.i, "tau1": self.tau1, "theta1": self.theta1, "B": elements_to_hex(self.B.b),
                "Y": elements_to_hex(y.y for y in self.Y.y) if self.Y else None, "malformed": self.malformed}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], params: FieldParams) -> "V1RoundRecord":
        Y = data.get("Y")
        return cls(i=int(data["i"]), tau1=int(data["tau1"]), theta1=_optional_int(data.get("theta1")),
                   B=Phase1Message(elements_from_hex(data["B"], params)),
                   Y=Phase1Response(tuple(Commitment(y) for y in elements_from_hex(Y, params))) if Y else None,
                   malformed=bool(data.get("malformed", False)))


@dataclass(frozen=True)
class V2RoundRecord:
    """What V2 saw in round i"""
    i: int
    tau2: int
    theta2: Optional[int]
    c: Phase2Message
    AZ: Optional[Phase2Response]
    malformed: bool = False

    def to_dict(self) -> Dict[str, Any]:
        AZ = None
        if self.AZ:
            AZ = elements_to_hex(v for o in self.AZ.openings for v in (o.z, o.a))
        return {"i": self.i, "tau2": self.tau2, "theta2": self.theta2, "c": self.c.c, "AZ": AZ,
                "malformed": self.malformed}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], params: FieldParams) -> "V2RoundRecord":
        c = int(data["c"])
        AZ = data.get("AZ")
        if AZ:
            payload = b"".join(bytes.fromhex(v) for v in AZ)
            AZ = decode_phase2_response(payload, params, c)
        return cls(i=int(data["i"]), tau2=int(data["tau2"]), theta2=_optional_int(data.get("theta2")),
                   c=Phase2Message(c), AZ=AZ or None, malformed=bool(data.get("malformed", False)))


def _optional_int(value) -> Optional[int]:
    return None if value is None else int(value)


@dataclass(frozen=True)
class RoundTranscript:
    i: int
    tau1: int
    theta1: Optional[int]
    tau2: int
    theta2: Optional[int]
    B: Optional[Phase1Message]
    Y: Optional[Phase1Response]
    c: Optional[int]
    AZ: Optional[Phase2Response]
    timing_ok: bool
    verdict: Verdict

    @property
    def phase1_us(self) -> Optional[float]:
        return None if self.theta1 is None else (self.theta1 - self.tau1) / 1000

    @property
    def phase2_us(self) -> Optional[float]:
        return None if self.theta2 is None else (self.theta2 - self.tau2) / 1000

    def row(self) -> Dict[str, Any]:
        """One line of the session CSV"""
        return {
            "round": self.i, "tau1_ns": self.tau1, "theta1_ns": self.theta1, "tau2_ns": self.tau2,
            "theta2_ns": self.theta2, "phase1_us": self.phase1_us, "phase2_us": self.phase2_us,
            "timing_ok": self.timing_ok, "challenge": self.c, "verdict_reason": self.verdict.label(),
        }


@dataclass
class SessionReport:
    """accepted iff every timing-ok round is accepted and F_observed <= allowed_losses"""
    rounds: List[RoundTranscript]
    F_observed: int
    allowed_losses: int
    accepted: bool
    config: Dict[str, Any] = field(default_factory=dict)
    role: str = "verifiers"
    alarms: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def rejected_rounds(self) -> List[int]:
        return [r.i for r in self.rounds if r.timing_ok and not r.verdict.accepted]

    @property
    def acceptance_rate(self) -> float:
        """Share of rounds whose protocol verdict is OK, timing aside"""
        return sum(r.verdict.accepted for r in self.rounds) / len(self.rounds) if self.rounds else 0.0

    def phase_times_us(self, phase: int) -> np.ndarray:
        values = [r.phase1_us if phase == 1 else r.phase2_us for r in self.rounds]
        return np.array([v for v in values if v is not None], dtype=float)

    def phase_histogram(self, phase: int, bucket_us: int = 10) -> Dict[int, int]:
        """bucket start (us) -> count"""
        times = self.phase_times_us(phase)
        if times.size == 0:
            return {}
        starts, counts = np.unique((np.floor(times / bucket_us) * bucket_us).astype(np.int64), return_counts=True)
        return {int(s): int(c) for s, c in zip(starts, counts)}

    def summary(self) -> Dict[str, Any]:
        return {
            "accepted": self.accepted,
            "rounds": len(self.rounds),
            "F_observed": self.F_observed,
            "allowed_losses": self.allowed_losses,
            "rejected_rounds": self.rejected_rounds,
            "acceptance_rate": round(self.acceptance_rate, 6),
        }


def decide(timing_ok: Sequence[bool], verdicts: Sequence[Verdict], allowed: int) -> Tuple[int, bool]:
    """(F_observed, accepted): every timing-ok round must pass and at most `allowed` rounds may be late"""
    F_observed = sum(not ok for ok in timing_ok)
    accepted = F_observed <= allowed and all(v.accepted for v, ok in zip(verdicts, timing_ok) if ok)
    return F_observed, accepted


class SessionAuditor:
    """Verification step both verifiers perform after the last round"""

    def __init__(self, instance: SdInstance, params: FieldParams, D_km: float, R: int, lam: float):
        self.instance = instance
        self.params = params
        self.D_km = D_km
        self.R = R
        self.allowed = allowed_losses(R, lam)
        logger.info(f"Session auditor initialized: R={R} allowed losses={self.allowed}")

    def evaluate_round(self, v1: V1RoundRecord, v2: V2RoundRecord) -> RoundTranscript:
        timing_ok = check_timing(v1.theta1, v2.tau2, v2.theta2, v1.tau1, self.D_km)
        if v1.malformed or v2.malformed:
            verdict = Verdict.reject(VerdictReason.BAD_COMMITMENT)
        elif v1.Y is None or v2.AZ is None:
            verdict = Verdict.reject(VerdictReason.TIMING_VIOLATION)
        else:
            verdict = verifier_check(self.instance, v1.B, v1.Y, v2.c, v2.AZ)
        return RoundTranscript(i=v1.i, tau1=v1.tau1, theta1=v1.theta1, tau2=v2.tau2, theta2=v2.theta2, B=v1.B,
                               Y=v1.Y, c=v2.c.c, AZ=v2.AZ, timing_ok=timing_ok, verdict=verdict)

    def evaluate(self, v1_half: Sequence[V1RoundRecord], v2_half: Sequence[V2RoundRecord],
                 config: Optional[Dict[str, Any]] = None) -> SessionReport:
        by_round = {r.i: r for r in v2_half}
        rounds = []
        for v1 in sorted(v1_half, key=lambda r: r.i):
            v2 = by_round.get(v1.i)
            if v2 is None:
                logger.warning(f"Round {v1.i} missing from V2's transcript; counting it as a timing failure")
                v2 = V2RoundRecord(i=v1.i, tau2=v1.tau1, theta2=None, c=Phase2Message(1), AZ=None)
            rounds.append(self.evaluate_round(v1, v2))
        F_observed, accepted = decide([r.timing_ok for r in rounds], [r.verdict for r in rounds], self.allowed)
        # rounds V1 never ran count as lost
        F_observed += max(0, self.R - len(rounds))
        accepted = accepted and F_observed <= self.allowed
        report = SessionReport(rounds=rounds, F_observed=F_observed, allowed_losses=self.allowed,
                               accepted=accepted, config=dict(config or {}))
        if accepted:
            logger.info(f"Session accepted: F_observed={F_observed} <= {self.allowed}")
        else:
            logger.warning(f"Session rejected: F_observed={F_observed} (allowed {self.allowed}), "
                           f"rejected rounds {report.rejected_rounds[:10]}")
        return report


def recheck_rows(rows: Sequence[Dict[str, Any]], D_km: float, allowed: int) -> Dict[str, Any]:
    """Recompute timing flags, F_observed and acceptance from saved CSV rows"""
    timing = []
    for row in rows:
        theta1 = _optional_int(row.get("theta1_ns"))
        theta2 = _optional_int(row.get("theta2_ns"))
        timing.append(check_timing(theta1, int(row["tau2_ns"]), theta2, int(row["tau1_ns"]), D_km))
    verdicts = [Verdict.from_label(str(row["verdict_reason"])) for row in rows]
    F_observed, accepted = decide(timing, verdicts, allowed)
    return {"timing_ok": timing, "F_observed": F_observed, "accepted": accepted}


def recheck_messages(instance: SdInstance, params: FieldParams, messages: Sequence[Dict[str, Any]]) -> List[Verdict]:
    """Re-run the verifier's check on every logged round"""
    verdicts = []
    for entry in messages:
        try:
            v1 = V1RoundRecord.from_dict(entry["v1"], params)
            v2 = V2RoundRecord.from_dict(entry["v2"], params)
        except (KeyError, WireFormatError, ValueError) as e:
            logger.warning(f"Round {entry.get('i')}: message log unreadable ({e})")
            verdicts.append(Verdict.reject(VerdictReason.BAD_COMMITMENT))
            continue
        if v1.malformed or v2.malformed:
            verdicts.append(Verdict.reject(VerdictReason.BAD_COMMITMENT))
        elif v1.Y is None or v2.AZ is None:
            verdicts.append(Verdict.reject(VerdictReason.TIMING_VIOLATION))
        else:
            verdicts.append(verifier_check(instance, v1.B, v1.Y, v2.c, v2.AZ))
    return verdicts
