# Verifier Roles - V1 runs phase 1 and leads the session, V2 runs phase 2
import logging
from typing import Dict, List, Optional

from ..audit.session_auditor import SessionAuditor, SessionReport, V1RoundRecord, V2RoundRecord
from ..commitment.fq_commitment import derive_verifier_key
from ..field.randomness import TAG_VERIFIER_C, derive_rng
from ..stern.stern_protocol import Phase1Message, Phase2Message
from ..transport.channel import ChannelError
from ..transport.timing import schedule_round
from ..transport.wire import (MessageType, WireFormatError, decode_phase1_response, decode_phase2_response,
                              decode_report, decode_sync, encode_phase1_challenge, encode_phase2_challenge,
                              encode_report_chunks, encode_sync)
from .base_role import AlarmSeverity, BaseRole, RoleProgram

logger = logging.getLogger(__name__)

# T1 is placed this far after V1 starts so SYNC reaches everyone first
MIN_SYNC_LEAD_NS = 100_000_000
# How long after the last round a verifier waits for its partner's REPORT
REPORT_WAIT_NS = 30_000_000_000


class TranscriptExchangeError(ChannelError):
    """Raised when a verifier cannot obtain its partner's half-transcript"""


def verifier_challenge(verifier_seed: bytes, round_index: int) -> int:
    """Uniform c in {1, 2, 3} from the verifiers' shared seed"""
    return int(derive_rng(verifier_seed, TAG_VERIFIER_C, round_index).integers(1, 4))


class VerifierRole(BaseRole):
    """Common end of session: swap half-transcripts and audit"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.report: Optional[SessionReport] = None
        self.auditor = SessionAuditor(self.instance, self.params, self.config.D_km, self.config.R, self.config.lam)

    @property
    def partner(self) -> str:
        return "v2" if self.name == "v1" else "v1"

    def session_config(self):
        return self.config.with_overrides(T1_ns=self.T1_ns)

    def exchange_and_audit(self, own_half: List) -> RoleProgram:
        """Send own half, receive the partner's, and evaluate the merged transcript.

        Raises TranscriptExchangeError when the partner's half does not arrive complete and parseable.
        """
        for frame in encode_report_chunks(self.name, [r.to_dict() for r in own_half]):
            yield from self.send(self.partner, frame)
        other_half = yield from self.receive_partner_half()
        v1_half, v2_half = (own_half, other_half) if self.name == "v1" else (other_half, own_half)
        report = self.auditor.evaluate(v1_half, v2_half, config=self.session_config().to_dict())
        report.role = self.name
        report.alarms = [a.to_dict() for a in self.alarms]
        self.report = report
        return report

    def receive_partner_half(self) -> RoleProgram:
        record_type = V2RoundRecord if self.name == "v1" else V1RoundRecord
        chunks: Dict[int, list] = {}
        expected = None
        now = yield from self.now()
        deadline = now + REPORT_WAIT_NS
        while expected is None or len(chunks) < expected:
            delivery = yield from self.await_frame(self.partner, MessageType.REPORT, None, deadline)
            if delivery is None:
                self.add_alarm("REPORT_MISSING", AlarmSeverity.CRITICAL, f"no complete REPORT from {self.partner}")
                raise TranscriptExchangeError(f"{self.name}: {self.partner} sent {len(chunks)} of "
                                              f"{expected or '?'} REPORT frames before the deadline")
            try:
                if delivery.frame is None:
                    raise WireFormatError(delivery.error)
                body = decode_report(delivery.frame.payload)
                index, total = int(body["chunk"]), int(body["chunks"])
                if expected not in (None, total) or not 0 <= index < total:
                    raise WireFormatError(f"chunk {index} of {total} does not fit a run of {expected}")
                expected = total
                chunks[index] = [record_type.from_dict(r, self.params) for r in body["rounds"]]
            except (WireFormatError, KeyError, TypeError, ValueError) as e:
                self.add_alarm("REPORT_MALFORMED", AlarmSeverity.CRITICAL, f"REPORT from {self.partner}: {e}")
                raise TranscriptExchangeError(f"{self.name}: unusable REPORT from {self.partner}: {e}") from e
        return [record for index in sorted(chunks) for record in chunks[index]]


class V1Verifier(VerifierRole):
    """Leader: picks T1, sends B at tau1 and times P1's commitments"""

    peers = ("p1", "v2")

    def program(self) -> RoleProgram:
        cfg = self.config
        if cfg.T1_ns:
            self.T1_ns = cfg.T1_ns
        else:
            start = yield from self.now()
            self.T1_ns = start + max(MIN_SYNC_LEAD_NS, 4 * cfg.delta_T_ns)
        sync = encode_sync(self.T1_ns, cfg.R)
        yield from self.send("v2", sync)
        yield from self.send("p1", sync)
        logger.info(f"V1 scheduled {cfg.R} rounds from T1={self.T1_ns}")
        schedule = self.session_config()
        vseed = cfg.seeds.verifier_pair
        half = []
        for i in range(1, cfg.R + 1):
            tau1_planned, _ = schedule_round(i, schedule)
            yield from self.sleep_until(tau1_planned)
            B = Phase1Message(tuple(derive_verifier_key(vseed, i, slot, self.params) for slot in (1, 2, 3)))
            tau1 = yield from self.send("p1", encode_phase1_challenge(i, B))
            delivery = yield from self.await_frame("p1", MessageType.PHASE1_RESPONSE, i,
                                                   tau1_planned + cfg.delta_T_ns)
            half.append(self._record(i, tau1, B, delivery))
            self.increment_counter("rounds")
        return (yield from self.exchange_and_audit(half))

    def _record(self, i: int, tau1: int, B: Phase1Message, delivery) -> V1RoundRecord:
        if delivery is None:
            self.add_alarm(f"NO_COMMITMENT_{i}", AlarmSeverity.MEDIUM, "no phase-1 answer in time", i)
            return V1RoundRecord(i, tau1, None, B, None)
        if delivery.frame is None:
            return V1RoundRecord(i, tau1, delivery.received_ns, B, None, malformed=True)
        try:
            Y = decode_phase1_response(delivery.frame.payload, self.params)
        except WireFormatError as e:
            self.add_alarm(f"BAD_COMMITMENT_{i}", AlarmSeverity.HIGH, str(e), i, delivery.received_ns)
            return V1RoundRecord(i, tau1, delivery.received_ns, B, None, malformed=True)
        return V1RoundRecord(i, tau1, delivery.received_ns, B, Y)


class V2Verifier(VerifierRole):
    """Follows V1's SYNC, sends c at tau2 and times P2's openings"""

    peers = ("p2", "v1")

    def program(self) -> RoleProgram:
        cfg = self.config
        delivery = yield from self.await_frame("v1", MessageType.SYNC, None, None)
        if delivery is None or delivery.frame is None:
            self.add_alarm("SYNC_MISSING", AlarmSeverity.CRITICAL, "no SYNC from v1")
            self.is_active = False
            return None
        self.T1_ns, R = decode_sync(delivery.frame.payload)
        if R != cfg.R:
            self.add_alarm("SYNC_MISMATCH", AlarmSeverity.HIGH, f"v1 announced R={R}, configured R={cfg.R}")
        yield from self.send("p2", encode_sync(self.T1_ns, cfg.R))
        schedule = self.session_config()
        half = []
        for i in range(1, cfg.R + 1):
            _, tau2_planned = schedule_round(i, schedule)
            yield from self.sleep_until(tau2_planned)
            c = Phase2Message(verifier_challenge(cfg.seeds.verifier_pair, i))
            tau2 = yield from self.send("p2", encode_phase2_challenge(i, c))
            delivery = yield from self.await_frame("p2", MessageType.PHASE2_RESPONSE, i,
                                                   tau2_planned + cfg.delta_T_ns)
            half.append(self._record(i, tau2, c, delivery))
            self.increment_counter("rounds")
        return (yield from self.exchange_and_audit(half))

    def _record(self, i: int, tau2: int, c: Phase2Message, delivery) -> V2RoundRecord:
        if delivery is None:
            self.add_alarm(f"NO_OPENING_{i}", AlarmSeverity.MEDIUM, "no phase-2 answer in time", i)
            return V2RoundRecord(i, tau2, None, c, None)
        if delivery.frame is None:
            return V2RoundRecord(i, tau2, delivery.received_ns, c, None, malformed=True)
        try:
            AZ = decode_phase2_response(delivery.frame.payload, self.params, c.c)
        except WireFormatError as e:
            self.add_alarm(f"BAD_OPENING_{i}", AlarmSeverity.HIGH, str(e), i, delivery.received_ns)
            return V2RoundRecord(i, tau2, delivery.received_ns, c, None, malformed=True)
        return V2RoundRecord(i, tau2, delivery.received_ns, c, AZ)
