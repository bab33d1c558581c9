# Base Role class for the four protocol parties
import logging
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Generator, List, Optional, Tuple

from ..coding.syndrome import SdInstance
from ..config import ProtocolConfig
from ..field.fq import FieldParams
from ..transport.drivers import Delivery, Now, Receive, Send, SleepUntil
from ..transport.wire import MessageType

logger = logging.getLogger(__name__)

RoleProgram = Generator[Any, Any, Any]


class AlarmSeverity(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"
    CRITICAL = "CRITICAL"


@dataclass
class RoleAlarm:
    """Role alarm data structure"""
    alarm_id: str
    role: str
    severity: AlarmSeverity
    message: str
    timestamp_ns: Optional[int] = None
    round_index: Optional[int] = None
    acknowledged: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {"alarm_id": self.alarm_id, "role": self.role, "severity": self.severity.value,
                "message": self.message, "timestamp_ns": self.timestamp_ns, "round": self.round_index}


class BaseRole(ABC):
    """Base class for provers and verifiers; program() is a generator of driver effects"""

    # Roles this one holds a connection to
    peers: Tuple[str, ...] = ()

    def __init__(self, name: str, config: ProtocolConfig, instance: SdInstance, params: FieldParams):
        self.name = name
        self.config = config
        self.instance = instance
        self.params = params
        self.counters: Dict[str, int] = defaultdict(int)
        self.alarms: List[RoleAlarm] = []
        self.T1_ns: Optional[int] = None
        self.is_active = True
        self._stash: Dict[Tuple[str, MessageType, int], Delivery] = {}
        logger.info(f"Initialized {type(self).__name__} as {name}")

    def add_alarm(self, alarm_id: str, severity: AlarmSeverity, message: str,
                  round_index: Optional[int] = None, timestamp_ns: Optional[int] = None):
        alarm = RoleAlarm(alarm_id=alarm_id, role=self.name, severity=severity, message=message,
                          timestamp_ns=timestamp_ns, round_index=round_index)
        self.alarms.append(alarm)
        where = f" (round {round_index})" if round_index is not None else ""
        logger.warning(f"Role {self.name}: {severity.value} alarm - {message}{where}")

    def acknowledge_alarm(self, alarm_id: str):
        for alarm in self.alarms:
            if alarm.alarm_id == alarm_id:
                alarm.acknowledged = True

    def increment_counter(self, counter_name: str) -> int:
        self.counters[counter_name] += 1
        return self.counters[counter_name]

    def prepare(self):
        """Work done before the session clock starts; runs outside the driver"""

    def send(self, peer: str, data: bytes) -> RoleProgram:
        sent_ns = yield Send(peer, data)
        self.increment_counter("frames_sent")
        return sent_ns

    def now(self) -> RoleProgram:
        return (yield Now())

    def sleep_until(self, t_ns: int) -> RoleProgram:
        return (yield SleepUntil(t_ns))

    def await_frame(self, peer: str, msg_type: MessageType, round_index: Optional[int],
                    deadline_ns: Optional[int]) -> RoleProgram:
        """Next frame of msg_type for round_index from peer, or None by the deadline.

        Frames for later rounds are kept for later calls; frames for earlier rounds are stale and dropped.
        A delivery whose bytes did not parse is returned as is so the caller can reject the round.
        """
        if round_index is not None:
            stashed = self._stash.pop((peer, msg_type, round_index), None)
            if stashed is not None:
                return stashed
        while True:
            delivery = yield Receive(peer, deadline_ns)
            if delivery is None:
                self.increment_counter("timeouts")
                return None
            self.increment_counter("frames_received")
            if delivery.frame is None:
                self.add_alarm(f"MALFORMED_{peer}", AlarmSeverity.HIGH, f"malformed frame from {peer}: "
                               f"{delivery.error}", round_index, delivery.received_ns)
                return delivery
            frame = delivery.frame
            if frame.msg_type == msg_type and (round_index is None or frame.round_index == round_index):
                return delivery
            if round_index is not None and frame.round_index > round_index:
                self._stash[(peer, frame.msg_type, frame.round_index)] = delivery
                continue
            self.increment_counter("stale_frames")
            self.add_alarm(f"STALE_{peer}", AlarmSeverity.LOW,
                           f"discarded {frame.msg_type.name} for round {frame.round_index} from {peer}",
                           round_index, delivery.received_ns)

    def round_end_ns(self, i: int) -> int:
        """End of round i on the shared schedule"""
        return self.T1_ns + i * self.config.delta_T_ns

    @abstractmethod
    def program(self) -> RoleProgram:
        """The role's state machine"""

    def get_status(self) -> Dict[str, Any]:
        return {
            "role": self.name,
            "type": type(self).__name__,
            "is_active": self.is_active,
            "T1_ns": self.T1_ns,
            "counters": dict(self.counters),
            "alarms": len([alarm for alarm in self.alarms if not alarm.acknowledged]),
        }
