# Round Timing - schedule, light-cone constraints and the session clock
import logging
import math
import time
from typing import Optional, Tuple

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT_KM_S = 299_792.458

# Below this many ns before a deadline the realtime driver stops sleeping and spins
SPIN_THRESHOLD_NS = 200_000


class RoundOutOfRangeError(ValueError):
    """Raised when a round index is outside 1..R"""


def light_delay_ns(D_km: float) -> float:
    """D/c in nanoseconds"""
    if math.isinf(D_km):
        return math.inf
    return D_km / SPEED_OF_LIGHT_KM_S * 1e9


def schedule_round(i: int, config) -> Tuple[int, int]:
    """(tau1, tau2) = (T1 + (i-1)*delta_T, tau1 + T_shift)"""
    if not 1 <= i <= config.R:
        raise RoundOutOfRangeError(f"round {i} outside 1..{config.R}")
    tau1 = config.T1_ns + (i - 1) * config.delta_T_ns
    return tau1, tau1 + config.T_shift_ns


def check_timing(theta1: Optional[int], tau2: int, theta2: Optional[int], tau1: int, D_km: float) -> bool:
    """Both answers arrived before a signal from the other verifier's challenge could have reached the prover"""
    if theta1 is None or theta2 is None:
        return False
    reach = light_delay_ns(D_km)
    return theta1 < tau2 + reach and theta2 < tau1 + reach


def allowed_losses(R: int, lam: float) -> int:
    """F = ceil(lambda * R); rounding first keeps 22/340 * 340 at 22"""
    return math.ceil(round(lam * R, 9))


class SessionClock:
    """Wall-clock epoch in ns, read through the monotonic clock, plus the role's configured offset"""

    def __init__(self, offset_ns: int = 0):
        self.offset_ns = offset_ns
        self._anchor = time.time_ns() - time.monotonic_ns()
        logger.debug(f"Session clock anchored with offset {offset_ns} ns")

    def now_ns(self) -> int:
        return time.monotonic_ns() + self._anchor + self.offset_ns

    def sleep_until(self, target_ns: int) -> int:
        """Coarse sleep, then spin the last stretch"""
        while True:
            remaining = target_ns - self.now_ns()
            if remaining <= 0:
                return self.now_ns()
            if remaining > SPIN_THRESHOLD_NS:
                time.sleep((remaining - SPIN_THRESHOLD_NS) / 1e9)
