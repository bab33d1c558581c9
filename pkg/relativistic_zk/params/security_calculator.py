# Security Calculator - soundness, field sizing, loss-tolerance bounds and parameter planning in log2
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import gammaln

from ..field.fq import MERSENNE_EXPONENTS

logger = logging.getLogger(__name__)

LN2 = math.log(2)
LOG2_9 = math.log2(9)

# Best known SD attack cost and the parameter ratios that achieve it
SD_HARDNESS_EXPONENT = 0.05869
SD_RATE = 0.4514
SD_WEIGHT_RATIO = 0.1268

DEFAULT_EPSILON = 0.001
DEFAULT_P_LOSS = 0.001
ROUND_STEP = 10
MAX_ROUNDS = 100_000

# Published implementation block
PUBLISHED_N, PUBLISHED_K, PUBLISHED_W = 1704, 769, 216
PUBLISHED_Q_EXPONENT = 23209
PUBLISHED_R, PUBLISHED_F = 340, 22


class BoundInapplicableError(ValueError):
    """Raised when a Chernoff bound's precondition on lambda fails"""


class InfeasiblePlanError(ValueError):
    """Raised when no parameters meet the requested security"""


def log2_factorial(n: int) -> float:
    return float(gammaln(n + 1) / LN2)


def soundness_bound_log2(n: int, log2_Q: float) -> float:
    """log2 of (n! 2^(4n) / Q)^(1/4); +inf when the bound says nothing (Q <= n! 2^(4n))"""
    excess = (log2_factorial(n) + 4 * n - log2_Q) / 4
    return math.inf if excess > 0 else excess


def soundness_bound_log2_proof_form(n: int, log2_Q: float) -> float:
    """Same excess from 1/Q >= 9 (w* - 2/3)^4 / (2 * 2^(4n) * n!)"""
    excess = (1 + 4 * n + log2_factorial(n) - LOG2_9 - log2_Q) / 4
    return math.inf if excess > 0 else excess


def min_log2_Q(n: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """log2 Q needed for w* <= 2/3 + epsilon"""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    return log2_factorial(n) + 4 * n + 4 * math.log2(1 / epsilon)


def game_value(log2_soundness_gap: float) -> float:
    """w* = 2/3 + 2^gap"""
    return 2 / 3 + 2.0 ** log2_soundness_gap


def _xlog2(x: float, y: float) -> float:
    """x * log2(y) with 0 * log2(anything) = 0"""
    return 0.0 if x == 0 else x * math.log2(y)


def cheat_prob_log2(R: int, F: int, log2_soundness_gap: float) -> float:
    """Chernoff bound on a prover pair winning with at most F aborts, each round aborting w.p. 1 - w*"""
    omega = game_value(log2_soundness_gap)
    lam_star = 1 - omega
    if lam_star <= 0:
        raise BoundInapplicableError(f"w* = {omega} leaves no room for aborts")
    lam = F / R
    if lam >= lam_star:
        raise BoundInapplicableError(f"lambda = {lam:.6f} must stay below lambda* = {lam_star:.6f}")
    return R * (_xlog2(lam, lam_star / lam if lam else 1.0) + _xlog2(1 - lam, omega / (1 - lam)))


def completeness_error_log2(R: int, F: int, p_loss: float) -> float:
    """Chernoff bound on an honest session losing more than F of R rounds"""
    lam = F / R
    if p_loss >= lam:
        raise BoundInapplicableError(f"p_loss = {p_loss} must stay below lambda = {lam:.6f}")
    if p_loss <= 0:
        return -math.inf
    return R * (_xlog2(lam, p_loss / lam) + _xlog2(1 - lam, (1 - p_loss) / (1 - lam) if lam < 1 else 1.0))


def exact_cheat_prob_log2(R: int, F: int, log2_soundness_gap: float) -> float:
    """Pr[at most F of R rounds abort] when every non-aborted round is won"""
    lam_star = 1 - game_value(log2_soundness_gap)
    return float(stats.binom.logcdf(F, R, lam_star) / LN2)


def exact_completeness_error_log2(R: int, F: int, p_loss: float) -> float:
    """Pr[more than F of R rounds lost] with independent loss p_loss"""
    return float(stats.binom.logsf(F, R, p_loss) / LN2)


def sd_hardness_bits(n: int) -> Tuple[float, int, int]:
    """(attack cost in bits, suggested k, suggested w)"""
    return SD_HARDNESS_EXPONENT * n, int(round(SD_RATE * n)), int(round(SD_WEIGHT_RATIO * n))


def comm_bits_per_round(log2_Q: float) -> float:
    """Six field elements per round"""
    return 6 * log2_Q


def smallest_mersenne_exponent(log2_Q_needed: float) -> int:
    for q in MERSENNE_EXPONENTS:
        if q >= log2_Q_needed:
            return q
    raise InfeasiblePlanError(f"no accepted Mersenne exponent reaches log2 Q = {log2_Q_needed:.1f}")


@dataclass(frozen=True)
class SecurityPlan:
    n: int
    k: int
    w: int
    R: int
    F: int
    lam: float
    q_exponent: int
    log2_Q: float
    min_log2_Q: float
    log2_soundness_per_round_excess: float
    log2_P_star: float
    log2_CE: float
    p_loss: float
    comm_bits_per_round: float
    sd_hardness_bits: float

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["lambda"] = data.pop("lam")
        return data

    def table(self) -> str:
        """Human-readable parameter block"""
        rows = [
            ("n, k, w", f"{self.n}, {self.k}, {self.w}"),
            ("SD hardness", f"2^{self.sd_hardness_bits:.1f}"),
            ("Q", f"2^{self.q_exponent} - 1 (needs log2 Q >= {self.min_log2_Q:.1f})"),
            ("w*", f"<= 2/3 + 2^{self.log2_soundness_per_round_excess:.2f}"),
            ("R, F", f"{self.R}, {self.F} (lambda = {self.lam:.4f})"),
            ("P*(R,F)", f"<= 2^{self.log2_P_star:.2f}"),
            ("CE(R,F,p_loss)", f"<= 2^{self.log2_CE:.2f} at p_loss = {self.p_loss:g}"),
            ("communication",
             f"{self.comm_bits_per_round:.0f} bits per round ({self.comm_bits_per_round / 8e3:.2f} kB)"),
        ]
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label.ljust(width)}  {value}" for label, value in rows)


def evaluate_plan(n: int, k: int, w: int, q_exponent: int, R: int, F: int, p_loss: float,
                  epsilon: float = DEFAULT_EPSILON) -> SecurityPlan:
    gap = soundness_bound_log2(n, q_exponent)
    return SecurityPlan(
        n=n, k=k, w=w, R=R, F=F, lam=F / R,
        q_exponent=q_exponent,
        log2_Q=float(q_exponent),
        min_log2_Q=min_log2_Q(n, epsilon),
        log2_soundness_per_round_excess=gap,
        log2_P_star=cheat_prob_log2(R, F, gap),
        log2_CE=completeness_error_log2(R, F, p_loss),
        p_loss=p_loss,
        comm_bits_per_round=comm_bits_per_round(q_exponent),
        sd_hardness_bits=sd_hardness_bits(n)[0],
    )


def published_plan() -> SecurityPlan:
    return evaluate_plan(PUBLISHED_N, PUBLISHED_K, PUBLISHED_W, PUBLISHED_Q_EXPONENT, PUBLISHED_R, PUBLISHED_F,
                         DEFAULT_P_LOSS)


def _rounds_for(target: float, gap: float, lam_floor: float, lam_star: float, p_loss: float,
                fixed_lambda: Optional[float], max_rounds: int) -> Tuple[int, int]:
    for R in range(ROUND_STEP, max_rounds + 1, ROUND_STEP):
        if fixed_lambda is not None:
            candidates = [int(round(fixed_lambda * R))]
        else:
            candidates = range(int(np.floor(lam_floor * R)) + 1, int(np.ceil(lam_star * R)))
        for F in candidates:
            lam = F / R
            if not lam_floor < lam < lam_star or lam <= p_loss:
                continue
            if completeness_error_log2(R, F, p_loss) > -target:
                continue
            # cheat bound only grows with F, so the first F that fixes CE is the only candidate
            if cheat_prob_log2(R, F, gap) <= -target:
                return R, F
            break
    raise InfeasiblePlanError(f"no R <= {max_rounds} meets {target} bits at p_loss = {p_loss}")


def plan(target_security_bits: float, p_loss: float = DEFAULT_P_LOSS, loss_margin: float = 1.0,
         fixed_lambda: Optional[float] = None, epsilon: float = DEFAULT_EPSILON,
         max_rounds: int = MAX_ROUNDS) -> SecurityPlan:
    """Smallest n for the SD target, the Mersenne field above min_log2_Q, then the smallest R (step 10)"""
    if target_security_bits <= 0:
        raise InfeasiblePlanError(f"target must be positive, got {target_security_bits}")
    if not 0 <= p_loss < 1:
        raise InfeasiblePlanError(f"p_loss must be in [0, 1), got {p_loss}")
    n = math.ceil(target_security_bits / SD_HARDNESS_EXPONENT)
    _, k, w = sd_hardness_bits(n)
    k = min(max(k, 1), n - 1)
    w = max(w, 1)
    q_exponent = smallest_mersenne_exponent(min_log2_Q(n, epsilon))
    gap = soundness_bound_log2(n, q_exponent)
    lam_star = 1 - game_value(gap)
    lam_floor = p_loss * loss_margin
    if fixed_lambda is not None and not lam_floor < fixed_lambda < lam_star:
        raise InfeasiblePlanError(f"lambda = {fixed_lambda} outside ({lam_floor}, {lam_star:.6f})")
    if lam_floor >= lam_star:
        raise InfeasiblePlanError(f"p_loss * margin = {lam_floor} leaves no lambda below {lam_star:.6f}")
    R, F = _rounds_for(target_security_bits, gap, lam_floor, lam_star, p_loss, fixed_lambda, max_rounds)
    result = evaluate_plan(n, k, w, q_exponent, R, F, p_loss, epsilon)
    logger.info(f"Plan for {target_security_bits} bits: n={n} q={q_exponent} R={R} F={F}")
    return result
