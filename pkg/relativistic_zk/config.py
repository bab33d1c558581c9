# Session Configuration - protocol parameters, scenario presets, adversaries and endpoints
import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from .field.fq import CapacityError, FieldParams
from .field.randomness import derive_seed, fresh_seed, seed_from_text
from .transport.timing import SPEED_OF_LIGHT_KM_S, allowed_losses

logger = logging.getLogger(__name__)

NS_PER_MS = 1_000_000

# Defaults reproduce the published implementation block
DEFAULT_N = 1704
DEFAULT_K = 769
DEFAULT_W = 216
DEFAULT_Q_EXPONENT = 23209
DEFAULT_ROUNDS = 340
DEFAULT_ALLOWED_LOSSES = 22

# Small certified-NO parameters for cheating runs
SMALL_NO_INSTANCE = (12, 4, 2)

DEFAULT_CONNECT_TIMEOUT_S = 10.0
DEFAULT_OUT_DIR = "reports"
DEFAULT_LOG_LEVEL = "INFO"

ROLES = ("p1", "p2", "v1", "v2")


class ConfigError(ValueError):
    """Raised when a configuration value is missing or out of range"""


def env_log_level() -> str:
    return os.getenv("RELZK_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()


def env_out_dir() -> str:
    return os.getenv("RELZK_OUT_DIR", DEFAULT_OUT_DIR)


def env_connect_timeout_s() -> float:
    raw = os.getenv("RELZK_CONNECT_TIMEOUT_S", str(DEFAULT_CONNECT_TIMEOUT_S))
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"RELZK_CONNECT_TIMEOUT_S must be a number, got {raw!r}") from e


@dataclass(frozen=True)
class ScenarioPreset:
    """Verifier separation and round timing"""
    name: str
    D_km: float
    delta_T_ns: int
    T_shift_ns: int

    @property
    def light_delay_ns(self) -> float:
        """D/c in nanoseconds"""
        return self.D_km / SPEED_OF_LIGHT_KM_S * 1e9

    @property
    def phase1_budget_ns(self) -> float:
        return self.light_delay_ns + self.T_shift_ns

    @property
    def phase2_budget_ns(self) -> float:
        return self.light_delay_ns - self.T_shift_ns

    @property
    def histogram_bucket_us(self) -> int:
        return 100 if self.delta_T_ns >= 10 * NS_PER_MS else 10

    def budgets(self) -> Dict[str, float]:
        return {"phase1_us": self.phase1_budget_ns / 1000, "phase2_us": self.phase2_budget_ns / 1000}


PRESETS = {
    "scenario1": ScenarioPreset("scenario1", D_km=400.0, delta_T_ns=2 * NS_PER_MS, T_shift_ns=NS_PER_MS // 2),
    "scenario2": ScenarioPreset("scenario2", D_km=9000.0, delta_T_ns=40 * NS_PER_MS, T_shift_ns=5 * NS_PER_MS // 2),
}


class AdversaryMode(str, Enum):
    HONEST = "honest"
    CHEAT_FIXED_FAIL = "cheat_fixed_fail"
    CHEAT_ROTATING = "cheat_rotating"
    ABORT_RATE = "abort_rate"
    SPOOKY_RELAY = "spooky_relay"


_ADVERSARY_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


@dataclass(frozen=True)
class AdversaryConfig:
    """Prover-pair behaviour; fail_challenge and abort_prob belong to their modes only"""
    mode: AdversaryMode = AdversaryMode.HONEST
    fail_challenge: Optional[int] = None
    abort_prob: Optional[float] = None

    def __post_init__(self):
        if self.mode is AdversaryMode.CHEAT_FIXED_FAIL:
            if self.fail_challenge not in (1, 2, 3):
                raise ConfigError("cheat_fixed_fail needs a challenge in {1, 2, 3}")
        elif self.fail_challenge is not None:
            raise ConfigError(f"fail_challenge is only meaningful for cheat_fixed_fail, not {self.mode.value}")
        if self.mode is AdversaryMode.ABORT_RATE:
            if self.abort_prob is None or not 0 <= self.abort_prob <= 1:
                raise ConfigError("abort_rate needs a probability in [0, 1]")
        elif self.abort_prob is not None:
            raise ConfigError(f"abort_prob is only meaningful for abort_rate, not {self.mode.value}")

    @classmethod
    def parse(cls, text: str) -> "AdversaryConfig":
        """honest | cheat_fixed_fail(c) | cheat_rotating | abort_rate(p) | spooky_relay"""
        match = _ADVERSARY_PATTERN.match(text or "")
        if not match:
            raise ConfigError(f"cannot parse adversary {text!r}")
        name, argument = match.groups()
        try:
            mode = AdversaryMode(name)
        except ValueError as e:
            raise ConfigError(f"unknown adversary mode {name!r}") from e
        try:
            if mode is AdversaryMode.CHEAT_FIXED_FAIL:
                return cls(mode, fail_challenge=int(argument))
            if mode is AdversaryMode.ABORT_RATE:
                return cls(mode, abort_prob=float(argument) if argument else 1 / 3)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad argument for {name}: {argument!r}") from e
        if argument:
            raise ConfigError(f"{name} takes no argument")
        return cls(mode)

    def describe(self) -> str:
        if self.mode is AdversaryMode.CHEAT_FIXED_FAIL:
            return f"{self.mode.value}({self.fail_challenge})"
        if self.mode is AdversaryMode.ABORT_RATE:
            return f"{self.mode.value}({self.abort_prob:g})"
        return self.mode.value


@dataclass(frozen=True)
class SessionSeeds:
    """Out-of-band shared randomness; the harness seed drives instance, channel and adversary draws"""
    prover_pair: bytes
    verifier_pair: bytes
    harness: bytes
    # drawn locally, so no other process of the session can share them
    ephemeral: bool = field(default=False, compare=False)

    @classmethod
    def fresh(cls) -> "SessionSeeds":
        return cls(fresh_seed(), fresh_seed(), fresh_seed(), ephemeral=True)

    @classmethod
    def from_pairs(cls, prover_pair: bytes, verifier_pair: bytes, harness: Optional[bytes] = None) -> "SessionSeeds":
        """Without an explicit harness seed, every process derives the same one from the two pair seeds"""
        if harness is None:
            harness = derive_seed(verifier_pair + prover_pair, "harness")
        return cls(prover_pair, verifier_pair, harness)

    @classmethod
    def from_master(cls, text: str) -> "SessionSeeds":
        master = seed_from_text(text)
        return cls(derive_seed(master, "prover-pair"), derive_seed(master, "verifier-pair"),
                   derive_seed(master, "harness"))

    def to_dict(self) -> Dict[str, str]:
        return {"prover_pair": self.prover_pair.hex(), "verifier_pair": self.verifier_pair.hex(),
                "harness": self.harness.hex()}


@dataclass(frozen=True)
class Endpoints:
    """host:port per role"""
    p1: str = "127.0.0.1:47101"
    p2: str = "127.0.0.1:47102"
    v1: str = "127.0.0.1:47103"
    v2: str = "127.0.0.1:47104"

    def address(self, role: str) -> Tuple[str, int]:
        if role not in ROLES:
            raise ConfigError(f"unknown role {role!r}")
        host, _, port = getattr(self, role).rpartition(":")
        try:
            return host or "127.0.0.1", int(port)
        except ValueError as e:
            raise ConfigError(f"endpoint for {role} must be host:port, got {getattr(self, role)!r}") from e


@dataclass(frozen=True)
class SimulationSettings:
    """Simulated channel behaviour; delays in nanoseconds"""
    one_way_delay_ns: int = 0
    jitter_ns: int = 0
    drop_prob: float = 0.0
    delay_overrides: Dict[int, int] = field(default_factory=dict)
    measure_compute: bool = False

    def __post_init__(self):
        if self.one_way_delay_ns < 0 or self.jitter_ns < 0:
            raise ConfigError("channel delays must be non-negative")
        if not 0 <= self.drop_prob < 1:
            raise ConfigError(f"drop_prob must be in [0, 1), got {self.drop_prob}")


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything one session needs; T1_ns is filled in when the session is scheduled"""
    n: int = DEFAULT_N
    k: int = DEFAULT_K
    w: int = DEFAULT_W
    q_exponent: Optional[int] = DEFAULT_Q_EXPONENT
    R: int = DEFAULT_ROUNDS
    lam: float = DEFAULT_ALLOWED_LOSSES / DEFAULT_ROUNDS
    preset: ScenarioPreset = PRESETS["scenario1"]
    T1_ns: int = 0
    clock_offset_ns: int = 0
    role: str = "all"
    seeds: SessionSeeds = field(default_factory=SessionSeeds.fresh)
    endpoints: Endpoints = field(default_factory=Endpoints)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    no_instance: bool = False

    def __post_init__(self):
        if not 0 < self.k < self.n:
            raise ConfigError(f"need 0 < k < n, got n={self.n}, k={self.k}")
        if not 0 < self.w <= self.n:
            raise ConfigError(f"need 0 < w <= n, got w={self.w}")
        if self.R <= 0:
            raise ConfigError(f"R must be positive, got {self.R}")
        if not 0 <= self.lam < 1:
            raise ConfigError(f"lambda must be in [0, 1), got {self.lam}")
        if self.preset.D_km <= 0 or self.preset.delta_T_ns <= 0:
            raise ConfigError("distance and round period must be positive")
        if not 0 <= self.preset.T_shift_ns < self.preset.delta_T_ns:
            raise ConfigError("need delta_T > T_shift >= 0")
        if self.role not in ROLES + ("all",):
            raise ConfigError(f"role must be one of {ROLES + ('all',)}, got {self.role!r}")

    @property
    def D_km(self) -> float:
        return self.preset.D_km

    @property
    def delta_T_ns(self) -> int:
        return self.preset.delta_T_ns

    @property
    def T_shift_ns(self) -> int:
        return self.preset.T_shift_ns

    @property
    def allowed_losses(self) -> int:
        return allowed_losses(self.R, self.lam)

    def field_params(self) -> FieldParams:
        """F_Q embedding length-n encodings; q_exponent None picks the smallest that fits"""
        try:
            if self.q_exponent is None:
                return FieldParams.for_code_length(self.n)
            return FieldParams.mersenne(self.q_exponent, n_embed=self.n)
        except (CapacityError, ValueError) as e:
            raise ConfigError(f"q_exponent={self.q_exponent} unusable for n={self.n}: {e}") from e

    def with_overrides(self, **changes) -> "ProtocolConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        """Echo for reports; seeds are included so a session can be replayed"""
        return {
            "role": self.role,
            "preset": asdict(self.preset),
            "n": self.n, "k": self.k, "w": self.w,
            "q_exponent": self.q_exponent,
            "R": self.R,
            "lambda": self.lam,
            "allowed_losses": self.allowed_losses,
            "T1_ns": self.T1_ns,
            "clock_offset_ns": self.clock_offset_ns,
            "seeds": self.seeds.to_dict(),
            "endpoints": asdict(self.endpoints),
            "adversary": self.adversary.describe(),
            "no_instance": self.no_instance,
        }


def _preset_from(data: Dict[str, Any]) -> ScenarioPreset:
    raw = data.get("preset")
    if isinstance(raw, str):
        if raw not in PRESETS:
            raise ConfigError(f"unknown preset {raw!r}, expected one of {sorted(PRESETS)}")
        return PRESETS[raw]
    source = raw if isinstance(raw, dict) else data
    if "D_km" not in source:
        return PRESETS["scenario1"]
    try:
        return ScenarioPreset(name=source.get("name", "custom"), D_km=float(source["D_km"]),
                              delta_T_ns=int(source["delta_T_ns"]), T_shift_ns=int(source["T_shift_ns"]))
    except KeyError as e:
        raise ConfigError(f"custom preset is missing {e.args[0]}") from e


def _seeds_from(raw: Optional[Dict[str, str]]) -> SessionSeeds:
    if not raw:
        return SessionSeeds.fresh()
    missing = [name for name in ("prover_pair", "verifier_pair") if name not in raw]
    if missing:
        raise ConfigError(f"seeds block is missing {', '.join(missing)}")
    harness = raw.get("harness")
    return SessionSeeds.from_pairs(seed_from_text(raw["prover_pair"]), seed_from_text(raw["verifier_pair"]),
                                   seed_from_text(harness) if harness else None)


def _simulation_from(raw: Optional[Dict[str, Any]]) -> SimulationSettings:
    if not raw:
        return SimulationSettings()
    return SimulationSettings(
        one_way_delay_ns=int(raw.get("one_way_delay_ns", 0)),
        jitter_ns=int(raw.get("jitter_ns", 0)),
        drop_prob=float(raw.get("drop_prob", 0.0)),
        delay_overrides={int(k): int(v) for k, v in raw.get("delay_overrides", {}).items()},
        measure_compute=bool(raw.get("measure_compute", False)),
    )


def config_from_dict(data: Dict[str, Any]) -> ProtocolConfig:
    try:
        kwargs = {
            "role": data.get("role", "all"),
            "preset": _preset_from(data),
            "seeds": _seeds_from(data.get("seeds")),
            "endpoints": Endpoints(**data.get("endpoints", {})),
            "adversary": AdversaryConfig.parse(data.get("adversary", "honest")),
            "simulation": _simulation_from(data.get("simulation")),
            "no_instance": bool(data.get("no_instance", False)),
            "clock_offset_ns": int(data.get("clock_offset_ns", 0)),
        }
        for key in ("n", "k", "w", "R"):
            if key in data:
                kwargs[key] = int(data[key])
        if "q_exponent" in data:
            kwargs["q_exponent"] = None if data["q_exponent"] is None else int(data["q_exponent"])
        if "lambda" in data:
            kwargs["lam"] = float(data["lambda"])
    except TypeError as e:
        raise ConfigError(f"malformed config: {e}") from e
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"malformed config: {e}") from e
    return ProtocolConfig(**kwargs)


def load_config(path: Union[str, Path]) -> ProtocolConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    config = config_from_dict(data)
    logger.info(f"Loaded config from {path}: n={config.n} R={config.R} preset={config.preset.name}")
    return config
