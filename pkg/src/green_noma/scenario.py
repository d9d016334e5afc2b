"""Disaster-region geometry and the stochastic uplink channel.

Devices are dropped uniformly on a disk, the relay hovers at a fixed
altitude above the disk center, and each device sees independent
Rayleigh fading per subcarrier.  The gain of device k on subcarrier n is

    gain = beta0_linear * fading_power / d_k^2

where d_k^2 is the squared 3-D distance between device k and the relay
and fading_power is unit-mean exponential (Rayleigh power convention).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

REALIZATION_FORMAT_VERSION = 1

FADING_CONVENTIONS = ("power", "magnitude")


@dataclass(frozen=True)
class Position:
    """Cartesian position in meters; ground devices sit at z = 0."""

    x: float
    y: float
    z: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and algorithmic parameters of one scenario.

    N may be None, in which case the pipeline derives the subcarrier
    count as ceil(K / U) once the devices-per-subcarrier cap U is known.
    bt_target is the number of bits each device must deliver within one
    slot of slot_duration seconds, so the required rate per device is
    bt_target / slot_duration bits/s.
    """

    K: int = 70
    N: int | None = None
    w: float = 10e6
    sigma2_dbm_hz: float = -174.0
    zeta: float = 1.0
    p_max: float = 0.2
    p_f: float = 1.4002
    bt_target: float = 50e3
    coverage_radius: float = 500.0
    z_uav: float = 100.0
    beta0_db: float = -56.0
    seed: int = 1
    max_iters: int = 100
    tol: float = 1e-6
    slot_duration: float = 1e-3
    fading_convention: str = "power"

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.N is not None and self.N < 1:
            raise ValueError(f"N must be >= 1 or None, got {self.N}")
        if self.w <= 0:
            raise ValueError(f"w must be positive, got {self.w}")
        if self.zeta < 1:
            raise ValueError(f"zeta must be >= 1, got {self.zeta}")
        if self.p_max <= 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        if self.p_f < 0:
            raise ValueError(f"p_f must be nonnegative, got {self.p_f}")
        if self.bt_target <= 0:
            raise ValueError(f"bt_target must be positive, got {self.bt_target}")
        if self.coverage_radius <= 0:
            raise ValueError(f"coverage_radius must be positive, got {self.coverage_radius}")
        if self.z_uav <= 0:
            raise ValueError(f"z_uav must be positive, got {self.z_uav}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.slot_duration <= 0:
            raise ValueError(f"slot_duration must be positive, got {self.slot_duration}")
        if self.fading_convention not in FADING_CONVENTIONS:
            raise ValueError(
                f"fading_convention must be one of {FADING_CONVENTIONS}, "
                f"got {self.fading_convention!r}"
            )

    @property
    def noise_power(self) -> float:
        """Per-subcarrier noise power in Watts (density integrated over w)."""
        return 10.0 ** ((self.sigma2_dbm_hz - 30.0) / 10.0) * self.w

    @property
    def beta0_linear(self) -> float:
        return 10.0 ** (self.beta0_db / 10.0)

    @property
    def qos_rate(self) -> float:
        """Required delivery rate per device in bits/s."""
        return self.bt_target / self.slot_duration

    def uav_position(self) -> Position:
        return Position(0.0, 0.0, self.z_uav)


@dataclass(frozen=True)
class ChannelRealization:
    """One drawn channel: device positions, fading magnitudes, gains."""

    positions: tuple[Position, ...]
    uav: Position
    fading: np.ndarray
    gains: np.ndarray

    @property
    def num_devices(self) -> int:
        return self.gains.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.gains.shape[1]

    def save(self, path: str | Path) -> None:
        arr_pos = np.array([[p.x, p.y, p.z] for p in self.positions])
        np.savez(
            path,
            format_version=REALIZATION_FORMAT_VERSION,
            positions=arr_pos,
            uav=np.array([self.uav.x, self.uav.y, self.uav.z]),
            fading=self.fading,
            gains=self.gains,
        )

    @staticmethod
    def load(path: str | Path) -> "ChannelRealization":
        data = np.load(path)
        version = int(data["format_version"])
        if version != REALIZATION_FORMAT_VERSION:
            raise ValueError(f"unsupported realization format version {version}")
        positions = tuple(Position(*row) for row in data["positions"])
        uav = Position(*data["uav"])
        return ChannelRealization(positions, uav, data["fading"], data["gains"])


def provisional_subcarriers(config: ScenarioConfig) -> int:
    """Subcarrier count used when drawing the channel.

    When N is unset the final count depends on the grouping stage; the
    channel is drawn with ceil(K / 2) columns (the most any grouping can
    require, since the per-subcarrier cap is at least 2) and later
    sliced.
    """
    if config.N is not None:
        return config.N
    return max(1, math.ceil(config.K / 2))


def place_devices(config: ScenarioConfig, rng: np.random.Generator) -> list[Position]:
    """Drop K devices uniformly on the coverage disk (z = 0)."""
    radius = config.coverage_radius * np.sqrt(rng.random(config.K))
    theta = 2.0 * np.pi * rng.random(config.K)
    return [
        Position(float(r * np.cos(t)), float(r * np.sin(t)), 0.0)
        for r, t in zip(radius, theta)
    ]


def squared_distance(device: Position, uav: Position) -> float:
    """Squared device-relay distance; the relay altitude keeps it positive."""
    if uav.z <= 0:
        raise ValueError("relay altitude must be positive")
    return (device.x - uav.x) ** 2 + (device.y - uav.y) ** 2 + uav.z**2


def draw_fading(
    config: ScenarioConfig,
    rng: np.random.Generator,
    n_subcarriers: int | None = None,
) -> np.ndarray:
    """Rayleigh fading magnitudes, i.i.d. across devices and subcarriers.

    Returns |h| such that |h|^2 is exponential with unit mean.
    """
    if n_subcarriers is None:
        n_subcarriers = provisional_subcarriers(config)
    power = rng.exponential(1.0, size=(config.K, n_subcarriers))
    return np.sqrt(power)


def channel_gains(
    positions: list[Position] | tuple[Position, ...],
    uav: Position,
    fading: np.ndarray,
    beta0_db: float,
    convention: str = "power",
) -> np.ndarray:
    """Gain matrix from positions and fading magnitudes.

    The default convention feeds the fading power |h|^2 into the gain;
    convention="magnitude" uses |h| literally instead (sensitivity mode).
    """
    if convention not in FADING_CONVENTIONS:
        raise ValueError(f"unknown fading convention {convention!r}")
    if len(positions) != fading.shape[0]:
        raise ValueError("positions and fading row count disagree")
    beta = 10.0 ** (beta0_db / 10.0)
    d2 = np.array([squared_distance(p, uav) for p in positions])
    factor = fading**2 if convention == "power" else fading
    gains = beta * factor / d2[:, None]
    if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
        raise ValueError("channel gains must be strictly positive and finite")
    return gains


def build_realization(
    config: ScenarioConfig,
    rng: np.random.Generator | None = None,
    n_subcarriers: int | None = None,
) -> ChannelRealization:
    """Draw a full channel realization, reproducible from (config, seed)."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    positions = place_devices(config, rng)
    uav = config.uav_position()
    fading = draw_fading(config, rng, n_subcarriers)
    gains = channel_gains(positions, uav, fading, config.beta0_db, config.fading_convention)
    return ChannelRealization(tuple(positions), uav, fading, gains)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name == "N":
        return None if raw.lower() in ("auto", "none") else int(raw)
    if name in ("K", "seed", "max_iters"):
        return int(raw)
    if name == "fading_convention":
        return raw
    return float(raw)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a flat `key = value` config file; keys match the field names."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return ScenarioConfig(**values)


def dump_config(config: ScenarioConfig, path: str | Path) -> None:
    lines = []
    for f in dataclasses.fields(ScenarioConfig):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {'auto' if value is None else value}")
    Path(path).write_text("\n".join(lines) + "\n")
