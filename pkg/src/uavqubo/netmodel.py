"""Scenario generation and the probabilistic air-to-ground channel model.

UAVs hover at a common altitude on the vertices of a regular polygon; ground
users are dropped uniformly over a square area. Links mix line-of-sight and
non-line-of-sight free-space losses through an elevation-angle sigmoid, and
the dB loss is converted to a linear power gain for SINR work downstream.
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT_MPS",
    "RadioParams",
    "Scenario",
    "GainMatrix",
    "dbm_to_watts",
    "distance",
    "distance_matrix",
    "los_probability",
    "mean_pathloss_db",
    "generate_scenario",
    "gain_matrix",
    "scenario_from_config",
    "scenario_to_json",
    "scenario_from_json",
]

SPEED_OF_LIGHT_MPS = 3.0e8


@dataclass(frozen=True)
class RadioParams:
    """Channel and radio constants. Defaults follow the dense-urban setup."""

    carrier_freq_hz: float = 2.0e9
    light_speed_mps: float = SPEED_OF_LIGHT_MPS
    env_a: float = 9.6
    env_b: float = 0.16
    eta_los_db: float = 1.0
    eta_nlos_db: float = 20.0
    noise_dbm: float = -96.0
    power_levels_dbm: tuple = (10.0, 15.0, 20.0, 25.0, 30.0)
    num_subchannels: int = 2
    altitude_m: float = 100.0
    coverage_radius_m: float = 500.0
    max_gus_per_uav: int = 30

    def __post_init__(self):
        levels = tuple(float(p) for p in self.power_levels_dbm)
        object.__setattr__(self, "power_levels_dbm", levels)
        if len(levels) < 1 or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("power levels must be strictly increasing")
        if self.num_subchannels < 1 or self.max_gus_per_uav < 1:
            raise ValueError("counts must be >= 1")
        if self.env_b <= 0:
            raise ValueError("env_b must be positive")
        if self.altitude_m <= 0:
            raise ValueError("altitude must be positive")
        if self.eta_nlos_db < self.eta_los_db:
            raise ValueError("NLoS excess loss must be >= LoS excess loss")

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def power_levels_w(self) -> np.ndarray:
        return np.array([dbm_to_watts(p) for p in self.power_levels_dbm])

    @property
    def num_power_levels(self) -> int:
        return len(self.power_levels_dbm)


@dataclass(frozen=True)
class Scenario:
    """Fixed UAV and ground-user geometry plus the radio parameter set."""

    uav_positions: np.ndarray
    gu_positions: np.ndarray
    radio: RadioParams
    seed: int | None = None

    def __post_init__(self):
        uav = np.atleast_2d(np.asarray(self.uav_positions, dtype=float))
        gu = np.atleast_2d(np.asarray(self.gu_positions, dtype=float))
        if uav.shape[0] < 1 or gu.shape[0] < 1:
            raise ValueError("need at least one UAV and one GU")
        if uav.shape[1] != 2 or gu.shape[1] != 2:
            raise ValueError("positions must be 2-D coordinates")
        if not (np.isfinite(uav).all() and np.isfinite(gu).all()):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "uav_positions", uav)
        object.__setattr__(self, "gu_positions", gu)

    @property
    def num_uavs(self) -> int:
        return self.uav_positions.shape[0]

    @property
    def num_gus(self) -> int:
        return self.gu_positions.shape[0]


@dataclass
class GainMatrix:
    """Per-link mean path loss (dB) and the matching linear power gain."""

    linear_gain: np.ndarray
    pathloss_db: np.ndarray


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def distance(u, v, h: float) -> float:
    """Slant range between a UAV above u and a ground point v."""
    if h <= 0:
        raise ValueError("altitude must be positive")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(math.sqrt(float(((u - v) ** 2).sum()) + h * h))


def distance_matrix(scenario: Scenario) -> np.ndarray:
    """All UAV-to-GU slant ranges as an (M, N) matrix."""
    diff = scenario.uav_positions[:, None, :] - scenario.gu_positions[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2) + scenario.radio.altitude_m ** 2)


def los_probability(d, h: float, a: float, b: float):
    """Line-of-sight probability from the elevation-angle sigmoid.

    Requires d >= h so the elevation angle arcsin(h/d) is defined.
    """
    d = np.asarray(d, dtype=float)
    if h <= 0:
        raise ValueError("altitude must be positive")
    if np.any(d < h):
        raise ValueError("slant range cannot be smaller than the altitude")
    angle_deg = np.degrees(np.arcsin(h / d))
    rho = 1.0 / (1.0 + a * np.exp(-b * (angle_deg - a)))
    return float(rho) if rho.ndim == 0 else rho


def mean_pathloss_db(d, params: RadioParams):
    """LoS-probability-weighted mixture of LoS and NLoS dB losses."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    fs = 20.0 * np.log10(4.0 * np.pi * params.carrier_freq_hz * d
                         / params.light_speed_mps)
    rho = los_probability(d, params.altitude_m, params.env_a, params.env_b)
    loss = rho * (fs + params.eta_los_db) + (1.0 - rho) * (fs + params.eta_nlos_db)
    return float(loss) if loss.ndim == 0 else loss


def _polygon_positions(num_uavs: int, center, radius: float) -> np.ndarray:
    # Cellular-style preplacement: up to six UAVs sit on a regular polygon;
    # from seven on, one UAV takes the center and the rest form the ring.
    if num_uavs == 1:
        return np.array([center], dtype=float)
    ring = num_uavs if num_uavs <= 6 else num_uavs - 1
    angles = 2.0 * np.pi * np.arange(ring) / ring
    points = np.stack([center[0] + radius * np.cos(angles),
                       center[1] + radius * np.sin(angles)], axis=1)
    if ring < num_uavs:
        points = np.vstack([points, np.array([center], dtype=float)])
    return points


def generate_scenario(radio: RadioParams, num_uavs: int, num_gus: int,
                      area_m: float, seed: int | None = None,
                      placement_radius_m: float | None = None,
                      gu_placement: str = "service-area") -> Scenario:
    """Regular-polygon UAV preplacement plus a uniform GU drop.

    The polygon is inscribed on a circle around the area center; by default
    its radius leaves one coverage radius of margin to the area edge. GUs
    land uniformly over the network's service area (the union of the UAV
    coverage disks clipped to the area box) or, with gu_placement="uniform",
    over the whole box. Deterministic for a fixed seed.
    """
    if num_uavs < 1 or num_gus < 1:
        raise ValueError("need at least one UAV and one GU")
    if area_m <= 0:
        raise ValueError("area side must be positive")
    if placement_radius_m is None:
        placement_radius_m = max(area_m / 2.0 - radio.coverage_radius_m, 0.0)
    center = (area_m / 2.0, area_m / 2.0)
    uav = _polygon_positions(num_uavs, center, placement_radius_m)
    rng = np.random.default_rng(seed)
    if gu_placement == "uniform":
        gu = rng.uniform(0.0, area_m, size=(num_gus, 2))
    elif gu_placement == "service-area":
        # rejection sampling keeps the draw uniform over the disk union
        kept = []
        r_sq = radio.coverage_radius_m ** 2
        while len(kept) < num_gus:
            cand = rng.uniform(0.0, area_m, size=(max(4 * num_gus, 64), 2))
            d_sq = ((cand[:, None, :] - uav[None, :, :]) ** 2).sum(axis=2)
            kept.extend(cand[d_sq.min(axis=1) <= r_sq].tolist())
        gu = np.asarray(kept[:num_gus])
    else:
        raise ValueError(f"unknown gu_placement {gu_placement!r}")
    return Scenario(uav_positions=uav, gu_positions=gu, radio=radio, seed=seed)


def gain_matrix(scenario: Scenario) -> GainMatrix:
    """Pairwise mean path loss and linear gain for every UAV-GU link."""
    d = distance_matrix(scenario)
    loss_db = mean_pathloss_db(d, scenario.radio)
    return GainMatrix(linear_gain=10.0 ** (-loss_db / 10.0), pathloss_db=loss_db)


_CONFIG_DEFAULTS = {
    "num_uavs": 7,
    "num_gus": 100,
    "area_m": 2500.0,
    "seed": None,
    "placement_radius_m": None,
    "gu_placement": "service-area",
}

_RADIO_KEYS = ("carrier_freq_hz", "light_speed_mps", "env_a", "env_b",
               "eta_los_db", "eta_nlos_db", "noise_dbm", "power_levels_dbm",
               "num_subchannels", "altitude_m", "coverage_radius_m",
               "max_gus_per_uav")


def scenario_from_config(config: dict) -> Scenario:
    """Build a scenario from a flat config dict keyed by parameter names."""
    known = set(_CONFIG_DEFAULTS) | set(_RADIO_KEYS)
    unknown = set(config) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    radio_kwargs = {k: config[k] for k in _RADIO_KEYS if k in config}
    if "power_levels_dbm" in radio_kwargs:
        radio_kwargs["power_levels_dbm"] = tuple(radio_kwargs["power_levels_dbm"])
    radio = RadioParams(**radio_kwargs)
    merged = {**_CONFIG_DEFAULTS, **{k: config[k] for k in _CONFIG_DEFAULTS
                                     if k in config}}
    return generate_scenario(radio, merged["num_uavs"], merged["num_gus"],
                             merged["area_m"], seed=merged["seed"],
                             placement_radius_m=merged["placement_radius_m"],
                             gu_placement=merged["gu_placement"])


def scenario_to_json(scenario: Scenario, path):
    """Persist positions, radio parameters, and seed for exact replay."""
    doc = {
        "uav_positions": scenario.uav_positions.tolist(),
        "gu_positions": scenario.gu_positions.tolist(),
        "radio": asdict(scenario.radio),
        "seed": scenario.seed,
    }
    doc["radio"]["power_levels_dbm"] = list(doc["radio"]["power_levels_dbm"])
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def scenario_from_json(path) -> Scenario:
    with open(path) as fh:
        doc = json.load(fh)
    radio = doc["radio"]
    radio["power_levels_dbm"] = tuple(radio["power_levels_dbm"])
    return Scenario(uav_positions=np.array(doc["uav_positions"]),
                    gu_positions=np.array(doc["gu_positions"]),
                    radio=RadioParams(**radio),
                    seed=doc.get("seed"))
