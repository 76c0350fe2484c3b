"""Scenario tables, simulation configuration and cluster initialization.

Configuration files are INI-style (``key = value`` lines under ``[section]``
headers, ``#`` comments). See ``docs/config.md`` for the full schema. Unknown
sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
import re
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .antenna import PATTERNS, AntennaArray
from .geometry import SPEED_OF_LIGHT, MotionState, cartesian_to_angles, unit_direction, velocity_vector

__all__ = [
    "ConfigError",
    "ScenarioParams",
    "PRESETS",
    "Draw",
    "ClusterMotion",
    "SimulationConfig",
    "Cluster",
    "load_config",
    "loads_config",
    "dumps_config",
    "apply_overrides",
    "config_text",
    "resolve_key",
    "valid_keys",
    "is_numeric_key",
    "build_config",
    "realization_rng",
    "init_clusters",
    "new_cluster",
    "draw_delays",
]

PDP_KINDS = ("single-slope-exponential", "umi-nlos-exponential")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        where = ""
        if field_name:
            where += f"{field_name}: "
        if line is not None:
            where = f"line {line}: " + where
        super().__init__(where + message)
        self.field = field_name
        self.line = line


@dataclass(frozen=True)
class ScenarioParams:
    """Per-scenario constants.

    Units: delays in seconds, angles in degrees, distances in meters, the
    Rice factor and birth/recombination rates as plain numbers.
    ``tau_max`` is the maximum *excess* delay, i.e. measured from the LoS
    delay ``D_LoS/c``.
    """

    rice_factor_K: float
    r_tau: float
    sigma_tau: float
    sigma_Z: float
    asd: float
    asa: float
    esd: float
    esa: float
    n_init: int
    M: int
    lambda_G: float
    lambda_R: float
    D_c: float
    P_c: float
    L_c: float
    sigma_D: float
    zeta: float
    tau_max: float
    xpr_dB: float
    cluster_speed_max: float
    pdp_kind: str
    intra_cluster_azimuth_spread: float = 3.0
    intra_cluster_elevation_spread: float = 1.0
    xpr_random: bool = False
    xpr_std_dB: float = 3.0

    def __post_init__(self):
        checks = [
            ("rice_factor_K", self.rice_factor_K >= 0, "must be >= 0"),
            ("sigma_tau", self.sigma_tau > 0, "must be > 0"),
            ("sigma_Z", self.sigma_Z >= 0, "must be >= 0"),
            ("n_init", self.n_init >= 1, "must be >= 1"),
            ("M", self.M >= 1, "must be >= 1"),
            ("lambda_G", self.lambda_G >= 0, "must be >= 0"),
            ("lambda_R", self.lambda_R > 0, "must be > 0"),
            ("D_c", self.D_c > 0, "must be > 0"),
            ("P_c", 0.0 <= self.P_c <= 1.0, "must lie in [0, 1]"),
            ("L_c", self.L_c > 0, "must be > 0"),
            ("sigma_D", self.sigma_D >= 0, "must be >= 0"),
            ("zeta", self.zeta > 0, "must be > 0 (inf allowed)"),
            ("tau_max", self.tau_max > 0, "must be > 0"),
            ("cluster_speed_max", self.cluster_speed_max >= 0, "must be >= 0"),
            ("pdp_kind", self.pdp_kind in PDP_KINDS, f"must be one of {PDP_KINDS}"),
            ("intra_cluster_azimuth_spread", self.intra_cluster_azimuth_spread >= 0, "must be >= 0"),
            ("intra_cluster_elevation_spread", self.intra_cluster_elevation_spread >= 0, "must be >= 0"),
        ]
        if self.pdp_kind == "single-slope-exponential":
            checks.append(("r_tau", self.r_tau > 1, "must be > 1 for a single-slope exponential PDP"))
        for name, ok, why in checks:
            if not ok:
                raise ConfigError(f"{why} (got {getattr(self, name)!r})", name)

    @property
    def expected_cluster_count(self) -> float:
        return self.lambda_G / self.lambda_R


# Birth-death constants (lambda_G, lambda_R, D_c, P_c, L_c, n_init, M) come
# from the published cluster-evolution parameters (UMa NLoS). Delay and
# angular spreads are WINNER-style placeholders; K for UMa LoS is the published
# LCR/AFD setting. sigma_D and zeta are not published.
_BIRTH_DEATH = dict(n_init=20, M=20, lambda_G=0.8, lambda_R=0.04, D_c=10.0, P_c=0.3, L_c=60.0, sigma_D=5.0, zeta=0.3)

PRESETS: dict[str, ScenarioParams] = {
    "umi-nlos": ScenarioParams(
        rice_factor_K=0.0, r_tau=2.1, sigma_tau=76e-9, sigma_Z=3.0,
        asd=15.0, asa=35.0, esd=8.0, esa=18.0, tau_max=0.5e-6, xpr_dB=8.0,
        cluster_speed_max=10.0, pdp_kind="umi-nlos-exponential", **_BIRTH_DEATH,
    ),
    "uma-los": ScenarioParams(
        rice_factor_K=5.514, r_tau=2.5, sigma_tau=93e-9, sigma_Z=3.0,
        asd=8.0, asa=45.0, esd=4.0, esa=10.0, tau_max=0.6e-6, xpr_dB=8.0,
        cluster_speed_max=20.0, pdp_kind="single-slope-exponential", **_BIRTH_DEATH,
    ),
    "uma-nlos": ScenarioParams(
        rice_factor_K=0.0, r_tau=2.3, sigma_tau=363e-9, sigma_Z=3.0,
        asd=12.0, asa=50.0, esd=6.0, esa=15.0, tau_max=1.5e-6, xpr_dB=7.0,
        cluster_speed_max=20.0, pdp_kind="single-slope-exponential", **_BIRTH_DEATH,
    ),
}


@dataclass(frozen=True)
class Draw:
    """A scalar that is either fixed or drawn uniformly from [low, high]."""

    low: float
    high: float

    @classmethod
    def fixed(cls, value: float) -> "Draw":
        return cls(value, value)

    @classmethod
    def parse(cls, text: str) -> "Draw":
        parts = text.split()
        try:
            if len(parts) == 2 and parts[0] == "fixed":
                return cls.fixed(float(parts[1]))
            if len(parts) == 3 and parts[0] == "uniform":
                lo, hi = float(parts[1]), float(parts[2])
                if hi < lo:
                    raise ValueError
                return cls(lo, hi)
        except ValueError:
            pass
        raise ValueError(f"expected 'fixed <v>' or 'uniform <low> <high>', got {text!r}")

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def sample(self, rng: np.random.Generator) -> float:
        # Always consume one variate so the stream layout does not depend on the setting.
        u = rng.random()
        return self.low + (self.high - self.low) * u

    def __str__(self):
        if self.low == self.high:
            return f"fixed {self.low!r}"
        return f"uniform {self.low!r} {self.high!r}"


@dataclass(frozen=True)
class ClusterMotion:
    """Speed and travel-direction laws for moving first/last-bounce clusters."""

    speed_A: Draw
    speed_Z: Draw
    azimuth_A: Draw = Draw(-180.0, 180.0)
    elevation_A: Draw = Draw(-90.0, 90.0)
    azimuth_Z: Draw = Draw(-180.0, 180.0)
    elevation_Z: Draw = Draw(-90.0, 90.0)

    @classmethod
    def uniform(cls, speed_max: float) -> "ClusterMotion":
        return cls(Draw(0.0, speed_max), Draw(0.0, speed_max))

    def __post_init__(self):
        for name in ("speed_A", "speed_Z"):
            if getattr(self, name).low < 0:
                raise ConfigError("cluster speeds must be >= 0", name)


@dataclass(frozen=True)
class SimulationConfig:
    scenario: ScenarioParams
    carrier_frequency: float
    sample_interval: float
    birth_death_steps: int
    duration: float
    ms_motion: MotionState
    D_T_init: float
    D_R_init: float
    D_LoS_init: float
    los_azimuth: float = 0.0
    los_elevation: float = 0.0
    tx_array: AntennaArray = field(default_factory=AntennaArray.single)
    rx_array: AntennaArray = field(default_factory=AntennaArray.single)
    cluster_motion: ClusterMotion | None = None
    seed: int = 0
    realizations: int = 1
    doppler_phase: str = "accumulated"
    virtual_delay_input: str = "per-cluster"
    los_placement: str = "own-delay"
    source_text: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.cluster_motion is None:
            object.__setattr__(self, "cluster_motion", ClusterMotion.uniform(self.scenario.cluster_speed_max))
        checks = [
            ("carrier_frequency", self.carrier_frequency > 0, "must be > 0"),
            ("sample_interval", self.sample_interval > 0, "must be > 0"),
            ("birth_death_steps", self.birth_death_steps >= 1, "must be >= 1"),
            ("duration", self.duration >= 0, "must be >= 0"),
            ("D_T_init", self.D_T_init > 0, "must be > 0"),
            ("D_R_init", self.D_R_init > 0, "must be > 0"),
            ("D_LoS_init", self.D_LoS_init > 0, "must be > 0"),
            ("realizations", self.realizations >= 1, "must be >= 1"),
            ("doppler_phase", self.doppler_phase in ("accumulated", "literal"), "must be 'accumulated' or 'literal'"),
            ("virtual_delay_input", self.virtual_delay_input in ("per-cluster", "per-step"),
             "must be 'per-cluster' or 'per-step'"),
            ("los_placement", self.los_placement in ("own-delay", "first-path"),
             "must be 'own-delay' or 'first-path'"),
        ]
        for name, ok, why in checks:
            if not ok:
                raise ConfigError(f"{why} (got {getattr(self, name)!r})", name)
        if not 0 <= self.seed < 2**64:
            raise ConfigError("must be a 64-bit unsigned integer", "seed")

    # derived quantities -------------------------------------------------
    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def birth_death_interval(self) -> float:
        return self.birth_death_steps * self.sample_interval

    @property
    def n_snapshots(self) -> int:
        return int(math.floor(self.duration / self.sample_interval + 1e-9)) + 1

    @property
    def ms_velocity(self) -> np.ndarray:
        return velocity_vector(self.ms_motion)

    @property
    def los_vector(self) -> np.ndarray:
        """BS -> MS position vector at t = 0."""
        return self.D_LoS_init * unit_direction(self.los_azimuth, self.los_elevation)

    @property
    def mean_cluster_speeds(self) -> tuple[float, float]:
        return self.cluster_motion.speed_A.mean, self.cluster_motion.speed_Z.mean

    @property
    def fluctuation_rate(self) -> float:
        """Mean channel fluctuation per second, v_MS + P_c (v_A + v_Z)."""
        v_a, v_z = self.mean_cluster_speeds
        return self.ms_motion.speed + self.scenario.P_c * (v_a + v_z)

    @property
    def mean_lifetime(self) -> float:
        rate = self.fluctuation_rate
        return math.inf if rate == 0 else self.scenario.D_c / (self.scenario.lambda_R * rate)

    @property
    def fingerprint(self) -> str:
        text = self.source_text if self.source_text is not None else dumps_config(self)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def times(self) -> np.ndarray:
        return np.arange(self.n_snapshots) * self.sample_interval

    def with_changes(self, **changes) -> "SimulationConfig":
        """Copy with fields replaced; the copy drops the original file text."""
        return replace(self, source_text=None, **changes)


def sample_interval_from_density(sample_density: float, wavelength: float, fluctuation_rate: float) -> float:
    """Sampling interval from a WINNER-style SampleDensity.

    ``dt = wavelength / (2 * SampleDensity * v_eff)`` with ``v_eff`` the mean
    fluctuation rate ``v_MS + P_c (v_A + v_Z)``.
    """
    if fluctuation_rate <= 0:
        raise ConfigError("SampleDensity needs a non-zero effective speed; give sample_interval instead",
                          "sample_density")
    return wavelength / (2.0 * sample_density * fluctuation_rate)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

_SCENARIO_TYPES: dict[str, type] = {f.name: f.type for f in fields(ScenarioParams)}
_SCHEMA: dict[str, dict[str, Any]] = {
    "scenario": {"preset": str, **{name: None for name in _SCENARIO_TYPES}},
    "simulation": {
        "carrier_frequency": float, "sample_interval": float, "sample_density": float,
        "birth_death_interval": float, "birth_death_steps": int, "duration": float,
        "seed": int, "realizations": int, "doppler_phase": str, "virtual_delay_input": str,
        "los_placement": str,
    },
    "ms": {"speed": float, "travel_azimuth": float, "travel_elevation": float},
    "geometry": {"D_T_init": float, "D_R_init": float, "D_LoS_init": float,
                 "los_azimuth": float, "los_elevation": float},
    "clusters": {"speed_A": Draw, "speed_Z": Draw, "azimuth_A": Draw, "elevation_A": Draw,
                 "azimuth_Z": Draw, "elevation_Z": Draw},
    "antennas": {f"{side}_{key}": typ for side in ("tx", "rx")
                 for key, typ in (("elements", int), ("spacing", float), ("axis", str), ("pattern", str))},
}

_ALIASES = {"v_MS": ("ms", "speed"), "theta_MS": ("ms", "travel_azimuth")}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(value: str, typ) -> Any:
    if typ in ("float", float):
        return float(value)
    if typ in ("int", int):
        f = float(value)
        if f != int(f):
            raise ValueError(f"not an integer: {value!r}")
        return int(f)
    if typ in ("bool", bool):
        return _parse_bool(value)
    if typ is Draw:
        return Draw.parse(value)
    return value.strip()


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return lineno
    return None


def parse_config_text(text: str) -> dict[str, dict[str, str]]:
    """Parse INI text into raw strings, rejecting unknown sections/keys."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (D_c vs d_c)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(f"cannot parse configuration ({exc.__class__.__name__})", None, line) from exc
    raw: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section, _line_of(text, section, None))
        for key, value in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key in [{section}]", key, _line_of(text, section, key))
            raw.setdefault(section, {})[key] = value
    return raw


def build_config(raw: dict[str, dict[str, str]], source_text: str | None = None) -> SimulationConfig:
    """Build and validate a :class:`SimulationConfig` from raw strings."""
    text = source_text or ""

    def get(section, key, typ, default=...):
        value = raw.get(section, {}).get(key)
        if value is None:
            if default is ...:
                raise ConfigError("missing required field", key, _line_of(text, section, None))
            return default
        try:
            return _convert(value, typ)
        except ValueError as exc:
            raise ConfigError(str(exc), key, _line_of(text, section, key)) from None

    sc = raw.get("scenario", {})
    preset_name = sc.get("preset")
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}", "preset",
                              _line_of(text, "scenario", "preset"))
        base = {f.name: getattr(PRESETS[preset_name], f.name) for f in fields(ScenarioParams)}
    else:
        base = {f.name: (... if f.default is MISSING else f.default) for f in fields(ScenarioParams)}
    values = {}
    for name, typ in _SCENARIO_TYPES.items():
        default = base[name]
        values[name] = get("scenario", name, typ, default)
    try:
        scenario = ScenarioParams(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.field, _line_of(text, "scenario", exc.field)) from None

    ms = MotionState(get("ms", "speed", float), get("ms", "travel_azimuth", float, 0.0),
                     get("ms", "travel_elevation", float, 0.0))

    motion = ClusterMotion(
        get("clusters", "speed_A", Draw, Draw(0.0, scenario.cluster_speed_max)),
        get("clusters", "speed_Z", Draw, Draw(0.0, scenario.cluster_speed_max)),
        get("clusters", "azimuth_A", Draw, Draw(-180.0, 180.0)),
        get("clusters", "elevation_A", Draw, Draw(-90.0, 90.0)),
        get("clusters", "azimuth_Z", Draw, Draw(-180.0, 180.0)),
        get("clusters", "elevation_Z", Draw, Draw(-90.0, 90.0)),
    )

    fc = get("simulation", "carrier_frequency", float)
    if fc <= 0:
        raise ConfigError("must be > 0", "carrier_frequency", _line_of(text, "simulation", "carrier_frequency"))
    wavelength = SPEED_OF_LIGHT / fc

    dt = get("simulation", "sample_interval", float, None)
    density = get("simulation", "sample_density", float, None)
    if (dt is None) == (density is None):
        raise ConfigError("give exactly one of sample_interval / sample_density", "sample_interval",
                          _line_of(text, "simulation", None))
    if dt is None:
        v_a, v_z = motion.speed_A.mean, motion.speed_Z.mean
        dt = sample_interval_from_density(density, wavelength, ms.speed + scenario.P_c * (v_a + v_z))

    bd_seconds = get("simulation", "birth_death_interval", float, None)
    bd_steps = get("simulation", "birth_death_steps", int, None)
    if (bd_seconds is None) == (bd_steps is None):
        raise ConfigError("give exactly one of birth_death_interval / birth_death_steps", "birth_death_interval",
                          _line_of(text, "simulation", None))
    if bd_steps is None:
        ratio = bd_seconds / dt
        if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError("Δt_BD not an integer multiple of Δt", "birth_death_interval",
                              _line_of(text, "simulation", "birth_death_interval"))
        bd_steps = int(round(ratio))

    def array(side):
        n = get("antennas", f"{side}_elements", int, 1)
        spacing = get("antennas", f"{side}_spacing", float, 0.5)
        axis = get("antennas", f"{side}_axis", str, "y")
        pattern = get("antennas", f"{side}_pattern", str, "isotropic")
        if axis not in ("x", "y", "z"):
            raise ConfigError("must be x, y or z", f"{side}_axis", _line_of(text, "antennas", f"{side}_axis"))
        if pattern not in PATTERNS:
            raise ConfigError(f"must be one of {sorted(PATTERNS)}", f"{side}_pattern",
                              _line_of(text, "antennas", f"{side}_pattern"))
        return AntennaArray.ula(n, spacing * wavelength, axis, pattern)

    try:
        cfg = SimulationConfig(
            scenario=scenario,
            carrier_frequency=fc,
            sample_interval=dt,
            birth_death_steps=bd_steps,
            duration=get("simulation", "duration", float),
            ms_motion=ms,
            D_T_init=get("geometry", "D_T_init", float),
            D_R_init=get("geometry", "D_R_init", float),
            D_LoS_init=get("geometry", "D_LoS_init", float),
            los_azimuth=get("geometry", "los_azimuth", float, 0.0),
            los_elevation=get("geometry", "los_elevation", float, 0.0),
            tx_array=array("tx"),
            rx_array=array("rx"),
            cluster_motion=motion,
            seed=get("simulation", "seed", int, 0),
            realizations=get("simulation", "realizations", int, 1),
            doppler_phase=get("simulation", "doppler_phase", str, "accumulated"),
            virtual_delay_input=get("simulation", "virtual_delay_input", str, "per-cluster"),
            los_placement=get("simulation", "los_placement", str, "own-delay"),
            source_text=source_text,
        )
    except ConfigError as exc:
        section = next((s for s, keys in _SCHEMA.items() if exc.field in keys), None)
        line = _line_of(text, section, exc.field) if section else None
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.field, line) from None
    return cfg



def loads_config(text: str) -> SimulationConfig:
    return build_config(parse_config_text(text), source_text=text)


def load_config(path: str | Path) -> SimulationConfig:
    """Read and validate a configuration file."""
    text = Path(path).read_text(encoding="utf-8")
    return loads_config(text)


def resolve_key(key: str) -> tuple[str, str]:
    """Map ``section.key``, a bare unique key or an alias to (section, key)."""
    if key in _ALIASES:
        return _ALIASES[key]
    if "." in key:
        section, name = key.split(".", 1)
        if section in _SCHEMA and name in _SCHEMA[section]:
            return section, name
    else:
        hits = [(s, key) for s, keys in _SCHEMA.items() if key in keys]
        if len(hits) == 1:
            return hits[0]
    raise ConfigError(f"unknown key; valid keys: {', '.join(valid_keys())}", key)


def is_numeric_key(key: str) -> bool:
    section, name = resolve_key(key)
    typ = _SCENARIO_TYPES.get(name) if section == "scenario" else _SCHEMA[section][name]
    return typ in (float, int, "float", "int")


def apply_overrides(text: str, overrides: dict[str, str]) -> str:
    """Return config text with ``key = value`` overrides applied.

    Keys are resolved like :func:`resolve_key`. The text is returned
    unchanged when there are no overrides, so the fingerprint of an
    unmodified file is preserved.

    Raises:
        ConfigError: for unknown keys or values the schema rejects.
    """
    if not overrides:
        return text
    raw = parse_config_text(text)
    for key, value in overrides.items():
        section, name = resolve_key(key)
        raw.setdefault(section, {})[name] = str(value)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_dict(raw)
    buf = io.StringIO()
    parser.write(buf)
    out = buf.getvalue()
    loads_config(out)
    return out


def valid_keys() -> list[str]:
    return sorted(list(_ALIASES) + [f"{s}.{k}" for s, keys in _SCHEMA.items() for k in keys])


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def dumps_config(cfg: SimulationConfig) -> str:
    """Serialize a configuration to the INI format (round-trips through loads_config)."""
    lines = ["[scenario]"]
    for f in fields(ScenarioParams):
        lines.append(f"{f.name} = {_fmt(getattr(cfg.scenario, f.name))}")
    lines += [
        "", "[simulation]",
        f"carrier_frequency = {_fmt(float(cfg.carrier_frequency))}",
        f"sample_interval = {_fmt(float(cfg.sample_interval))}",
        f"birth_death_steps = {cfg.birth_death_steps}",
        f"duration = {_fmt(float(cfg.duration))}",
        f"seed = {cfg.seed}",
        f"realizations = {cfg.realizations}",
        f"doppler_phase = {cfg.doppler_phase}",
        f"virtual_delay_input = {cfg.virtual_delay_input}",
        f"los_placement = {cfg.los_placement}",
        "", "[ms]",
        f"speed = {_fmt(float(cfg.ms_motion.speed))}",
        f"travel_azimuth = {_fmt(float(cfg.ms_motion.travel_azimuth))}",
        f"travel_elevation = {_fmt(float(cfg.ms_motion.travel_elevation))}",
        "", "[geometry]",
        f"D_T_init = {_fmt(float(cfg.D_T_init))}",
        f"D_R_init = {_fmt(float(cfg.D_R_init))}",
        f"D_LoS_init = {_fmt(float(cfg.D_LoS_init))}",
        f"los_azimuth = {_fmt(float(cfg.los_azimuth))}",
        f"los_elevation = {_fmt(float(cfg.los_elevation))}",
        "", "[clusters]",
    ]
    for name in ("speed_A", "speed_Z", "azimuth_A", "elevation_A", "azimuth_Z", "elevation_Z"):
        lines.append(f"{name} = {getattr(cfg.cluster_motion, name)}")
    lines += ["", "[antennas]"]
    for side, arr in (("tx", cfg.tx_array), ("rx", cfg.rx_array)):
        pos = arr.positions
        axis, spacing = "y", 0.5
        if arr.n_elements > 1:
            step = pos[1] - pos[0]
            axis = "xyz"[int(np.argmax(np.abs(step)))]
            spacing = float(np.abs(step).max() / cfg.wavelength)
            expected = AntennaArray.ula(arr.n_elements, spacing * cfg.wavelength, axis).positions
            if not np.allclose(expected, pos, rtol=1e-12, atol=1e-15):
                raise ValueError("only uniform linear arrays can be written to a configuration file")
        lines += [f"{side}_elements = {arr.n_elements}", f"{side}_spacing = {_fmt(spacing)}",
                  f"{side}_axis = {axis}", f"{side}_pattern = {arr.pattern}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# random streams and clusters
# ---------------------------------------------------------------------------

def config_text(cfg: SimulationConfig) -> str:
    """The bytes the fingerprint is computed from."""
    return cfg.source_text if cfg.source_text is not None else dumps_config(cfg)


def realization_rng(seed: int, realization: int) -> np.random.Generator:
    """Independent generator for one realization, derived from (seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, realization])))


@dataclass
class Cluster:
    """First/last-bounce scatterer pair with M rays.

    Ray positions are stored at ``anchor_time`` and evolve linearly from
    there: ``D_T(t) = D_T(anchor) + v_A (t - anchor)`` and
    ``D_R(t) = D_R(anchor) + (v_Z - v_MS)(t - anchor)``.
    """

    id: int
    ray_positions_T: np.ndarray
    ray_positions_R: np.ndarray
    v_A: np.ndarray
    v_Z: np.ndarray
    is_moving: bool
    virtual_delay: float
    shadowing_db: float
    phases: np.ndarray
    xpr: np.ndarray
    birth_time: float
    lifetime: float
    anchor_time: float
    initial_delay: float
    delay_target_quantile: float
    stream_seed: int

    def __post_init__(self):
        m = self.ray_positions_T.shape[0]
        if self.ray_positions_T.shape != (m, 3) or self.ray_positions_R.shape != (m, 3):
            raise ValueError("ray position arrays must both have shape (M, 3)")
        if not self.lifetime > 0:
            raise ValueError("cluster lifetime must be > 0")
        if self.virtual_delay < 0:
            raise ValueError("virtual delay must be >= 0")

    @property
    def death_time(self) -> float:
        return self.birth_time + self.lifetime

    @property
    def n_rays(self) -> int:
        return self.ray_positions_T.shape[0]


def draw_delays(scenario: ScenarioParams, n: int, los_delay: float, rng: np.random.Generator) -> np.ndarray:
    """Raw delay draws in seconds, each >= ``los_delay`` (unsorted)."""
    u = rng.random(n)
    if scenario.pdp_kind == "single-slope-exponential":
        # WINNER convention tau' = -r_tau sigma_tau ln U; 1 - u keeps the log finite.
        return los_delay - scenario.r_tau * scenario.sigma_tau * np.log1p(-u)
    return los_delay + scenario.tau_max * u


def _positive_normal(rng, mean, std, size):
    d = rng.normal(mean, std, size)
    bad = d <= 1e-3
    while np.any(bad):
        d[bad] = rng.normal(mean, std, int(bad.sum()))
        bad = d <= 1e-3
    return d


def new_cluster(cfg: SimulationConfig, rng: np.random.Generator, cluster_id: int, t: float,
                delay: float | None = None, initial: bool = False) -> Cluster:
    """Draw one cluster born at time ``t``.

    Mean departure angles scatter around the BS->MS direction and mean
    arrival angles around the MS->BS direction at time ``t``; per-ray
    offsets are drawn once. ``delay`` is the initial total delay; if omitted
    a single delay is drawn from the scenario PDP.
    """
    sc = cfg.scenario
    v_ms = cfg.ms_velocity
    los = cfg.los_vector + v_ms * t
    dep = cartesian_to_angles(los, "LoS path")
    arr = cartesian_to_angles(-los, "LoS path")
    los_delay = float(np.linalg.norm(los)) / SPEED_OF_LIGHT
    if delay is None:
        delay = float(draw_delays(sc, 1, los_delay, rng)[0])

    m = sc.M
    aod = dep.azimuth + rng.normal(0.0, sc.asd)
    eod = dep.elevation + rng.normal(0.0, sc.esd)
    aoa = arr.azimuth + rng.normal(0.0, sc.asa)
    eoa = arr.elevation + rng.normal(0.0, sc.esa)
    ray_aod = aod + rng.normal(0.0, sc.intra_cluster_azimuth_spread, m)
    ray_eod = np.clip(eod + rng.normal(0.0, sc.intra_cluster_elevation_spread, m), -90.0, 90.0)
    ray_aoa = aoa + rng.normal(0.0, sc.intra_cluster_azimuth_spread, m)
    ray_eoa = np.clip(eoa + rng.normal(0.0, sc.intra_cluster_elevation_spread, m), -90.0, 90.0)

    d_t = _positive_normal(rng, cfg.D_T_init, sc.sigma_D, m)
    d_r = _positive_normal(rng, cfg.D_R_init, sc.sigma_D, m)
    pos_t = d_t[:, None] * unit_direction(ray_aod, ray_eod)
    pos_r = d_r[:, None] * unit_direction(ray_aoa, ray_eoa)

    motion = cfg.cluster_motion
    is_moving = bool(rng.random() < sc.P_c)
    speed_a = motion.speed_A.sample(rng)
    dir_a = unit_direction(motion.azimuth_A.sample(rng), motion.elevation_A.sample(rng))
    speed_z = motion.speed_Z.sample(rng)
    dir_z = unit_direction(motion.azimuth_Z.sample(rng), motion.elevation_Z.sample(rng))
    if is_moving:
        v_a, v_z = speed_a * dir_a, speed_z * dir_z
    else:
        v_a, v_z = np.zeros(3), np.zeros(3)

    shadowing = rng.normal(0.0, sc.sigma_Z)
    phases = rng.uniform(0.0, 2.0 * np.pi, (m, 4))
    xpr_db = rng.normal(sc.xpr_dB, sc.xpr_std_dB, m) if sc.xpr_random else np.full(m, sc.xpr_dB)
    xpr = 10.0 ** (xpr_db / 10.0)

    mean_life = cfg.mean_lifetime
    e1, e2 = rng.standard_exponential(2)
    if math.isinf(mean_life):
        birth, lifetime = t, math.inf
    elif initial:
        # Clusters present at t0 are taken from the steady-state population:
        # exponential age and residual life.
        birth, lifetime = t - mean_life * e1, mean_life * (e1 + e2)
    else:
        birth, lifetime = t, mean_life * e2

    geometric = (np.linalg.norm(pos_t, axis=1).mean() + np.linalg.norm(pos_r, axis=1).mean()) / SPEED_OF_LIGHT
    virtual = max(0.0, delay - geometric)
    quantile = rng.random()
    stream_seed = int(rng.integers(0, 2**63))

    return Cluster(
        id=cluster_id, ray_positions_T=pos_t, ray_positions_R=pos_r, v_A=v_a, v_Z=v_z,
        is_moving=is_moving, virtual_delay=virtual, shadowing_db=float(shadowing), phases=phases,
        xpr=xpr, birth_time=float(birth), lifetime=float(lifetime), anchor_time=float(t),
        initial_delay=float(delay), delay_target_quantile=float(quantile), stream_seed=stream_seed,
    )


def init_clusters(cfg: SimulationConfig, rng: np.random.Generator) -> list[Cluster]:
    """Initial cluster set at t0, sorted by initial delay.

    Delays are drawn from the scenario PDP, shifted so that the smallest
    equals ``D_LoS/c`` and sorted ascending.
    """
    sc = cfg.scenario
    los_delay = cfg.D_LoS_init / SPEED_OF_LIGHT
    delays = np.sort(draw_delays(sc, sc.n_init, los_delay, rng))
    delays = delays - delays[0] + los_delay
    return [new_cluster(cfg, rng, i, 0.0, delay=float(d), initial=True) for i, d in enumerate(delays)]
