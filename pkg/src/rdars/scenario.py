"""Experiment description: geometry, link budget, fading, powers and RDARS setup.

Scenario files are TOML with units spelled out in key names. Every key is
optional; missing keys take the single-cell defaults below (BS at
(0, 0, 10) m, RDARS at (20, 20, 10) m, UE at (200, 0, 1.5) m, 3GPP-style
log-distance path loss, P = 10 dBm, noise -80 dBm, Rician factors 10).
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional

import numpy as np
import tomli
import tomli_w

from rdars.channel import (
    AngleSet,
    LinkGains,
    NodeGeometry,
    PathLossParams,
    db_to_linear,
    path_loss_db,
)

PHASE_POLICIES = ("optimal-instantaneous", "statistical-aligned", "identity", "explicit")
SHADOWING_MODES = ("none", "per-drop", "per-realization")

# independent RNG streams under one scenario seed
ANGLE_STREAM = 1
SHADOW_STREAM = 2
TRIAL_STREAM = 3


class ScenarioError(ValueError):
    """Raised with one message per violated field."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class LosAngles:
    bs_arrival: AngleSet
    rdars_departure: AngleSet
    rdars_arrival: AngleSet


# (section, key, type) for every serializable field, in canonical order
_SCHEMA = [
    ("geometry", "bs_position_m", "vec3"),
    ("geometry", "rdars_position_m", "vec3"),
    ("geometry", "ue_position_m", "vec3"),
    ("geometry", "bs_antennas", "int"),
    ("geometry", "bs_array_rows", "optint"),
    ("geometry", "rdars_elements", "int"),
    ("geometry", "rdars_array_rows", "optint"),
    ("geometry", "element_spacing_ratio", "float"),
    ("path_loss", "reference_loss_db", "float"),
    ("path_loss", "exponent_ue_rdars", "float"),
    ("path_loss", "exponent_rdars_bs", "float"),
    ("path_loss", "exponent_ue_bs", "float"),
    ("path_loss", "shadow_sigma_db", "float"),
    ("path_loss", "shadowing", "str"),
    ("fading", "rician_rdars_bs", "float"),
    ("fading", "rician_ue_rdars", "float"),
    ("power", "transmit_power_dbm", "float"),
    ("power", "noise_bs_dbm", "float"),
    ("power", "noise_rdars_dbm", "float"),
    ("rdars", "connected", "int"),
    ("rdars", "connected_indices", "optintlist"),
    ("rdars", "phase_policy", "str"),
    ("rdars", "phases_rad", "optfloatlist"),
    ("angles", "bs_arrival_rad", "optpair"),
    ("angles", "rdars_departure_rad", "optpair"),
    ("angles", "rdars_arrival_rad", "optpair"),
    ("run", "seed", "int"),
    ("run", "n_trials", "int"),
]
FIELD_SECTION = {key: section for section, key, _ in _SCHEMA}
FIELD_TYPE = {key: kind for _, key, kind in _SCHEMA}


@dataclass(frozen=True)
class Scenario:
    bs_position_m: tuple = (0.0, 0.0, 10.0)
    rdars_position_m: tuple = (20.0, 20.0, 10.0)
    ue_position_m: tuple = (200.0, 0.0, 1.5)
    bs_antennas: int = 4
    bs_array_rows: Optional[int] = None
    rdars_elements: int = 512
    rdars_array_rows: Optional[int] = None
    element_spacing_ratio: float = 0.5
    reference_loss_db: float = 30.0
    exponent_ue_rdars: float = 2.5
    exponent_rdars_bs: float = 2.0
    exponent_ue_bs: float = 3.1
    shadow_sigma_db: float = 3.0
    shadowing: str = "none"
    rician_rdars_bs: float = 10.0
    rician_ue_rdars: float = 10.0
    transmit_power_dbm: float = 10.0
    noise_bs_dbm: float = -80.0
    noise_rdars_dbm: float = -80.0
    connected: int = 2
    connected_indices: Optional[tuple] = None
    phase_policy: str = "statistical-aligned"
    phases_rad: Optional[tuple] = None
    bs_arrival_rad: Optional[tuple] = None
    rdars_departure_rad: Optional[tuple] = None
    rdars_arrival_rad: Optional[tuple] = None
    seed: int = 20240601
    n_trials: int = 10000

    def __post_init__(self):
        errors = _check(self)
        if errors:
            raise ScenarioError(errors)

    # -- derived quantities ------------------------------------------------
    @property
    def n_elements(self) -> int:
        return self.rdars_elements

    @property
    def bs_geometry(self) -> NodeGeometry:
        rows = self.bs_array_rows or near_square_rows(self.bs_antennas)
        return NodeGeometry(tuple(self.bs_position_m), rows, self.bs_antennas // rows,
                            self.element_spacing_ratio)

    @property
    def rdars_geometry(self) -> NodeGeometry:
        n = self.rdars_elements
        if n == 0:
            return NodeGeometry(tuple(self.rdars_position_m), 1, 1, self.element_spacing_ratio)
        rows = self.rdars_array_rows or near_square_rows(n)
        return NodeGeometry(tuple(self.rdars_position_m), rows, n // rows, self.element_spacing_ratio)

    @property
    def transmit_power_mw(self) -> float:
        return float(db_to_linear(self.transmit_power_dbm))

    @property
    def noise(self):
        from rdars.snr import NoiseModel
        return NoiseModel(float(db_to_linear(self.noise_bs_dbm)), float(db_to_linear(self.noise_rdars_dbm)))

    @property
    def transmit_snr(self) -> float:
        """``P / sigma_B^2`` (linear)."""
        return float(db_to_linear(self.transmit_power_dbm - self.noise_bs_dbm))

    def path_loss_params(self) -> dict[str, PathLossParams]:
        sh = self.shadow_sigma_db
        return {
            "ue_bs": PathLossParams(self.reference_loss_db, self.exponent_ue_bs, sh),
            "ue_rdars": PathLossParams(self.reference_loss_db, self.exponent_ue_rdars, sh),
            "rdars_bs": PathLossParams(self.reference_loss_db, self.exponent_rdars_bs, sh),
        }

    def distances_m(self) -> dict[str, float]:
        bs, ris, ue = (np.asarray(p, dtype=float) for p in
                       (self.bs_position_m, self.rdars_position_m, self.ue_position_m))
        return {
            "ue_bs": float(np.linalg.norm(ue - bs)),
            "ue_rdars": float(np.linalg.norm(ue - ris)),
            "rdars_bs": float(np.linalg.norm(ris - bs)),
        }

    def shadow_draw_db(self) -> dict[str, float]:
        """Per-drop shadowing (zero unless ``shadowing == 'per-drop'``)."""
        if self.shadowing != "per-drop":
            return {"ue_bs": 0.0, "ue_rdars": 0.0, "rdars_bs": 0.0}
        rng = stream_rng(self.seed, SHADOW_STREAM)
        z = rng.normal(0.0, self.shadow_sigma_db, 3)
        return {"ue_bs": float(z[0]), "ue_rdars": float(z[1]), "rdars_bs": float(z[2])}

    def path_losses_db(self) -> dict[str, float]:
        params, dist, shadow = self.path_loss_params(), self.distances_m(), self.shadow_draw_db()
        return {k: path_loss_db(params[k], dist[k], shadow[k]) for k in params}

    def link_gains(self) -> LinkGains:
        pl = self.path_losses_db()
        return LinkGains(**{k: float(db_to_linear(-v)) for k, v in pl.items()})

    def los_angles(self) -> LosAngles:
        return _los_angles(self.seed, self.bs_arrival_rad, self.rdars_departure_rad, self.rdars_arrival_rad)

    def connected_set(self) -> frozenset:
        if self.connected_indices is not None:
            return frozenset(self.connected_indices)
        return frozenset(range(self.connected))

    def replace(self, **changes) -> "Scenario":
        if "rdars_elements" in changes and "rdars_array_rows" not in changes:
            changes["rdars_array_rows"] = None
        if "bs_antennas" in changes and "bs_array_rows" not in changes:
            changes["bs_array_rows"] = None
        return dataclasses.replace(self, **changes)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict[str, dict[str, Any]]:
        out: dict[str, dict[str, Any]] = {}
        for section, key, _ in _SCHEMA:
            value = getattr(self, key)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = list(value)
            out.setdefault(section, {})[key] = value
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()[:16]


def near_square_rows(n: int) -> int:
    """Largest divisor of ``n`` not exceeding ``sqrt(n)`` (rows of a near-square UPA)."""
    if n <= 0:
        return 1
    r = math.isqrt(n)
    while n % r:
        r -= 1
    return r


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _los_angles(seed, bs_arr, ris_dep, ris_arr) -> LosAngles:
    drawn = stream_rng(seed, ANGLE_STREAM).uniform(0.0, 2.0 * math.pi, 6)
    pairs = [bs_arr, ris_dep, ris_arr]
    sets = []
    for i, pair in enumerate(pairs):
        az, el = pair if pair is not None else (drawn[2 * i], drawn[2 * i + 1])
        sets.append(AngleSet(float(az), float(el)))
    return LosAngles(*sets)


def _coerce(key: str, kind: str, value, errors: list[str]):
    path = f"{FIELD_SECTION[key]}.{key}"

    def bad(msg):
        errors.append(f"{path}: {msg}")

    def number(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)

    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return bad(f"expected integer, got {value!r}")
        return int(value)
    if kind == "optint":
        if value is None:
            return None
        return _coerce(key, "int", value, errors)
    if kind == "float":
        if not number(value):
            return bad(f"expected finite number, got {value!r}")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            return bad(f"expected string, got {value!r}")
        return value
    if kind == "vec3":
        if not (isinstance(value, (list, tuple)) and len(value) == 3 and all(number(v) for v in value)):
            return bad(f"expected 3 finite numbers, got {value!r}")
        return tuple(float(v) for v in value)
    if kind == "optpair":
        if value is None:
            return None
        if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(number(v) for v in value)):
            return bad(f"expected [azimuth, elevation] in radians, got {value!r}")
        return tuple(float(v) for v in value)
    if kind == "optintlist":
        if value is None:
            return None
        if not (isinstance(value, (list, tuple))
                and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
            return bad(f"expected list of integers, got {value!r}")
        return tuple(sorted(int(v) for v in value))
    if kind == "optfloatlist":
        if value is None:
            return None
        if not (isinstance(value, (list, tuple)) and all(number(v) for v in value)):
            return bad("expected list of finite numbers")
        return tuple(float(v) for v in value)
    raise AssertionError(kind)


def _check(s: Scenario) -> list[str]:
    errors = []

    def err(key, msg):
        errors.append(f"{FIELD_SECTION[key]}.{key}: {msg}")

    if s.bs_antennas < 1:
        err("bs_antennas", "must be >= 1")
    if s.rdars_elements < 0:
        err("rdars_elements", "must be >= 0")
    for key, count in (("bs_array_rows", s.bs_antennas), ("rdars_array_rows", s.rdars_elements)):
        rows = getattr(s, key)
        if rows is not None and (rows < 1 or (count > 0 and count % rows)):
            err(key, f"must be a positive divisor of {count}")
    if not s.element_spacing_ratio >= 0:
        err("element_spacing_ratio", "must be >= 0")
    for key in ("exponent_ue_rdars", "exponent_rdars_bs", "exponent_ue_bs"):
        if not getattr(s, key) > 0:
            err(key, "must be > 0")
    if not s.shadow_sigma_db >= 0:
        err("shadow_sigma_db", "must be >= 0")
    if s.shadowing not in SHADOWING_MODES:
        err("shadowing", f"must be one of {SHADOWING_MODES}")
    for key in ("rician_rdars_bs", "rician_ue_rdars"):
        if not getattr(s, key) >= 0:
            err(key, "must be >= 0")
    if s.connected < 0:
        err("connected", "must be >= 0")
    if s.connected > s.rdars_elements:
        errors.append(f"rdars.connected: a={s.connected} exceeds geometry.rdars_elements N={s.rdars_elements}")
    if s.connected_indices is not None:
        idx = s.connected_indices
        if len(set(idx)) != len(idx) or len(idx) != s.connected:
            err("connected_indices", f"must list {s.connected} distinct indices (rdars.connected)")
        if any(i < 0 or i >= s.rdars_elements for i in idx):
            err("connected_indices", f"indices must lie in [0, {s.rdars_elements})")
    if s.phase_policy not in PHASE_POLICIES:
        err("phase_policy", f"must be one of {PHASE_POLICIES}")
    if s.phase_policy == "explicit" and (s.phases_rad is None or len(s.phases_rad) != s.rdars_elements):
        err("phases_rad", "explicit phase policy needs one phase per element")
    if s.phase_policy == "optimal-instantaneous" and s.bs_antennas != 1:
        errors.append("rdars.phase_policy: optimal-instantaneous co-phasing needs geometry.bs_antennas = 1")
    if s.n_trials < 1:
        err("n_trials", "must be >= 1")
    if not 0 <= s.seed < 2 ** 64:
        err("seed", "must be an unsigned 64-bit integer")
    dist = s.distances_m() if not errors else {}
    for link, dval in dist.items():
        if not dval > 0:
            errors.append(f"geometry: {link} distance is zero; nodes must not coincide")
    return errors


def scenario_from_dict(data: dict) -> Scenario:
    """Build a validated Scenario from nested ``{section: {key: value}}`` data."""
    errors: list[str] = []
    kwargs: dict[str, Any] = {}
    if not isinstance(data, dict):
        raise ScenarioError(["<root>: expected a table"])
    for section, body in data.items():
        if not isinstance(body, dict):
            errors.append(f"{section}: expected a table")
            continue
        for key, value in body.items():
            if FIELD_SECTION.get(key) != section:
                errors.append(f"{section}.{key}: unknown key")
                continue
            coerced = _coerce(key, FIELD_TYPE[key], value, errors)
            if coerced is not None or value is None:
                kwargs[key] = coerced
    if errors:
        raise ScenarioError(errors)
    try:
        return Scenario(**kwargs)
    except TypeError as exc:
        raise ScenarioError([str(exc)]) from exc


def validate_scenario(text: str) -> Scenario:
    """Parse TOML scenario text, fill defaults and check every invariant.

    Raises ScenarioError listing each problem with its ``section.key`` path.
    """
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError([f"<toml>: {exc}"]) from exc
    return scenario_from_dict(data)


def parse_override(item: str) -> tuple[str, Any]:
    """``key=value`` with a TOML literal value (bare words are taken as strings)."""
    if "=" not in item:
        raise ScenarioError([f"override {item!r}: expected key=value"])
    key, raw = (part.strip() for part in item.split("=", 1))
    key = key.split(".")[-1]
    if key not in FIELD_SECTION:
        raise ScenarioError([f"override {key!r}: unknown key"])
    try:
        value = tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        value = raw
    return key, value


def apply_overrides(scenario: Scenario, overrides: dict[str, Any]) -> Scenario:
    data = scenario.to_dict()
    for key, value in overrides.items():
        if key not in FIELD_SECTION:
            raise ScenarioError([f"override {key!r}: unknown key"])
        data.setdefault(FIELD_SECTION[key], {})[key] = value
    if "rdars_elements" in overrides and "rdars_array_rows" not in overrides:
        data.get("geometry", {}).pop("rdars_array_rows", None)
    if "bs_antennas" in overrides and "bs_array_rows" not in overrides:
        data.get("geometry", {}).pop("bs_array_rows", None)
    return scenario_from_dict(data)
