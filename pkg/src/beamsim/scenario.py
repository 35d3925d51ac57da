"""Scenario / experiment files (YAML) and the shipped set-up presets."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .beamformer import BeamTarget, RisConfiguration, TxPlacement, unit_vector
from .errors import CalibrationInvalid, ConfigInvalid, InvalidArgument
from .fieldsim import (DEFAULT_BANDWIDTH, DEFAULT_CARRIER, DEFAULT_SUBCARRIERS, Receiver,
                       Scenario, Tap)
from .geometry import ArrayGeometry, build_geometry, geometry_from_dict, load_geometry
from .phase_law import PhaseVoltageLaw, default_synthetic_law, load_law

PRESETS = ("setup1", "setup2")
MAX_CONE_DEG = 45.0
_TOP_KEYS = {"name", "geometry", "law", "carrier_hz", "bandwidth_hz", "n_subcarriers", "seed",
             "dac_bits", "focus_distance_m", "tx", "receivers", "multipath_taps",
             "configurations", "notes"}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    scenario: Scenario  # config is all-zero voltages until a target is applied
    configurations: dict[str, BeamTarget]
    targeted_rx: dict[str, tuple[str, ...]] = field(default_factory=dict)
    dac_bits: int = 8
    focus_distance: float = 3.5


def preset_path(name: str) -> Path:
    if name not in PRESETS:
        raise InvalidArgument(f"unknown preset {name!r}, expected one of {PRESETS}")
    return Path(str(resources.files("beamsim") / "data" / f"{name}.yaml"))


def _line_of(root, *keys) -> int | None:
    """1-based line of the YAML node reached by following ``keys``."""
    node = root
    for key in keys:
        if node is None:
            return None
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            node = node.value[key] if key < len(node.value) else None
        else:
            return None
    return None if node is None else node.start_mark.line + 1


class _Ctx:
    def __init__(self, source: str, root):
        self.source = source
        self.root = root

    def fail(self, msg: str, *keys):
        line = _line_of(self.root, *keys) if keys else None
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigInvalid(f"{where}: {msg}")


def _vec3(ctx: _Ctx, value, *keys) -> tuple[float, float, float]:
    try:
        out = tuple(float(x) for x in value)
    except (TypeError, ValueError):
        ctx.fail(f"expected a 3-vector, got {value!r}", *keys)
    if len(out) != 3:
        ctx.fail(f"expected a 3-vector, got {value!r}", *keys)
    return out


def _taps(ctx: _Ctx, items, *keys) -> tuple[Tap, ...]:
    if items is None:
        return ()
    if not isinstance(items, list):
        ctx.fail("multipath taps must be a list", *keys)
    taps = []
    for i, t in enumerate(items):
        try:
            taps.append(Tap(float(t["delay_s"]), float(t["gain_db"]), float(t.get("phase_rad", 0.0))))
        except (KeyError, TypeError, ValueError) as exc:
            ctx.fail(f"tap {i}: needs delay_s, gain_db[, phase_rad] ({exc})", *keys, i)
        if taps[-1].delay < 0:
            ctx.fail(f"tap {i}: negative delay", *keys, i)
    return tuple(taps)


def _receiver(ctx: _Ctx, i: int, item) -> Receiver:
    keys = ("receivers", i)
    if not isinstance(item, dict) or "name" not in item:
        ctx.fail(f"receiver {i}: expected a mapping with a name", *keys)
    name = str(item["name"])
    if "position_m" in item:
        pos = _vec3(ctx, item["position_m"], *keys, "position_m")
    elif "direction_deg" in item:
        try:
            theta, phi = (float(x) for x in item["direction_deg"])
            rng = float(item.get("range_m", 3.5))
        except (TypeError, ValueError):
            ctx.fail(f"RX {name!r}: direction_deg must be [theta, phi]", *keys)
        pos = tuple(float(c) for c in rng * unit_vector(theta, phi))
    else:
        ctx.fail(f"RX {name!r}: needs position_m or direction_deg", *keys)
    gain = item.get("direct_path_gain_db", "blocked")
    if gain == "blocked" or gain is None:
        gain = None
    else:
        try:
            gain = float(gain)
        except (TypeError, ValueError):
            ctx.fail(f"RX {name!r}: direct_path_gain_db must be a number or 'blocked'", *keys)
    if pos[2] <= 0:
        ctx.fail(f"RX {name!r}: position z must be > 0 (in front of the array)", *keys)
    return Receiver(name, pos, gain, _taps(ctx, item.get("taps"), *keys, "taps"))


def _resolve(base: Path | None, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() or base is None else base / p


def experiment_from_text(text: str, source: str = "<scenario>", base: Path | None = None,
                         geometry: ArrayGeometry | None = None,
                         law: PhaseVoltageLaw | None = None) -> ExperimentPreset:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{source}: {exc}") from exc
    ctx = _Ctx(source, root)
    if not isinstance(data, dict) or not data:
        ctx.fail("empty or non-mapping scenario file")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        ctx.fail(f"unknown keys {sorted(unknown)}", sorted(unknown)[0])

    if geometry is None:
        geo = data.get("geometry")
        if geo is None:
            geometry = build_geometry()
        elif isinstance(geo, str):
            geometry = load_geometry(_resolve(base, geo))
        else:
            geometry = geometry_from_dict(geo, source=f"{source}:{_line_of(root, 'geometry')}")

    if law is None:
        law_ref = data.get("law", "synthetic")
        if law_ref in (None, "synthetic"):
            law = default_synthetic_law()
        else:
            try:
                law = load_law(_resolve(base, str(law_ref)))
            except CalibrationInvalid as exc:
                ctx.fail(str(exc), "law")

    tx_data = data.get("tx") or {}
    try:
        tx = TxPlacement(_vec3(ctx, tx_data.get("position_m", (0.0, 0.0, 3.2)), "tx"))
    except InvalidArgument as exc:
        ctx.fail(str(exc), "tx")

    rx_items = data.get("receivers")
    if not isinstance(rx_items, list) or not rx_items:
        ctx.fail("at least one receiver is required", "receivers")
    rxs = tuple(_receiver(ctx, i, item) for i, item in enumerate(rx_items))

    configs: dict[str, BeamTarget] = {}
    targeted: dict[str, tuple[str, ...]] = {}
    for name, c in (data.get("configurations") or {}).items():
        try:
            configs[str(name)] = BeamTarget(float(c["theta_deg"]), float(c["phi_deg"]))
        except (KeyError, TypeError, ValueError, InvalidArgument) as exc:
            ctx.fail(f"configuration {name!r}: {exc}", "configurations", name)
        if configs[str(name)].theta > MAX_CONE_DEG:
            ctx.fail(f"configuration {name!r}: theta outside the {MAX_CONE_DEG:g} deg cone",
                     "configurations", name)
        targeted[str(name)] = tuple(str(r) for r in c.get("targets", ()))
        for r in targeted[str(name)]:
            if r not in {rx.name for rx in rxs}:
                ctx.fail(f"configuration {name!r} targets unknown RX {r!r}", "configurations", name)

    n = geometry.n_cells
    v0 = np.zeros(n)
    idle = RisConfiguration(v0, np.radians(np.full(n, law.phases[0])) % (2 * np.pi),
                            np.full(n, 10 ** (law.amplitudes_db[0] / 20)), 0)
    try:
        scenario = Scenario(
            geometry=geometry, law=law, config=idle, tx=tx, rxs=rxs,
            carrier=float(data.get("carrier_hz", DEFAULT_CARRIER)),
            bandwidth=float(data.get("bandwidth_hz", DEFAULT_BANDWIDTH)),
            n_subcarriers=int(data.get("n_subcarriers", DEFAULT_SUBCARRIERS)),
            multipath_taps=_taps(ctx, data.get("multipath_taps"), "multipath_taps"),
            seed=int(data.get("seed", 0)),
            name=str(data.get("name", Path(source).stem)),
        )
    except (InvalidArgument, TypeError, ValueError) as exc:
        ctx.fail(str(exc))
    try:
        dac_bits = int(data.get("dac_bits", 8))
        focus = float(data.get("focus_distance_m", 3.5))
    except (TypeError, ValueError) as exc:
        ctx.fail(str(exc))
    return ExperimentPreset(scenario.name, scenario, configs, targeted, dac_bits, focus)


def load_experiment(path: str | Path, geometry: ArrayGeometry | None = None,
                    law: PhaseVoltageLaw | None = None) -> ExperimentPreset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return experiment_from_text(text, str(path), path.parent, geometry, law)


def load_scenario(path: str | Path) -> Scenario:
    """Validated Scenario from a file (config left idle: all cells at 0 V)."""
    return load_experiment(path).scenario


def load_preset(name: str, geometry: ArrayGeometry | None = None,
                law: PhaseVoltageLaw | None = None) -> ExperimentPreset:
    return load_experiment(preset_path(name), geometry, law)
