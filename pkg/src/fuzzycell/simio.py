"""Scenario files, result serialization, and image output.

Scenarios are YAML mappings.  Fuzzy literals are written either as a
bare integer (crisp ``{1/x}``) or as a list of ``[value, grade]`` pairs:

    model: fcm
    road_length: 700
    boundary: open
    steps: 160
    alpha: 0.9
    epsilon: 0.01
    classes:
      - name: car
        length: 0
        v_max: [[2, 0.2], [3, 1.0], [4, 0.2]]
        accel: [[0, 0.2], [1, 1.0], [2, 0.2]]
    queue: {class: car, count: 50}
    nasch: {v_max: 3, p: 0.2, runs: 200, base_seed: 13000}
    outputs:
      - {kind: queue, path: queue50_fcm_queue.csv}

``fleet`` lists vehicles explicitly; ``queue`` is shorthand that expands
to a stopped column at load time, so a loaded configuration always
carries the full fleet.  Serialization with :func:`dump_scenario`
round-trips through :func:`load_scenario` unchanged.

Outputs: CSV time series with ``repr``-formatted floats (stable bytes
for golden-file comparison) and binary PGM (P5) space-time images, one
row per time step, one column per cell, black = membership 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .fuzznum import FuzzyInt, FuzzyNumError, crisp, defuzz_argmax, make_fuzzy
from .model import FcmState, FcmVehicle, VehicleClass
from .nasch import NaschState

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "OutputSpec",
    "FleetEntry",
    "NaschSettings",
    "FdSettings",
    "ScenarioConfig",
    "load_scenario",
    "load_scenario_file",
    "dump_scenario",
    "builtin_scenarios",
    "load_builtin",
    "build_fcm_state",
    "build_nasch_state",
    "fcm_membership_frames",
    "nasch_frames",
    "write_spacetime",
    "write_queue_csv",
    "write_fd_csv",
]

OUTPUT_KINDS = ("spacetime", "queue", "fundamental")
ESTIMATORS = ("mean_velocity", "site_count")


class ScenarioError(ValueError):
    """Base class for scenario loading problems."""


class ScenarioParseError(ScenarioError):
    """Malformed document: bad YAML or wrong structure/type for a field."""


class ScenarioValidationError(ScenarioError):
    """Well-formed document violating a model invariant."""


@dataclass(frozen=True)
class OutputSpec:
    kind: str
    path: str


@dataclass(frozen=True)
class FleetEntry:
    class_name: str
    position: FuzzyInt
    velocity: FuzzyInt


@dataclass(frozen=True)
class NaschSettings:
    v_max: int = 3
    p: float = 0.2
    runs: int = 200
    base_seed: int = 13000


@dataclass(frozen=True)
class FdSettings:
    densities: tuple[float, ...] = ()
    warmup: int = 100
    window: int = 500
    estimator: str = "mean_velocity"
    nasch_threshold: float = 0.1
    theta: float = 0.99


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    road_length: int
    boundary: str
    steps: int
    alpha: float
    epsilon: float
    classes: tuple[VehicleClass, ...]
    fleet: tuple[FleetEntry, ...]
    nasch: NaschSettings | None = None
    fd: FdSettings | None = None
    outputs: tuple[OutputSpec, ...] = ()


# ---------------------------------------------------------------------------
# loading


def _need(mapping, key, types, path):
    if key not in mapping:
        raise ScenarioParseError(f"{path}: missing required field '{key}'")
    value = mapping[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ScenarioParseError(f"{path}.{key}: expected {types}, got {type(value).__name__}")
    return value


def _get(mapping, key, types, path, default):
    if key not in mapping or mapping[key] is None:
        return default
    value = mapping[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ScenarioParseError(f"{path}.{key}: expected {types}, got {type(value).__name__}")
    return value


def _fuzzy_literal(raw, path) -> FuzzyInt:
    if isinstance(raw, bool):
        raise ScenarioParseError(f"{path}: expected integer or [value, grade] pairs")
    if isinstance(raw, int):
        return crisp(raw)
    if not isinstance(raw, list) or not all(
        isinstance(p, list) and len(p) == 2 for p in raw
    ):
        raise ScenarioParseError(f"{path}: expected integer or [value, grade] pairs")
    try:
        return make_fuzzy([(p[0], p[1]) for p in raw])
    except (FuzzyNumError, TypeError) as exc:
        raise ScenarioValidationError(f"{path}: {type(exc).__name__}: {exc}") from exc


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a mapping")

    model = _need(doc, "model", str, "scenario")
    if model not in ("fcm", "nasch"):
        raise ScenarioValidationError(f"scenario.model: unknown model {model!r}")
    road_length = _need(doc, "road_length", int, "scenario")
    boundary = _get(doc, "boundary", str, "scenario", "open")
    if boundary not in ("open", "ring"):
        raise ScenarioValidationError(f"scenario.boundary: unknown boundary {boundary!r}")
    steps = _need(doc, "steps", int, "scenario")
    if steps < 1:
        raise ScenarioValidationError("scenario.steps: must be at least 1")
    alpha = float(_get(doc, "alpha", (int, float), "scenario", 0.9))
    if not 0.0 <= alpha <= 1.0:
        raise ScenarioValidationError("scenario.alpha: must lie in [0, 1]")
    epsilon = float(_get(doc, "epsilon", (int, float), "scenario", 0.01))
    if not 0.0 <= epsilon < 1.0:
        raise ScenarioValidationError("scenario.epsilon: must lie in [0, 1)")

    raw_classes = _need(doc, "classes", list, "scenario")
    if not raw_classes:
        raise ScenarioValidationError("scenario.classes: at least one class required")
    classes = []
    for i, raw in enumerate(raw_classes):
        path = f"scenario.classes[{i}]"
        if not isinstance(raw, dict):
            raise ScenarioParseError(f"{path}: expected a mapping")
        name = _need(raw, "name", str, path)
        try:
            cls = VehicleClass(
                name,
                _fuzzy_literal(_need(raw, "length", (int, list), path), f"{path}.length"),
                _fuzzy_literal(_need(raw, "v_max", (int, list), path), f"{path}.v_max"),
                _fuzzy_literal(_need(raw, "accel", (int, list), path), f"{path}.accel"),
            )
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioValidationError(f"{path}: {exc}") from exc
        classes.append(cls)
    by_name = {c.name: c for c in classes}
    if len(by_name) != len(classes):
        raise ScenarioValidationError("scenario.classes: class names must be unique")

    fleet = []
    for i, raw in enumerate(_get(doc, "fleet", list, "scenario", [])):
        path = f"scenario.fleet[{i}]"
        if not isinstance(raw, dict):
            raise ScenarioParseError(f"{path}: expected a mapping")
        cname = _need(raw, "class", str, path)
        if cname not in by_name:
            raise ScenarioValidationError(f"{path}.class: unknown class {cname!r}")
        position = _fuzzy_literal(_need(raw, "position", (int, list), path), f"{path}.position")
        velocity = _fuzzy_literal(_get(raw, "velocity", (int, list), path, 0), f"{path}.velocity")
        fleet.append(FleetEntry(cname, position, velocity))
    queue_raw = _get(doc, "queue", dict, "scenario", None)
    if queue_raw is not None:
        path = "scenario.queue"
        cname = _need(queue_raw, "class", str, path)
        if cname not in by_name:
            raise ScenarioValidationError(f"{path}.class: unknown class {cname!r}")
        count = _need(queue_raw, "count", int, path)
        if count < 1:
            raise ScenarioValidationError(f"{path}.count: must be at least 1")
        start = _get(queue_raw, "start", int, path, 0)
        spacing = _get(queue_raw, "spacing", int, path, 1)
        if spacing < 1:
            raise ScenarioValidationError(f"{path}.spacing: must be at least 1")
        for k in range(count):
            fleet.append(FleetEntry(cname, crisp(start + k * spacing), crisp(0)))

    for i, entry in enumerate(fleet):
        if boundary == "ring" and int(entry.position.values[-1]) >= road_length:
            raise ScenarioValidationError(
                f"scenario.fleet[{i}].position: support exceeds the ring length"
            )
        if int(entry.position.values[0]) < 0:
            raise ScenarioValidationError(
                f"scenario.fleet[{i}].position: support must be non-negative"
            )

    nasch_raw = _get(doc, "nasch", dict, "scenario", None)
    nasch_settings = None
    if nasch_raw is not None:
        path = "scenario.nasch"
        nasch_settings = NaschSettings(
            v_max=_get(nasch_raw, "v_max", int, path, 3),
            p=float(_get(nasch_raw, "p", (int, float), path, 0.2)),
            runs=_get(nasch_raw, "runs", int, path, 200),
            base_seed=_get(nasch_raw, "base_seed", int, path, 13000),
        )
        if nasch_settings.v_max < 1:
            raise ScenarioValidationError(f"{path}.v_max: must be at least 1")
        if not 0.0 <= nasch_settings.p <= 1.0:
            raise ScenarioValidationError(f"{path}.p: must lie in [0, 1]")
        if nasch_settings.runs < 1:
            raise ScenarioValidationError(f"{path}.runs: must be at least 1")
    elif model == "nasch":
        nasch_settings = NaschSettings()

    fd_raw = _get(doc, "fd", dict, "scenario", None)
    fd = None
    if fd_raw is not None:
        path = "scenario.fd"
        densities = _get(fd_raw, "densities", list, path, [])
        for d in densities:
            if isinstance(d, bool) or not isinstance(d, (int, float)) or not 0.0 < d <= 1.0:
                raise ScenarioValidationError(f"{path}.densities: {d!r} outside (0, 1]")
        fd = FdSettings(
            densities=tuple(float(d) for d in densities),
            warmup=_get(fd_raw, "warmup", int, path, 100),
            window=_get(fd_raw, "window", int, path, 500),
            estimator=_get(fd_raw, "estimator", str, path, "mean_velocity"),
            nasch_threshold=float(_get(fd_raw, "nasch_threshold", (int, float), path, 0.1)),
            theta=float(_get(fd_raw, "theta", (int, float), path, 0.99)),
        )
        if fd.estimator not in ESTIMATORS:
            raise ScenarioValidationError(f"{path}.estimator: unknown estimator {fd.estimator!r}")
        if fd.estimator == "site_count" and model == "fcm":
            raise ScenarioValidationError(
                f"{path}.estimator: site_count applies to the nasch model only"
            )
        if fd.warmup < 0 or fd.window < 1:
            raise ScenarioValidationError(f"{path}: warmup must be >= 0 and window >= 1")
        if not 0.0 < fd.theta <= 1.0:
            raise ScenarioValidationError(f"{path}.theta: must lie in (0, 1]")

    outputs = []
    for i, raw in enumerate(_get(doc, "outputs", list, "scenario", [])):
        path = f"scenario.outputs[{i}]"
        if not isinstance(raw, dict):
            raise ScenarioParseError(f"{path}: expected a mapping")
        kind = _need(raw, "kind", str, path)
        if kind not in OUTPUT_KINDS:
            raise ScenarioValidationError(f"{path}.kind: unknown output kind {kind!r}")
        outputs.append(OutputSpec(kind, _need(raw, "path", str, path)))

    if model == "nasch":
        for i, entry in enumerate(fleet):
            if not (entry.position.is_crisp and entry.velocity.is_crisp):
                raise ScenarioValidationError(
                    f"scenario.fleet[{i}]: the nasch model needs crisp positions and velocities"
                )

    return ScenarioConfig(
        model=model,
        road_length=road_length,
        boundary=boundary,
        steps=steps,
        alpha=alpha,
        epsilon=epsilon,
        classes=tuple(classes),
        fleet=tuple(fleet),
        nasch=nasch_settings,
        fd=fd,
        outputs=tuple(outputs),
    )


def load_scenario_file(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return load_scenario(text)


def _fuzzy_doc(f: FuzzyInt):
    return [[int(v), float(g)] for v, g in f.to_pairs()]


def dump_scenario(config: ScenarioConfig) -> str:
    """Serialize a configuration; load_scenario(dump_scenario(c)) == c."""
    doc = {
        "model": config.model,
        "road_length": config.road_length,
        "boundary": config.boundary,
        "steps": config.steps,
        "alpha": config.alpha,
        "epsilon": config.epsilon,
        "classes": [
            {
                "name": c.name,
                "length": _fuzzy_doc(c.length),
                "v_max": _fuzzy_doc(c.v_max),
                "accel": _fuzzy_doc(c.accel),
            }
            for c in config.classes
        ],
        "fleet": [
            {
                "class": e.class_name,
                "position": _fuzzy_doc(e.position),
                "velocity": _fuzzy_doc(e.velocity),
            }
            for e in config.fleet
        ],
    }
    if config.nasch is not None:
        doc["nasch"] = {
            "v_max": config.nasch.v_max,
            "p": config.nasch.p,
            "runs": config.nasch.runs,
            "base_seed": config.nasch.base_seed,
        }
    if config.fd is not None:
        doc["fd"] = {
            "densities": list(config.fd.densities),
            "warmup": config.fd.warmup,
            "window": config.fd.window,
            "estimator": config.fd.estimator,
            "nasch_threshold": config.fd.nasch_threshold,
            "theta": config.fd.theta,
        }
    if config.outputs:
        doc["outputs"] = [{"kind": o.kind, "path": o.path} for o in config.outputs]
    return yaml.safe_dump(doc, sort_keys=False)


def builtin_scenarios() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name.removesuffix(".yaml") for p in root.iterdir() if p.name.endswith(".yaml"))


def load_builtin(name: str) -> ScenarioConfig:
    ref = resources.files(__package__) / "scenarios" / f"{name}.yaml"
    if not ref.is_file():
        raise ScenarioError(f"no builtin scenario named {name!r}")
    return load_scenario(ref.read_text())


# ---------------------------------------------------------------------------
# model builders


def build_fcm_state(config: ScenarioConfig) -> FcmState:
    """Initial fuzzy road state for a loaded scenario."""
    by_name = {c.name: c for c in config.classes}
    vehicles = tuple(
        FcmVehicle(i, by_name[e.class_name], e.position, e.velocity)
        for i, e in enumerate(config.fleet)
    )
    try:
        return FcmState(
            vehicles,
            config.road_length,
            config.boundary,
            config.alpha,
            config.epsilon,
        )
    except ValueError as exc:
        raise ScenarioValidationError(str(exc)) from exc


def build_nasch_state(config: ScenarioConfig, seed: int | None = None) -> NaschState:
    """Initial baseline state; fuzzy fleet entries are defuzzified."""
    ns = config.nasch if config.nasch is not None else NaschSettings()
    positions = [defuzz_argmax(e.position) for e in config.fleet]
    velocities = [min(defuzz_argmax(e.velocity), ns.v_max) for e in config.fleet]
    try:
        return NaschState(
            config.road_length,
            config.boundary,
            np.array(positions, dtype=np.int64),
            np.array(velocities, dtype=np.int64),
            ns.v_max,
            ns.p,
            ns.base_seed if seed is None else seed,
        )
    except ValueError as exc:
        raise ScenarioValidationError(str(exc)) from exc


# ---------------------------------------------------------------------------
# output writers


def fcm_membership_frames(states) -> np.ndarray:
    """Per-step, per-cell maximal position membership over all vehicles."""
    states = list(states)
    road = states[0].road_length
    out = np.zeros((len(states), road), dtype=np.float64)
    for t, state in enumerate(states):
        row = out[t]
        for veh in state.vehicles:
            values = veh.position.values
            inside = (values >= 0) & (values < road)
            np.maximum.at(row, values[inside], veh.position.grades[inside])
    return out


def nasch_frames(states) -> np.ndarray:
    """Crisp occupancy frames (grade 1 where a vehicle sits)."""
    states = list(states)
    road = states[0].road_length
    out = np.zeros((len(states), road), dtype=np.float64)
    for t, state in enumerate(states):
        pos = state.positions % road if state.boundary == "ring" else state.positions
        inside = (pos >= 0) & (pos < road)
        out[t, pos[inside]] = 1.0
    return out


def write_spacetime(frames, path) -> None:
    """Write membership frames as a binary PGM: black = grade 1, white = empty."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("frames must be a non-empty 2-D membership array")
    pixels = np.rint(255.0 * (1.0 - np.clip(arr, 0.0, 1.0))).astype(np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def _csv(path, header, rows) -> None:
    lines = [header]
    lines.extend(rows)
    Path(path).write_text("\n".join(lines) + "\n")


def write_queue_csv(series, path) -> None:
    """Queue series CSV: fuzzy grades or ensemble probabilities per length.

    Fuzzy input is a list of value -> grade mappings (one per step);
    ensemble input is a (steps x lengths) probability matrix.  Rows are
    ordered by step then length, zero entries skipped.
    """
    rows = []
    if isinstance(series, np.ndarray):
        header = "step,length,probability"
        for t in range(series.shape[0]):
            for x in np.flatnonzero(series[t] > 0.0):
                rows.append(f"{t},{x},{float(series[t, x])!r}")
    else:
        header = "step,length,grade"
        for t, dist in enumerate(series):
            for x in sorted(dist):
                rows.append(f"{t},{x},{float(dist[x])!r}")
    _csv(path, header, rows)


def write_fd_csv(points, path) -> None:
    """Diagram CSV: cut-bracketed fuzzy flows or probability-tagged states."""
    points = list(points)
    if points and hasattr(points[0], "states"):
        header = "density,flow,probability"
        rows = [
            f"{p.density!r},{flow!r},{prob!r}"
            for p in points
            for flow, prob in p.states
        ]
    else:
        header = "density,flow_argmax,cut_low,cut_high"
        rows = [
            f"{p.density!r},{p.flow_argmax!r},{p.flow_cut_low!r},{p.flow_cut_high!r}"
            for p in points
        ]
    _csv(path, header, rows)
