"""JSON scenario configs: parsing, validation and resolution to library objects."""

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .. import estimation, gaussian, network, transduction

COMMANDS = ("trace", "task", "sweep", "scaling", "infer", "synth")
SAMPLING_COMMANDS = ("trace", "task")
SECTION_KEYS = ("source", "circuit", "task", "scene", "trace", "sweep", "scaling", "infer", "run")


class ConfigError(ValueError):
    pass


class UnsupportedCommandError(ConfigError):
    pass


_SOURCE_FORMS = {
    "ideal_squeezing_db": ("ideal_squeezing_db",),
    "r": ("r",),
    "measured": ("squeezing_db", "antisqueezing_db"),
}


@dataclass(frozen=True)
class ResolvedSource:
    r: float
    ideal_squeezing_db: float
    source_efficiency: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """One reproducible scenario.

    Sections are kept as plain dicts so that a parse/serialise round trip is
    the identity; the ``resolve_*`` methods turn them into library objects.
    """

    command: str
    name: str = "scenario"
    source: dict = field(default_factory=dict)
    circuit: dict = field(default_factory=dict)
    task: dict = field(default_factory=dict)
    scene: dict = None
    trace: dict = None
    sweep: dict = None
    scaling: dict = None
    infer: dict = None
    run: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(SECTION_KEYS) - {"command", "name"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        command = data.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
        kwargs = {k: data[k] for k in SECTION_KEYS if k in data}
        config = cls(command=command, name=data.get("name", "scenario"), **kwargs)
        config.validate()
        return config

    def to_dict(self):
        out = {"command": self.command, "name": self.name}
        for key in SECTION_KEYS:
            value = getattr(self, key)
            if value is not None and (value or key in ("source", "circuit", "task", "run")):
                out[key] = json.loads(json.dumps(value))
        return out

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_overrides(self, seed=None, n_shots=None):
        run = dict(self.run)
        if seed is not None:
            run["seed"] = int(seed)
        if n_shots is not None:
            run["n_shots"] = int(n_shots)
        return replace(self, run=run)

    def validate(self):
        if self.command not in ("scaling",):
            forms = [name for name, keys in _SOURCE_FORMS.items() if any(k in self.source for k in keys)]
            if self.command in ("infer",) and forms != ["measured"]:
                raise ConfigError("infer needs a measured source {squeezing_db, antisqueezing_db}")
            if self.command not in ("synth", "infer") and len(forms) != 1:
                raise ConfigError("source needs exactly one of ideal_squeezing_db, r, or a measured pair")
            if forms == ["measured"] and not all(k in self.source for k in _SOURCE_FORMS["measured"]):
                raise ConfigError("measured source needs both squeezing_db and antisqueezing_db")
        if self.command in SAMPLING_COMMANDS or (self.sweep or {}).get("monte_carlo"):
            if "seed" not in self.run:
                raise ConfigError("sampling commands need run.seed")
            if int(self.run.get("n_shots", 0)) < 1:
                raise ConfigError("sampling commands need run.n_shots >= 1")
        if self.command in ("task", "sweep", "synth") and not self.task:
            raise ConfigError(f"{self.command} needs a task section")

    # resolution -------------------------------------------------------

    @property
    def seed(self):
        return int(self.run["seed"])

    @property
    def n_shots(self):
        return int(self.run["n_shots"])

    def resolve_source(self):
        src = self.source
        if "squeezing_db" in src:
            inferred = transduction.infer_source(src["squeezing_db"], src["antisqueezing_db"])
            return ResolvedSource(inferred.r, inferred.ideal_squeezing_db, inferred.source_efficiency)
        if "ideal_squeezing_db" in src:
            db = float(src["ideal_squeezing_db"])
            return ResolvedSource(gaussian.squeezing_parameter_from_db(db), db)
        if "r" in src:
            r = float(src["r"])
            return ResolvedSource(r, gaussian.squeezing_db_from_parameter(r))
        raise ConfigError("no source specified")

    def resolve_task(self):
        spec = dict(self.task)
        template = spec.pop("template", None)
        if template is not None:
            if template not in estimation.TEMPLATES:
                raise ConfigError(f"unknown task template {template!r}")
            base = estimation.TEMPLATES[template]()
            extra = {k: spec[k] for k in ("data_signs",) if k in spec}
            return replace(base, **extra) if extra else base
        if "weights" not in spec:
            raise ConfigError("task needs a template or weights")
        return estimation.SensingTask.from_dict(spec)

    def resolve_efficiency(self, num_sensors, ideal_db):
        eta = self.circuit.get("efficiency", 1.0)
        if isinstance(eta, dict):
            if ideal_db is None:
                raise ConfigError("efficiency from network_squeezing_db needs a source")
            if "network_squeezing_db" not in eta:
                raise ConfigError("efficiency object needs network_squeezing_db")
            eta = transduction.efficiency_from_network_squeezing(ideal_db, eta["network_squeezing_db"])
        return tuple(np.broadcast_to(np.asarray(eta, dtype=float), (num_sensors,)))

    def resolve_circuit(self, task=None, ideal_db=None):
        spec = self.circuit
        if ideal_db is None and self.source:
            ideal_db = self.resolve_source().ideal_squeezing_db
        if "vbs_chain" in spec:
            m = len(spec["vbs_chain"]) + 1
            return network.CircuitConfig(
                tuple(spec["vbs_chain"]),
                spec.get("port_map"),
                spec.get("sensor_phase"),
                self.resolve_efficiency(m, ideal_db),
            )
        if spec.get("optimal", True):
            task = self.resolve_task() if task is None else task
            return network.optimal_circuit(task, spec.get("port_map"), self.resolve_efficiency(task.num_sensors, ideal_db))
        raise ConfigError("circuit needs vbs_chain or optimal: true")

    def resolve_scene(self, task):
        spec = self.scene
        if task.picture != "rf-parameter":
            return None
        if not spec:
            return estimation.default_scene(task)
        m = task.num_sensors
        consts = {k: float(spec[k]) for k in ("a_c", "v_pi", "gamma") if k in spec}
        if "geometry" in spec:
            geometry = transduction.ArrayGeometry.from_dict(spec["geometry"])
            phases = transduction.phases_from_aoa(geometry, spec["aoa"], m, spec.get("reference", 0))
        elif "phases_over_pi" in spec:
            phases = np.pi * np.asarray(spec["phases_over_pi"], dtype=float)
        else:
            phases = spec.get("phases", estimation.default_scene(task).phases)
        amplitudes = spec.get("amplitudes", spec.get("amplitude", transduction.DEFAULT_WORKING_AMPLITUDE))
        amplitudes = np.broadcast_to(np.asarray(amplitudes, dtype=float), (m,))
        signs = spec.get("delay_signs", "auto")
        if signs == "auto":
            signs = network.optimal_delay_signs(task)
        return transduction.RfScene(tuple(amplitudes), tuple(np.broadcast_to(phases, (m,))), tuple(signs), **consts)


def load_config(path):
    """Load a config from a path, or ``preset:NAME`` for a shipped preset."""
    path = str(path)
    try:
        if path.startswith("preset:"):
            text = resources.files("cvdqs.presets").joinpath(path[len("preset:"):] + ".json").read_text()
        else:
            text = Path(path).read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)


def preset_names():
    return sorted(
        p.name[: -len(".json")] for p in resources.files("cvdqs.presets").iterdir() if p.name.endswith(".json")
    )
