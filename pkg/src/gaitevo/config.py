"""INI-style configuration for the simulator and experiments.

Example::

    [robot]
    mass = 5.0
    inertia = 0.15, 0.08, 0.2
    hips = -0.1, 0.2, 0.0; 0.1, 0.2, 0.0; -0.1, -0.2, 0.0; 0.1, -0.2, 0.0
    segments = 0.1, 0.18, 0.18

    [ground]
    stiffness = 5000

    [evaluation]
    duration = 20

Vectors are comma separated, matrices use ``;`` between rows.  Missing keys
fall back to the defaults.  Contact is stable at ``dt = 2 ms`` as long as
``stiffness * dt**2 / mass`` stays well below 1 and
``4 * tangential_gain * dt / m_eff`` below 2, where ``m_eff`` is the
effective mass at a foot (a fraction of the body mass for tall legs).
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigurationError
from .fitness import ANGLE_MAX, FORWARD
from .physics import GroundModel, RobotConfig
from .sim import DT, PHASE_PERTURBATION, SAMPLE_RATE


@dataclass(frozen=True)
class EvaluationSettings:
    duration: float = 20.0
    dt: float = DT
    sample_rate: float = SAMPLE_RATE
    phase_perturbation: float = PHASE_PERTURBATION
    start_at_target: bool = False
    direction: int = FORWARD
    angle_max: float = ANGLE_MAX


@dataclass(frozen=True)
class SimSettings:
    robot: RobotConfig = field(default_factory=RobotConfig)
    ground: GroundModel = field(default_factory=GroundModel)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)

    def as_dict(self) -> dict:
        return {"robot": asdict(self.robot), "ground": asdict(self.ground),
                "evaluation": asdict(self.evaluation)}

    def digest(self) -> str:
        return config_hash(self.as_dict())


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_value(text: str, default):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        if default and isinstance(default[0], tuple):
            return tuple(tuple(float(v) for v in row.split(",")) for row in text.split(";") if row.strip())
        return tuple(float(v) for v in text.split(","))
    return text


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(", ".join(repr(float(v)) for v in row) for row in value)
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section(parser, name, cls, source):
    if not parser.has_section(name):
        return cls()
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    kwargs = {}
    for key, raw in parser.items(name):
        if key not in known:
            raise ConfigurationError(f"{source}: unknown key {key!r} in [{name}]")
        try:
            kwargs[key] = _parse_value(raw, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigurationError(f"{source}: bad value for [{name}] {key}: {exc}") from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{source}: invalid [{name}] section: {exc}") from exc


def parse_sim_settings(text: str, source: str = "<string>") -> SimSettings:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    return SimSettings(
        robot=_section(parser, "robot", RobotConfig, source),
        ground=_section(parser, "ground", GroundModel, source),
        evaluation=_section(parser, "evaluation", EvaluationSettings, source),
    )


def load_sim_settings(path=None) -> SimSettings:
    if path is None:
        return SimSettings()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_sim_settings(text, source=str(path))


def format_sim_settings(settings: SimSettings) -> str:
    parser = configparser.ConfigParser()
    for name, obj in (("robot", settings.robot), ("ground", settings.ground),
                      ("evaluation", settings.evaluation)):
        parser[name] = {f.name: _format_value(getattr(obj, f.name)) for f in fields(obj)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_sim_settings(settings: SimSettings, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sim_settings(settings))
