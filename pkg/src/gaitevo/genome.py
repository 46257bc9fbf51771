"""Genome <-> controller parameter mapping.

A genome is ten reals in ``[0, 1]`` describing one leg plus three global
settings.  Gene order::

    0 gain            5 phase shift, joint 1
    1 duty            6 joint-2 swing amplitude target
    2 w or alpha      7 joint-2 stance amplitude target
    3 joint-1 amp     8 joint-2 offset target
    4 joint-1 offset  9 phase shift, joint 2

Gene 2 is the coupling strength in open-loop mode and the attraction
coefficient in closed-loop mode.  Everything else means the same in both.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cpg import LS_WALK, N_LEGS, ControllerParams, GlobalParams, LegParams, Mode
from .errors import GenomeParseError, ParameterError

GENOME_LENGTH = 10

_SHIFT = (2.0 * math.pi * -0.1, 2.0 * math.pi * 0.1)


@dataclass(frozen=True)
class ParamEntry:
    name: str
    lower: float
    upper: float
    evolved: bool
    modes: tuple = (Mode.OPEN, Mode.CLOSED)


PARAM_TABLE = (
    ParamEntry("frequency", 0.25, 0.25, False),
    ParamEntry("gain", 0.2, 0.6, True),
    ParamEntry("duty", 0.2, 0.8, True),
    ParamEntry("attraction", 0.005, 0.1, True, (Mode.CLOSED,)),
    ParamEntry("coupling_strength", 0.1, 2.0, True, (Mode.OPEN,)),
    ParamEntry("j0_target_amp", 0.0, 0.0, False),
    ParamEntry("j0_target_offset", 0.18, 0.18, False),
    ParamEntry("j1_target_amp", 0.0, 0.3, True),
    ParamEntry("j1_target_offset", 0.36, 1.06, True),
    ParamEntry("j1_phase_shift", _SHIFT[0], _SHIFT[1], True),
    ParamEntry("j2_target_swing", 0.0, 0.7, True),
    ParamEntry("j2_target_stance", 0.0, 0.7, True),
    ParamEntry("j2_target_offset", 0.85, 1.55, True),
    ParamEntry("j2_phase_shift", _SHIFT[0], _SHIFT[1], True),
)

_BY_NAME = {e.name: e for e in PARAM_TABLE}

GENE_NAMES = {
    Mode.OPEN: ("gain", "duty", "coupling_strength", "j1_target_amp", "j1_target_offset",
                "j1_phase_shift", "j2_target_swing", "j2_target_stance", "j2_target_offset",
                "j2_phase_shift"),
    Mode.CLOSED: ("gain", "duty", "attraction", "j1_target_amp", "j1_target_offset",
                  "j1_phase_shift", "j2_target_swing", "j2_target_stance", "j2_target_offset",
                  "j2_phase_shift"),
}

#: Short labels for plots and CSV headers.
GENE_SYMBOLS = {
    Mode.OPEN: ("gamma", "d", "w", "mu_r1", "mu_o1", "psi_1", "mu_r21", "mu_r22", "mu_o2", "psi_2"),
    Mode.CLOSED: ("gamma", "d", "alpha", "mu_r1", "mu_o1", "psi_1", "mu_r21", "mu_r22", "mu_o2", "psi_2"),
}


def param_spec(mode) -> tuple:
    """Table entries that apply to ``mode`` (fixed and evolved)."""
    mode = Mode.parse(mode)
    return tuple(e for e in PARAM_TABLE if mode in e.modes)


def scale_gene(g: float, lower: float, upper: float) -> float:
    # min() keeps the map monotone even if lower + (upper-lower) rounds above upper
    if g == 1.0:
        return upper
    return min(upper, lower + g * (upper - lower))


def check_genome(genome) -> np.ndarray:
    arr = np.asarray(genome, dtype=float)
    if arr.shape != (GENOME_LENGTH,):
        raise ParameterError(f"genome must have {GENOME_LENGTH} values, got shape {arr.shape}")
    bad = np.flatnonzero(~((arr >= 0.0) & (arr <= 1.0)))
    if bad.size:
        i = int(bad[0])
        raise ParameterError(f"gene {i} = {arr[i]!r} lies outside [0, 1]")
    return arr


def decode_values(genome, mode) -> dict:
    """Named parameter values for ``genome`` (fixed ones included)."""
    mode = Mode.parse(mode)
    arr = check_genome(genome)
    values = {e.name: e.lower for e in param_spec(mode) if not e.evolved}
    for g, name in zip(arr, GENE_NAMES[mode]):
        e = _BY_NAME[name]
        values[name] = scale_gene(float(g), e.lower, e.upper)
    return values


def decode(genome, mode) -> ControllerParams:
    mode = Mode.parse(mode)
    v = decode_values(genome, mode)
    glob = GlobalParams(
        frequency=v["frequency"],
        gain=v["gain"],
        duty=v["duty"],
        mode=mode,
        coupling_strength=v.get("coupling_strength", 0.0),
        desired_leg_phases=LS_WALK,
        attraction=v.get("attraction", 0.0),
    )
    leg = LegParams(
        target_amp=(v["j0_target_amp"], v["j1_target_amp"]),
        target_offset=(v["j0_target_offset"], v["j1_target_offset"], v["j2_target_offset"]),
        target_swing=v["j2_target_swing"],
        target_stance=v["j2_target_stance"],
        phase_shift_j1=v["j1_phase_shift"],
        phase_shift_j2=v["j2_phase_shift"],
    )
    return ControllerParams(globals=glob, legs=replicate_legs(leg))


def replicate_legs(leg: LegParams) -> tuple:
    """Same parameters for every leg.

    Left/right mirroring lives in the simulator's joint-axis conventions, so
    the copy is verbatim.
    """
    return (leg,) * N_LEGS


# --------------------------------------------------------------------------
# serialisation


def genome_to_json(genome, mode) -> str:
    arr = check_genome(genome)
    return json.dumps({"mode": Mode.parse(mode).value, "genes": [float(x) for x in arr]})


def genome_from_json(text: str):
    """Parse ``{"mode": ..., "genes": [...]}``; returns ``(genes, mode)``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GenomeParseError(
            f"malformed genome JSON at line {exc.lineno}, column {exc.colno} (char {exc.pos}): {exc.msg}"
        ) from exc
    if not isinstance(obj, dict) or "genes" not in obj or "mode" not in obj:
        raise GenomeParseError("genome JSON must be an object with 'mode' and 'genes'")
    genes = obj["genes"]
    if not isinstance(genes, list):
        raise GenomeParseError("'genes' must be a list")
    for i, g in enumerate(genes):
        if isinstance(g, bool) or not isinstance(g, (int, float)):
            raise GenomeParseError(f"gene at position {i} is not a number: {g!r}")
    try:
        mode = Mode.parse(obj["mode"])
        arr = check_genome(genes)
    except ValueError as exc:
        raise GenomeParseError(str(exc)) from exc
    return arr, mode


def load_genome(path):
    with open(path, encoding="utf-8") as fh:
        return genome_from_json(fh.read())


def save_genome(path, genome, mode) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(genome_to_json(genome, mode) + "\n")
