"""Fitness metrics computed from an ``EvalTrace``."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidTraceError, ParameterError

ANGLE_MAX = 0.35
FORWARD = 1


@dataclass(frozen=True)
class FitnessRecord:
    composite: float
    distance: float
    stability: float
    distance_last_half: float
    max_angle: float
    fell: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _check(trace):
    if trace is None or len(trace) == 0:
        raise InvalidTraceError("trace is empty")


def _check_dir(direction):
    if direction not in (-1, 1):
        raise ParameterError(f"direction must be -1 or +1, got {direction!r}")


def distance_fitness(trace, direction: int = FORWARD) -> float:
    """Straight-line displacement between first and last sample, times ``direction``."""
    _check(trace)
    _check_dir(direction)
    return float(direction * np.linalg.norm(trace.position[-1] - trace.position[0]))


def max_up_angle(trace) -> float:
    _check(trace)
    return float(np.max(np.abs(trace.up_angle)))


def stability_from_angle(max_angle: float, angle_max: float = ANGLE_MAX) -> float:
    if angle_max <= 0:
        raise ParameterError(f"angle_max must be positive, got {angle_max!r}")
    if max_angle < angle_max:
        return 1.0 - max_angle / angle_max
    return 0.0


def stability_fitness(trace, angle_max: float = ANGLE_MAX) -> float:
    """``1 - max|tilt| / angle_max`` while the tilt stays below ``angle_max``, else 0."""
    return stability_from_angle(max_up_angle(trace), angle_max)


def composite_fitness(distance: float, stability: float) -> float:
    if not 0.0 <= stability <= 1.0:
        raise ParameterError(f"stability must lie in [0, 1], got {stability!r}")
    return distance * (1.0 + stability)


def distance_last_half(trace, direction: int = FORWARD) -> float:
    """Displacement from the sample nearest half the evaluation time to the end.

    A trace that stopped before reaching the midpoint yields the displacement
    over whatever tail exists (the second half of the recorded samples) and
    emits a ``RuntimeWarning``.
    """
    _check(trace)
    _check_dir(direction)
    half = 0.5 * trace.duration
    if trace.time[-1] < half:
        warnings.warn("trace ends before half the evaluation time; using its own second half",
                      RuntimeWarning, stacklevel=2)
        mid = len(trace) // 2
    else:
        mid = int(np.argmin(np.abs(trace.time - half)))
    return float(direction * np.linalg.norm(trace.position[-1] - trace.position[mid]))


def evaluate_trace(trace, direction: int = FORWARD, angle_max: float = ANGLE_MAX) -> FitnessRecord:
    """All metrics for one trace.  A fall zeroes stability."""
    dist = distance_fitness(trace, direction)
    angle = max_up_angle(trace)
    stab = 0.0 if trace.fell else stability_from_angle(angle, angle_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        last = distance_last_half(trace, direction)
    return FitnessRecord(
        composite=composite_fitness(dist, stab),
        distance=dist,
        stability=stab,
        distance_last_half=last,
        max_angle=angle,
        fell=bool(trace.fell),
    )
