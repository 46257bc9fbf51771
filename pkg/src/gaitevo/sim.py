"""Controller-in-the-loop evaluation on the quadruped surrogate."""

from __future__ import annotations

import math

import numpy as np

from . import kernel
from .cpg import TWO_PI, ControllerParams, CpgNetwork, Mode
from .errors import ParameterError, SimulationDiverged
from .physics import GroundModel, RobotConfig, servo_gain, standing_height
from .trace import EvalTrace

DT = 0.002
SAMPLE_RATE = 100.0
PHASE_PERTURBATION = 0.05


def initial_phases(params: ControllerParams, seed, perturbation: float = PHASE_PERTURBATION) -> np.ndarray:
    """Seeded starting phases.

    Open loop starts on the desired gait pattern, closed loop with all legs
    in phase; both get a uniform jitter in ``[-perturbation, perturbation]``.
    """
    g = params.globals
    if g.mode is Mode.OPEN:
        base = TWO_PI * np.asarray(g.desired_leg_phases, dtype=float)
    else:
        base = np.zeros(4)
    if perturbation:
        rng = np.random.default_rng(seed)
        base = base + rng.uniform(-perturbation, perturbation, size=4)
    return base


def pack_body(config: RobotConfig, ground: GroundModel, dt: float, fall_height: float) -> np.ndarray:
    l0, l1, l2 = config.segments
    ix, iy, iz = config.inertia
    return np.array([
        config.mass, ix, iy, iz, l0, l1, l2, servo_gain(config.servo_tau, dt),
        ground.stiffness, ground.damping, ground.friction, ground.tangential_gain,
        config.gravity, fall_height,
    ], dtype=float)


def pack_controller(params: ControllerParams, dt: float):
    g = params.globals
    glob = np.array([g.frequency, g.gain, g.duty, 1.0 if g.mode is Mode.CLOSED else 0.0,
                     g.coupling_strength, g.attraction, dt], dtype=float)
    leg_mu = np.array([[p.target_amp[0], p.target_amp[1], p.target_offset[0], p.target_offset[1],
                        p.target_offset[2], p.target_swing, p.target_stance] for p in params.legs])
    shifts = np.array([[p.phase_shift_j1, p.phase_shift_j2] for p in params.legs])
    return glob, np.asarray(g.desired_leg_phases, dtype=float), leg_mu, shifts


def pack_network(net: CpgNetwork) -> np.ndarray:
    return np.column_stack([net.base_phase, net.amplitude, net.offset, net.swing_amp, net.stance_amp])


def run_evaluation(params: ControllerParams, config: RobotConfig | None = None,
                   ground: GroundModel | None = None, duration: float = 20.0, seed=0, *,
                   dt: float = DT, sample_rate: float = SAMPLE_RATE, phases=None,
                   perturbation: float = PHASE_PERTURBATION, start_at_target: bool = False,
                   backend: str | None = None) -> EvalTrace:
    """Simulate ``params`` for ``duration`` seconds.

    ``seed`` only affects the starting phase jitter; everything else is
    deterministic.  Pass ``phases`` to set the starting joint-0 phases
    explicitly (no jitter is then applied).

    Raises
    ------
    SimulationDiverged
        If the physics produced a non-finite state; ``.step`` gives the index.
    """
    if duration <= 0:
        raise ParameterError(f"duration must be positive, got {duration!r}")
    config = config or RobotConfig()
    ground = ground or GroundModel()

    base = np.asarray(phases, dtype=float) if phases is not None else initial_phases(params, seed, perturbation)
    net = CpgNetwork.initial(params, base, start_at_target=start_at_target)
    lims = np.asarray(config.joint_limits, dtype=float)
    joints = np.clip(net.joint_targets(), lims[:, 0], lims[:, 1])

    height = standing_height(joints, config)
    if ground.stiffness > 0:
        height -= config.mass * config.gravity / (4.0 * ground.stiffness)
    fall_height = config.fall_height_fraction * height
    state0 = np.array([0.0, 0.0, height, 1.0, 0.0, 0.0, 0.0] + [0.0] * 6)

    n_steps = int(round(duration / dt))
    sample_every = max(1, int(round(1.0 / (sample_rate * dt))))
    glob, desired, leg_mu, shifts = pack_controller(params, dt)
    rows, fell, diverged = kernel.simulate(
        glob, desired, leg_mu, shifts, pack_network(net), pack_body(config, ground, dt, fall_height),
        np.asarray(config.hips, dtype=float), np.asarray(config.sides, dtype=float), lims,
        state0, joints, n_steps, sample_every, backend=backend,
    )
    if diverged >= 0:
        raise SimulationDiverged(diverged)
    return EvalTrace.from_rows(rows, duration=float(duration), fell=bool(fell), dt=dt,
                               sample_period=sample_every * dt)


def free_body_rollout(state, forces, points_body, config: RobotConfig, dt: float, n_steps: int,
                      backend: str | None = None) -> np.ndarray:
    """Integrate the bare body under constant body-fixed forces (testing aid)."""
    body = pack_body(config, GroundModel(), dt, 0.0)
    return np.asarray(kernel.body_rollout(np.asarray(state, dtype=float), np.asarray(forces, dtype=float),
                                          np.asarray(points_body, dtype=float), body, dt, int(n_steps),
                                          backend=backend))
