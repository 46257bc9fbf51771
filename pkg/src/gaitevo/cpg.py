"""Central pattern generator for a four-legged, three-joint-per-leg robot.

Each leg carries one oscillator per joint.  Amplitudes and offsets relax
towards their targets at rate ``gain``; the joint-0 phase of every leg is
integrated either with all-to-all sinusoidal coupling (open loop) or with
local ground-reaction-force feedback (closed loop).  Joint-1 and joint-2
phases are tied to joint 0 by fixed shifts.

All integration is explicit Euler with a fixed step.  Phases are unbounded
accumulators; ``mod 2*pi`` is applied where a phase is read.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ParameterError, SensorError

TWO_PI = 2.0 * math.pi

N_LEGS = 4
N_JOINTS = 3
LEG_NAMES = ("front_left", "front_right", "back_left", "back_right")

#: Lateral-sequence walk, as fractions of a cycle, in ``LEG_NAMES`` order.
LS_WALK = (0.0, 0.5, 0.25, 0.75)


class Mode(str, enum.Enum):
    OPEN = "open"
    CLOSED = "closed"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"open": cls.OPEN, "openloop": cls.OPEN,
                   "closed": cls.CLOSED, "closedloop": cls.CLOSED}
        try:
            return aliases[key]
        except KeyError:
            raise ConfigurationError(f"unknown controller mode {value!r}") from None


def wrap_phase(phi: float) -> float:
    """Reduce ``phi`` into ``[0, 2*pi)``."""
    p = phi % TWO_PI
    # tiny negative inputs round up to exactly 2*pi
    if p >= TWO_PI:
        p = 0.0
    return p


def _check_duty(d: float) -> None:
    if not 0.0 < d < 1.0:
        raise ParameterError(f"duty must lie strictly inside (0, 1), got {d!r}")


def phase_warp(phi: float, d: float) -> float:
    """Piecewise-linear phase filter.

    The first ``d`` fraction of the cycle is stretched onto ``[0, pi)`` and the
    remainder onto ``[pi, 2*pi)``.  ``d = 0.5`` is the identity on the wrapped
    phase.
    """
    _check_duty(d)
    p = wrap_phase(phi)
    knee = TWO_PI * d
    if p < knee:
        out = p / (2.0 * d)
    else:
        # written relative to the knee so that the knee maps to pi exactly
        out = math.pi + (p - knee) / (2.0 * (1.0 - d))
    if out >= TWO_PI:
        out = math.nextafter(TWO_PI, 0.0)
    return out


def swing_stance_shape(phi_n: float) -> float:
    """Smooth 0 -> 1 -> 0 bump over a normalised half-cycle ``phi_n`` in [0, 1)."""
    if phi_n < 0.5:
        return -16.0 * phi_n ** 3 + 12.0 * phi_n ** 2
    s = phi_n - 0.5
    return 16.0 * s ** 3 - 12.0 * s ** 2 + 1.0


def normalized_half_phase(phi: float, d: float) -> float:
    """Position inside the current half of the warped cycle, in ``[0, 1)``."""
    return 2.0 * ((phase_warp(phi, d) / TWO_PI) % 0.5)


def swing_stance_wave(phi: float, d: float) -> float:
    return swing_stance_shape(normalized_half_phase(phi, d))


def relax_step(x: float, mu: float, gamma: float, dt: float) -> float:
    """One Euler step of ``dx/dt = gamma * (mu - x)``."""
    if gamma <= 0.0:
        raise ParameterError(f"gain must be positive, got {gamma!r}")
    if dt <= 0.0:
        raise ParameterError(f"time step must be positive, got {dt!r}")
    return x + dt * (gamma * (mu - x))


def pairwise_targets(desired) -> np.ndarray:
    """Matrix of desired phase differences ``2*pi*(frac_j - frac_i)``."""
    frac = np.asarray(desired, dtype=float)
    return TWO_PI * (frac[None, :] - frac[:, None])


def phase_step_open(phases, omega: float, w: float, desired, dt: float):
    """Advance base phases under all-to-all coupling towards ``desired`` offsets.

    ``phases`` may carry leading batch dimensions; the last axis indexes legs.
    ``w`` may be an array that broadcasts against those batch dimensions.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0.0):
        raise ParameterError(f"coupling strength must be non-negative, got {w!r}")
    phases = np.asarray(phases, dtype=float)
    # phi_j - phi_i - target_ij = psi_j - psi_i with psi = phi - 2*pi*frac, so
    # sum_j sin(psi_j - psi_i) = cos(psi_i) * S - sin(psi_i) * C in O(N)
    psi = phases - TWO_PI * np.asarray(desired, dtype=float)
    s, c = np.sin(psi), np.cos(psi)
    coupling = c * s.sum(axis=-1, keepdims=True) - s * c.sum(axis=-1, keepdims=True)
    return phases + dt * (TWO_PI * omega + w[..., None] * coupling)


def phase_step_closed(phase: float, omega: float, alpha: float, grf: float, dt: float) -> float:
    """Advance one leg's base phase with force feedback.

    A loaded foot slows its oscillator near ``phase = 0`` and speeds it near
    ``phase = pi``.
    """
    if alpha < 0.0:
        raise ParameterError(f"attraction must be non-negative, got {alpha!r}")
    if grf < 0.0:
        raise SensorError(f"ground reaction force magnitude must be >= 0, got {grf!r}")
    return phase + dt * (TWO_PI * omega - alpha * grf * math.cos(phase))


# --------------------------------------------------------------------------
# parameter and state containers


@dataclass(frozen=True)
class LegParams:
    """Per-leg oscillator targets.

    ``target_amp`` and ``target_offset`` are indexed by joint.  Joint 2 has no
    single amplitude: it uses ``target_swing`` while the warped phase is in its
    first half and ``target_stance`` in the second.
    """

    target_amp: tuple = (0.0, 0.0)
    target_offset: tuple = (0.18, 0.71, 1.2)
    target_swing: float = 0.35
    target_stance: float = 0.35
    phase_shift_j1: float = 0.0
    phase_shift_j2: float = 0.0


@dataclass(frozen=True)
class GlobalParams:
    frequency: float = 0.25
    gain: float = 0.4
    duty: float = 0.5
    mode: Mode = Mode.OPEN
    coupling_strength: float = 1.0
    desired_leg_phases: tuple = LS_WALK
    attraction: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        _check_duty(self.duty)
        if self.gain <= 0.0:
            raise ParameterError(f"gain must be positive, got {self.gain!r}")
        if len(self.desired_leg_phases) != N_LEGS:
            raise ParameterError("desired_leg_phases needs one entry per leg")


@dataclass(frozen=True)
class ControllerParams:
    globals: GlobalParams
    legs: tuple  # N_LEGS x LegParams

    def __post_init__(self):
        if len(self.legs) != N_LEGS:
            raise ParameterError(f"expected {N_LEGS} legs, got {len(self.legs)}")

    @property
    def mode(self) -> Mode:
        return self.globals.mode


@dataclass(frozen=True)
class OscillatorState:
    phase: float
    amplitude: float
    offset: float
    swing_amp: float = 0.0
    stance_amp: float = 0.0


def joint_targets(leg, duty: float) -> tuple:
    """Joint-angle outputs for one leg given its three ``OscillatorState``s."""
    j0, j1, j2 = leg
    th0 = j0.amplitude * math.cos(phase_warp(j0.phase, duty)) + j0.offset
    th1 = j1.amplitude * math.cos(phase_warp(j1.phase, duty)) + j1.offset
    warped = phase_warp(j2.phase, duty)
    a2 = j2.swing_amp if warped < math.pi else j2.stance_amp
    th2 = a2 * swing_stance_shape(2.0 * ((warped / TWO_PI) % 0.5)) + j2.offset
    return th0, th1, th2


def _leg_targets(params: ControllerParams):
    mu_amp = np.array([[p.target_amp[0], p.target_amp[1]] for p in params.legs])
    mu_off = np.array([list(p.target_offset) for p in params.legs])
    mu_swing = np.array([p.target_swing for p in params.legs])
    mu_stance = np.array([p.target_stance for p in params.legs])
    shifts = np.array([[p.phase_shift_j1, p.phase_shift_j2] for p in params.legs])
    return mu_amp, mu_off, mu_swing, mu_stance, shifts


@dataclass(frozen=True)
class CpgNetwork:
    """Complete oscillator network state.

    ``base_phase`` holds the joint-0 phase per leg; the other joints' phases
    are derived from it.  ``amplitude`` is ``(4, 2)`` for joints 0 and 1,
    ``offset`` is ``(4, 3)``.
    """

    params: ControllerParams
    base_phase: np.ndarray
    amplitude: np.ndarray
    offset: np.ndarray
    swing_amp: np.ndarray
    stance_amp: np.ndarray
    time: float = 0.0

    @classmethod
    def initial(cls, params: ControllerParams, base_phase=None, *, start_at_target=False):
        """Create a network at rest.

        Offsets start at their targets; amplitudes start at zero and grow at
        the rate set by ``gain`` unless ``start_at_target`` is set.
        """
        mu_amp, mu_off, mu_swing, mu_stance, _ = _leg_targets(params)
        if base_phase is None:
            g = params.globals
            if g.mode is Mode.OPEN:
                base_phase = TWO_PI * np.asarray(g.desired_leg_phases, dtype=float)
            else:
                base_phase = np.zeros(N_LEGS)
        scale = 1.0 if start_at_target else 0.0
        return cls(
            params=params,
            base_phase=np.array(base_phase, dtype=float),
            amplitude=mu_amp * scale,
            offset=mu_off.copy(),
            swing_amp=mu_swing * scale,
            stance_amp=mu_stance * scale,
        )

    def phases(self) -> np.ndarray:
        """``(4, 3)`` array of joint phases."""
        shifts = np.array([[0.0, p.phase_shift_j1, p.phase_shift_j2] for p in self.params.legs])
        return self.base_phase[:, None] + shifts

    def oscillator(self, leg: int, joint: int) -> OscillatorState:
        ph = self.phases()[leg, joint]
        if joint == 2:
            return OscillatorState(ph, 0.0, self.offset[leg, 2],
                                   self.swing_amp[leg], self.stance_amp[leg])
        return OscillatorState(ph, self.amplitude[leg, joint], self.offset[leg, joint])

    def leg(self, leg: int) -> tuple:
        return tuple(self.oscillator(leg, j) for j in range(N_JOINTS))

    def joint_targets(self) -> np.ndarray:
        """``(4, 3)`` array of commanded joint angles."""
        duty = self.params.globals.duty
        return np.array([joint_targets(self.leg(i), duty) for i in range(N_LEGS)])


def network_step(net: CpgNetwork, grf=None, dt: float = 0.002) -> CpgNetwork:
    """Advance the whole network by ``dt``.

    ``grf`` (four force magnitudes) must be given in closed-loop mode and
    omitted in open-loop mode.
    """
    g = net.params.globals
    if g.mode is Mode.CLOSED and grf is None:
        raise ConfigurationError("closed-loop network requires ground reaction forces")
    if g.mode is Mode.OPEN and grf is not None:
        raise ConfigurationError("open-loop network does not take ground reaction forces")
    if dt < 0.0:
        raise ParameterError(f"time step must be non-negative, got {dt!r}")
    if dt == 0.0:
        return net

    if g.mode is Mode.OPEN:
        new_phase = phase_step_open(net.base_phase, g.frequency, g.coupling_strength,
                                    g.desired_leg_phases, dt)
    else:
        grf = np.asarray(grf, dtype=float)
        if grf.shape != (N_LEGS,):
            raise ConfigurationError(f"expected {N_LEGS} force magnitudes, got shape {grf.shape}")
        new_phase = np.array([
            phase_step_closed(float(net.base_phase[i]), g.frequency, g.attraction, float(grf[i]), dt)
            for i in range(N_LEGS)
        ])

    mu_amp, mu_off, mu_swing, mu_stance, _ = _leg_targets(net.params)
    k = g.gain
    return replace(
        net,
        base_phase=new_phase,
        amplitude=net.amplitude + dt * (k * (mu_amp - net.amplitude)),
        offset=net.offset + dt * (k * (mu_off - net.offset)),
        swing_amp=net.swing_amp + dt * (k * (mu_swing - net.swing_amp)),
        stance_amp=net.stance_amp + dt * (k * (mu_stance - net.stance_amp)),
        time=net.time + dt,
    )


def circular_spread(phases) -> float:
    """``1 - |mean resultant vector|`` of the given phases."""
    phases = np.asarray(phases, dtype=float)
    return float(1.0 - abs(np.mean(np.exp(1j * phases))))
