"""MDP wrapper around the airframe: episodes, normalization, shaped reward.

An episode starts from a uniformly sampled (alpha, Mach, height) point
in the flight envelope and tracks a step acceleration command. The
agent either outputs the four autopilot gains (normalized to [-1, 1])
or, in the learning-from-scratch ablation, the fin command directly.
The reward penalizes tracking error against the shaped reference and
fin deflection rate.
"""

import math
from dataclasses import dataclass, field, fields

from . import airframe, autopilot
from .airframe import (
    ActuatorParams,
    AeroCoefficientsTable,
    AtmosphereError,
    DivergenceError,
    DivergenceLimits,
    PhysicalParams,
    SystemState,
)
from .neuralnet import scale_actor_output


@dataclass
class HyperParameters:
    """Every tunable constant of the training setup, loadable from config."""

    max_steps: int = 200
    max_episodes: int = 1000
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    l2: float = 6e-3
    grad_clip: float = 1.0
    gamma: float = 0.99
    ts: float = 0.01
    buffer_size: int = 500_000
    batch_size: int = 64
    noise_mean: float = 0.0
    noise_sigma: float = 0.1          # initial scale of the exploration noise
    warmup_steps: int = 15000         # critic-only steps before actor updates
    noise_decay: float = 1e-6
    noise_beta: float = 0.15          # mean attraction constant
    tau: float = 0.001
    # reward shaping
    reward_k_a: float = 1.0
    reward_k_delta: float = 0.1
    az_max: float = 100.0
    delta_dot_max: float = 1.5        # rad/s
    # observation normalization constants
    alpha_norm: float = math.radians(20.0)
    mach_norm: float = 4.0
    height_norm: float = 14000.0
    # actor output scaling (K_DC, K_A, K_I, K_g)
    k_dc_scale: float = 3.0
    k_a_scale: float = 0.05
    k_i_scale: float = 100.0
    k_g_scale: float = 2.0
    # network shapes
    hidden1: int = 64
    hidden2: int = 64
    # direct fin command scale for the from-scratch ablation
    fin_command_scale: float = math.pi / 6.0

    def gain_scales(self):
        return (self.k_dc_scale, self.k_a_scale, self.k_i_scale, self.k_g_scale)

    def validate(self):
        positive = (
            "max_steps actor_lr critic_lr grad_clip ts buffer_size batch_size "
            "noise_beta tau reward_k_a reward_k_delta az_max delta_dot_max "
            "alpha_norm mach_norm height_norm k_dc_scale k_a_scale k_i_scale "
            "k_g_scale hidden1 hidden2 fin_command_scale"
        ).split()
        for name in positive:
            if not (getattr(self, name) > 0):
                raise ValueError(f"hyperparameter {name} must be positive")
        if self.max_episodes < 0:
            raise ValueError("max_episodes must be >= 0")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("tau must be in (0, 1]")
        if self.l2 < 0 or self.noise_sigma < 0 or self.noise_decay < 0:
            raise ValueError("l2, noise_sigma and noise_decay must be >= 0")
        return self

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class Envelope:
    """Flight envelope sampled at episode start."""

    alpha_min: float = -math.radians(20.0)
    alpha_max: float = math.radians(20.0)
    height_min: float = 6000.0
    height_max: float = 14000.0
    mach_min: float = 2.0
    mach_max: float = 4.0

    def validate(self):
        if not (self.alpha_min < self.alpha_max
                and self.height_min < self.height_max
                and self.mach_min < self.mach_max):
            raise ValueError("envelope axes must satisfy min < max")
        return self


# Shaped command filter: (-0.0363 s + 1) / (0.009 s^2 + 0.33 s + 1).
# The right-half-plane zero reproduces the tail-control undershoot.
REFERENCE_NUM = (-0.0363, 1.0)
REFERENCE_DEN = (0.009, 0.33, 1.0)


@dataclass
class ReferenceModelState:
    """Controllable-canonical two-state realization of the command filter."""

    x1: float = 0.0
    x2: float = 0.0

    def output(self):
        # realization: A = [[0, 1], [-a0/a2, -a1/a2]], B = [0, 1/a2], C = [b0, b1]
        return REFERENCE_NUM[1] * self.x1 + REFERENCE_NUM[0] * self.x2


def reference_step(ref, a_zc, dt):
    """Advance the filter by dt with RK4; returns (shaped output, new state)."""
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    a2, a1, a0 = REFERENCE_DEN

    def deriv(x1, x2):
        return x2, (-a0 * x1 - a1 * x2 + a_zc) / a2

    x1, x2 = ref.x1, ref.x2
    k1 = deriv(x1, x2)
    k2 = deriv(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1])
    k3 = deriv(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1])
    k4 = deriv(x1 + dt * k3[0], x2 + dt * k3[1])
    new = ReferenceModelState(
        x1 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        x2 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
    )
    return new.output(), new


def reward(a_z, a_zc_shaped, delta_dot, hp):
    """Quadratic tracking-error / fin-rate tradeoff; always <= 0."""
    err = (a_z - a_zc_shaped) / hp.az_max
    rate = delta_dot / hp.delta_dot_max
    return -hp.reward_k_a * err * err - hp.reward_k_delta * rate * rate


def observe(state, hp, normalize=True):
    """Agent observation (alpha, M, h), normalized unless ablated."""
    if normalize:
        return (state.alpha / hp.alpha_norm,
                state.mach / hp.mach_norm,
                state.height / hp.height_norm)
    return (state.alpha, state.mach, state.height)


class FlightEnv:
    """Episodic simulation environment for training and evaluation."""

    def __init__(self, hp=None, envelope=None, command=100.0, shaped=True,
                 action_mode="gains", normalize=True,
                 params=None, table=None, actuator=None, limits=None):
        if action_mode not in ("gains", "direct_fin"):
            raise ValueError(f"unknown action_mode {action_mode!r}")
        self.hp = (hp or HyperParameters()).validate()
        self.envelope = (envelope or Envelope()).validate()
        self.command = command
        self.shaped = shaped
        self.action_mode = action_mode
        self.normalize = normalize
        self.params = params or PhysicalParams()
        self.table = table or AeroCoefficientsTable()
        self.actuator = actuator or ActuatorParams()
        self.limits = limits or DivergenceLimits()
        self.state = None
        self.ctrl = autopilot.ControllerState()
        self.ref = ReferenceModelState()
        self.step_count = 0

    @property
    def observation_dim(self):
        return 3

    @property
    def action_dim(self):
        return 4 if self.action_mode == "gains" else 1

    def reset(self, rng=None, initial=None):
        """Start an episode; initial=(alpha, mach, height) overrides sampling."""
        if initial is not None:
            alpha, mach, height = initial
        else:
            env = self.envelope
            alpha = rng.uniform(env.alpha_min, env.alpha_max)
            mach = rng.uniform(env.mach_min, env.mach_max)
            height = rng.uniform(env.height_min, env.height_max)
        self.state = SystemState(alpha, 0.0, alpha, mach, height, 0.0, 0.0)
        self.ctrl = autopilot.ControllerState()
        self.ref = ReferenceModelState()
        self.step_count = 0
        return observe(self.state, self.hp, self.normalize)

    def _delta_command(self, action):
        if self.action_mode == "gains":
            gains = autopilot.GainSet.from_array(
                scale_actor_output(action, self.hp.gain_scales()))
            a_z = airframe.lateral_acceleration(self.state, self.params, self.table)
            delta_c, self.ctrl = autopilot.three_loop_command(
                gains, self.command, a_z, self.state.q, self.ctrl, self.hp.ts)
            return delta_c, gains
        delta_c = float(action[0]) * self.hp.fin_command_scale
        return delta_c, None

    def step(self, action):
        """Advance one control period; returns (obs, reward, done, info)."""
        if self.state is None:
            raise RuntimeError("step() before reset()")
        delta_c, gains = self._delta_command(action)
        diverged = False
        try:
            new_state = airframe.integrate_step(
                self.state, delta_c, self.hp.ts,
                self.params, self.table, self.actuator)
        except (DivergenceError, AtmosphereError):
            new_state = self.state  # keep the last finite state for the reward
            diverged = True
        shaped_cmd, self.ref = reference_step(self.ref, self.command, self.hp.ts)
        target = shaped_cmd if self.shaped else self.command
        a_z = airframe.lateral_acceleration(new_state, self.params, self.table)
        r = reward(a_z, target, new_state.delta_dot, self.hp)

        self.state = new_state
        self.step_count += 1
        diverged = diverged or self.limits.exceeded(new_state)
        done = diverged or self.step_count >= self.hp.max_steps
        info = {
            "truncated": done,
            "diverged": diverged,
            "t": self.step_count * self.hp.ts,
            "a_zc": self.command,
            "a_zc_shaped": shaped_cmd,
            "a_z": a_z,
            "delta_c": delta_c,
            "gains": gains,
            "state": new_state,
        }
        return observe(new_state, self.hp, self.normalize), r, done, info
