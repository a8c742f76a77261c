"""DDPG agent: replay buffer, OU exploration, actor-critic updates, training loop.

The critic regresses the TD target built from soft-updated target
networks; the actor ascends the critic's action gradient. Both updates
go through L2 augmentation, global-norm clipping, and Adam. Episodes
never terminate early on success; only the step cap or a diverged
airframe ends them, and bootstrapping is kept across truncation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import neuralnet as nn
from .neuralnet import AdamState, Mlp


@dataclass
class Transition:
    """One replay record; the action is the executed (noisy, clamped) one."""

    observation: np.ndarray
    action: np.ndarray
    reward: float
    next_observation: np.ndarray
    truncated: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring with uniform with-replacement sampling."""

    def __init__(self, capacity, obs_dim, act_dim):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.trunc = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.head = 0

    def __len__(self):
        return self.size

    def push(self, transition):
        i = self.head
        self.obs[i] = transition.observation
        self.act[i] = transition.action
        self.rew[i] = transition.reward
        self.next_obs[i] = transition.next_observation
        self.trunc[i] = transition.truncated
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        if self.size < n:
            raise ValueError(f"buffer holds {self.size} < {n} transitions")
        idx = rng.integers(0, self.size, size=n)
        return (self.obs[idx], self.act[idx], self.rew[idx],
                self.next_obs[idx], self.trunc[idx])


class OuNoise:
    """Mean-reverting exploration noise with exponentially decaying variance."""

    def __init__(self, dim, mean=0.0, beta=0.15, sigma=0.1, decay=1e-6, dt=0.01):
        if sigma < 0 or decay < 0:
            raise ValueError("sigma and decay must be >= 0")
        self.dim = dim
        self.mean = mean
        self.beta = beta
        self.sigma = sigma
        self.decay = decay
        self.dt = dt
        self.v = np.full(dim, mean, dtype=float)

    def reset(self):
        self.v = np.full(self.dim, self.mean, dtype=float)

    def step(self, rng):
        # sigma is the per-step noise scale (standard deviation); the
        # stationary spread is sigma / sqrt(2 * beta) in each component.
        self.v = (
            self.v
            + self.beta * (self.mean - self.v) * self.dt
            + self.sigma * rng.standard_normal(self.dim) * math.sqrt(self.dt)
        )
        self.sigma *= 1.0 - self.decay
        return self.v.copy()


@dataclass
class AgentBundle:
    """Actor/critic pair with their targets and optimizer states."""

    actor: Mlp
    critic: Mlp
    target_actor: Mlp
    target_critic: Mlp
    actor_adam: AdamState
    critic_adam: AdamState


def make_agent(hp, obs_dim, act_dim, rng):
    """Fresh random networks; targets start as exact copies.

    Output layers start in +/- 3e-3 so the initial policy commands
    near-zero gains instead of random large ones; the statically
    unstable airframe destroys episodes otherwise.
    """
    actor = nn.init_mlp([obs_dim, hp.hidden1, hp.hidden2, act_dim], "tanh", rng,
                        final_bound=3e-3)
    critic = nn.init_mlp([obs_dim + act_dim, hp.hidden1, hp.hidden2, 1],
                         "identity", rng, final_bound=3e-3)
    return AgentBundle(actor, critic, actor.copy(), critic.copy(),
                       AdamState.for_net(actor), AdamState.for_net(critic))


def select_action(agent, observation, noise=None, rng=None, explore=False):
    """Returns (executed action, raw actor output); exploration clamps to [-1, 1]."""
    raw, _ = nn.forward(agent.actor, np.asarray(observation, dtype=float))
    if not explore:
        return raw, raw
    executed = np.clip(raw + noise.step(rng), -1.0, 1.0)
    return executed, raw


def td_error(agent, obs, act, rew, next_obs, gamma):
    """delta = r + gamma * Q'(s', A'(s')) - Q(s, a); batched."""
    obs = np.atleast_2d(obs)
    act = np.atleast_2d(act)
    next_obs = np.atleast_2d(next_obs)
    next_act, _ = nn.forward(agent.target_actor, next_obs)
    q_next, _ = nn.forward(agent.target_critic,
                           np.hstack([next_obs, next_act]))
    q, _ = nn.forward(agent.critic, np.hstack([obs, act]))
    return np.asarray(rew) + gamma * q_next[:, 0] - q[:, 0]


def critic_update(agent, batch, hp):
    """Minimize mean squared TD error with the target value held fixed."""
    obs, act, rew, next_obs, _ = batch
    n = len(rew)
    next_act, _ = nn.forward(agent.target_actor, next_obs)
    q_next, _ = nn.forward(agent.target_critic, np.hstack([next_obs, next_act]))
    target = rew + hp.gamma * q_next[:, 0]
    q, cache = nn.forward(agent.critic, np.hstack([obs, act]))
    delta = target - q[:, 0]
    # d/dq of (1/N) sum delta^2
    grad_out = (-2.0 / n * delta)[:, None]
    grads, _ = nn.backward(agent.critic, cache, grad_out)
    nn.adam_step(agent.critic, agent.critic_adam, grads,
                 hp.critic_lr, l2=hp.l2, clip=hp.grad_clip)
    return float(np.mean(delta * delta))


def actor_update(agent, batch, hp):
    """Ascend the critic's action gradient averaged over the minibatch."""
    obs = batch[0]
    n = obs.shape[0]
    act, actor_cache = nn.forward(agent.actor, obs)
    _, critic_cache = nn.forward(agent.critic, np.hstack([obs, act]))
    ones = np.full((n, 1), 1.0 / n)
    _, d_input = nn.backward(agent.critic, critic_cache, ones)
    d_action = d_input[:, obs.shape[1]:]
    # Adam minimizes, so feed the gradient of -mean(Q)
    grads, _ = nn.backward(agent.actor, actor_cache, -d_action)
    nn.adam_step(agent.actor, agent.actor_adam, grads,
                 hp.actor_lr, l2=hp.l2, clip=hp.grad_clip)


@dataclass
class CurveRow:
    episode: int
    steps: int
    episode_reward: float
    avg_reward_30: float
    sigma: float


@dataclass
class TrainResult:
    curve: list
    best_episode: int
    best_episode_reward: float
    best_actor: Mlp
    final_agent: AgentBundle


class TrainingDiverged(RuntimeError):
    """A network update produced a non-finite loss."""


def train(env, agent, hp, rng_noise, rng_sample, rng_scenario,
          episodes=None, log=None):
    """Run the episodic training loop; returns a TrainResult.

    Updates start once the buffer holds one minibatch. The critic is
    updated every step; the actor (and its target) joins in after
    `hp.warmup_steps` environment steps, once the critic's value
    surface reflects real data -- moving the policy against a freshly
    initialised critic saturates it within a few episodes on this
    statically unstable plant. Target networks are soft-updated with
    every update of their source. The curve records per-episode reward
    and its trailing 30-episode mean.
    """
    episodes = hp.max_episodes if episodes is None else episodes
    buffer = ReplayBuffer(hp.buffer_size, env.observation_dim, env.action_dim)
    noise = OuNoise(env.action_dim, hp.noise_mean, hp.noise_beta,
                    hp.noise_sigma, hp.noise_decay, hp.ts)
    curve = []
    recent = []
    best_reward = -math.inf
    best_episode = -1
    best_actor = agent.actor.copy()
    total_steps = 0

    for episode in range(episodes):
        obs = env.reset(rng_scenario)
        noise.reset()
        episode_reward = 0.0
        steps = 0
        for _ in range(hp.max_steps):
            action, _ = select_action(agent, obs, noise, rng_noise, explore=True)
            next_obs, r, done, info = env.step(action)
            buffer.push(Transition(np.asarray(obs), action, r,
                                   np.asarray(next_obs), info["truncated"]))
            total_steps += 1
            if len(buffer) >= hp.batch_size:
                batch = buffer.sample(hp.batch_size, rng_sample)
                loss = critic_update(agent, batch, hp)
                if not math.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite critic loss at episode {episode}")
                nn.soft_update(agent.target_critic, agent.critic, hp.tau)
                if total_steps > hp.warmup_steps:
                    actor_update(agent, batch, hp)
                    nn.soft_update(agent.target_actor, agent.actor, hp.tau)
            episode_reward += r
            steps += 1
            obs = next_obs
            if done:
                break
        recent.append(episode_reward)
        if len(recent) > 30:
            recent.pop(0)
        row = CurveRow(episode, steps, episode_reward,
                       sum(recent) / len(recent), noise.sigma)
        curve.append(row)
        if episode_reward > best_reward:
            best_reward = episode_reward
            best_episode = episode
            best_actor = agent.actor.copy()
        if log is not None:
            log(row)
    return TrainResult(curve, best_episode, best_reward, best_actor, agent)


AGENT_SECTIONS = ("actor", "critic", "target_actor", "target_critic")


def save_agent(path, agent):
    """Four networks concatenated with section headers."""
    with open(path, "w") as f:
        for name in AGENT_SECTIONS:
            f.write(f"[{name}]\n")
            nn.write_mlp(f, getattr(agent, name))


def load_agent(path):
    nets = {}
    with open(path) as f:
        line_no = 0
        while True:
            line = f.readline()
            line_no += 1
            if not line:
                break
            line = line.strip()
            if not line:
                continue
            if not (line.startswith("[") and line.endswith("]")):
                raise ValueError(f"{path}:{line_no}: expected section header, "
                                 f"got {line!r}")
            name = line[1:-1]
            if name not in AGENT_SECTIONS:
                raise ValueError(f"{path}:{line_no}: unknown section {name!r}")
            try:
                nets[name] = nn.read_mlp(f)
            except ValueError as exc:
                raise ValueError(f"{path}: section {name}: {exc}") from exc
    missing = [s for s in AGENT_SECTIONS if s not in nets]
    if missing:
        raise ValueError(f"{path}: missing sections {missing}")
    actor = nets["actor"]
    critic = nets["critic"]
    return AgentBundle(actor, critic, nets["target_actor"], nets["target_critic"],
                       AdamState.for_net(actor), AdamState.for_net(critic))
