"""Multi-agent hybrid soft actor-critic with a monotonic QMIX-style mixer.

Each SU owns an actor (discrete arm + squashed-Gaussian power) and two
D-headed critics that see the local observation and the chosen power; the
discrete arm selects which head is the taken value. Two hypernetwork mixers,
conditioned on the joint observation, combine the per-agent values into a
joint value for each critic set. Training is centralised over a replay
buffer; acting only needs each agent's own observation.

Continuous log-densities used for entropies are taken on the unit action
``tanh(u)`` in ``(-1, 1)`` so that temperature targets do not depend on the
power scale.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .env import Action, CRNEnv
from .metrics import MetricsLog
from .nn import (
    LOG_SQRT_2PI,
    Adam,
    DenseNet,
    DivergenceError,
    categorical_from_logits,
    load_net,
    log1m_tanh_sq,
    log_softmax,
    save_net,
)


@dataclass
class TrainConfig:
    hidden: tuple[int, ...] = (256, 128, 64)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    alpha_lr: float = 3e-3
    gamma: float = 0.4
    minibatch: int = 64
    buffer_capacity: int = 30_000
    policy_frequency: int = 10
    polyak: float = 0.005
    warmup: int = 1000
    total_timesteps: int = 60_000
    target_entropy_d: float | None = None  # None -> 0.01 * n_sensed
    target_entropy_c: float = 0.0
    init_alpha_d: float = 0.1
    init_alpha_c: float = 0.1
    mixer_embed: int = 32
    log_std_min: float = -20.0
    log_std_max: float = 2.0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        checks = {
            "actor_lr": self.actor_lr > 0,
            "critic_lr": self.critic_lr > 0,
            "alpha_lr": self.alpha_lr > 0,
            "gamma": 0 <= self.gamma < 1,
            "minibatch": self.minibatch >= 1,
            "buffer_capacity": self.buffer_capacity >= self.minibatch,
            "policy_frequency": self.policy_frequency >= 1,
            "polyak": 0 < self.polyak <= 1,
            "warmup": self.warmup >= 0,
            "total_timesteps": self.total_timesteps >= 0,
            "init_alpha_d": self.init_alpha_d > 0,
            "init_alpha_c": self.init_alpha_c > 0,
            "mixer_embed": self.mixer_embed >= 1,
            "log_std_min": self.log_std_min < self.log_std_max,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid training settings: {bad}")


# -- replay ---------------------------------------------------------------------


@dataclass
class Batch:
    obs: np.ndarray  # (B, N, F)
    choice: np.ndarray  # (B, N) int
    power: np.ndarray  # (B, N) Watts
    reward: np.ndarray  # (B,)
    next_obs: np.ndarray  # (B, N, F)

    def __len__(self) -> int:
        return self.reward.shape[0]


class ReplayBuffer:
    """Fixed-capacity FIFO ring of joint transitions."""

    def __init__(self, capacity: int, n_agents: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, n_agents, obs_dim))
        self.next_obs = np.zeros((capacity, n_agents, obs_dim))
        self.choice = np.zeros((capacity, n_agents), dtype=np.int64)
        self.power = np.zeros((capacity, n_agents))
        self.reward = np.zeros(capacity)
        self.ids = np.full(capacity, -1, dtype=np.int64)  # insertion counter, for eviction checks
        self.size = 0
        self.pos = 0
        self.count = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, choice, power, reward, next_obs) -> None:
        i = self.pos
        self.obs[i] = obs
        self.choice[i] = choice
        self.power[i] = power
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.ids[i] = self.count
        self.count += 1
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if batch_size > self.size:
            raise ValueError(f"buffer holds {self.size} transitions, need {batch_size}")
        idx = rng.choice(self.size, batch_size, replace=False)
        return Batch(self.obs[idx], self.choice[idx], self.power[idx], self.reward[idx], self.next_obs[idx])


# -- networks -------------------------------------------------------------------


class Actor:
    """Trunk with a linear output split into D logits, a mean and a log-std."""

    def __init__(self, obs_dim, n_arms, hidden, p_max, rng, log_std_bounds=(-20.0, 2.0)):
        self.n_arms = n_arms
        self.p_max = float(p_max)
        self.log_std_min, self.log_std_max = log_std_bounds
        self.net = DenseNet([obs_dim, *hidden, n_arms + 2], rng)

    def heads(self, x, record=False):
        out = self.net.forward(x, record=record)
        d = self.n_arms
        return out[..., :d], out[..., d], out[..., d + 1]

    def act(self, features, rng: np.random.Generator, deterministic: bool = False) -> Action:
        logits, mean, log_std = self.heads(features)
        if deterministic:
            choice = int(np.argmax(logits))
            unit = math.tanh(float(mean))
        else:
            choice, _, _ = categorical_from_logits(logits, rng)
            std = math.exp(min(max(float(log_std), self.log_std_min), self.log_std_max))
            unit = math.tanh(float(mean) + std * rng.standard_normal())
        power = self.p_max * (unit + 1.0) / 2.0
        return Action(int(choice), min(max(power, 1e-9 * self.p_max), self.p_max))


class QMixer:
    """Hypernetwork mixer: Q_tot = w2 . elu(q W1 + b1) + b2 with W1, w2 >= 0."""

    def __init__(self, n_agents: int, state_dim: int, embed: int, rng):
        self.n_agents = n_agents
        self.embed = embed
        self.hyper_w1 = DenseNet([state_dim, n_agents * embed], rng)
        self.hyper_b1 = DenseNet([state_dim, embed], rng)
        self.hyper_w2 = DenseNet([state_dim, embed], rng)
        self.hyper_b2 = DenseNet([state_dim, embed, 1], rng)
        self._cache = None

    @property
    def nets(self) -> list[DenseNet]:
        return [self.hyper_w1, self.hyper_b1, self.hyper_w2, self.hyper_b2]

    @property
    def params(self) -> list[np.ndarray]:
        return [p for net in self.nets for p in net.params]

    def forward(self, qs, state, record: bool = True) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        state = np.asarray(state, dtype=float)
        B = qs.shape[0]
        w1_raw = self.hyper_w1.forward(state, record).reshape(B, self.n_agents, self.embed)
        b1 = self.hyper_b1.forward(state, record)
        w2_raw = self.hyper_w2.forward(state, record)
        b2 = self.hyper_b2.forward(state, record)[:, 0]
        w1 = np.abs(w1_raw)
        w2 = np.abs(w2_raw)
        pre = np.einsum("bn,bne->be", qs, w1) + b1
        hidden = np.where(pre > 0, pre, np.expm1(np.minimum(pre, 0.0)))
        q_tot = np.sum(hidden * w2, axis=1) + b2
        self._cache = (qs, w1_raw, w1, w2_raw, w2, pre, hidden) if record else None
        return q_tot

    __call__ = forward

    def backward(self, d_qtot):
        """Return ``(param_grads, d_qs)`` for upstream gradient ``d_qtot`` of shape (B,)."""
        if self._cache is None:
            raise RuntimeError("backward called without a recorded forward pass")
        qs, w1_raw, w1, w2_raw, w2, pre, hidden = self._cache
        B = qs.shape[0]
        g = np.asarray(d_qtot, dtype=float)[:, None]
        d_w2 = g * hidden * np.sign(w2_raw)
        d_hidden = g * w2
        d_pre = d_hidden * np.where(pre > 0, 1.0, hidden + 1.0)
        d_w1 = (qs[:, :, None] * d_pre[:, None, :] * np.sign(w1_raw)).reshape(B, -1)
        d_qs = np.einsum("be,bne->bn", d_pre, w1)
        grads = []
        grads += self.hyper_w1.backward(d_w1)[0]
        grads += self.hyper_b1.backward(d_pre)[0]
        grads += self.hyper_w2.backward(d_w2)[0]
        grads += self.hyper_b2.backward(g)[0]
        return grads, d_qs

    def copy(self) -> "QMixer":
        twin = QMixer.__new__(QMixer)
        twin.n_agents, twin.embed = self.n_agents, self.embed
        twin.hyper_w1, twin.hyper_b1, twin.hyper_w2, twin.hyper_b2 = (n.copy() for n in self.nets)
        twin._cache = None
        return twin


def mixer_forward(mixer: QMixer, qs, state) -> np.ndarray:
    return mixer.forward(qs, state, record=False)


def joint_entropy(probs, log_prob_c, alpha_d, alpha_c) -> np.ndarray:
    """Tempered entropy of the hybrid policy.

    The continuous head does not depend on the arm, so the arm-weighted sum
    of its surprisal collapses to ``-alpha_c * log_prob_c``.
    """
    probs = np.asarray(probs, dtype=float)
    log_p = np.log(np.where(probs > 0, probs, 1.0))
    ent_d = -np.sum(probs * log_p, axis=-1)
    return alpha_d * ent_d - alpha_c * np.asarray(log_prob_c)


def _unit_log_prob(noise, log_std, u):
    return -0.5 * noise ** 2 - log_std - LOG_SQRT_2PI - log1m_tanh_sq(u)


def polyak_update(source: list[np.ndarray], target: list[np.ndarray], coeff: float) -> None:
    for s, t in zip(source, target):
        t *= 1.0 - coeff
        t += coeff * s


# -- the learner ----------------------------------------------------------------


class MHSAC:
    def __init__(self, n_agents: int, obs_dim: int, n_arms: int, p_max, cfg: TrainConfig, rng: np.random.Generator):
        self.n_agents = n_agents
        self.obs_dim = obs_dim
        self.n_arms = n_arms
        self.cfg = cfg
        self.p_max = np.broadcast_to(np.asarray(p_max, dtype=float), (n_agents,)).copy()
        state_dim = n_agents * obs_dim
        bounds = (cfg.log_std_min, cfg.log_std_max)
        self.actors = [Actor(obs_dim, n_arms, cfg.hidden, self.p_max[n], rng, bounds) for n in range(n_agents)]
        self.critics = [
            [DenseNet([obs_dim + 1, *cfg.hidden, n_arms], rng) for _ in range(n_agents)] for _ in range(2)
        ]
        self.mixers = [QMixer(n_agents, state_dim, cfg.mixer_embed, rng) for _ in range(2)]
        self.critic_targets = [[c.copy() for c in cs] for cs in self.critics]
        self.mixer_targets = [m.copy() for m in self.mixers]
        self.log_alpha = np.array([math.log(cfg.init_alpha_d), math.log(cfg.init_alpha_c)])
        n_sensed = (n_arms - 1)
        self.target_entropy_d = cfg.target_entropy_d if cfg.target_entropy_d is not None else 0.01 * n_sensed
        self.target_entropy_c = cfg.target_entropy_c

        self.actor_opts = [Adam(a.net.params, cfg.actor_lr) for a in self.actors]
        self.critic_opts = [Adam(self._critic_params(i), cfg.critic_lr) for i in range(2)]
        self.alpha_opt = Adam([self.log_alpha], cfg.alpha_lr)
        self.n_critic_updates = 0
        self.n_actor_updates = 0

    # parameters ------------------------------------------------------------
    def _critic_params(self, i: int) -> list[np.ndarray]:
        return [p for c in self.critics[i] for p in c.params] + self.mixers[i].params

    def _target_params(self, i: int) -> list[np.ndarray]:
        return [p for c in self.critic_targets[i] for p in c.params] + self.mixer_targets[i].params

    @property
    def alpha_d(self) -> float:
        return float(math.exp(self.log_alpha[0]))

    @property
    def alpha_c(self) -> float:
        return float(math.exp(self.log_alpha[1]))

    # acting ------------------------------------------------------------------
    def act(self, features, rng, deterministic: bool = False) -> list[Action]:
        return [self.actors[n].act(features[n], rng, deterministic) for n in range(self.n_agents)]

    def _critic_input(self, obs, power, n):
        return np.concatenate([obs, (power / self.p_max[n])[:, None]], axis=1)

    def _policy(self, n, obs, noise, record=False):
        """Evaluate actor ``n`` with a fixed reparameterisation draw."""
        actor = self.actors[n]
        logits, mean, ls_raw = actor.heads(obs, record=record)
        log_std = np.clip(ls_raw, self.cfg.log_std_min, self.cfg.log_std_max)
        log_p = log_softmax(logits)
        std = np.exp(log_std)
        u = mean + std * noise
        unit = np.tanh(u)
        power = self.p_max[n] * (unit + 1.0) / 2.0
        log_pc = _unit_log_prob(noise, log_std, u)
        return dict(log_p=log_p, probs=np.exp(log_p), log_std=log_std, ls_raw=ls_raw, std=std,
                    u=u, unit=unit, power=power, log_pc=log_pc)

    # critic --------------------------------------------------------------------
    def target_value(self, batch: Batch, noise: np.ndarray) -> np.ndarray:
        """Soft value of the next joint observation, min over the two target sets.

        ``noise`` has shape (B, N): one reparameterisation draw per agent.
        """
        B = len(batch)
        state = batch.next_obs.reshape(B, -1)
        mixed = []
        per_agent = [np.zeros((B, self.n_agents)) for _ in range(2)]
        for n in range(self.n_agents):
            pol = self._policy(n, batch.next_obs[:, n], noise[:, n])
            ent = joint_entropy(pol["probs"], pol["log_pc"], self.alpha_d, self.alpha_c)
            x = self._critic_input(batch.next_obs[:, n], pol["power"], n)
            for j in range(2):
                q = self.critic_targets[j][n].forward(x, record=False)
                per_agent[j][:, n] = np.sum(pol["probs"] * q, axis=1) + ent
        for j in range(2):
            mixed.append(self.mixer_targets[j].forward(per_agent[j], state, record=False))
        return np.minimum(mixed[0], mixed[1])

    def critic_loss(self, batch: Batch, target: np.ndarray):
        """Returns ``(loss, [grads for set 0, grads for set 1])`` for fixed targets."""
        B = len(batch)
        state = batch.obs.reshape(B, -1)
        rows = np.arange(B)
        loss = 0.0
        all_grads = []
        for i in range(2):
            qa = np.zeros((B, self.n_agents))
            for n in range(self.n_agents):
                q = self.critics[i][n].forward(self._critic_input(batch.obs[:, n], batch.power[:, n], n))
                qa[:, n] = q[rows, batch.choice[:, n]]
            q_tot = self.mixers[i].forward(qa, state)
            diff = q_tot - target
            loss += 0.5 * float(np.mean(diff ** 2))
            mix_grads, d_qa = self.mixers[i].backward(diff / B)
            grads = []
            for n in range(self.n_agents):
                dq = np.zeros((B, self.n_arms))
                dq[rows, batch.choice[:, n]] = d_qa[:, n]
                grads += self.critics[i][n].backward(dq)[0]
            all_grads.append(grads + mix_grads)
        return loss, all_grads

    def critic_update(self, batch: Batch, rng: np.random.Generator) -> float:
        noise = rng.standard_normal((len(batch), self.n_agents))
        target = batch.reward + self.cfg.gamma * self.target_value(batch, noise)
        loss, grads = self.critic_loss(batch, target)
        if not math.isfinite(loss):
            raise DivergenceError(f"critic loss became {loss}")
        for i in range(2):
            self.critic_opts[i].step(grads[i])
        self.n_critic_updates += 1
        return loss

    # actor ---------------------------------------------------------------------
    def actor_loss(self, batch: Batch, noise: np.ndarray):
        """Returns ``(loss, per-actor grads, (H_d, H_c))`` with critics held fixed.

        Per agent the loss is the batch mean of
        ``sum_a pi(a) [alpha_d log pi(a) + alpha_c log pi_c - min_j q_j(a)]``.
        """
        B = len(batch)
        a_d, a_c = self.alpha_d, self.alpha_c
        loss = 0.0
        grads = []
        ent_d_all, ent_c_all = [], []
        for n in range(self.n_agents):
            obs = batch.obs[:, n]
            eps = noise[:, n]
            pol = self._policy(n, obs, eps, record=True)
            probs, log_p = pol["probs"], pol["log_p"]
            x = self._critic_input(obs, pol["power"], n)
            q1 = self.critics[0][n].forward(x)
            q2 = self.critics[1][n].forward(x)
            use1 = q1 <= q2
            qmin = np.where(use1, q1, q2)
            ent_d = -np.sum(probs * log_p, axis=1)
            value = np.sum(probs * qmin, axis=1)
            per_sample = -a_d * ent_d + a_c * pol["log_pc"] - value
            loss += float(np.mean(per_sample))
            ent_d_all.append(ent_d)
            ent_c_all.append(-pol["log_pc"])

            d_logits = probs * (a_d * (log_p + ent_d[:, None]) - (qmin - value[:, None])) / B
            d_q = -probs / B
            dx1 = self.critics[0][n].backward(np.where(use1, d_q, 0.0))[1]
            dx2 = self.critics[1][n].backward(np.where(use1, 0.0, d_q))[1]
            d_unit_power = dx1[:, -1] + dx2[:, -1]  # d loss / d (p / p_max)
            unit = pol["unit"]
            d_u = d_unit_power * 0.5 * (1.0 - unit ** 2) + a_c * 2.0 * unit / B
            d_mean = d_u
            in_range = (pol["ls_raw"] > self.cfg.log_std_min) & (pol["ls_raw"] < self.cfg.log_std_max)
            d_log_std = (d_u * pol["std"] * eps - a_c / B) * in_range
            d_out = np.concatenate([d_logits, d_mean[:, None], d_log_std[:, None]], axis=1)
            grads.append(self.actors[n].net.backward(d_out)[0])
        entropies = (float(np.mean(ent_d_all)), float(np.mean(ent_c_all)))
        return loss, grads, entropies

    def actor_update(self, batch: Batch, rng: np.random.Generator):
        noise = rng.standard_normal((len(batch), self.n_agents))
        loss, grads, entropies = self.actor_loss(batch, noise)
        if not math.isfinite(loss):
            raise DivergenceError(f"actor loss became {loss}")
        for opt, g in zip(self.actor_opts, grads):
            opt.step(g)
        self.n_actor_updates += 1
        return loss, entropies

    # temperatures ----------------------------------------------------------------
    def temperature_loss(self, entropy_d: float, entropy_c: float):
        """Loss ``alpha_d (H_d - target_d) + alpha_c (H_c - target_c)`` and its log-alpha gradient."""
        a = np.exp(self.log_alpha)
        gap = np.array([entropy_d - self.target_entropy_d, entropy_c - self.target_entropy_c])
        return float(np.sum(a * gap)), a * gap

    def temperature_update(self, entropy_d: float, entropy_c: float) -> tuple[float, float]:
        _, grad = self.temperature_loss(entropy_d, entropy_c)
        self.alpha_opt.step([grad])
        return self.alpha_d, self.alpha_c

    # targets ---------------------------------------------------------------------
    def target_sync(self, coeff: float | None = None) -> None:
        coeff = self.cfg.polyak if coeff is None else coeff
        for i in range(2):
            polyak_update(self._critic_params(i), self._target_params(i), coeff)

    # checkpoints -------------------------------------------------------------------
    def named_nets(self) -> dict[str, DenseNet]:
        nets = {}
        for n, a in enumerate(self.actors):
            nets[f"actor_{n}"] = a.net
        for i in range(2):
            for n in range(self.n_agents):
                nets[f"critic{i}_{n}"] = self.critics[i][n]
                nets[f"critic{i}_{n}_target"] = self.critic_targets[i][n]
            for tag, m in (("", self.mixers[i]), ("_target", self.mixer_targets[i])):
                for part, net in zip(("w1", "b1", "w2", "b2"), m.nets):
                    nets[f"mixer{i}_{part}{tag}"] = net
        return nets

    def save(self, directory, manifest: dict | None = None) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, net in self.named_nets().items():
            save_net(net, directory / f"{name}.bin")
        info = dict(manifest or {})
        info.update(
            n_agents=self.n_agents,
            obs_dim=self.obs_dim,
            n_arms=self.n_arms,
            p_max=self.p_max.tolist(),
            log_alpha=self.log_alpha.tolist(),
            critic_updates=self.n_critic_updates,
            actor_updates=self.n_actor_updates,
            train_config=asdict(self.cfg),
        )
        (directory / "manifest.json").write_text(json.dumps(info, indent=2, sort_keys=True))
        return directory

    @classmethod
    def load(cls, directory) -> tuple["MHSAC", dict]:
        directory = Path(directory)
        info = json.loads((directory / "manifest.json").read_text())
        cfg = TrainConfig(**info["train_config"])
        agent = cls(info["n_agents"], info["obs_dim"], info["n_arms"], info["p_max"], cfg, np.random.default_rng(0))
        for name, net in agent.named_nets().items():
            loaded = load_net(directory / f"{name}.bin")
            if loaded.sizes != net.sizes:
                raise ValueError(f"{name}: checkpoint widths {loaded.sizes} do not match {net.sizes}")
            for p, q in zip(net.params, loaded.params):
                p[...] = q
        agent.log_alpha[:] = info["log_alpha"]
        agent.n_critic_updates = info["critic_updates"]
        agent.n_actor_updates = info["actor_updates"]
        return agent, info


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


# -- training loop ------------------------------------------------------------------


def random_action(n_arms: int, p_max: float, rng: np.random.Generator) -> Action:
    return Action(int(rng.integers(n_arms)), p_max * (1.0 - rng.random()))


def train_loop(env: CRNEnv, agent: MHSAC, cfg: TrainConfig, rng: np.random.Generator, log: MetricsLog | None = None, on_step=None) -> MetricsLog:
    """Run ``cfg.total_timesteps`` environment steps, learning after warm-up.

    After ``cfg.warmup`` uniformly random steps (and once the buffer holds a
    minibatch) every step does one critic update and a Polyak target sync;
    every ``policy_frequency``-th critic update is followed by an actor and
    a temperature update.
    """
    ecfg = env.cfg
    if agent.n_agents != ecfg.n_sus or agent.obs_dim != ecfg.obs_dim or agent.n_arms != ecfg.n_arms:
        raise ValueError(
            f"agent dims (agents={agent.n_agents}, obs={agent.obs_dim}, arms={agent.n_arms}) do not match "
            f"environment (agents={ecfg.n_sus}, obs={ecfg.obs_dim}, arms={ecfg.n_arms})"
        )
    noise_var = ecfg.channel.noise_var
    log = log if log is not None else MetricsLog.for_agents(ecfg.n_sus)
    buffer = ReplayBuffer(cfg.buffer_capacity, ecfg.n_sus, ecfg.obs_dim)
    obs = env.reset() if env.state is None else env.observations
    feats = np.stack([o.features(noise_var) for o in obs])
    critic_loss = actor_loss = math.nan
    for step in range(cfg.total_timesteps):
        if step < cfg.warmup:
            actions = [random_action(ecfg.n_arms, ecfg.p_max[n], rng) for n in range(ecfg.n_sus)]
        else:
            actions = agent.act(feats, rng)
        out = env.step(actions)
        next_feats = np.stack([o.features(noise_var) for o in out.observations])
        buffer.add(feats, [a.choice for a in actions], [a.power for a in actions], out.reward, next_feats)
        feats = next_feats

        critic_loss = actor_loss = math.nan
        if step >= cfg.warmup and len(buffer) >= cfg.minibatch:
            critic_loss = agent.critic_update(buffer.sample(cfg.minibatch, rng), rng)
            agent.target_sync()
            if agent.n_critic_updates % cfg.policy_frequency == 0:
                actor_loss, (h_d, h_c) = agent.actor_update(buffer.sample(cfg.minibatch, rng), rng)
                agent.temperature_update(h_d, h_c)

        row = dict(
            step=step,
            reward=out.reward,
            rate_sum=float(out.rates.sum()),
            omega_idle=out.omega_idle,
            omega_occupied=out.omega_occupied,
            collisions=out.collisions,
            critic_loss=critic_loss,
            actor_loss=actor_loss,
            alpha_d=agent.alpha_d,
            alpha_c=agent.alpha_c,
        )
        for n, a in enumerate(actions):
            row[f"power_{n}"] = a.power
        log.append(**row)
        if on_step is not None:
            on_step(step, agent)
    return log
