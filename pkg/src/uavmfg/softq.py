"""Maximum-entropy deep Q-learning against a frozen mean-field.

The soft value is V(s) = phi * log sum_a exp(Q(s,a)/phi) over feasible actions
and the behavior/greedy policy is the matching softmax.  The same train loop
also drives the hard-max baselines: the action selector and the bootstrap
target are injected, everything else (replay, Adam, target sync, divergence
guard) is shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import MLP, Adam, td_loss_and_grads


class TrainingDiverged(RuntimeError):
    """Raised when the TD loss blows up instead of settling."""


NEG_INF = -1e30


def masked(q, mask):
    return np.where(mask, q, NEG_INF)


def soft_value(q, phi, mask=None):
    """phi * logsumexp(q/phi) over feasible actions, computed max-shifted.

    Vectorized over leading axes; ``mask`` selects feasible actions (all
    feasible when None).  Recovers max(q) as phi -> 0.
    """
    q = np.asarray(q, dtype=float)
    if mask is not None:
        q = masked(q, np.asarray(mask, dtype=bool))
    top = q.max(axis=-1, keepdims=True)
    out = top[..., 0] + phi * np.log(np.exp((q - top) / phi).sum(axis=-1))
    return float(out) if out.ndim == 0 else out


def soft_policy(q, phi, mask=None):
    """Feasibility-masked softmax exp((q - V)/phi); rows sum to one."""
    q = np.asarray(q, dtype=float)
    if mask is not None:
        q = masked(q, np.asarray(mask, dtype=bool))
    top = q.max(axis=-1, keepdims=True)
    w = np.exp((q - top) / phi)
    return w / w.sum(axis=-1, keepdims=True)


def masked_argmax(q, mask=None):
    q = np.asarray(q, dtype=float)
    if mask is not None:
        q = masked(q, np.asarray(mask, dtype=bool))
    return q.argmax(axis=-1)


def td_target(rewards, q_next, phi, gamma, masks=None):
    """r + gamma * softV(s') from target-network Q rows."""
    return np.asarray(rewards) + gamma * soft_value(q_next, phi, masks)


# ----------------------------------------------------------------------
# replay


class ReplayBuffer:
    """Fixed-capacity ring buffer over flat transition arrays."""

    def __init__(self, capacity, feature_dim, num_actions):
        self.capacity = capacity
        self.feats = np.zeros((capacity, feature_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.next_feats = np.zeros((capacity, feature_dim))
        self.next_masks = np.zeros((capacity, num_actions), dtype=bool)
        self.size = 0
        self.pos = 0

    def push(self, feat, action, reward, next_feat, next_mask):
        i = self.pos
        self.feats[i] = feat
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_feats[i] = next_feat
        self.next_masks[i] = next_mask
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n, rng):
        """Minibatch without replacement (the whole buffer if smaller)."""
        n = min(n, self.size)
        idx = rng.choice(self.size, size=n, replace=False)
        return (self.feats[idx], self.actions[idx], self.rewards[idx],
                self.next_feats[idx], self.next_masks[idx])

    def clear(self):
        self.size = 0
        self.pos = 0


# ----------------------------------------------------------------------
# selectors and target rules


def linear_schedule(start, end, anneal_frac=1.0):
    """Value as a function of training progress in [0, 1]."""
    def sched(frac):
        t = min(frac / anneal_frac, 1.0) if anneal_frac > 0 else 1.0
        return start + (end - start) * t
    return sched


def soft_selector(phi_schedule):
    def select(q, mask, frac, rng):
        probs = soft_policy(q, phi_schedule(frac), mask)
        return int(rng.choice(len(probs), p=probs))
    return select


def soft_target(phi_schedule):
    def target(rewards, q_next, masks, frac, gamma):
        return td_target(rewards, q_next, phi_schedule(frac), gamma, masks)
    return target


def hard_target():
    def target(rewards, q_next, masks, frac, gamma):
        return np.asarray(rewards) + gamma * masked(q_next, masks).max(axis=-1)
    return target


# ----------------------------------------------------------------------
# training


@dataclass
class TrainerConfig:
    gamma: float = 0.9
    learning_rate: float = 0.005
    minibatch: int = 300
    buffer_capacity: int = 1000
    target_period: int = 100
    episodes: int = 1000
    steps_per_episode: int = 200
    reward_scale: float = 1000.0
    hidden: tuple = (128, 64)
    divergence_factor: float = 10.0

    @classmethod
    def from_config(cls, cfg):
        return cls(gamma=cfg.gamma, learning_rate=cfg.learning_rate,
                   minibatch=cfg.minibatch, buffer_capacity=cfg.buffer_capacity,
                   target_period=cfg.target_period, episodes=cfg.episodes,
                   steps_per_episode=cfg.steps_per_episode,
                   reward_scale=cfg.reward_scale)


def train(env, tcfg: TrainerConfig, select, target_rule, rng, net=None,
          buffer=None):
    """Generic replay-based Q-learning loop over the single-agent env.

    ``select(q_row, mask, frac, rng)`` picks behavior actions;
    ``target_rule(rewards, q_next, masks, frac, gamma)`` builds bootstrap
    targets from target-network rows.  Returns (net, target net, per-episode
    stats).
    """
    if net is None:
        net = MLP([env.feature_dim, *tcfg.hidden, env.num_actions], rng)
    target_net = net.clone()
    if buffer is None:
        buffer = ReplayBuffer(tcfg.buffer_capacity, env.feature_dim, env.num_actions)
    opt = Adam(net.params(), tcfg.learning_rate)

    total_steps = tcfg.episodes * tcfg.steps_per_episode
    updates = 0
    loss_window = []
    # the loss grows while values bootstrap up from the zero init, so the
    # divergence baseline is the peak moving average over a warmup quarter
    warmup = max(100, (total_steps - tcfg.minibatch) // 4)
    baseline_loss = 1e-12
    stats = []
    for ep in range(tcfg.episodes):
        state = env.reset(rng)
        feat = env.features(state)
        mask = env.feasible_mask(state)
        ep_reward = 0.0
        ep_ee = 0.0
        ep_penalty = 0.0
        ep_fly = 0
        ep_power = 0.0
        ep_loss = []
        frac = 0.0
        for step in range(tcfg.steps_per_episode):
            frac = (ep * tcfg.steps_per_episode + step) / max(total_steps - 1, 1)
            q = net.forward(feat)[0]
            a = select(q, mask, frac, rng)
            state, outcome = env.step(state, a, rng)
            next_feat = env.features(state)
            next_mask = env.feasible_mask(state)
            buffer.push(feat, a, outcome.reward / tcfg.reward_scale,
                        next_feat, next_mask)
            feat, mask = next_feat, next_mask
            ep_reward += outcome.reward
            ep_ee += outcome.ee
            ep_penalty += outcome.interference_penalty
            ep_fly += outcome.mode == 1
            ep_power += outcome.power_w

            if buffer.size >= tcfg.minibatch:
                bf, ba, br, bnf, bnm = buffer.sample(tcfg.minibatch, rng)
                q_next = target_net.forward(bnf)
                targets = target_rule(br, q_next, bnm, frac, tcfg.gamma)
                loss, grads = td_loss_and_grads(net, bf, ba, targets)
                opt.step(net.params(), grads)
                updates += 1
                ep_loss.append(loss)
                loss_window.append(loss)
                if len(loss_window) > 50:
                    loss_window.pop(0)
                avg = np.mean(loss_window)
                if not np.isfinite(loss):
                    raise TrainingDiverged("non-finite TD loss")
                if updates <= warmup:
                    baseline_loss = max(baseline_loss, avg)
                elif (len(loss_window) == 50
                      and avg > tcfg.divergence_factor * baseline_loss):
                    raise TrainingDiverged(
                        f"TD loss {avg:.3g} exceeded {tcfg.divergence_factor}x "
                        f"its warmup peak {baseline_loss:.3g}")
                if updates % tcfg.target_period == 0:
                    target_net.copy_from(net)
        n = tcfg.steps_per_episode
        stats.append({"episode": ep,
                      "mean_reward": ep_reward / n,
                      "mean_ee": ep_ee / n,
                      "mean_interference_penalty": ep_penalty / n,
                      "flying_probability": ep_fly / n,
                      "mean_power_w": ep_power / n,
                      "mean_loss": float(np.mean(ep_loss)) if ep_loss else np.nan,
                      "frac": frac})
    return net, target_net, stats


def train_best_response(env, cfg, rng, net=None, buffer=None):
    """Maximum-entropy best response against the env's frozen mean-field.

    Behavior actions are always drawn from the soft policy; the entropy
    weight anneals linearly from entropy_weight to entropy_weight_final.
    """
    tcfg = TrainerConfig.from_config(cfg)
    phi_sched = linear_schedule(cfg.entropy_weight, cfg.entropy_weight_final)
    return train(env, tcfg, soft_selector(phi_sched), soft_target(phi_sched),
                 rng, net=net, buffer=buffer)


# ----------------------------------------------------------------------
# frozen-policy wrapper for population rollouts


class QPolicy:
    """Trained Q-network acting for a whole population.

    Appends the frozen mean-field features (possibly width zero) to each
    cell's state features, then selects per the configured rule.
    """

    def __init__(self, net, mf_features, kind="soft", param=0.5):
        self.net = net
        self.mf_features = np.asarray(mf_features, dtype=float)
        self.kind = kind
        self.param = param

    def q_rows(self, state_feats):
        state_feats = np.atleast_2d(state_feats)
        if len(self.mf_features):
            tiled = np.broadcast_to(self.mf_features,
                                    (len(state_feats), len(self.mf_features)))
            state_feats = np.concatenate([state_feats, tiled], axis=1)
        return self.net.forward(state_feats)

    def act_batch(self, state_feats, masks, rng):
        q = self.q_rows(state_feats)
        masks = np.atleast_2d(masks)
        if self.kind == "greedy":
            return masked_argmax(q, masks)
        if self.kind in ("soft", "boltzmann"):
            probs = soft_policy(q, self.param, masks)
            u = rng.random((len(q), 1))
            return (probs.cumsum(axis=1) > u).argmax(axis=1)
        if self.kind == "epsilon":
            acts = masked_argmax(q, masks)
            explore = rng.random(len(q)) < self.param
            if explore.any():
                m = masks[explore].astype(float)
                probs = m / m.sum(axis=1, keepdims=True)
                u = rng.random((explore.sum(), 1))
                acts[explore] = (probs.cumsum(axis=1) > u).argmax(axis=1)
            return acts
        raise ValueError(f"unknown policy kind {self.kind!r}")

    def act(self, state_feat, mask, rng):
        return int(self.act_batch(state_feat[None], mask[None], rng)[0])


# ----------------------------------------------------------------------
# exact solver for small instances


def tabular_soft_value_iteration(rewards, transitions, gamma, phi, tol=1e-12,
                                 max_iter=100000):
    """Exact soft Q on a small MDP: Q = R + gamma * P @ softV(Q).

    ``rewards`` is (S, A), ``transitions`` is (S, A, S).  Returns the fixed
    point to within ``tol`` in the sup norm.
    """
    R = np.asarray(rewards, dtype=float)
    P = np.asarray(transitions, dtype=float)
    q = np.zeros_like(R)
    for _ in range(max_iter):
        v = soft_value(q, phi)
        nxt = R + gamma * (P @ v)
        if np.abs(nxt - q).max() < tol:
            return nxt
        q = nxt
    return q
