"""Hard-max DQN baselines sharing the soft-Q training loop.

Three variants:

* eg_idqn   - epsilon-greedy, no mean-field features (independent learner)
* eg_mfdqn  - epsilon-greedy with mean-field features
* boltz_mfdqn - Boltzmann exploration with mean-field features

All use the hard max bootstrap; Boltzmann action sampling reuses the soft
policy with the temperature in place of the entropy weight.
"""

from __future__ import annotations

import numpy as np

from .softq import (TrainerConfig, hard_target, linear_schedule, masked_argmax,
                    soft_policy, train)


def epsilon_greedy_action(q, mask, epsilon, rng):
    """Greedy over feasible actions w.p. 1-eps, else uniform over feasible."""
    mask = np.asarray(mask, dtype=bool)
    if rng.random() < epsilon:
        feasible = np.nonzero(mask)[0]
        return int(feasible[rng.integers(len(feasible))])
    return int(masked_argmax(q, mask))


def boltzmann_action(q, mask, temperature, rng):
    probs = soft_policy(q, temperature, mask)
    return int(rng.choice(len(probs), p=probs))


def epsilon_selector(eps_start, eps_end, anneal_frac):
    sched = linear_schedule(eps_start, eps_end, anneal_frac)
    def select(q, mask, frac, rng):
        return epsilon_greedy_action(q, mask, sched(frac), rng)
    return select


def boltzmann_selector(t_start, t_end, anneal_frac):
    sched = linear_schedule(t_start, t_end, anneal_frac)
    def select(q, mask, frac, rng):
        return boltzmann_action(q, mask, sched(frac), rng)
    return select


def train_baseline(env, cfg, rng, kind, net=None, buffer=None):
    """Train one baseline against the env's frozen mean-field view.

    ``kind`` is "eg_idqn", "eg_mfdqn", or "boltz_mfdqn"; the id variant must
    be handed an env built without mean-field features.
    """
    tcfg = TrainerConfig.from_config(cfg)
    if kind in ("eg_idqn", "eg_mfdqn"):
        select = epsilon_selector(cfg.epsilon_start, cfg.epsilon_end,
                                  cfg.epsilon_decay_frac)
    elif kind == "boltz_mfdqn":
        select = boltzmann_selector(cfg.boltzmann_t_start, cfg.boltzmann_t_end, 1.0)
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    return train(env, tcfg, select, hard_target(), rng, net=net, buffer=buffer)
