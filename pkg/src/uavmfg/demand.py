"""Two-state Markov demand chain for ground users."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DemandChain:
    p: float   # Pr(active next | idle now)
    q: float   # Pr(active next | active now)

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("demand chain probabilities must lie in [0, 1]")


def step_demand(bits, chain: DemandChain, rng):
    """Advance demand bits one slot; vectorized over arrays of booleans."""
    bits = np.asarray(bits, dtype=bool)
    stay = rng.random(bits.shape)
    nxt = np.where(bits, stay < chain.q, stay < chain.p)
    return bool(nxt) if nxt.ndim == 0 else nxt


def stationary_active_fraction(chain: DemandChain):
    """Long-run Pr(active) = p / (1 + p - q); 1 for the absorbing chain q=1, p>0."""
    if chain.q == 1.0:
        return 1.0 if chain.p > 0 else 0.0
    return chain.p / (1.0 + chain.p - chain.q)


def sample_stationary(shape, chain: DemandChain, rng):
    return rng.random(shape) < stationary_active_fraction(chain)
