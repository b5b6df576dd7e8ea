"""Step the representative UAV cell by hand against a frozen mean-field.

Shows what one decision slot looks like: the discrete action factors into
(served GU, hover point, power level), the slot mode follows from whether the
hover point changes, and the reward trades delivered bits per joule against
the radiated power-time penalty and the battery alarm.

Run with ``python3 demos/representative_cell.py``.
"""

import numpy as np

from uavmfg.config import desk_scale_config
from uavmfg.env import RepresentativeEnv, SimModel
from uavmfg.meanfield import uniform_feasible

cfg = desk_scale_config()
sim = SimModel(cfg)
env = RepresentativeEnv(sim, uniform_feasible(sim))
rng = np.random.default_rng(2)

print(f"grid: {cfg.grid_rows}x{cfg.grid_cols} cells, {cfg.gus_per_cell} GUs each")
print(f"state space: {sim.space.dim_s}, action space: {sim.space.dim_a}, "
      f"network input width: {env.feature_dim}")

state = env.reset(rng)
print(f"\ninitial state: demand={state.demand_bits.astype(int)}, "
      f"hover point {state.prev_hover}, battery {state.battery:.0f} J\n")

for t in range(8):
    mask = env.feasible_mask(state)
    # pick an informative action: serve the first active GU at max power from
    # a random feasible hover point; go silent if nobody is asking
    active = np.flatnonzero(state.demand_bits)
    if active.size:
        assoc = int(active[0])
        choices = [a for a in np.flatnonzero(mask)
                   if sim.space.decode_action(a)[0] == assoc
                   and sim.space.decode_action(a)[2] == sim.space.n_powers - 1]
        a_idx = int(rng.choice(choices)) if choices else sim.null_action(state.prev_hover)
    else:
        a_idx = sim.null_action(state.prev_hover)
    assoc, hover, p_idx = sim.space.decode_action(a_idx)
    state, out = env.step(state, a_idx, rng)
    print(f"slot {t}: serve GU {assoc} from hover {hover} at "
          f"{sim.power_levels_w[p_idx] * 1e3:3.0f} mW -> mode {out.mode}, "
          f"{out.rate_bits:.2e} bits, {out.e_total:7.0f} J spent, "
          f"{out.harvest:7.0f} J harvested, reward {out.reward:9.1f}")
    print(f"         next demand {state.demand_bits.astype(int)}, "
          f"battery {state.battery:9.0f} J")
