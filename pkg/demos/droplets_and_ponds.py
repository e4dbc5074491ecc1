"""
Droplets that become ponds, and back
====================================

Ten droplets walk on a ring of six cells in the micro level ``M``. Four
droplets sharing a cell turn into a pond in the macro level ``P`` and stop
being agents. Each pond gives one droplet back per macro step, and that
droplet is the same agent as before.
"""

from levelsim import run_until, validate_causality
from levelsim.models.droplet import (
    MACRO,
    MICRO,
    DropletModelConfig,
    aligned_masses,
    build_droplet_scenario,
    droplet_count,
    pond_mass,
)

config = DropletModelConfig(
    cell_count=6,
    initial_droplets=[(f"d{i:02d}", i % 5) for i in range(10)],
    threshold=4,
    evaporation_rate=1,
)
world, trace = run_until(build_droplet_scenario(config, dt_micro=1, dt_macro=2, horizon=30, seed=1))

###############################################################################
# Droplets and pond mass, at every time both levels share.

micro = {st.time: droplet_count(st) for st in world.history[MICRO]}
macro = {st.time: pond_mass(st) for st in world.history[MACRO]}
for t, total in aligned_masses(world).items():
    print(f"t={t:3d}  droplets={micro[t]:2d}  in ponds={macro[t]:2d}  total={total}")

###############################################################################
# Who left and who came back.

for ev in trace:
    if ev.kind in ("agent_deactivated", "agent_activated") and ev.level == MICRO:
        if ev.at["t"][MICRO] <= 16:
            print(ev.at["t"][MICRO], ev.kind.replace("agent_", ""), ev.agent)

print("violations:", validate_causality(trace, world.topology))

###############################################################################
# With a macro step three times the micro one, the micro level can produce
# while the pond level is still behind. The pond half of the aggregation is
# then refused at delivery, the droplets are removed anyway, and mass leaks.

lagging, _ = run_until(build_droplet_scenario(config, dt_micro=1, dt_macro=3, horizon=30, seed=1))
print("total mass seen with dt=(1, 3):", sorted(set(aligned_masses(lagging).values())))
