"""
One mind, two bodies
====================

A single hysteretic agent has a body in ``A`` (step 2) and in ``B`` (step
3). Whenever it perceives from either body it memorizes once, stamped with
the earliest next time among its levels.
"""

from levelsim import run_until
from levelsim.models.pingpong import build_pingpong_scenario, memorized_stamps

world, trace = run_until(build_pingpong_scenario(2, 3, horizon=12))

for ev in trace:
    if ev.kind == "memorization":
        print("stamp", ev.at["stamp"], "clocks", dict(ev.at["t"]))

###############################################################################
# The log kept in the agent's internal state lists the same stamps, each
# with the counters it saw.

print(memorized_stamps(world))
print(world.agents["pp"].internal_state["log"][:3])
