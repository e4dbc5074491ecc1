"""Reference models, selectable by name from a scenario file."""

from .counter import CounterModelConfig, build_counter_scenario, counter_oracle, counter_values
from .droplet import DropletModelConfig, aligned_masses, build_droplet_scenario
from .pingpong import build_pingpong_scenario, memorized_stamps

MODEL_NAMES = ("counter", "droplet", "pingpong")

__all__ = [
    "MODEL_NAMES",
    "CounterModelConfig",
    "DropletModelConfig",
    "aligned_masses",
    "build_counter_scenario",
    "build_droplet_scenario",
    "build_pingpong_scenario",
    "counter_oracle",
    "counter_values",
    "memorized_stamps",
]
