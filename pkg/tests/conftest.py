import pytest

from levelsim import LevelSpec, build_topology
from levelsim.models.counter import CounterModelConfig, build_counter_scenario


def counter_world(levels, influence=(), perception=(), horizon=0, watchers=0, **kw):
    specs = [LevelSpec(*lv) if isinstance(lv, tuple) else lv for lv in levels]
    topo = build_topology(specs, influence, perception)
    return build_counter_scenario(topo, CounterModelConfig(watchers_per_level=watchers, **kw), horizon)


@pytest.fixture
def make_counter():
    return counter_world


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
