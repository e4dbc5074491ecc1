"""JSON scenario documents: strict parsing, round-tripping and world building."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .models import MODEL_NAMES
from .models.counter import CounterModelConfig, build_counter_scenario
from .models.droplet import (
    INFLUENCE_EDGES as DROPLET_I,
    MACRO,
    MICRO,
    PERCEPTION_EDGES as DROPLET_P,
    DropletModelConfig,
    build_droplet_scenario,
)
from .models.pingpong import EDGES as PINGPONG_EDGES, build_pingpong_scenario
from .scheduler import World
from .topology import LevelSpec, Topology, TopologyError, build_topology

TOP_KEYS = {"levels", "influence_edges", "perception_edges", "model", "model_config", "scheduler", "horizon", "seed"}
REQUIRED = ("levels", "model", "horizon")
LEVEL_KEYS = {"id", "dt", "t0"}
MODEL_KEYS = {
    "counter": {"initial", "amount", "watchers_per_level"},
    "droplet": {"cell_count", "initial_droplets", "threshold", "evaporation_rate"},
    "pingpong": set(),
}
FIXED_LEVELS = {"droplet": (MICRO, MACRO), "pingpong": ("A", "B")}
FIXED_EDGES = {"droplet": (DROPLET_I, DROPLET_P), "pingpong": (PINGPONG_EDGES, PINGPONG_EDGES)}


class ScenarioError(ValueError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass(frozen=True)
class ScenarioConfig:
    levels: tuple[LevelSpec, ...]
    model: str
    horizon: int
    influence_edges: tuple[tuple[str, str], ...] = ()
    perception_edges: tuple[tuple[str, str], ...] = ()
    model_config: Mapping[str, Any] = field(default_factory=dict)
    scheduler: str = "async"
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "levels": [{"id": s.id, "dt": s.dt, "t0": s.t0} for s in self.levels],
            "influence_edges": [list(e) for e in self.influence_edges],
            "perception_edges": [list(e) for e in self.perception_edges],
            "model": self.model,
            "model_config": json.loads(json.dumps(self.model_config)),
            "scheduler": self.scheduler,
            "horizon": self.horizon,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def topology(self) -> Topology:
        return build_topology(self.levels, self.influence_edges, self.perception_edges)


def _int(value: Any, where: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"expected an integer, got {value!r}", where)
    if value < minimum:
        raise ScenarioError(f"must be >= {minimum}, got {value}", where)
    return value


def _keys(obj: Any, allowed: set[str], where: str, required: tuple[str, ...] = ()) -> Mapping[str, Any]:
    if not isinstance(obj, dict):
        raise ScenarioError("expected an object", where)
    for k in obj:
        if k not in allowed:
            raise ScenarioError(f"unknown key {k!r}", where or "<root>")
    for k in required:
        if k not in obj:
            raise ScenarioError(f"missing required key {k!r}", where or "<root>")
    return obj


def _edges(raw: Any, known: set[str], where: str) -> tuple[tuple[str, str], ...]:
    if not isinstance(raw, list):
        raise ScenarioError("expected a list of [source, target] pairs", where)
    out = []
    for i, edge in enumerate(raw):
        here = f"{where}[{i}]"
        if not (isinstance(edge, list) and len(edge) == 2 and all(isinstance(x, str) for x in edge)):
            raise ScenarioError(f"expected [source, target], got {edge!r}", here)
        for end in edge:
            if end not in known:
                raise ScenarioError(f"edge {edge!r} names undeclared level {end!r}", here)
        if edge[0] == edge[1]:
            raise ScenarioError(f"self-loop {edge!r}; self relations are implicit", here)
        out.append((edge[0], edge[1]))
    return tuple(sorted(set(out)))


def _model_config(model: str, raw: Any, level_ids: set[str]) -> dict[str, Any]:
    cfg = dict(_keys(raw, MODEL_KEYS[model], "model_config"))
    where = "model_config"
    if model == "counter":
        initial = cfg.get("initial", {})
        if not isinstance(initial, dict):
            raise ScenarioError("expected an object of level -> integer", f"{where}.initial")
        for l, v in initial.items():
            if l not in level_ids:
                raise ScenarioError(f"unknown level {l!r}", f"{where}.initial")
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(f"expected an integer, got {v!r}", f"{where}.initial.{l}")
        if "amount" in cfg and (isinstance(cfg["amount"], bool) or not isinstance(cfg["amount"], int)):
            raise ScenarioError(f"expected an integer, got {cfg['amount']!r}", f"{where}.amount")
        if "watchers_per_level" in cfg:
            _int(cfg["watchers_per_level"], f"{where}.watchers_per_level", 0)
    elif model == "droplet":
        for k in ("cell_count", "initial_droplets"):
            if k not in cfg:
                raise ScenarioError(f"missing required key {k!r}", where)
        _int(cfg["cell_count"], f"{where}.cell_count", 1)
        _int(cfg.get("threshold", 4), f"{where}.threshold", 2)
        _int(cfg.get("evaporation_rate", 0), f"{where}.evaporation_rate", 0)
        drops = cfg["initial_droplets"]
        if not isinstance(drops, list):
            raise ScenarioError("expected a list of [id, cell]", f"{where}.initial_droplets")
        for i, d in enumerate(drops):
            if not (isinstance(d, list) and len(d) == 2 and isinstance(d[0], str)):
                raise ScenarioError(f"expected [id, cell], got {d!r}", f"{where}.initial_droplets[{i}]")
            _int(d[1], f"{where}.initial_droplets[{i}]", 0)
        try:
            _droplet_config(cfg)
        except ValueError as exc:
            raise ScenarioError(str(exc), where) from None
    return cfg


def _droplet_config(cfg: Mapping[str, Any]) -> DropletModelConfig:
    return DropletModelConfig(
        cell_count=cfg["cell_count"],
        initial_droplets=[tuple(d) for d in cfg["initial_droplets"]],
        threshold=cfg.get("threshold", 4),
        evaporation_rate=cfg.get("evaporation_rate", 0),
    )


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises:
        ScenarioError: naming the first problem, with a ``line N`` location
            for syntax errors or a field path otherwise.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    doc = _keys(doc, TOP_KEYS, "", REQUIRED)

    levels_raw = doc["levels"]
    if not isinstance(levels_raw, list) or not levels_raw:
        raise ScenarioError("expected a non-empty list of levels", "levels")
    levels, seen = [], set()
    for i, item in enumerate(levels_raw):
        where = f"levels[{i}]"
        item = _keys(item, LEVEL_KEYS, where, ("id", "dt"))
        if not isinstance(item["id"], str) or not item["id"]:
            raise ScenarioError(f"level id must be a non-empty string, got {item['id']!r}", f"{where}.id")
        if item["id"] in seen:
            raise ScenarioError(f"duplicate level id {item['id']!r}", f"{where}.id")
        seen.add(item["id"])
        dt = _int(item["dt"], f"{where}.dt", 1)
        t0 = _int(item.get("t0", 0), f"{where}.t0", 0)
        levels.append(LevelSpec(item["id"], dt, t0))

    e_i = _edges(doc.get("influence_edges", []), seen, "influence_edges")
    e_p = _edges(doc.get("perception_edges", []), seen, "perception_edges")

    model = doc["model"]
    if model not in MODEL_NAMES:
        raise ScenarioError(f"unknown model {model!r} (choose from {', '.join(MODEL_NAMES)})", "model")
    if model in FIXED_LEVELS:
        want = set(FIXED_LEVELS[model])
        if seen != want:
            raise ScenarioError(f"model {model!r} needs exactly levels {sorted(want)}", "levels")
        if any(s.t0 != 0 for s in levels):
            raise ScenarioError(f"model {model!r} starts every level at t0=0", "levels")
        fixed_i, fixed_p = (tuple(sorted(x)) for x in FIXED_EDGES[model])
        if "influence_edges" in doc and e_i != fixed_i:
            raise ScenarioError(f"model {model!r} uses influence edges {list(fixed_i)}", "influence_edges")
        if "perception_edges" in doc and e_p != fixed_p:
            raise ScenarioError(f"model {model!r} uses perception edges {list(fixed_p)}", "perception_edges")
        e_i, e_p = fixed_i, fixed_p
    model_config = _model_config(model, doc.get("model_config", {}), seen)

    scheduler = doc.get("scheduler", "async")
    if scheduler not in ("sync", "async"):
        raise ScenarioError(f"scheduler must be 'sync' or 'async', got {scheduler!r}", "scheduler")
    horizon = _int(doc["horizon"], "horizon", 0)
    seed = _int(doc.get("seed", 0), "seed", 0)
    return ScenarioConfig(
        levels=tuple(sorted(levels, key=lambda s: s.id)),
        model=model,
        horizon=horizon,
        influence_edges=e_i,
        perception_edges=e_p,
        model_config=model_config,
        scheduler=scheduler,
        seed=seed,
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def counter_config(config: ScenarioConfig) -> CounterModelConfig:
    mc = config.model_config
    return CounterModelConfig(
        initial=dict(mc.get("initial", {})),
        amount=mc.get("amount", 1),
        watchers_per_level=mc.get("watchers_per_level", 0),
    )


def build_world(
    config: ScenarioConfig,
    *,
    horizon: Optional[int] = None,
    seed: Optional[int] = None,
    check_purity: bool = False,
) -> World:
    horizon = config.horizon if horizon is None else horizon
    seed = config.seed if seed is None else seed
    dts = {s.id: s.dt for s in config.levels}
    if config.model == "counter":
        return build_counter_scenario(config.topology(), counter_config(config), horizon, seed, check_purity)
    if config.model == "droplet":
        return build_droplet_scenario(
            _droplet_config(config.model_config), dts[MICRO], dts[MACRO], horizon, seed, check_purity
        )
    if config.model == "pingpong":
        return build_pingpong_scenario(dts["A"], dts["B"], horizon, seed, check_purity)
    raise ScenarioError(f"unknown model {config.model!r}", "model")
