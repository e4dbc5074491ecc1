import json
from pathlib import Path

import pytest

from levelsim import read_trace, trace_digest
from levelsim.cli import main
from levelsim.models.counter import counter_oracle, counter_values
from levelsim.scenario import ScenarioError, build_world, counter_config, load_scenario, parse_scenario
from levelsim.scheduler import run_until

from . import mutations

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
MINIMAL = {
    "levels": [{"id": "A", "dt": 1}, {"id": "B", "dt": 2, "t0": 0}],
    "influence_edges": [["A", "B"]],
    "model": "counter",
    "horizon": 5,
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return json.dumps(d)


class TestParse:
    def test_minimal(self):
        cfg = parse_scenario(doc())
        assert [s.id for s in cfg.levels] == ["A", "B"]
        assert cfg.influence_edges == (("A", "B"),)
        assert cfg.scheduler == "async" and cfg.seed == 0

    def test_round_trip(self):
        cfg = parse_scenario(doc(model_config={"initial": {"A": 2}}, seed=9, scheduler="async"))
        assert parse_scenario(cfg.to_json()) == cfg

    @pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.name)
    def test_shipped_scenarios_round_trip(self, path):
        cfg = load_scenario(path)
        assert parse_scenario(cfg.to_json()) == cfg

    @pytest.mark.parametrize(
        "text,where",
        [
            (doc(influence_edges=[["A", "q"]]), "influence_edges[0]"),
            (doc(levels=[{"id": "A", "dt": 0}]), "levels[0].dt"),
            (doc(levels=[{"id": "A"}]), "levels[0]"),
            (doc(model="lattice"), "model"),
            (doc(colour="blue"), "<root>"),
            (doc(levels=[{"id": "A", "dt": 1, "speed": 2}]), "levels[0]"),
            (doc(perception_edges=[["A", "A"]]), "perception_edges[0]"),
            (doc(model_config={"initial": {"Z": 1}}), "model_config.initial"),
            (doc(scheduler="lockstep"), "scheduler"),
            ('{"levels": [\n  {"id": "A", "dt": 1},,\n]}', "line 2"),
        ],
    )
    def test_first_error_is_located(self, text, where):
        with pytest.raises(ScenarioError) as info:
            parse_scenario(text)
        assert info.value.location.startswith(where)

    def test_edge_error_cites_the_edge(self):
        with pytest.raises(ScenarioError, match="'q'"):
            parse_scenario(doc(influence_edges=[["A", "q"]]))

    def test_fixed_model_levels(self):
        with pytest.raises(ScenarioError, match="levels"):
            parse_scenario(json.dumps({"levels": [{"id": "A", "dt": 1}], "model": "pingpong", "horizon": 3}))

    def test_build_world_overrides(self):
        cfg = parse_scenario(doc())
        w, _ = run_until(build_world(cfg, horizon=2))
        # A@1 waits for B, so A produces only at 0 and 2
        assert w.horizon == 2 and counter_values(w) == {"A": 2, "B": 4}
        assert counter_values(w) == counter_oracle(cfg.topology(), counter_config(cfg), "async", 2)


def run_cli(*args, capsys):
    code = main(list(map(str, args)))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_run_writes_trace_and_summary(self, tmp_path, capsys):
        trace, summary = tmp_path / "t.jsonl", tmp_path / "s.json"
        code, _, _ = run_cli(
            "run", "--scenario", SCENARIOS / "counter2.json", "--scheduler", "async", "--until", 10,
            "--trace", trace, "--summary", summary, capsys=capsys,
        )
        assert code == 0
        s = json.loads(summary.read_text())
        assert s["final_clocks"] == {"A": 12, "B": 12}
        assert s["reactions"] == {"A": 6, "B": 4}
        assert set(s["state_digests"]) == {"A", "B"}
        assert s["trace_digest"] == trace_digest(read_trace(trace))

    def test_summary_to_stdout(self, tmp_path, capsys):
        code, out, _ = run_cli("run", "--scenario", SCENARIOS / "pingpong.json", "--trace", tmp_path / "t", capsys=capsys)
        assert code == 0 and json.loads(out)["model_summary"]["stamps"][:4] == [2, 3, 4, 6]

    @pytest.mark.parametrize("name", ["counter2", "counter3_uniform", "pingpong", "droplet"])
    def test_run_then_validate_is_clean(self, name, tmp_path, capsys):
        scen, trace = SCENARIOS / f"{name}.json", tmp_path / "t.jsonl"
        assert run_cli("run", "--scenario", scen, "--trace", trace, "--summary", tmp_path / "s", capsys=capsys)[0] == 0
        code, out, _ = run_cli("validate-trace", "--trace", trace, "--scenario", scen, capsys=capsys)
        assert code == 0 and out.startswith("clean")

    def test_mutated_trace_fails_with_one_violation(self, tmp_path, capsys):
        scen, trace = SCENARIOS / "counter2.json", tmp_path / "t.jsonl"
        run_cli("run", "--scenario", scen, "--trace", trace, "--summary", tmp_path / "s", capsys=capsys)
        recs = [json.loads(l) for l in trace.read_text().splitlines()]
        i = next(i for i, r in enumerate(recs) if r["kind"] == "perception" and len(r["at"]["t"]) > 1)
        m = mutations.mutate(recs, "perception_future", i)
        trace.write_text("".join(json.dumps(r) + "\n" for r in m.records))
        code, out, _ = run_cli("validate-trace", "--trace", trace, "--scenario", scen, capsys=capsys)
        assert code == 1
        assert out.splitlines() == [out.splitlines()[0]]
        assert f"seq {m.seq}:" in out and "perception-causality" in out

    def test_identical_trace_bytes(self, tmp_path, capsys):
        scen = SCENARIOS / "droplet.json"
        for name in ("a", "b"):
            run_cli("run", "--scenario", scen, "--seed", 3, "--trace", tmp_path / name, "--summary", tmp_path / "s", capsys=capsys)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_oracle_matches_run(self, tmp_path, capsys):
        scen = SCENARIOS / "counter2.json"
        code, out, _ = run_cli("oracle", "--scenario", scen, capsys=capsys)
        assert code == 0
        run_cli("run", "--scenario", scen, "--trace", tmp_path / "t", "--summary", tmp_path / "s", capsys=capsys)
        summary = json.loads((tmp_path / "s").read_text())
        assert json.loads(out) == summary["model_summary"]["counters"]

    def test_oracle_counter_only(self, capsys):
        code, _, err = run_cli("oracle", "--scenario", SCENARIOS / "pingpong.json", capsys=capsys)
        assert code == 2 and "counter" in err

    def test_bad_scenario_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(doc(levels=[{"id": "A", "dt": 0}]))
        code, _, err = run_cli("run", "--scenario", bad, "--trace", tmp_path / "t", capsys=capsys)
        assert code == 2 and "levels[0].dt" in err

    def test_sync_on_mixed_steps_is_usage_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            "run", "--scenario", SCENARIOS / "counter2.json", "--scheduler", "sync", "--trace", tmp_path / "t",
            capsys=capsys,
        )
        assert code == 2 and "synchronous" in err

    def test_missing_file_and_bad_flags(self, tmp_path, capsys):
        assert run_cli("validate-trace", "--trace", tmp_path / "nope", "--scenario", SCENARIOS / "pingpong.json", capsys=capsys)[0] == 2
        with pytest.raises(SystemExit) as info:
            main(["run", "--scenario", "x", "--trace", "y", "--until", "-3"])
        assert info.value.code == 2
