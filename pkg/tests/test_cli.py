"""Exit codes, config validation, and pipeline plumbing for the CLI."""

import pytest

from toponav.cli import load_config, main
from toponav.errors import ConfigError
from toponav.fixtures import two_room_map
from toponav.gridworld import load_map
from toponav.navharness import World, save_trajectory
from toponav.perception import ReachabilityCriteria, generate_sim_dataset, save_dataset
from toponav.se2 import Pose2D
from toponav.topograph import load_graph


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def test_defaults_without_config():
    cfg = load_config(None)
    assert cfg.map_kind == "two-room"
    assert cfg.n_queries == 100 and cfg.eval_every == 25


def test_config_overrides(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(
        "[gridworld]\nmap = apartment\nn_rays = 32\n"
        "[topograph]\nD_c = 1.5\n"
        "[navharness]\nauto_variance = yes\nloops = 2\n")
    cfg = load_config(str(p))
    assert cfg.map_kind == "apartment"
    assert cfg.n_rays == 32
    assert cfg.D_c == 1.5
    assert cfg.auto_variance is True and cfg.loops == 2


def test_config_rejects_unknown_section(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[planner]\nD_c = 1.5\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_config_rejects_unknown_key(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[topograph]\nD_x = 1.5\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_config_rejects_bad_value(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[topograph]\nD_c = huge\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_config_rejects_invalid_parameter_combination(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[topograph]\nD_m = -1.0\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_config_rejects_unknown_map(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[gridworld]\nmap = warehouse\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_missing_config_file_is_usage_error(tmp_path, capsys):
    rc = main(["collect", "--config", str(tmp_path / "nope.ini"),
               "--out", str(tmp_path / "t")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "command" in capsys.readouterr().out


def test_missing_out_is_usage_error(capsys):
    assert main(["gen-map"]) == 2
    assert "--out" in capsys.readouterr().err


def test_runtime_error_exits_one(tmp_path, capsys):
    rc = main(["build", str(tmp_path / "missing.traj"),
               "--out", str(tmp_path / "g")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def test_gen_map_is_seeded(tmp_path):
    a, b, c = (str(tmp_path / n) for n in ("a.map", "b.map", "c.map"))
    assert main(["gen-map", "--out", a, "--seed", "3"]) == 0
    assert main(["gen-map", "--out", b, "--seed", "3"]) == 0
    assert main(["gen-map", "--out", c, "--seed", "4"]) == 0
    assert open(a).read() == open(b).read()
    assert open(a).read() != open(c).read()
    grid = load_map(a)
    assert grid.nx == 100 and grid.ny == 80


def test_collect_build_navigate_chain(tmp_path, capsys):
    traj = str(tmp_path / "walk.traj")
    graph_path = str(tmp_path / "walk.graph")
    cfgp = tmp_path / "exp.ini"
    cfgp.write_text("[navharness]\nspacing = 0.3\n")
    assert main(["collect", "--config", str(cfgp), "--out", traj]) == 0
    assert main(["build", traj, "--config", str(cfgp), "--out", graph_path]) == 0
    assert open(graph_path).readline().strip() == "topograph/v1"
    graph, _ = load_graph(graph_path)
    goal = sorted(graph.vertices)[0]
    rc = main(["navigate", graph_path, "--config", str(cfgp),
               "--start", "1.6,2.0,0.6", "--goal", str(goal)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "success=" in out and "edges=" in out


def test_build_single_observation_trajectory(tmp_path):
    world = World(two_room_map())
    save_trajectory([world.observe(Pose2D(1.5, 1.5, 0.0))],
                    str(tmp_path / "one.traj"))
    out = str(tmp_path / "one.graph")
    assert main(["build", str(tmp_path / "one.traj"), "--out", out]) == 0
    graph, pool = load_graph(out)
    assert graph.n_vertices == 1 and graph.n_edges == 0
    assert len(pool) == 0


def test_navigate_unknown_goal_exits_one(tmp_path, capsys):
    traj = str(tmp_path / "w.traj")
    gpath = str(tmp_path / "w.graph")
    assert main(["collect", "--out", traj]) == 0
    assert main(["build", traj, "--out", gpath]) == 0
    rc = main(["navigate", gpath, "--start", "1.6,2.0,0.6", "--goal", "999999"])
    assert rc == 1
    assert "not in the graph" in capsys.readouterr().err


def test_navigate_rejects_malformed_start(tmp_path, capsys):
    traj = str(tmp_path / "w.traj")
    gpath = str(tmp_path / "w.graph")
    assert main(["collect", "--out", traj]) == 0
    assert main(["build", traj, "--out", gpath]) == 0
    assert main(["navigate", gpath, "--start", "one,two", "--goal", "0"]) == 2


def test_evaluate_writes_report(tmp_path, capsys):
    traj = str(tmp_path / "w.traj")
    gpath = str(tmp_path / "w.graph")
    report = str(tmp_path / "report.txt")
    cfgp = tmp_path / "exp.ini"
    cfgp.write_text("[navharness]\nn_goals = 2\nn_episodes = 3\n")
    assert main(["collect", "--config", str(cfgp), "--out", traj]) == 0
    assert main(["build", traj, "--config", str(cfgp), "--out", gpath]) == 0
    rc = main(["evaluate", gpath, "--config", str(cfgp), "--out", report])
    assert rc == 0
    text = open(report).read()
    assert text.count("episode=") == 3
    assert "success_rate=" in text.splitlines()[-1]
    assert capsys.readouterr().out == text


def test_lifelong_runs_are_byte_identical(tmp_path):
    cfgp = tmp_path / "exp.ini"
    cfgp.write_text(
        "[perception]\nfalse_positive_rate = 0.1\n"
        "[navharness]\nn_queries = 4\neval_every = 2\n"
        "n_goals = 2\nn_episodes = 2\nspacing = 0.4\n")
    one, two = str(tmp_path / "one.csv"), str(tmp_path / "two.csv")
    assert main(["lifelong", "--config", str(cfgp), "--seed", "9", "--out", one]) == 0
    assert main(["lifelong", "--config", str(cfgp), "--seed", "9", "--out", two]) == 0
    assert open(one).read() == open(two).read()
    assert open(one + ".graph").read() == open(two + ".graph").read()
    lines = open(one).read().splitlines()
    assert lines[0] == "queries,success_rate,n_vertices,n_edges"
    assert len(lines) == 4  # header + evals at 0, 2, 4


def test_losses_reports_means(tmp_path, capsys):
    pairs = generate_sim_dataset([two_room_map()], 40, ReachabilityCriteria(),
                                 rng_seed=5)
    dataset = str(tmp_path / "pairs.dataset")
    save_dataset(pairs, dataset, ReachabilityCriteria())
    assert main(["losses", dataset]) == 0
    out = capsys.readouterr().out
    assert "pairs=40" in out and "mean_total=" in out


def test_losses_rejects_garbage_dataset(tmp_path, capsys):
    p = tmp_path / "junk.dataset"
    p.write_text("hello\n")
    assert main(["losses", str(p)]) == 1
