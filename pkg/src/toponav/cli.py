"""Command-line front end.

Subcommands cover the whole pipeline: map generation, trajectory
collection, graph construction, single episodes, evaluation, the
lifelong maintenance experiment, and dataset loss reporting.  Every
run is a pure function of the config file plus --seed, so identical
invocations produce identical outputs.

Exit codes: 0 on success, 1 on runtime errors, 2 on usage or config
errors.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, Error
from .fixtures import apartment_map, apartment_route, two_room_map, two_room_route
from .gridworld import (
    DEFAULT_ROBOT_RADIUS,
    ControllerGains,
    GridMap,
    SensorConfig,
    generate_rooms_map,
    load_map,
    save_map,
)
from .maintenance import MaintenanceParams
from .navharness import (
    EpisodeLimits,
    OdomNoise,
    World,
    collect_trajectory,
    estimate_distance_variance,
    evaluate,
    load_trajectory,
    make_test_set,
    run_episode,
    run_lifelong,
    save_trajectory,
)
from .perception import (
    NoiseConfig,
    OracleEstimator,
    ReachabilityCriteria,
    load_dataset,
    loss_position,
    loss_reachability,
    loss_rotation,
    loss_total,
)
from .se2 import Pose2D
from .topograph import BuildParams, build_graph, load_graph, save_graph


@dataclass
class ExperimentConfig:
    # world
    map_kind: str = "two-room"          # two-room | apartment | generated
    map_file: str | None = None         # overrides map_kind when set
    width: float = 10.0
    height: float = 8.0
    map_resolution: float = 0.1
    rooms_x: int = 2
    rooms_y: int = 2
    door_width: float = 0.8
    fov: float = math.pi / 2
    n_rays: int = 64
    max_range: float = 5.0
    dt: float = 0.1
    robot_radius: float = DEFAULT_ROBOT_RADIUS
    k_rho: float = 0.5
    k_alpha: float = 1.5
    k_beta: float = -0.6
    v_max: float = 0.5
    omega_max: float = 1.5
    # estimator
    pos_sigma: float = 0.0
    theta_sigma: float = 0.0
    false_positive_rate: float = 0.0
    false_negative_rate: float = 0.0
    L_min: float = 0.3
    R_max: float = 1.6
    E_max: float = 2.5
    Theta_max: float = math.pi / 2
    turn_radius: float = 0.3
    alpha: float = 1.0
    beta: float = 1.0
    # graph construction
    D_m: float = 0.5
    D_c: float = 2.0
    D_loc: float = 1.0
    r_connect_min: float = 0.5
    sigma2_init: float = 0.25
    # maintenance
    R_p: float = 0.3
    p_s_given_r1: float = 0.9
    p_s_given_r0: float = 0.2
    relax_D_c_factor: float = 1.5
    relax_D_m_factor: float = 0.5
    sigma2_obs: float = 0.25
    # harness
    loops: int = 1
    spacing: float = 0.2
    odom_pos_sigma: float = 0.0
    odom_theta_sigma: float = 0.0
    max_steps: int = 1000
    max_collisions: int = 20
    pos_tol: float = 0.72
    yaw_tol: float = 0.4
    recovery_rotation_step: float = math.pi / 6
    max_recovery_rotations: int = 12
    n_queries: int = 100
    eval_every: int = 25
    n_goals: int = 5
    n_episodes: int = 10
    auto_variance: bool = False

    # -- typed views ------------------------------------------------------

    def sensor(self) -> SensorConfig:
        return SensorConfig(fov=self.fov, n_rays=self.n_rays, max_range=self.max_range)

    def gains(self) -> ControllerGains:
        return ControllerGains(self.k_rho, self.k_alpha, self.k_beta,
                               self.v_max, self.omega_max)

    def criteria(self) -> ReachabilityCriteria:
        return ReachabilityCriteria(
            L_min=self.L_min, R_max=self.R_max, E_max=self.E_max,
            Theta_max=self.Theta_max, turn_radius=self.turn_radius,
            fov=self.fov, max_range=self.max_range)

    def noise(self, seed: int) -> NoiseConfig:
        return NoiseConfig(
            pos_sigma=self.pos_sigma, theta_sigma=self.theta_sigma,
            false_positive_rate=self.false_positive_rate,
            false_negative_rate=self.false_negative_rate, seed=seed)

    def build_params(self, seed: int, sigma2_init: float | None = None) -> BuildParams:
        return BuildParams(
            D_m=self.D_m, D_c=self.D_c, D_loc=self.D_loc,
            r_connect_min=self.r_connect_min, rng_seed=seed,
            sigma2_init=self.sigma2_init if sigma2_init is None else sigma2_init)

    def maint_params(self, sigma2_obs: float | None = None) -> MaintenanceParams:
        return MaintenanceParams(
            R_p=self.R_p, p_s_given_r1=self.p_s_given_r1,
            p_s_given_r0=self.p_s_given_r0,
            relax_D_c_factor=self.relax_D_c_factor,
            relax_D_m_factor=self.relax_D_m_factor,
            sigma2_obs=self.sigma2_obs if sigma2_obs is None else sigma2_obs)

    def limits(self) -> EpisodeLimits:
        return EpisodeLimits(
            max_steps=self.max_steps, max_collisions=self.max_collisions,
            pos_tol=self.pos_tol, yaw_tol=self.yaw_tol,
            recovery_rotation_step=self.recovery_rotation_step,
            max_recovery_rotations=self.max_recovery_rotations)

    def validate(self) -> None:
        if self.map_kind not in ("two-room", "apartment", "generated"):
            raise ConfigError(f"unknown map {self.map_kind!r}: "
                              "expected two-room, apartment, or generated")
        try:
            self.sensor()
            self.gains()
            self.criteria()
            self.noise(0)
            self.build_params(0)
            self.maint_params()
            self.limits()
        except Error as e:
            raise ConfigError(str(e)) from e


def _to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (ExperimentConfig attribute, caster)
_SCHEMA = {
    "gridworld": {
        "map": ("map_kind", str),
        "map_file": ("map_file", str),
        "width": ("width", float),
        "height": ("height", float),
        "resolution": ("map_resolution", float),
        "rooms_x": ("rooms_x", int),
        "rooms_y": ("rooms_y", int),
        "door_width": ("door_width", float),
        "fov": ("fov", float),
        "n_rays": ("n_rays", int),
        "max_range": ("max_range", float),
        "dt": ("dt", float),
        "robot_radius": ("robot_radius", float),
        "k_rho": ("k_rho", float),
        "k_alpha": ("k_alpha", float),
        "k_beta": ("k_beta", float),
        "v_max": ("v_max", float),
        "omega_max": ("omega_max", float),
    },
    "perception": {
        "pos_sigma": ("pos_sigma", float),
        "theta_sigma": ("theta_sigma", float),
        "false_positive_rate": ("false_positive_rate", float),
        "false_negative_rate": ("false_negative_rate", float),
        "L_min": ("L_min", float),
        "R_max": ("R_max", float),
        "E_max": ("E_max", float),
        "Theta_max": ("Theta_max", float),
        "turn_radius": ("turn_radius", float),
        "alpha": ("alpha", float),
        "beta": ("beta", float),
    },
    "topograph": {
        "D_m": ("D_m", float),
        "D_c": ("D_c", float),
        "D_loc": ("D_loc", float),
        "r_connect_min": ("r_connect_min", float),
        "sigma2_init": ("sigma2_init", float),
    },
    "maintenance": {
        "R_p": ("R_p", float),
        "p_s_given_r1": ("p_s_given_r1", float),
        "p_s_given_r0": ("p_s_given_r0", float),
        "relax_D_c_factor": ("relax_D_c_factor", float),
        "relax_D_m_factor": ("relax_D_m_factor", float),
        "sigma2_obs": ("sigma2_obs", float),
    },
    "navharness": {
        "loops": ("loops", int),
        "spacing": ("spacing", float),
        "odom_pos_sigma": ("odom_pos_sigma", float),
        "odom_theta_sigma": ("odom_theta_sigma", float),
        "max_steps": ("max_steps", int),
        "max_collisions": ("max_collisions", int),
        "pos_tol": ("pos_tol", float),
        "yaw_tol": ("yaw_tol", float),
        "recovery_rotation_step": ("recovery_rotation_step", float),
        "max_recovery_rotations": ("max_recovery_rotations", int),
        "n_queries": ("n_queries", int),
        "eval_every": ("eval_every", int),
        "n_goals": ("n_goals", int),
        "n_episodes": ("n_episodes", int),
        "auto_variance": ("auto_variance", _to_bool),
    },
}


def load_config(path: str | None) -> ExperimentConfig:
    """Parse an INI-style config; unknown sections or keys are errors."""
    cfg = ExperimentConfig()
    if path is None:
        cfg.validate()
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case so D_m stays D_m
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except configparser.Error as e:
        raise ConfigError(f"malformed config {path}: {e}") from e
    for section in parser.sections():
        keys = _SCHEMA.get(section)
        if keys is None:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            entry = keys.get(key)
            if entry is None:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            attr, cast = entry
            try:
                setattr(cfg, attr, cast(raw))
            except ValueError as e:
                raise ConfigError(f"{path}: bad value for {section}.{key}: {e}") from e
    cfg.validate()
    return cfg


def make_grid(cfg: ExperimentConfig, seed: int) -> GridMap:
    if cfg.map_file is not None:
        return load_map(cfg.map_file)
    if cfg.map_kind == "two-room":
        return two_room_map(cfg.map_resolution)
    if cfg.map_kind == "apartment":
        return apartment_map(cfg.map_resolution)
    return generate_rooms_map(cfg.width, cfg.height, cfg.map_resolution,
                              cfg.rooms_x, cfg.rooms_y, cfg.door_width, seed)


def make_route(cfg: ExperimentConfig) -> list[Pose2D]:
    if cfg.map_file is None and cfg.map_kind == "two-room":
        return two_room_route()
    if cfg.map_file is None and cfg.map_kind == "apartment":
        return apartment_route()
    raise ConfigError("collection needs a bundled map with a route: "
                      "set [gridworld] map = two-room or apartment")


def make_world(cfg: ExperimentConfig, grid: GridMap) -> World:
    return World(grid, sensor=cfg.sensor(), gains=cfg.gains(), dt=cfg.dt,
                 robot_radius=cfg.robot_radius)


def make_estimator(cfg: ExperimentConfig, grid: GridMap, seed: int) -> OracleEstimator:
    return OracleEstimator(grid, noise=cfg.noise(seed), criteria=cfg.criteria(),
                           robot_radius=cfg.robot_radius, n_rays=cfg.n_rays)


def _require_out(args) -> str:
    if args.out is None:
        raise ConfigError(f"{args.command} requires --out")
    return args.out


def _odom_noise(cfg: ExperimentConfig, seed: int) -> OdomNoise | None:
    if cfg.odom_pos_sigma == 0.0 and cfg.odom_theta_sigma == 0.0:
        return None
    return OdomNoise(cfg.odom_pos_sigma, cfg.odom_theta_sigma, seed)


def _parse_pose(text: str) -> Pose2D:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"pose must be 'x,y,theta', got {text!r}")
    try:
        return Pose2D(*(float(p) for p in parts))
    except ValueError as e:
        raise ConfigError(f"pose must be numeric 'x,y,theta', got {text!r}") from e


def _episode_line(tag: str, res) -> str:
    reason = res.failure_reason or "none"
    return (f"{tag} success={res.success} reason={reason} steps={res.steps} "
            f"collisions={res.collisions} edges={res.edges_traversed} "
            f"pos_err={res.final_pos_error:.3f} yaw_err={res.final_yaw_error:.3f}")


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _cmd_gen_map(args, cfg: ExperimentConfig) -> int:
    out = _require_out(args)
    grid = generate_rooms_map(cfg.width, cfg.height, cfg.map_resolution,
                              cfg.rooms_x, cfg.rooms_y, cfg.door_width, args.seed)
    save_map(grid, out)
    if args.verbose:
        print(f"wrote {grid.nx}x{grid.ny} map ({grid.size_x:.1f} x "
              f"{grid.size_y:.1f} m) to {out}")
    return 0


def _cmd_collect(args, cfg: ExperimentConfig) -> int:
    out = _require_out(args)
    grid = make_grid(cfg, args.seed)
    route = make_route(cfg)
    world = make_world(cfg, grid)
    traj = collect_trajectory(world, route, cfg.loops, cfg.spacing,
                              _odom_noise(cfg, args.seed))
    save_trajectory(traj, out)
    if args.verbose:
        print(f"wrote {len(traj)} observations to {out}")
    return 0


def _cmd_build(args, cfg: ExperimentConfig) -> int:
    out = _require_out(args)
    traj = load_trajectory(args.trajectory)
    grid = make_grid(cfg, args.seed)
    estimator = make_estimator(cfg, grid, args.seed)
    graph, pool = build_graph(traj, estimator, cfg.build_params(args.seed))
    save_graph(graph, pool, out)
    if args.verbose:
        print(f"built graph: {graph.n_vertices} vertices, {graph.n_edges} edges, "
              f"{len(pool)} pool observations")
    return 0


def _cmd_navigate(args, cfg: ExperimentConfig) -> int:
    grid = make_grid(cfg, args.seed)
    world = make_world(cfg, grid)
    estimator = make_estimator(cfg, grid, args.seed)
    graph, pool = load_graph(args.graph)
    world._next_id = max(list(graph.vertices) + [o.id for o in pool], default=-1) + 1
    res = run_episode(world, graph, pool, estimator, _parse_pose(args.start),
                      args.goal, cfg.limits(), cfg.build_params(args.seed),
                      cfg.maint_params(), maintain=args.maintain,
                      expand_rng=np.random.default_rng([args.seed, 2]))
    print(_episode_line(f"episode goal={args.goal}", res))
    if args.verbose:
        for ev in res.maintenance_events:
            print(ev.line(0))
    if args.maintain and args.out is not None:
        save_graph(graph, pool, args.out)
    return 0


def _cmd_evaluate(args, cfg: ExperimentConfig) -> int:
    grid = make_grid(cfg, args.seed)
    world = make_world(cfg, grid)
    estimator = make_estimator(cfg, grid, args.seed)
    graph, _ = load_graph(args.graph)
    limits = cfg.limits()
    test_set = make_test_set(world, graph, cfg.n_goals, cfg.n_episodes,
                             np.random.default_rng([args.seed, 3]), limits)
    rate, results = evaluate(world, graph, estimator, test_set, limits,
                             cfg.build_params(args.seed))
    lines = [_episode_line(f"episode={i} goal={goal}", r)
             for i, ((_, goal), r) in enumerate(zip(test_set, results))]
    lines.append(f"success_rate={rate:.6f} episodes={len(results)}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def _cmd_lifelong(args, cfg: ExperimentConfig) -> int:
    out = _require_out(args)
    seed = args.seed
    grid = make_grid(cfg, seed)
    world = make_world(cfg, grid)
    route = make_route(cfg)
    traj = collect_trajectory(world, route, cfg.loops, cfg.spacing,
                              _odom_noise(cfg, seed))
    estimator = make_estimator(cfg, grid, seed)
    sigma2 = None
    if cfg.auto_variance:
        sigma2 = estimate_distance_variance(estimator, traj, cfg.build_params(seed))
    build_params = cfg.build_params(seed, sigma2_init=sigma2)
    graph, pool = build_graph(traj, estimator, build_params)
    if args.verbose:
        print(f"built graph from {len(traj)} observations: "
              f"{graph.n_vertices} vertices, {graph.n_edges} edges")
        if sigma2 is not None:
            print(f"estimated distance variance {sigma2:.6f}")
    limits = cfg.limits()
    test_set = make_test_set(world, graph, cfg.n_goals, cfg.n_episodes,
                             np.random.default_rng([seed, 3]), limits)
    curve = run_lifelong(world, graph, pool, estimator, cfg.n_queries,
                         cfg.eval_every, test_set, limits, build_params,
                         cfg.maint_params(sigma2_obs=sigma2), seed)
    with open(out, "w") as fh:
        fh.write(curve.to_table())
    save_graph(graph, pool, out + ".graph")
    if args.verbose:
        q, rate, nv, ne = curve.eval_points[-1]
        print(f"final eval: queries={q} success_rate={rate:.6f} "
              f"vertices={nv} edges={ne}")
    return 0


def _cmd_losses(args, cfg: ExperimentConfig) -> int:
    records = load_dataset(args.dataset)
    grid = make_grid(cfg, args.seed)
    world = make_world(cfg, grid)
    estimator = make_estimator(cfg, grid, args.seed)
    cache: dict[int, object] = {}

    def obs_for(oid, pose):
        got = cache.get(oid)
        if got is None:
            got = cache[oid] = world.observe(pose, oid=oid)
        return got

    totals = []
    reach = []
    pos = []
    rot = []
    for rec in records:
        pred = estimator.predict(obs_for(rec.src_id, rec.src_pose),
                                 obs_for(rec.dst_id, rec.dst_pose))
        totals.append(loss_total(rec.r, rec.w, pred, cfg.alpha, cfg.beta))
        reach.append(loss_reachability(rec.r, pred.r_hat))
        if rec.r:
            pos.append(loss_position(rec.w, pred.w_hat))
            rot.append(loss_rotation(rec.w, pred.w_hat))
    mean = lambda xs: sum(xs) / len(xs) if xs else float("nan")
    text = (f"pairs={len(records)} positive={len(pos)} "
            f"mean_total={mean(totals):.6f} mean_reachability={mean(reach):.6f} "
            f"mean_position={mean(pos):.6f} mean_rotation={mean(rot):.6f}\n")
    sys.stdout.write(text)
    if args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


_COMMANDS = {
    "gen-map": _cmd_gen_map,
    "collect": _cmd_collect,
    "build": _cmd_build,
    "navigate": _cmd_navigate,
    "evaluate": _cmd_evaluate,
    "lifelong": _cmd_lifelong,
    "losses": _cmd_losses,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--seed", type=int, default=0, metavar="INT")
    common.add_argument("--out", metavar="PATH", help="output file")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="toponav",
        description="Topological navigation experiments on a 2D gridworld.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    sub.add_parser("gen-map", parents=[common],
                   help="generate a seeded multi-room map file")
    sub.add_parser("collect", parents=[common],
                   help="drive the bundled route and record a trajectory file")
    p = sub.add_parser("build", parents=[common],
                       help="build a graph file from a trajectory file")
    p.add_argument("trajectory", help="trajectory file")
    p = sub.add_parser("navigate", parents=[common],
                       help="run a single episode against a graph file")
    p.add_argument("graph", help="graph file")
    p.add_argument("--start", required=True, metavar="X,Y,THETA")
    p.add_argument("--goal", required=True, type=int, metavar="VERTEX")
    p.add_argument("--maintain", action="store_true",
                   help="update edge beliefs during the episode")
    p = sub.add_parser("evaluate", parents=[common],
                       help="success rate of a sampled test set on a graph file")
    p.add_argument("graph", help="graph file")
    sub.add_parser("lifelong", parents=[common],
                   help="full collect/build/maintain experiment; writes the "
                        "eval table and final graph")
    p = sub.add_parser("losses", parents=[common],
                       help="mean estimator losses over a dataset file")
    p.add_argument("dataset", help="dataset file")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (Error, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
