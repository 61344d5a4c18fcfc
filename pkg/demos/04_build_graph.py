"""Collect a trajectory, distill it into a sparse graph, save and reload.

Construction samples the recorded observations in random order: anything an
existing vertex already covers is dropped, anything connectable becomes a
vertex with direction-checked edges.  The result is far smaller than the
trajectory yet every recorded pose still localizes.
"""

import tempfile

from toponav import (
    BuildParams, OracleEstimator, World, build_graph, collect_trajectory,
    load_graph, localize, save_graph,
)
from toponav.fixtures import apartment_map, apartment_route

grid = apartment_map()
world = World(grid)
traj = collect_trajectory(world, apartment_route(), loops=3, spacing=0.2)
print(f"trajectory: {len(traj)} observations over 3 loops")

est = OracleEstimator(grid)
params = BuildParams()
graph, pool = build_graph(traj, est, params)
print(f"graph: {graph.n_vertices} vertices, {graph.n_edges} edges "
      f"({graph.n_vertices / len(traj):.0%} of the trajectory)")
print(f"pool holds {len(pool)} leftover observations for later expansion")

misses = sum(localize(graph, o, est, params) is None for o in traj)
print(f"observations that fail to localize: {misses}")

mus = [b.mu for b in graph.edges.values()]
print(f"edge travel costs: min={min(mus):.2f} mean={sum(mus)/len(mus):.2f} "
      f"max={max(mus):.2f}")

with tempfile.NamedTemporaryFile(suffix=".graph", delete=False) as fh:
    path = fh.name
save_graph(graph, pool, path)
g2, p2 = load_graph(path)
print(f"saved and reloaded: {g2.n_vertices} vertices, {g2.n_edges} edges, "
      f"{len(p2)} pooled")
