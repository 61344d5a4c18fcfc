"""Planar rigid-motion toolbox tour.

Poses live in SE(2); a waypoint is the relative transform between two of
them.  The distance between poses is the Frobenius norm of the matrix
logarithm of that transform, which is what makes merging and localization
thresholds comparable across pure translations and pure rotations.
"""

import math

import numpy as np
import scipy.linalg

from toponav import (
    Pose2D, Waypoint, compose, dubins_length, relative, se2_exp, se2_log,
    waypoint_distance, waypoint_matrix,
)

a = Pose2D(1.0, 2.0, math.pi / 4)
b = Pose2D(2.5, 2.2, -math.pi / 3)

w = relative(a, b)
print(f"a = {a}")
print(f"b = {b}")
print(f"waypoint a->b: dx={w.dx:+.4f} dy={w.dy:+.4f} dtheta={w.dtheta:+.4f}")

back = compose(a, w)
print(f"compose(a, waypoint) recovers b: ({back.x:.4f}, {back.y:.4f}, {back.theta:.4f})")

print()
print("distance examples")
for wp in (Waypoint(1, 0, 0), Waypoint(0, 0, math.pi / 2), w):
    ours = waypoint_distance(wp)
    ref = np.linalg.norm(scipy.linalg.logm(waypoint_matrix(wp)), "fro")
    print(f"  ({wp.dx:+.2f},{wp.dy:+.2f},{wp.dtheta:+.2f})  "
          f"distance={ours:.6f}  matrix-log norm={ref:.6f}")

# log and exp are exact inverses away from the pi singularity
t = se2_log(w)
print()
print(f"twist of a->b: vx={t.vx:.4f} vy={t.vy:.4f} omega={t.omega:.4f}")
rt = se2_exp(t)
print(f"exp(log) round trip error: {max(abs(rt.dx - w.dx), abs(rt.dy - w.dy)):.2e}")

# dubins_length is the shortest forward-only path with bounded turning,
# the feasibility yardstick used by the reachability gates
print()
straight = dubins_length(Pose2D(0, 0, 0), Pose2D(2, 0, 0), turn_radius=0.3)
lateral = dubins_length(Pose2D(0, 0, 0), Pose2D(0, 1, 0), turn_radius=0.3)
behind = dubins_length(Pose2D(0, 0, 0), Pose2D(-1, 0, 0), turn_radius=0.3)
print(f"dubins lengths (radius 0.3): ahead 2m: {straight:.3f}  "
      f"sidestep 1m: {lateral:.3f}  behind 1m: {behind:.3f}")
print("a target behind costs loops, which is why backward pairs fail the ratio gate")
