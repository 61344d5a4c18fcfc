"""Hand-built maps and patrol routes shared by tests, demos, and the CLI.

Route legs are straight-line drivable: the feedback controller has no
obstacle avoidance, so every leg (including the closing one) keeps a
clear corridor, passing doorways head-on through their centers.
"""

import math

import numpy as np

from .gridworld import GridMap
from .se2 import Pose2D


def _headed_loop(points):
    # Each pose faces its direction of arrival.  The controller's heading
    # term then vanishes along straight legs, so it drives them straight
    # instead of arcing off-corridor to meet the next leg's heading.
    poses = []
    for i, (x, y) in enumerate(points):
        px, py = points[i - 1]
        poses.append(Pose2D(x, y, math.atan2(y - py, x - px)))
    return poses


def two_room_map(resolution: float = 0.1) -> GridMap:
    """7 x 5 m: two rooms split at x = 3.5 with a 1 m doorway at mid-height."""
    nx = int(round(7.0 / resolution))
    ny = int(round(5.0 / resolution))
    occ = np.zeros((ny, nx), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    div = int(round(3.5 / resolution))
    occ[:, div] = True
    occ[int(round(2.0 / resolution)):int(round(3.0 / resolution)), div] = False
    return GridMap(resolution, occ)


def two_room_route() -> list[Pose2D]:
    """Tour of both rooms, walked out and back.

    Rows run head-on into the divider well away from the doorway, the
    doorway itself is crossed straight through, and all turns happen in
    open space.  Walking the list both ways covers each leg in both
    travel directions."""
    out = [
        (1.3, 1.0), (3.2, 1.0),
        (1.3, 4.0), (3.2, 4.0),
        (2.0, 4.0), (2.0, 1.0),
        (2.2, 2.5), (4.7, 2.5),
        (4.7, 1.0), (4.0, 1.0),
        (5.9, 1.0), (5.9, 4.0),
        (4.0, 4.0),
    ]
    return _headed_loop(out + out[-2:0:-1])


def apartment_map(resolution: float = 0.1) -> GridMap:
    """10 x 8 m, four rooms: full walls at x = 5 and y = 4 with a 1 m
    doorway in every shared wall."""
    nx = int(round(10.0 / resolution))
    ny = int(round(8.0 / resolution))
    occ = np.zeros((ny, nx), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    wx = int(round(5.0 / resolution))
    wy = int(round(4.0 / resolution))
    occ[:, wx] = True
    occ[wy, :] = True

    def span(lo, hi):
        return slice(int(round(lo / resolution)), int(round(hi / resolution)))

    occ[span(1.5, 2.5), wx] = False   # door between the two lower rooms
    occ[span(5.5, 6.5), wx] = False   # door between the two upper rooms
    occ[wy, span(2.0, 3.0)] = False   # door on the left side
    occ[wy, span(7.0, 8.0)] = False   # door on the right side
    return GridMap(resolution, occ)


def apartment_route() -> list[Pose2D]:
    """Rectangle through all four rooms; every leg crosses one doorway
    head-on."""
    return _headed_loop([(2.5, 2.0), (7.5, 2.0), (7.5, 6.0), (2.5, 6.0)])
