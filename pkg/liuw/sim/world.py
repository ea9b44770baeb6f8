# see LICENSE
"""
Axis-aligned tunnel used to ray-cast synthetic LiDAR scans

The tunnel runs along +x from an end wall at x = 0. Its cross-section is
``width`` x ``height`` (walls at y = +-width/2, floor at z = 0, ceiling at
z = height) and the bounding planes continue indefinitely along +x. The
first ``outer_length`` meters are cluttered with boxes standing against
the walls; the rest is bare. Every box ends before x = outer_length and
nothing bounds the tunnel along +x, so a ray cast with range ``max_range``
from x0 >= outer_length + max_range sees only the walls, floor and
ceiling: its result does not change when x0 is moved further along +x.
Closer to the clutter, long rays running near the axis still reach it.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class WorldConfig:
    """
    :ivar outer_length: cluttered segment, meters
    :ivar inner_length: bare segment, meters
    :ivar width: wall to wall, meters
    :ivar height: floor to ceiling, meters
    :ivar n_clutter: boxes in the outer segment
    :ivar free_half_width: clutter never reaches closer than this to the
                           tunnel axis, meters
    :ivar layout_seed: seed of the clutter layout (kept apart from the
                       sensor noise seed so every run sees the same tunnel)
    """
    outer_length: float = 25.0
    inner_length: float = 75.0
    width: float = 4.0
    height: float = 3.0
    n_clutter: int = 20
    free_half_width: float = 1.2
    layout_seed: int = 7

    def __post_init__(self):
        for name in ('outer_length', 'inner_length', 'width', 'height'):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be positive" % name)

        if self.n_clutter < 0:
            raise ValueError("n_clutter must be nonnegative")

        if not 0 < self.free_half_width < self.width / 2:
            raise ValueError("free_half_width must lie inside the tunnel")

    @property
    def length(self):
        return self.outer_length + self.inner_length


class TunnelWorld:
    """
    I hold the tunnel geometry and answer ray queries against it

    :ivar boxes: clutter as an array of shape (n, 2, 3), lower and upper
                 corners
    """

    def __init__(self, config=None):
        self.config = config or WorldConfig()
        self.boxes = self._layout()

    def _layout(self):
        cfg = self.config
        rng = np.random.default_rng(cfg.layout_seed)
        half = cfg.width / 2
        boxes = np.zeros((cfg.n_clutter, 2, 3))
        if not cfg.n_clutter:
            return boxes

        slots = np.linspace(0.5, cfg.outer_length - 1.5, cfg.n_clutter)
        for i, x0 in enumerate(slots):
            length = rng.uniform(0.3, 1.0)
            depth = rng.uniform(0.3, half - cfg.free_half_width)
            top = rng.uniform(0.6, cfg.height - 0.4)
            side = 1.0 if i % 2 == 0 else -1.0
            x0 = x0 + rng.uniform(0.0, 0.4)
            y_in, y_out = side * (half - depth), side * half
            boxes[i, 0] = (x0, min(y_in, y_out), 0.0)
            boxes[i, 1] = (x0 + length, max(y_in, y_out), top)

        return boxes

    def contains(self, points):
        """True for points inside the tunnel and outside every box"""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        half = self.config.width / 2
        inside = ((p[:, 0] >= 0) & (np.abs(p[:, 1]) <= half) &
                  (p[:, 2] >= 0) & (p[:, 2] <= self.config.height))
        for lo, hi in self.boxes:
            inside &= ~np.all((p >= lo) & (p <= hi), axis=1)

        return inside

    def raycast(self, origins, directions, max_range):
        """
        Distance along each ray to the first surface

        :param origins: ray origins inside the tunnel, shape (n, 3) or (3,)
        :param directions: unit directions, shape (n, 3)
        :param max_range: hits beyond this distance are reported as inf
        :rtype: numpy.ndarray of shape (n,)
        """
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        o = np.broadcast_to(np.asarray(origins, dtype=float), d.shape)
        half = self.config.width / 2
        n = len(d)
        best = np.full(n, np.inf)

        with np.errstate(divide='ignore', invalid='ignore'):
            # exit through the bounding planes
            ty = np.where(d[:, 1] > 0, (half - o[:, 1]) / d[:, 1],
                          np.where(d[:, 1] < 0, (-half - o[:, 1]) / d[:, 1],
                                   np.inf))
            tz = np.where(d[:, 2] > 0,
                          (self.config.height - o[:, 2]) / d[:, 2],
                          np.where(d[:, 2] < 0, -o[:, 2] / d[:, 2], np.inf))
            tx = np.where(d[:, 0] < 0, -o[:, 0] / d[:, 0], np.inf)
            best = np.minimum(best, np.minimum(np.minimum(tx, ty), tz))

            # boxes outside the x span the rays can cover are skipped
            reach = np.minimum(best, max_range)
            x_end = o[:, 0] + d[:, 0] * reach
            boxes = self.boxes
            if len(boxes) and n:
                near = ((boxes[:, 1, 0] >= np.minimum(o[:, 0], x_end).min()) &
                        (boxes[:, 0, 0] <= np.maximum(o[:, 0], x_end).max()))
                boxes = boxes[near]

            if len(boxes):
                lo = boxes[None, :, 0, :]
                hi = boxes[None, :, 1, :]
                inv = 1.0 / d[:, None, :]
                t1 = (lo - o[:, None, :]) * inv
                t2 = (hi - o[:, None, :]) * inv
                # a zero direction component leaves 0 * inf = nan
                parallel = d[:, None, :] == 0
                inside_slab = (o[:, None, :] >= lo) & (o[:, None, :] <= hi)
                t_near = np.where(parallel,
                                  np.where(inside_slab, -np.inf, np.inf),
                                  np.minimum(t1, t2))
                t_far = np.where(parallel,
                                 np.where(inside_slab, np.inf, -np.inf),
                                 np.maximum(t1, t2))
                entry = t_near.max(axis=2)
                leave = t_far.min(axis=2)
                hit = (entry <= leave) & (entry > 0)
                t_box = np.where(hit, entry, np.inf).min(axis=1)
                best = np.minimum(best, t_box)

        best[(best < 0) | (best > max_range)] = np.inf
        return best
