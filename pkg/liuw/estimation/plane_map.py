# see LICENSE
"""
Incremental point map with nearest-neighbour plane extraction

Points are stored once per ``resolution`` voxel (first point wins) and
indexed by a hash of coarse ``index_voxel`` cells. A neighbour query
ends up visiting every cell that can hold one of its k nearest points
within the search radius, so the result equals an exhaustive search
restricted to that radius.

Cells are addressed by packing three signed integers in one ``int64``;
coordinates must stay within 2^20 cells of the origin on every axis
(about +-1 km at the 1 mm default resolution).
"""

from dataclasses import dataclass
import logging

import numpy as np

from liuw.errors import DegeneratePlane

logger = logging.getLogger(__name__)

_BITS = 21
_OFFSET = 1 << (_BITS - 1)
_MASK = (1 << _BITS) - 1


def _pack(cells):
    cells = np.asarray(cells, dtype=np.int64) + _OFFSET
    if cells.size and (cells.min() < 0 or cells.max() > _MASK):
        raise ValueError("coordinates out of the indexable range")

    return (cells[..., 0] << (2 * _BITS)) | (cells[..., 1] << _BITS) | \
        cells[..., 2]


def _cells(points, size):
    return np.floor(np.asarray(points, dtype=float) / size).astype(np.int64)


# offsets of a 2x2x2 block of cells
_CORNERS = np.array([[i, j, c] for i in (0, 1) for j in (0, 1)
                     for c in (0, 1)])


def _cube(reach):
    rng = np.arange(-reach, reach + 1)
    return np.stack(np.meshgrid(rng, rng, rng, indexing='ij'),
                    axis=-1).reshape(-1, 3)


def voxel_indices(points, size):
    """
    Indices of the first point falling in each ``size`` voxel

    Returned in increasing order so the input order is preserved.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if not len(points):
        return np.zeros(0, dtype=int)

    _, first = np.unique(_pack(_cells(points, size)), return_index=True)
    return np.sort(first)


def voxel_downsample(points, size):
    """Keeps one point per ``size`` voxel, the first one seen"""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    return points[voxel_indices(points, size)]


@dataclass(frozen=True)
class PlaneMapConfig:
    """
    Plane matching parameters

    :ivar k: neighbours used to fit a plane
    :ivar radius: search radius, meters
    :ivar max_rms: reject fits whose residual rms exceeds this, meters
    :ivar planarity_ratio: reject when the middle principal variance is
                           less than this many times the smallest
    :ivar index_voxel: cell size of the hash index, meters
    :ivar resolution: one stored point per voxel of this size, meters
    """
    k: int = 5
    radius: float = 1.0
    max_rms: float = 0.1
    planarity_ratio: float = 3.0
    index_voxel: float = 0.5
    resolution: float = 0.001

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("k must be at least 3")

        for name in ('radius', 'max_rms', 'planarity_ratio', 'index_voxel',
                     'resolution'):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be positive" % name)


@dataclass(frozen=True)
class PlaneFeature:
    """Plane through ``point`` with unit ``normal`` and fit residual ``rms``"""
    normal: np.ndarray
    point: np.ndarray
    rms: float


class VoxelPlaneMap:
    """
    I am the global map the LiDAR scans are registered against

    One writer inserts between updates; queries do not modify the
    stored points. Points live in a growing buffer and the cell index is
    kept sorted as they arrive, so an insert costs a merge, not a sort.
    """

    def __init__(self, config=None):
        self.config = config or PlaneMapConfig()
        self._buf = np.zeros((1024, 3))
        self._n = 0
        self._dedup_keys = np.zeros(0, dtype=np.int64)
        self._sorted_cells = np.zeros(0, dtype=np.int64)
        self._order = np.zeros(0, dtype=np.int64)
        self._offsets = _cube(int(np.ceil(self.config.radius /
                                          self.config.index_voxel)))

    def __len__(self):
        return self._n

    @property
    def points(self):
        """Stored points in insertion order (read-only view)"""
        view = self._buf[:self._n]
        view.setflags(write=False)
        return view

    def _append(self, new):
        need = self._n + len(new)
        if need > len(self._buf):
            grown = np.zeros((max(need, 2 * len(self._buf)), 3))
            grown[:self._n] = self._buf[:self._n]
            self._buf = grown

        self._buf[self._n:need] = new
        self._n = need

    def insert(self, points):
        """
        Adds ``points`` (global frame) to the map

        A point whose ``resolution`` voxel is already occupied is dropped,
        so inserting the same point twice stores it once.

        :param points: array of shape (n, 3)
        :raise ValueError: non-finite coordinates
        :return: number of points actually stored
        :rtype: int
        """
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ValueError("map points must be finite")

        if not len(points):
            return 0

        keys = _pack(_cells(points, self.config.resolution))
        uniq, first = np.unique(keys, return_index=True)
        pos = np.searchsorted(self._dedup_keys, uniq)
        known = pos < len(self._dedup_keys)
        known[known] = self._dedup_keys[pos[known]] == uniq[known]
        fresh = np.sort(first[~known])
        if not len(fresh):
            return 0

        self._dedup_keys = np.insert(self._dedup_keys, pos[~known],
                                     uniq[~known])
        new = points[fresh]
        start = self._n
        self._append(new)

        # new points go after stored ones of the same cell, in order
        cells = _pack(_cells(new, self.config.index_voxel))
        o = np.argsort(cells, kind='stable')
        at = np.searchsorted(self._sorted_cells, cells[o], side='right')
        self._sorted_cells = np.insert(self._sorted_cells, at, cells[o])
        self._order = np.insert(self._order, at, start + o)
        logger.debug("map: inserted %d of %d points, %d stored"
                     % (len(new), len(points), self._n))
        return len(new)

    def _search(self, queries, rows, cells, k, radius, idx_out, dist_out):
        """Ranks the points of ``cells`` (shape (len(rows), c, 3))"""
        q = queries[rows]
        keys = _pack(cells).reshape(-1)
        lo = np.searchsorted(self._sorted_cells, keys, side='left')
        hi = np.searchsorted(self._sorted_cells, keys, side='right')
        counts = hi - lo
        idx_out[rows] = -1
        dist_out[rows] = np.inf
        total = int(counts.sum())
        if not total:
            return

        pair = np.repeat(np.arange(len(rows)).repeat(cells.shape[1]), counts)
        group_start = np.repeat(np.cumsum(counts) - counts, counts)
        slot = np.arange(total) - group_start + np.repeat(lo, counts)
        cand = self._order[slot]
        dist = np.linalg.norm(self._buf[cand] - q[pair], axis=1)
        keep = dist <= radius
        pair, cand, dist = pair[keep], cand[keep], dist[keep]

        order = np.lexsort((cand, dist, pair))
        pair, cand, dist = pair[order], cand[order], dist[order]
        starts = np.searchsorted(pair, np.arange(len(rows)), side='left')
        rank = np.arange(len(pair)) - starts[pair]
        sel = rank < k
        idx_out[rows[pair[sel]], rank[sel]] = cand[sel]
        dist_out[rows[pair[sel]], rank[sel]] = dist[sel]

    def nearest(self, queries, k=None, radius=None):
        """
        Exact k nearest stored points within ``radius`` of each query

        The 2x2x2 index cells closest to a query are searched first.
        Every point nearer than the query's distance to the faces of that
        block lies inside it, so a query whose k-th neighbour is closer
        than that is done; the others are searched again over every cell
        that can hold a point within ``radius``.

        :param queries: array of shape (m, 3)
        :return: (indices, distances), both of shape (m, k); missing
                 neighbours are marked with index -1 and distance inf.
                 Neighbours are sorted by distance, ties by index.
        :rtype: tuple
        """
        k = k or self.config.k
        radius = self.config.radius if radius is None else radius
        queries = np.asarray(queries, dtype=float).reshape(-1, 3)
        m = len(queries)
        idx_out = np.full((m, k), -1, dtype=int)
        dist_out = np.full((m, k), np.inf)
        if not m or not self._n:
            return idx_out, dist_out

        size = self.config.index_voxel
        scaled = queries / size
        cells = np.floor(scaled).astype(np.int64)
        frac = scaled - cells
        step = np.where(frac < 0.5, -1, 1)
        block = cells[:, None, :] + _CORNERS[None] * step[:, None, :]
        inner = size * (0.5 + np.abs(frac - 0.5)).min(axis=1) * (1 - 1e-9)
        rows = np.arange(m)
        self._search(queries, rows, block, k, radius, idx_out, dist_out)

        rows = np.flatnonzero((dist_out[:, -1] >= inner) & (radius >= inner))
        if len(rows):
            offsets = self._offsets
            if radius > self.config.radius:
                offsets = _cube(int(np.ceil(radius / size)))

            around = cells[rows][:, None, :] + offsets[None]
            self._search(queries, rows, around, k, radius, idx_out, dist_out)

        logger.debug("map: %d queries, %d searched past the nearest cells"
                     % (m, len(rows)))
        return idx_out, dist_out

    def export_xyz(self, path):
        """Writes the map as ``x y z`` lines with 6 decimals"""
        with open(path, 'w') as f:
            for p in self.points:
                f.write("%.6f %.6f %.6f\n" % tuple(p))

        logger.info("wrote %d map points to %s" % (self._n, path))


def _canonical_sign(normals):
    # largest-magnitude component positive
    normals = np.atleast_2d(normals)
    pick = np.abs(normals).argmax(axis=1)
    sign = np.sign(normals[np.arange(len(normals)), pick])
    sign[sign == 0] = 1.0
    return normals * sign[:, None]


def _principal(stack):
    centers = stack.mean(axis=1)
    diff = stack - centers[:, None, :]
    cov = np.einsum('nki,nkj->nij', diff, diff) / stack.shape[1]
    values, vectors = np.linalg.eigh(cov)
    return centers, np.maximum(values, 0.0), vectors


def fit_plane(neighbors, config=None):
    """
    Least-squares plane through ``neighbors``

    :param neighbors: at least 5 points, shape (n, 3)
    :type config: PlaneMapConfig

    :raise ValueError: fewer than 5 points
    :raise DegeneratePlane: points are collinear or coincident

    :return: the plane, or None when the fit is rejected (rms above the
             gate or the two smallest principal variances within the
             planarity ratio)
    :rtype: PlaneFeature or None
    """
    config = config or PlaneMapConfig()
    pts = np.asarray(neighbors, dtype=float).reshape(-1, 3)
    if len(pts) < 5:
        raise ValueError("a plane fit needs at least 5 points, got %d"
                         % len(pts))

    centers, values, vectors = _principal(pts[None])
    lam = values[0]
    if lam[1] <= 1e-12 * max(lam[2], 1e-300) or lam[2] == 0:
        raise DegeneratePlane("neighbourhood is collinear or coincident")

    rms = float(np.sqrt(lam[0]))
    if rms > config.max_rms or lam[1] < config.planarity_ratio * lam[0]:
        return None

    normal = _canonical_sign(vectors[0][:, 0])[0]
    return PlaneFeature(normal, centers[0], rms)


def match_plane(plane_map, query):
    """
    Fits a plane to the neighbourhood of ``query``

    :type plane_map: VoxelPlaneMap
    :return: the plane, or None when fewer than k neighbours lie within
             the radius or the fit is rejected
    :rtype: PlaneFeature or None
    """
    cfg = plane_map.config
    idx, _ = plane_map.nearest(np.asarray(query, dtype=float)[None])
    if idx[0, -1] < 0:
        return None

    try:
        return fit_plane(plane_map.points[idx[0]], cfg)
    except DegeneratePlane:
        return None


def match_planes(plane_map, queries):
    """
    Batched :func:`match_plane`

    :param queries: array of shape (m, 3), global frame
    :return: (valid, normals, points, rms); ``valid`` is a boolean mask
             of length m and the other arrays hold one row per query
             (rows of invalid queries are zero)
    :rtype: tuple
    """
    cfg = plane_map.config
    queries = np.asarray(queries, dtype=float).reshape(-1, 3)
    m = len(queries)
    normals = np.zeros((m, 3))
    centers = np.zeros((m, 3))
    rms = np.zeros(m)
    valid = np.zeros(m, dtype=bool)
    idx, _ = plane_map.nearest(queries)
    full = idx[:, -1] >= 0
    if not full.any():
        return valid, normals, centers, rms

    stack = plane_map.points[idx[full]]
    c, lam, vec = _principal(stack)
    fit_rms = np.sqrt(lam[:, 0])
    ok = ((lam[:, 1] > 1e-12 * np.maximum(lam[:, 2], 1e-300)) &
          (fit_rms <= cfg.max_rms) &
          (lam[:, 1] >= cfg.planarity_ratio * lam[:, 0]))

    rows = np.flatnonzero(full)[ok]
    valid[rows] = True
    normals[rows] = _canonical_sign(vec[ok][:, :, 0])
    centers[rows] = c[ok]
    rms[rows] = fit_rms[ok]
    return valid, normals, centers, rms
