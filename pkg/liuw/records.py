# see LICENSE
"""
Time-tagged sensor samples and the line-delimited log format

Every sample type is an immutable value. A log is a text file with one
JSON object per line::

    {"t": 0.005, "kind": "imu", "gyro": [gx, gy, gz], "accel": [ax, ay, az]}
    {"t": 0.1, "kind": "lidar", "points": [[x, y, z, t_offset], ...]}
    {"t": 0.02, "kind": "wheel", "vel": [vx, vy, vz], "sigma": [sx, sy, sz]}
    {"t": 0.05, "kind": "uwb_range", "anchor": 100, "range": d, "sigma": s}
    {"t": 0.05, "kind": "uwb_fix", "pos": [x, y, z], "sigma": [sx, sy, sz]}
    {"t": 0.1, "kind": "ground_truth", "pos": [x, y, z],
     "quat": [qx, qy, qz, qw], "vel": [vx, vy, vz]}

Floats are written with 9 significant digits. Records are sorted by
``t``; ties are broken by :data:`KIND_ORDER`.
"""

from dataclasses import dataclass
import json
import logging

import numpy as np

from liuw.errors import LogFormatError
from liuw.utils import as_vector3, frozen, round_sig

logger = logging.getLogger(__name__)

IMU = 'imu'
LIDAR = 'lidar'
WHEEL = 'wheel'
UWB_RANGE = 'uwb_range'
UWB_FIX = 'uwb_fix'
GROUND_TRUTH = 'ground_truth'

KIND_ORDER = {
    IMU: 0,
    WHEEL: 1,
    UWB_RANGE: 2,
    UWB_FIX: 3,
    LIDAR: 4,
    GROUND_TRUTH: 5,
}

MAX_SWEEP = 0.2


@dataclass(frozen=True)
class ImuSample:
    """Bias-uncorrected gyro (rad/s) and specific force (m/s^2), body frame"""
    t: float
    gyro: np.ndarray
    accel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'gyro', frozen(as_vector3(self.gyro, "gyro")))
        object.__setattr__(self, 'accel',
                           frozen(as_vector3(self.accel, "accel")))


@dataclass(frozen=True)
class LidarScan:
    """
    One LiDAR sweep

    ``points`` has shape (n, 3) in the LiDAR frame; ``t_offset`` holds the
    per-point sampling time relative to ``t_end`` (all in [-0.2, 0]).
    """
    t_end: float
    points: np.ndarray
    t_offset: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        offsets = np.asarray(self.t_offset, dtype=float).reshape(-1)
        if len(points) != len(offsets):
            raise ValueError("points and t_offset differ in length")

        if not np.all(np.isfinite(points)):
            raise ValueError("scan has non-finite coordinates")

        if len(offsets) and (offsets.min() < -MAX_SWEEP or offsets.max() > 0):
            raise ValueError("t_offset must lie in [-%g, 0]" % MAX_SWEEP)

        object.__setattr__(self, 'points', frozen(points))
        object.__setattr__(self, 't_offset', frozen(offsets))

    def __len__(self):
        return len(self.points)

    @property
    def t(self):
        return self.t_end


@dataclass(frozen=True)
class WheelSample:
    """Wheel-frame velocity; lateral and vertical entries are 0 by NHC"""
    t: float
    vel_W: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'vel_W', frozen(as_vector3(self.vel_W,
                                                            "vel_W")))
        sigma = as_vector3(self.sigma, "sigma")
        if np.any(sigma <= 0):
            raise ValueError("wheel sigma must be positive")

        object.__setattr__(self, 'sigma', frozen(sigma))


@dataclass(frozen=True)
class UwbRangeSample:
    """Range in meters from the anchor ``anchor_id`` to the UWB antenna"""
    t: float
    anchor_id: int
    range: float
    sigma: float

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("range must be positive")

        if not self.sigma > 0:
            raise ValueError("range sigma must be positive")


@dataclass(frozen=True)
class UwbPositionFix:
    """Antenna position in the global frame with per-axis sigma"""
    t: float
    pos: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'pos', frozen(as_vector3(self.pos, "pos")))
        sigma = as_vector3(self.sigma, "sigma")
        if np.any(sigma <= 0):
            raise ValueError("fix sigma must be positive")

        object.__setattr__(self, 'sigma', frozen(sigma))


@dataclass(frozen=True)
class GroundTruthSample:
    """True IMU pose and velocity; ``quat`` is (qx, qy, qz, qw)"""
    t: float
    pos: np.ndarray
    quat: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'pos', frozen(as_vector3(self.pos, "pos")))
        object.__setattr__(self, 'vel', frozen(as_vector3(self.vel, "vel")))
        quat = np.asarray(self.quat, dtype=float).reshape(-1)
        if quat.shape != (4,):
            raise ValueError("quat must have 4 entries")

        object.__setattr__(self, 'quat', frozen(quat))


@dataclass(frozen=True)
class AnchorConfig:
    """Surveyed position of a UWB anchor in the global frame"""
    anchor_id: int
    pos_G: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'pos_G', frozen(as_vector3(self.pos_G,
                                                            "pos_G")))


@dataclass(frozen=True)
class SensorRecord:
    """A sample tagged with its kind, as stored in a log"""
    t: float
    kind: str
    payload: object

    def __post_init__(self):
        if self.kind not in KIND_ORDER:
            raise ValueError("unknown record kind: %s" % self.kind)

    @property
    def sort_key(self):
        return (self.t, KIND_ORDER[self.kind])


def make_record(sample):
    """Wraps ``sample`` in a :class:`SensorRecord` of the matching kind"""
    kind = _KIND_OF_TYPE[type(sample)]
    return SensorRecord(sample.t, kind, sample)


def sort_records(records):
    """Returns ``records`` sorted by time then kind (stable)"""
    return sorted(records, key=lambda rec: rec.sort_key)


def anchor_index(anchors):
    """
    Builds a dict anchor_id -> position

    :raise ValueError: duplicate anchor ids
    """
    index = {}
    for anchor in anchors:
        if anchor.anchor_id in index:
            raise ValueError("duplicate anchor id %d" % anchor.anchor_id)

        index[anchor.anchor_id] = anchor.pos_G

    return index


def _floats(values):
    return [round_sig(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def encode_record(record):
    """Serializes ``record`` to a single JSON line (no newline)"""
    s = record.payload
    obj = {'t': round_sig(record.t), 'kind': record.kind}
    if record.kind == IMU:
        obj['gyro'] = _floats(s.gyro)
        obj['accel'] = _floats(s.accel)
    elif record.kind == LIDAR:
        table = np.column_stack([s.points, s.t_offset])
        obj['points'] = [_floats(row) for row in table]
    elif record.kind == WHEEL:
        obj['vel'] = _floats(s.vel_W)
        obj['sigma'] = _floats(s.sigma)
    elif record.kind == UWB_RANGE:
        obj['anchor'] = int(s.anchor_id)
        obj['range'] = round_sig(s.range)
        obj['sigma'] = round_sig(s.sigma)
    elif record.kind == UWB_FIX:
        obj['pos'] = _floats(s.pos)
        obj['sigma'] = _floats(s.sigma)
    elif record.kind == GROUND_TRUTH:
        obj['pos'] = _floats(s.pos)
        obj['quat'] = _floats(s.quat)
        obj['vel'] = _floats(s.vel)

    return json.dumps(obj, separators=(',', ':'))


def decode_record(line, lineno=0):
    """
    Parses one log line

    :raise LogFormatError: invalid JSON, unknown kind or malformed payload
    :rtype: SensorRecord
    """
    try:
        obj = json.loads(line)
    except ValueError as e:
        raise LogFormatError(lineno, "invalid JSON (%s)" % e)

    if not isinstance(obj, dict):
        raise LogFormatError(lineno, "expected an object")

    try:
        t = float(obj['t'])
        kind = obj['kind']
        if kind == IMU:
            sample = ImuSample(t, obj['gyro'], obj['accel'])
        elif kind == LIDAR:
            table = np.asarray(obj['points'], dtype=float).reshape(-1, 4)
            sample = LidarScan(t, table[:, :3], table[:, 3])
        elif kind == WHEEL:
            sample = WheelSample(t, obj['vel'], obj['sigma'])
        elif kind == UWB_RANGE:
            sample = UwbRangeSample(t, int(obj['anchor']),
                                    float(obj['range']), float(obj['sigma']))
        elif kind == UWB_FIX:
            sample = UwbPositionFix(t, obj['pos'], obj['sigma'])
        elif kind == GROUND_TRUTH:
            sample = GroundTruthSample(t, obj['pos'], obj['quat'], obj['vel'])
        else:
            raise LogFormatError(lineno, "unknown kind %r" % (kind,))
    except KeyError as e:
        raise LogFormatError(lineno, "missing key %s" % e)
    except (TypeError, ValueError) as e:
        raise LogFormatError(lineno, str(e))

    return SensorRecord(t, kind, sample)


def write_log(records, path):
    """Writes ``records`` (already sorted) to ``path``"""
    with open(path, 'w') as f:
        for record in records:
            f.write(encode_record(record))
            f.write('\n')

    logger.info("wrote %d records to %s" % (len(records), path))


def read_log(path):
    """
    Reads a whole log

    :raise LogFormatError: a line can not be decoded or the stream is
                           out of order; the error names the line
    :rtype: list of SensorRecord
    """
    records = []
    last_key = None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue

            record = decode_record(line, lineno)
            if last_key is not None and record.sort_key < last_key:
                raise LogFormatError(lineno, "record out of time order")

            last_key = record.sort_key
            records.append(record)

    logger.debug("read %d records from %s" % (len(records), path))
    return records


def count_kinds(records):
    """Returns a dict kind -> number of records, in :data:`KIND_ORDER`"""
    counts = dict((kind, 0) for kind in KIND_ORDER)
    for record in records:
        counts[record.kind] += 1

    return counts


_KIND_OF_TYPE = {
    ImuSample: IMU,
    LidarScan: LIDAR,
    WheelSample: WHEEL,
    UwbRangeSample: UWB_RANGE,
    UwbPositionFix: UWB_FIX,
    GroundTruthSample: GROUND_TRUTH,
}
