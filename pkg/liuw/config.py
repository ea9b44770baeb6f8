# see LICENSE
"""
Configuration of the estimator and the simulator

A configuration file is one YAML document with a ``pipeline:`` section,
a ``simulator:`` section, or both. Every key maps onto a field of
:class:`PipelineConfig` or :class:`~liuw.sim.config.SimConfig` (nested
sections onto nested dataclasses); keys left out keep their defaults and
unknown keys are rejected. ``resources/default.yaml`` lists them all.
"""

from dataclasses import dataclass, field, fields, is_dataclass, replace
import logging

import numpy as np
import yaml

from liuw.errors import ConfigError
from liuw.estimation.degradation import DegradationThresholds
from liuw.estimation.ieskf import UpdateConfig
from liuw.estimation.manifold import ExtrinsicsConfig
from liuw.estimation.measurements import MeasurementConfig
from liuw.estimation.mode_switch import SwitchConfig, UwbRegion
from liuw.estimation.plane_map import PlaneMapConfig
from liuw.estimation.propagation import ProcessNoiseConfig
from liuw.records import AnchorConfig
from liuw.sim.config import (DEFAULT_ANCHORS, REGION_CENTER, REGION_RADIUS,
                             SimConfig)

logger = logging.getLogger(__name__)

SECTIONS = ('pipeline', 'simulator')


@dataclass(frozen=True)
class InitConfig:
    """
    Static initialisation

    :ivar window: seconds of the stream used, from its first record
    :ivar min_imu_samples: fewer IMU samples in the window is an error
    :ivar max_accel_var: largest per-axis accelerometer variance, m^2/s^4,
                         accepted as standing still
    :ivar position: start position used when the window holds no UWB fix
                    (the origin when unset)
    :ivar sigma_*: initial standard deviations of the covariance blocks
    """
    window: float = 1.0
    min_imu_samples: int = 100
    max_accel_var: float = 0.05
    position: tuple = None
    sigma_rot: float = 0.01
    sigma_pos: float = 0.05
    sigma_vel: float = 0.01
    sigma_bias_gyro: float = 1e-3
    sigma_bias_accel: float = 0.02
    sigma_gravity: float = 0.0
    sigma_extr: float = 0.0

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError("window must be positive")

        if self.min_imu_samples < 1:
            raise ValueError("min_imu_samples must be at least 1")

        if not self.max_accel_var > 0:
            raise ValueError("max_accel_var must be positive")

        for f in fields(self):
            if f.name.startswith('sigma_') and not getattr(self, f.name) >= 0:
                raise ValueError("%s must be nonnegative" % f.name)

        if self.position is not None:
            object.__setattr__(self, 'position', tuple(
                float(v) for v in np.asarray(self.position).reshape(3)))


@dataclass(frozen=True)
class PreprocessConfig:
    """
    Scan preparation, meters

    Points outside [min_range, max_range] are dropped; matching uses one
    point per ``scan_voxel``, the map receives one per ``map_voxel``.
    """
    min_range: float = 0.5
    max_range: float = 10.0
    scan_voxel: float = 0.5
    map_voxel: float = 0.1

    def __post_init__(self):
        if not 0 <= self.min_range < self.max_range:
            raise ValueError("need 0 <= min_range < max_range")

        if not (self.scan_voxel > 0 and self.map_voxel > 0):
            raise ValueError("voxel sizes must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    """
    Everything the replay loop needs

    ``enable_uwb`` and ``enable_wheel`` switch whole constraint families
    off for ablations without touching the mode logic.
    """
    process: ProcessNoiseConfig = field(default_factory=ProcessNoiseConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    plane_map: PlaneMapConfig = field(
        default_factory=lambda: PlaneMapConfig(resolution=0.1))
    update: UpdateConfig = field(default_factory=UpdateConfig)
    degradation: DegradationThresholds = field(
        default_factory=DegradationThresholds)
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    region: UwbRegion = field(
        default_factory=lambda: UwbRegion(REGION_CENTER, REGION_RADIUS))
    anchors: tuple = DEFAULT_ANCHORS
    extrinsics: ExtrinsicsConfig = field(default_factory=ExtrinsicsConfig)
    init: InitConfig = field(default_factory=InitConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    enable_uwb: bool = True
    enable_wheel: bool = True
    checkpoints: int = 15

    def __post_init__(self):
        ids = [a.anchor_id for a in self.anchors]
        if len(set(ids)) != len(ids):
            raise ValueError("anchor ids must be unique")

        if self.checkpoints < 1:
            raise ValueError("checkpoints must be at least 1")

        object.__setattr__(self, 'anchors', tuple(self.anchors))


def _anchors(value, key):
    if not isinstance(value, (list, tuple)):
        raise ConfigError("%s: expected a list of anchors" % key)

    anchors = []
    for i, item in enumerate(value):
        if isinstance(item, AnchorConfig):
            anchors.append(item)
            continue

        if not isinstance(item, dict) or set(item) != {'id', 'pos'}:
            raise ConfigError("%s[%d]: expected keys 'id' and 'pos'"
                              % (key, i))
        try:
            anchors.append(AnchorConfig(int(item['id']), item['pos']))
        except (TypeError, ValueError) as e:
            raise ConfigError("%s[%d]: %s" % (key, i, e))

    return tuple(anchors)


def build(default, data, prefix=''):
    """
    Returns ``default`` (a dataclass instance) with the values of the
    mapping ``data`` applied, recursing into nested dataclasses

    :raise ConfigError: unknown key or invalid value; the message names
                        the dotted key
    """
    if data is None:
        return default

    if not isinstance(data, dict):
        raise ConfigError("%s: expected a mapping" % (prefix.rstrip('.') or
                                                      'configuration'))

    names = set(f.name for f in fields(default))
    changes = {}
    for key, value in data.items():
        dotted = prefix + str(key)
        if key not in names:
            raise ConfigError("unknown key %s" % dotted)

        current = getattr(default, key)
        if key == 'anchors':
            changes[key] = _anchors(value, dotted)
        elif is_dataclass(current):
            changes[key] = build(current, value, dotted + '.')
        elif isinstance(current, tuple) and value is not None:
            if not isinstance(value, (list, tuple)):
                raise ConfigError("%s: expected a list" % dotted)
            changes[key] = tuple(value)
        else:
            changes[key] = value

    try:
        return replace(default, **changes)
    except (TypeError, ValueError) as e:
        raise ConfigError("%s: %s" % (prefix.rstrip('.') or
                                      'configuration', e))


def parse_config(text):
    """
    Parses a YAML document

    :return: (PipelineConfig, SimConfig)
    :raise ConfigError: invalid YAML, unknown sections or keys, bad values
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("invalid YAML: %s" % e)

    if doc is None:
        doc = {}

    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")

    for key in doc:
        if key not in SECTIONS:
            raise ConfigError("unknown key %s" % key)

    pipeline = build(PipelineConfig(), doc.get('pipeline'), 'pipeline.')
    simulator = build(SimConfig(), doc.get('simulator'), 'simulator.')
    return pipeline, simulator


def load_config(path=None):
    """
    Reads a configuration file; no path gives the defaults

    :raise ConfigError: the file can not be read or parsed
    :rtype: tuple of (PipelineConfig, SimConfig)
    """
    if path is None:
        return PipelineConfig(), SimConfig()

    try:
        with open(path) as f:
            text = f.read()
    except (IOError, OSError) as e:
        raise ConfigError("can not read %s: %s" % (path, e))

    logger.debug("loading configuration from %s" % path)
    return parse_config(text)
