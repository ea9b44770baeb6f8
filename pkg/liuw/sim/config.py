# see LICENSE
"""Parameters of a simulated tunnel run"""

from dataclasses import dataclass, field, replace

from liuw.estimation.manifold import ExtrinsicsConfig
from liuw.records import AnchorConfig
from liuw.sim.world import WorldConfig
from liuw.utils import as_vector3

DEFAULT_ANCHORS = (
    AnchorConfig(100, (11.376, 1.694, 2.249)),
    AnchorConfig(101, (16.678, 1.769, 2.247)),
    AnchorConfig(102, (16.550, -1.453, 2.224)),
    AnchorConfig(103, (11.510, -1.532, 0.115)),
)

REGION_CENTER = (13.963, 0.0, 2.249)
# distance from the region center to the farthest point of coverage
# along the tunnel, (34.963, 0, 2.249)
REGION_RADIUS = 21.0

START_POSITION = (11.490, -0.019, 0.971)


@dataclass(frozen=True)
class SimConfig:
    """
    Everything that determines a simulated log

    ``duration`` is the equivalent cruise time: the path is
    ``speed * duration`` meters long. The run also starts with
    ``static_time`` seconds at rest and a ``ramp_time`` speed ramp, so it
    lasts ``static_time + duration + ramp_time / 2`` seconds.

    Noise figures are the actual noise injected, scaled by
    ``noise_scale`` (0 gives a noise-free log). The ``*_sigma`` fields
    are the uncertainties written into the records.
    """
    seed: int = 0
    duration: float = 220.0
    speed: float = 0.3
    max_yaw_rate: float = 0.2
    weave_amplitude: float = 0.1
    weave_wavelength: float = 10.0
    static_time: float = 1.0
    ramp_time: float = 2.0
    start_position: tuple = START_POSITION

    anchors: tuple = DEFAULT_ANCHORS
    region_center: tuple = REGION_CENTER
    region_radius: float = REGION_RADIUS
    enable_uwb: bool = True

    imu_rate: int = 200
    lidar_rate: int = 10
    wheel_rate: int = 50
    uwb_rate: int = 20
    ground_truth_rate: int = 10

    lidar_rings: int = 32
    lidar_columns: int = 90
    lidar_fov: float = 15.0
    lidar_max_range: float = 60.0
    lidar_sweep: float = 0.1

    noise_scale: float = 1.0
    gyro_noise: float = 2e-3
    accel_noise: float = 5e-3
    gyro_bias_walk: float = 1e-5
    accel_bias_walk: float = 1e-4
    lidar_range_noise: float = 0.02
    wheel_noise: float = 0.02
    wheel_slip_sigma: float = 0.0
    wheel_sigma: float = 0.05
    uwb_range_noise: float = 0.1
    uwb_range_sigma: float = 0.1
    uwb_q_pos: float = 0.5

    extrinsics: ExtrinsicsConfig = field(default_factory=ExtrinsicsConfig)
    world: WorldConfig = field(default_factory=WorldConfig)

    def __post_init__(self):
        for name in ('duration', 'speed', 'max_yaw_rate', 'weave_wavelength',
                     'ramp_time', 'region_radius', 'lidar_max_range',
                     'lidar_sweep', 'wheel_sigma', 'uwb_range_sigma'):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be positive" % name)

        for name in ('imu_rate', 'lidar_rate', 'wheel_rate', 'uwb_rate',
                     'ground_truth_rate', 'lidar_rings', 'lidar_columns'):
            if int(getattr(self, name)) != getattr(self, name) or \
                    getattr(self, name) <= 0:
                raise ValueError("%s must be a positive integer" % name)

        for name in ('static_time', 'weave_amplitude', 'noise_scale',
                     'gyro_noise', 'accel_noise', 'gyro_bias_walk',
                     'accel_bias_walk', 'lidar_range_noise', 'wheel_noise',
                     'wheel_slip_sigma', 'uwb_range_noise', 'uwb_q_pos'):
            if not getattr(self, name) >= 0:
                raise ValueError("%s must be nonnegative" % name)

        if self.duration < self.ramp_time / 2:
            raise ValueError("duration must cover half the speed ramp")

        if self.lidar_sweep > 1.0 / self.lidar_rate + 1e-12:
            raise ValueError("lidar_sweep exceeds the scan period")

        ids = [a.anchor_id for a in self.anchors]
        if len(set(ids)) != len(ids):
            raise ValueError("anchor ids must be unique")

        object.__setattr__(self, 'start_position', tuple(
            as_vector3(self.start_position, "start_position")))
        object.__setattr__(self, 'region_center', tuple(
            as_vector3(self.region_center, "region_center")))
        object.__setattr__(self, 'anchors', tuple(self.anchors))

    @property
    def total_time(self):
        return self.static_time + self.duration + self.ramp_time / 2

    @property
    def path_length(self):
        return self.speed * self.duration

    def noise_free(self):
        """Same run with every injected noise switched off"""
        return replace(self, noise_scale=0.0)
