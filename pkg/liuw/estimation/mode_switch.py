# see LICENSE
"""
Motion-mode selection

Inside the UWB coverage sphere the filter runs LIU (LiDAR, IMU, UWB).
Outside it falls back to LIO, or to LIW (wheel constraints added) as
soon as the pose covariance reports a degenerate direction. A dwell
counter suppresses chattering; leaving the sphere ends LIU at once.
"""

from dataclasses import dataclass
import enum
import logging

import numpy as np

from liuw.estimation.measurements import (LIDAR, UWB_DISTANCE, UWB_POSITION,
                                          WHEEL)
from liuw.utils import as_vector3, frozen

logger = logging.getLogger(__name__)


class MotionMode(enum.Enum):
    LIU = 'LIU'
    LIO = 'LIO'
    LIW = 'LIW'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class UwbRegion:
    """Sphere of UWB coverage"""
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, 'center', frozen(as_vector3(self.center,
                                                             "center")))
        if not self.radius > 0:
            raise ValueError("region radius must be positive")


@dataclass(frozen=True)
class SwitchConfig:
    """
    :ivar min_dwell: updates to spend in a mode before leaving it
    :ivar wheel_always_on: fuse wheel samples in every mode
    """
    min_dwell: int = 10
    wheel_always_on: bool = False

    def __post_init__(self):
        if self.min_dwell < 0:
            raise ValueError("min_dwell must be nonnegative")


@dataclass(frozen=True)
class SwitchState:
    current: MotionMode
    dwell_count: int
    min_dwell: int = 10

    def __post_init__(self):
        if self.dwell_count < 0:
            raise ValueError("dwell_count must be nonnegative")

    @classmethod
    def initial(cls, min_dwell=10):
        """A state free to take any mode at the first decision"""
        return cls(MotionMode.LIO, min_dwell, min_dwell)


def in_region(p_robot, region):
    """True when ``p_robot`` lies in the sphere, boundary included"""
    p = np.asarray(p_robot, dtype=float)
    return bool(np.linalg.norm(p - region.center) <= region.radius)


def decide(p_robot, region, report, st):
    """
    Picks the mode of the next update

    :type region: UwbRegion
    :type report: DegradationReport
    :type st: SwitchState
    :return: (mode, next switch state)
    :rtype: tuple
    """
    inside = in_region(p_robot, region)
    if inside:
        target = MotionMode.LIU
    elif report.degraded_p or report.degraded_r:
        target = MotionMode.LIW
    else:
        target = MotionMode.LIO

    if target is st.current:
        return st.current, SwitchState(st.current, st.dwell_count + 1,
                                       st.min_dwell)

    region_exit = st.current is MotionMode.LIU and not inside
    if region_exit or st.dwell_count >= st.min_dwell:
        return target, SwitchState(target, 0, st.min_dwell)

    return st.current, SwitchState(st.current, st.dwell_count + 1,
                                   st.min_dwell)


_ACTIVE = {
    MotionMode.LIU: frozenset([LIDAR, UWB_POSITION, UWB_DISTANCE]),
    MotionMode.LIO: frozenset([LIDAR]),
    MotionMode.LIW: frozenset([LIDAR, WHEEL]),
}


def active_constraints(mode):
    """Constraint families fused in ``mode`` (the IMU prior is implied)"""
    return _ACTIVE[mode]


def enabled_constraints(mode, enable_uwb=True, enable_wheel=True,
                        wheel_always_on=False):
    """
    :func:`active_constraints` filtered by the ablation switches

    The mode itself is unaffected; a disabled family is simply never
    fused.
    """
    families = set(active_constraints(mode))
    if wheel_always_on:
        families.add(WHEEL)

    if not enable_uwb:
        families -= {UWB_POSITION, UWB_DISTANCE}

    if not enable_wheel:
        families.discard(WHEEL)

    return frozenset(families)


class ModeSwitcher:
    """
    Owns the switch state over a run and logs each transition
    """

    def __init__(self, region, config=None):
        self.region = region
        self.config = config or SwitchConfig()
        self.state = SwitchState.initial(self.config.min_dwell)
        self._started = False

    @property
    def mode(self):
        return self.state.current

    def step(self, t, p_robot, report):
        """Decides the mode of the update at time ``t``"""
        previous = self.state.current
        mode, self.state = decide(p_robot, self.region, report, self.state)
        if mode is not previous or not self._started:
            logger.info("t=%.3f: mode %s -> %s"
                        % (t, previous if self._started else '-', mode))

        self._started = True
        return mode
