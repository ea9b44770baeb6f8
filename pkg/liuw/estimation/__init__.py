# See LICENSE
"""
Estimator building blocks

The state and its tangent operators live in
:mod:`liuw.estimation.manifold`, the IMU prior in
:mod:`liuw.estimation.propagation`, the constraint models in
:mod:`liuw.estimation.measurements` and the update itself in
:mod:`liuw.estimation.ieskf`.
"""

from liuw.estimation.manifold import NavState, Extrinsic, boxplus, boxminus
from liuw.estimation.propagation import ProcessNoiseConfig, propagate
from liuw.estimation.ieskf import UpdateConfig, update
from liuw.estimation.degradation import DegradationThresholds, analyze
from liuw.estimation.mode_switch import MotionMode, UwbRegion, ModeSwitcher

__all__ = ["NavState", "Extrinsic", "boxplus", "boxminus",
           "ProcessNoiseConfig", "propagate", "UpdateConfig", "update",
           "DegradationThresholds", "analyze", "MotionMode", "UwbRegion",
           "ModeSwitcher"]
