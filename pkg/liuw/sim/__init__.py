# See LICENSE
"""
Synthetic tunnel: geometry, ground-truth motion and sensor models

>>> from liuw.sim import SimConfig, synthesize
>>> records = synthesize(SimConfig(duration=10.0))
"""

from liuw.sim.config import SimConfig
from liuw.sim.synthesize import synthesize
from liuw.sim.trajectory import generate_trajectory
from liuw.sim.uwb import trilaterate, UwbPositioner
from liuw.sim.world import TunnelWorld, WorldConfig

__all__ = ["SimConfig", "synthesize", "generate_trajectory", "trilaterate",
           "UwbPositioner", "TunnelWorld", "WorldConfig"]
