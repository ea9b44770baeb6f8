"""
LiDAR-IMU-UWB-wheel odometry for degraded tunnels

:mod:`liuw.estimation` holds the iterated error-state Kalman filter and
the constraint models, :mod:`liuw.sim` the synthetic tunnel that feeds
it, and :mod:`liuw.pipeline` the replay loop tying both together.
"""

VERSION = (0, 3, 0)
