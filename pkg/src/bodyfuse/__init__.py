"""
Relative-position tracking for a six-node body-worn IMU + UWB system.

An unscented Kalman filter fuses node accelerations, inter-node ranges and an
uncertain pose estimate into the 15 sensor-to-sensor vectors, their
velocities and per-node accelerometer biases.
"""

from .body import BodyShape, PAIRS, SENSOR_NAMES
from .fusion import FusionConfig, FusionSession, PoseSample
from .kernels import BACKEND

__all__ = ["BACKEND", "BodyShape", "FusionConfig", "FusionSession", "PAIRS", "PoseSample", "SENSOR_NAMES"]
__version__ = "0.1.0"
