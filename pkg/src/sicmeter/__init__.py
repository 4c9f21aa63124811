"""SIC-frame quasi-probability numerics for qubits and a classical meter bit."""

from . import gbv, measurement, oracle, sampling, sic_frame

__all__ = ["gbv", "measurement", "oracle", "sampling", "sic_frame"]
__version__ = "0.1.0"
