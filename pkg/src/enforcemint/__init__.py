"""Runtime enforcement of timed regular properties for PLC controllers."""

__version__ = "0.1.0"
