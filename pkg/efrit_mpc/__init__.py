"""EFRIT-MPC - PID and PL-model tuning from one I/O record, with MPC on top."""

__version__ = "0.1.0"
