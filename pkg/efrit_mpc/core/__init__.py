"""Core tuning, prediction and simulation functionality."""
