"""Utility functions for the efrit-mpc toolkit."""
