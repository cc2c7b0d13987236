"""Integration tests for efrit-mpc."""
