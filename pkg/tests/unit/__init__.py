"""Unit tests for efrit-mpc."""
