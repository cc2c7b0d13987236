"""Test suite for efrit-mpc."""
