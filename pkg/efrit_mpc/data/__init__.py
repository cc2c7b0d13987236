"""Run archive and bundled data files."""
