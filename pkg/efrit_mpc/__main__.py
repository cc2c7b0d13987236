"""Main entry point for the efrit-mpc toolkit."""

import sys

from efrit_mpc.cli import main

if __name__ == "__main__":
    sys.exit(main())
