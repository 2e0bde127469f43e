#!/usr/bin/env python3
"""
Main entry point for the flm-threshold experiment CLI
"""

import sys
import os

# Add the src directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from flm_threshold.cli import main


if __name__ == "__main__":
    sys.exit(main())
