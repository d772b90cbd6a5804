"""
Reset element steady-state analysis.
Run with: python main.py <info|simulate|hosidf|validate|decompose> [flags]
(equivalent to the installed `reset-analysis` script)
"""
import os
import sys

# Make the package importable from a plain checkout
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from reset_analysis.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
