#!/usr/bin/env python3
"""Run the acceptance gate and print its per-criterion PASS/FAIL summary."""

import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q", str(root / "tests" / "test_acceptance.py")], cwd=root))
