"""
Command-line workflow
=====================

Write a CSV, fit a frontier with the ``qfrontier`` command and convert a
quantile level. The same entry point runs as ``python -m qfrontier``.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from qfrontier.cli import main

rng = np.random.default_rng(1)
tmp = Path(tempfile.mkdtemp())
with open(tmp / "firms.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["firm", "labour", "output"])
    for i in range(25):
        lab = rng.uniform(1, 10)
        w.writerow([f"f{i}", f"{lab:.4f}", f"{lab ** 0.8 - abs(rng.normal()):.4f}"])

code = main(["estimate", "--method", "cqr", "--tau", "0.9", "--input", str(tmp / "firms.csv"),
             "--x-cols", "labour", "--y-col", "output", "--label-col", "firm",
             "--output", str(tmp / "fit.csv"), "--curve", str(tmp / "curve.csv"), "--grid-points", "5"])
print("exit", code)
print((tmp / "fit.csv").read_text().splitlines()[:3])
print((tmp / "curve.csv").read_text())

main(["convert", "--direction", "tau-to-expectile", "--spec", "composite", "--level", "0.9"])
