"""The command-line interface and benchmark suites, driven from Python.

Everything here is also available from the shell:

    pgfad simulate --config model.cfg --seed 1 --out obs.csv
    pgfad loglik   --config model.cfg --obs obs.csv --method ad-lns
    pgfad grad     --config model.cfg --obs obs.csv --mode exact
    pgfad fit      --config model.cfg --obs obs.csv --free delta
    pgfad bench    --suite accuracy-sweep --out results/

Set PGFAD_THREADS to parallelize independent benchmark cells.
"""

import pathlib
import tempfile

from pgfad.bench import accuracy_sweep
from pgfad.cli import main

workdir = pathlib.Path(tempfile.mkdtemp(prefix="pgfad_demo_"))
config = workdir / "model.cfg"
config.write_text(
    "k = 5\n"
    "rho = 0.5\n"
    "offspring = bernoulli 0.5\n"
    "immigration = poisson 12.5,55,105,75,20\n"
)
obs = workdir / "obs.csv"

print("== simulate ==")
main(["simulate", "--config", str(config), "--seed", "1", "--out", str(obs)])
print(obs.read_text())

print("== loglik, three methods ==")
for method in ("ad-lns", "trunc", "ad-float"):
    main(["loglik", "--config", str(config), "--obs", str(obs), "--method", method])

print("\n== a small accuracy sweep (restricted delta grid) ==")
path = accuracy_sweep(
    str(workdir), seed=1, deltas=(0.3, 0.5, 0.7), trunc_cap=1024,
    methods=("ad-lns", "trunc"),
)
print(pathlib.Path(path).read_text())
print("full suites: pgfad bench --suite inference-scaling|accuracy-sweep|learning")
