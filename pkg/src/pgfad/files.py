"""Text formats for model configurations and observation files.

Model configuration (one ``key = value`` per line, ``#`` comments):

    k = 5
    rho = 0.5                      # scalar or comma-separated length-K list
    offspring = bernoulli 0.5      # family then parameter(s)
    immigration = poisson 12.5,55,105,75,20

Keys are exactly ``k``, ``rho``, ``offspring``, ``immigration``; anything
else is rejected.  Observation files are CSV with header ``k,y`` and
1-based strictly increasing ``k`` rows; a blank line separates independent
dataset blocks:

    k,y
    1,12
    2,40

Both formats round-trip byte-identically through the writers below.
"""

from __future__ import annotations

from .model import ModelParams, Observations

__all__ = [
    "parse_config",
    "load_config",
    "format_observations",
    "parse_observations",
    "load_observations",
    "write_observations",
]

_CONFIG_KEYS = ("k", "rho", "offspring", "immigration")


def parse_config(text: str) -> ModelParams:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown field {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate field {key!r}")
        values[key] = val.strip()
    missing = [k for k in _CONFIG_KEYS if k not in values]
    if missing:
        raise ValueError(f"missing config fields: {', '.join(missing)}")

    K = int(values["k"])

    def numbers(s):
        parts = [p for p in s.replace(",", " ").split() if p]
        vals = [float(p) for p in parts]
        return vals[0] if len(vals) == 1 else vals

    def dist(s):
        parts = s.split(None, 1)
        if len(parts) != 2:
            raise ValueError(f"expected 'family param(s)', got {s!r}")
        return parts[0].lower(), numbers(parts[1])

    ofam, oparam = dist(values["offspring"])
    ifam, iparam = dist(values["immigration"])
    return ModelParams.build(K, numbers(values["rho"]), ofam, oparam, ifam, iparam)


def load_config(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_observations(datasets) -> str:
    if isinstance(datasets, Observations):
        datasets = [datasets]
    blocks = []
    for obs in datasets:
        lines = ["k,y"] + [f"{k},{y}" for k, y in enumerate(obs.y, start=1)]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def parse_observations(text: str) -> list[Observations]:
    datasets = []
    block: list[int] = []
    in_block = False

    def finish():
        nonlocal block, in_block
        if in_block:
            datasets.append(Observations(tuple(block)))
        block = []
        in_block = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            finish()
            continue
        if line.lower() == "k,y":
            if in_block:
                raise ValueError(f"line {lineno}: header inside a block")
            in_block = True
            continue
        if not in_block:
            raise ValueError(f"line {lineno}: expected 'k,y' header")
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'k,y_k', got {raw!r}")
        k, y = int(parts[0]), int(parts[1])
        if k != len(block) + 1:
            raise ValueError(f"line {lineno}: k must increase 1,2,...; got {k}")
        if y < 0:
            raise ValueError(f"line {lineno}: negative count")
        block.append(y)
    finish()
    if not datasets:
        raise ValueError("no observation blocks found")
    return datasets


def load_observations(path) -> list[Observations]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_observations(fh.read())


def write_observations(path, datasets) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_observations(datasets))
