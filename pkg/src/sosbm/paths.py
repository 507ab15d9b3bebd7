"""Sampled paths, time-indexed traces, and their CSV layout.

A path file starts with ``# key=value`` metadata lines, then the header
``i,t,x`` and one row per observation with round-trip float text.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import SchemaError
from .kernel.params import AnyParams, SkewStickyParams, SosBmParams
from .reports import format_float

PATH_HEADER = ("i", "t", "x")


@dataclass(frozen=True)
class SamplePath:
    """Observations X_{i/n}, i = 0..[nt], of one simulated or loaded path."""

    params: AnyParams | None
    n: int
    t: float
    x: float
    values: np.ndarray = field(repr=False)
    seed: int | None = None
    stream: int | None = None

    def __post_init__(self):
        expected = steps_for(self.n, self.t) + 1
        if len(self.values) != expected:
            raise ValueError(f"path has {len(self.values)} values, expected {expected}")

    @property
    def steps(self) -> int:
        return len(self.values) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) / self.n

    @property
    def rho(self) -> float | None:
        return None if self.params is None else self.params.rho


@dataclass(frozen=True)
class Trace:
    """A statistic evaluated at every grid time s_i = i/n."""

    times: np.ndarray
    values: np.ndarray

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    def __len__(self) -> int:
        return len(self.values)


def steps_for(n: int, t: float) -> int:
    """[nt], robust to rounding when nt is an integer up to float error."""
    nt = n * t
    k = math.floor(nt)
    if nt - k > 1.0 - 1e-9:
        k += 1
    return int(k)


def write_path_csv(path: SamplePath, target: str | Path | TextIO) -> None:
    meta = {}
    if path.params is not None:
        meta.update(rho=path.params.rho, beta=path.params.beta,
                    sigma_minus=path.params.sigma_minus, sigma_plus=path.params.sigma_plus)
    meta.update(n=path.n, t=path.t, x0=path.x)
    if path.seed is not None:
        meta["seed"] = path.seed
    if path.stream is not None:
        meta["stream"] = path.stream
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}={format_float(value) if isinstance(value, float) else value}\n")
    buf.write(",".join(PATH_HEADER) + "\n")
    times = path.times
    for i, (s, v) in enumerate(zip(times, path.values)):
        buf.write(f"{i},{format_float(s)},{format_float(v)}\n")
    text = buf.getvalue()
    if isinstance(target, (str, Path)):
        Path(target).write_text(text)
    else:
        target.write(text)


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"{what} {text!r} is not a number", line) from None
    if not math.isfinite(value):
        raise SchemaError(f"{what} {text!r} is not finite", line)
    return value


def read_path_csv(source: str | Path | TextIO, n: int | None = None) -> SamplePath:
    """Load a path file.  ``n`` is inferred from the time column when absent."""
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    meta: dict[str, str] = {}
    rows: list[tuple[int, float, float]] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if not header_seen:
            if tuple(cells) != PATH_HEADER:
                raise SchemaError(f"expected header {','.join(PATH_HEADER)}, got {line!r}", lineno)
            header_seen = True
            continue
        if len(cells) != 3:
            raise SchemaError(f"expected 3 cells, got {len(cells)}", lineno)
        try:
            i = int(cells[0])
        except ValueError:
            raise SchemaError(f"index {cells[0]!r} is not an integer", lineno) from None
        if i != len(rows):
            raise SchemaError(f"index {i} out of sequence, expected {len(rows)}", lineno)
        rows.append((i, _parse_float(cells[1], lineno, "time"), _parse_float(cells[2], lineno, "value")))
    if not header_seen:
        raise SchemaError("missing header line")
    if len(rows) < 2:
        raise SchemaError("a path needs at least two observations")
    times = np.array([r[1] for r in rows])
    values = np.array([r[2] for r in rows])
    if n is None:
        if "n" in meta:
            n = int(float(meta["n"]))
        else:
            n = int(round(1.0 / (times[1] - times[0])))
    if n < 1:
        raise SchemaError(f"resolution n = {n} must be >= 1")
    t = float(meta["t"]) if "t" in meta else (len(values) - 1) / n
    if steps_for(n, t) + 1 != len(values):
        raise SchemaError(f"{len(values)} rows do not match n={n}, t={t}")
    params: AnyParams | None = None
    if "rho" in meta and "beta" in meta:
        rho, beta = float(meta["rho"]), float(meta["beta"])
        sm, sp = float(meta.get("sigma_minus", 1.0)), float(meta.get("sigma_plus", 1.0))
        params = SkewStickyParams(rho, beta) if sm == sp == 1.0 else SosBmParams(rho, beta, sm, sp)
    seed = int(meta["seed"]) if "seed" in meta else None
    stream = int(meta["stream"]) if "stream" in meta else None
    return SamplePath(params, n, t, float(values[0]), values, seed, stream)
