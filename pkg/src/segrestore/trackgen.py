"""Track samples: synthetic generation, mean wire positions, CSV I/O."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

N_SUPERLAYERS = 6
HITS_PER_SEGMENT = 6
DEFAULT_WIRES = 112
MAX_REDRAWS = 1000
CSV_HEADER = [f"x{k}" for k in range(1, N_SUPERLAYERS + 1)]


class TrackGenError(RuntimeError):
    pass


class DataFormatError(ValueError):
    """Malformed dataset row; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class GenConfig:
    wires: int = DEFAULT_WIRES
    intercept: tuple[float, float] = (5.0, 100.0)
    slope: tuple[float, float] = (-4.0, 4.0)
    curvature: tuple[float, float] = (-0.4, 0.4)
    jitter_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.wires < 2:
            raise ValueError(f"wires must be >= 2, got {self.wires}")
        for name in ("intercept", "slope", "curvature"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} range must satisfy low < high, got {(lo, hi)}")
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be non-negative")


def mean_wire(hits: Sequence[float]) -> float:
    """Average wire position of a segment's hits."""
    if len(hits) == 0:
        raise ValueError("segment has no hits")
    return float(sum(hits) / len(hits))


def segment_centers(a: float, b: float, c: float) -> np.ndarray:
    k = np.arange(1, N_SUPERLAYERS + 1, dtype=np.float64)
    return a + b * k + c * k * k


def track_from_params(a, b, c, cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    """Hits for a fixed quadratic trajectory, reduced to mean wire per super-layer."""
    out = np.empty(N_SUPERLAYERS)
    for k, center in enumerate(segment_centers(a, b, c)):
        jitter = np.rint(rng.normal(0.0, cfg.jitter_sigma, HITS_PER_SEGMENT))
        hits = np.clip(np.rint(center) + jitter, 1, cfg.wires)
        out[k] = mean_wire(hits)
    return out


def gen_track(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MAX_REDRAWS):
        a = rng.uniform(*cfg.intercept)
        b = rng.uniform(*cfg.slope)
        c = rng.uniform(*cfg.curvature)
        centers = segment_centers(a, b, c)
        if np.all((centers >= 1) & (centers <= cfg.wires)):
            return track_from_params(a, b, c, cfg, rng)
    raise TrackGenError(
        f"no trajectory inside [1, {cfg.wires}] after {MAX_REDRAWS} draws; check GenConfig ranges"
    )


def gen_dataset(n: int, cfg: GenConfig) -> np.ndarray:
    """``n`` tracks as an (n, 6) array, reproducible from ``cfg.seed``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(cfg.seed)
    return np.array([gen_track(cfg, rng) for _ in range(n)])


def validate_sample(x, wires: int = DEFAULT_WIRES) -> str | None:
    """Return a description of the first violated sample invariant, or None."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (N_SUPERLAYERS,):
        return f"expected {N_SUPERLAYERS} values, got {x.size}"
    if not np.all(np.isfinite(x)):
        return "non-finite value"
    if np.any(x == 0.0):
        return "value 0.0 collides with the missing-segment sentinel"
    bad = (x < 1) | (x > wires)
    if np.any(bad):
        return f"value {x[bad][0]!r} outside [1, {wires}]"
    return None


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_csv(samples: Iterable[Sequence[float]], path, header: bool = True) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(",".join(CSV_HEADER) + "\n")
        for row in samples:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    os.replace(tmp, path)


def load_csv(path, wires: int = DEFAULT_WIRES) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, fields in enumerate(csv.reader(fh), start=1):
            if line_no == 1 and [f.strip() for f in fields] == CSV_HEADER:
                continue
            if not fields:
                continue
            if len(fields) != N_SUPERLAYERS:
                raise DataFormatError(
                    path, line_no, f"expected {N_SUPERLAYERS} fields, got {len(fields)}"
                )
            try:
                x = np.array([float(f) for f in fields])
            except ValueError:
                raise DataFormatError(path, line_no, f"non-numeric field in {fields}") from None
            problem = validate_sample(x, wires)
            if problem:
                raise DataFormatError(path, line_no, problem)
            rows.append(x)
    return np.array(rows).reshape(-1, N_SUPERLAYERS)
