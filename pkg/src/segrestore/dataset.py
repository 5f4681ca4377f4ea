"""Corrupted training pairs, wire-unit normalization and train/test splits.

A missing segment is encoded by the literal value 0.0. Valid mean wire
positions are never below 1, so the sentinel cannot be confused with data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .trackgen import DEFAULT_WIRES, N_SUPERLAYERS

SENTINEL = 0.0


class Scheme(str, enum.Enum):
    """Training-set construction: A zeroes one random index, B expands to all six."""

    A = "A"
    B = "B"


@dataclass(frozen=True, eq=False)
class CorruptedPair:
    input: np.ndarray
    target: np.ndarray
    missing_index: int


@dataclass(frozen=True, eq=False)
class PairArrays:
    """Column-stacked pairs; the form consumed by training."""

    inputs: np.ndarray
    targets: np.ndarray
    missing: np.ndarray

    def __len__(self):
        return len(self.missing)

    def __iter__(self):
        for x, t, k in zip(self.inputs, self.targets, self.missing):
            yield CorruptedPair(x, t, int(k))

    @classmethod
    def from_pairs(cls, pairs: Sequence[CorruptedPair]) -> "PairArrays":
        return cls(
            np.vstack([p.input for p in pairs]).astype(np.float64),
            np.vstack([p.target for p in pairs]).astype(np.float64),
            np.array([p.missing_index for p in pairs], dtype=np.int64),
        )


def corrupt_at(sample, index: int) -> CorruptedPair:
    if not 0 <= index < N_SUPERLAYERS:
        raise IndexError(f"missing index {index} outside 0..{N_SUPERLAYERS - 1}")
    target = np.array(sample, dtype=np.float64)
    x = target.copy()
    x[index] = SENTINEL
    return CorruptedPair(x, target, int(index))


def corrupt_random(sample, rng: np.random.Generator) -> CorruptedPair:
    return corrupt_at(sample, int(rng.integers(N_SUPERLAYERS)))


def corrupt_expand(sample) -> list[CorruptedPair]:
    return [corrupt_at(sample, k) for k in range(N_SUPERLAYERS)]


def build_pairs(samples: np.ndarray, scheme: Scheme | str, seed: int | None = None) -> PairArrays:
    """Apply one corruption scheme to every sample.

    Scheme A draws each sample's index once, here, rather than per epoch.
    """
    scheme = Scheme(scheme)
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, N_SUPERLAYERS)
    if scheme is Scheme.A:
        rng = np.random.default_rng(seed)
        pairs = [corrupt_random(s, rng) for s in samples]
    else:
        pairs = [p for s in samples for p in corrupt_expand(s)]
    return PairArrays.from_pairs(pairs)


@dataclass(frozen=True)
class NormSpec:
    wires: int = DEFAULT_WIRES

    def __post_init__(self):
        if self.wires < 2:
            raise ValueError(f"wires must be >= 2, got {self.wires}")


def normalize(v, spec: NormSpec = NormSpec()) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0) or np.any(v > spec.wires) or not np.all(np.isfinite(v)):
        raise ValueError(f"wire values must lie in [0, {spec.wires}]")
    return v / spec.wires


def denormalize(v, spec: NormSpec = NormSpec()) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
        raise ValueError("network values must lie in [0, 1]")
    return v * spec.wires


def normalize_pairs(pairs: PairArrays, spec: NormSpec = NormSpec()) -> PairArrays:
    return PairArrays(normalize(pairs.inputs, spec), normalize(pairs.targets, spec), pairs.missing)


def split(samples, train_n: int, test_n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint random train/test subsets drawn by a seeded shuffle."""
    samples = np.asarray(samples, dtype=np.float64)
    if train_n < 0 or test_n < 0:
        raise ValueError("split sizes must be non-negative")
    if train_n + test_n > len(samples):
        raise ValueError(
            f"need {train_n} + {test_n} samples but only {len(samples)} available"
        )
    order = np.random.default_rng(seed).permutation(len(samples))
    return samples[order[:train_n]], samples[order[train_n : train_n + test_n]]


def save_pairs_csv(pairs: PairArrays, path) -> None:
    """Debug dump: 6 input fields, 6 target fields, missing index."""
    header = [f"in{k}" for k in range(1, 7)] + [f"x{k}" for k in range(1, 7)] + ["missing_index"]
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for x, t, k in zip(pairs.inputs, pairs.targets, pairs.missing):
            fields = [format(float(v), ".17g") for v in (*x, *t)] + [str(int(k))]
            fh.write(",".join(fields) + "\n")
