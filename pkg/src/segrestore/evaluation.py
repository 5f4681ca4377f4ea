"""Residuals of inferred missing segments and their summary statistics.

Residuals are ``true - predicted`` in wire units. The recovery rate is a
stand-in for track recovery: the fraction of residuals inside a fixed
window, not an efficiency of any full tracking chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import SENTINEL, NormSpec, normalize
from .nncore import DenseNetwork, _forward_kernel
from .trackgen import N_SUPERLAYERS

HIST_RANGE = 10.0
HIST_BIN = 0.25
DEFAULT_THRESHOLD = 5.0


class Mode(str, enum.Enum):
    RANDOM = "random"
    ALL = "all"


def infer_missing(net: DenseNetwork, sample, missing_index: int, spec: NormSpec = NormSpec()) -> float:
    """Predicted wire position of the segment at ``missing_index``."""
    if not 0 <= missing_index < N_SUPERLAYERS:
        raise IndexError(f"missing index {missing_index} outside 0..{N_SUPERLAYERS - 1}")
    x = normalize(sample, spec)
    x[missing_index] = SENTINEL
    return float(_infer_batch(net, x[None, :], np.array([missing_index]))[0] * spec.wires)


def _infer_batch(net: DenseNetwork, inputs: np.ndarray, missing: np.ndarray) -> np.ndarray:
    if inputs.shape[1] != net.in_dim:
        raise ValueError(f"input width {inputs.shape[1]} does not match network {net.in_dim}")
    act_buf = np.empty(int(net.dims.sum()))
    start = act_buf.shape[0] - net.out_dim
    out = np.empty(len(inputs))
    for n, (x, k) in enumerate(zip(inputs, missing)):
        _forward_kernel(net.flat, net.dims, net.acts, np.ascontiguousarray(x), act_buf)
        out[n] = act_buf[start + k]
    return out


@dataclass
class Residuals:
    missing_index: np.ndarray
    true_wire: np.ndarray
    predicted_wire: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.true_wire - self.predicted_wire

    def __len__(self):
        return len(self.missing_index)


@dataclass
class IndexStats:
    index: int
    n: int
    mean: float
    std: float


@dataclass
class EvalReport:
    n: int
    mean: float
    std: float
    per_index: list[IndexStats]
    bin_edges: np.ndarray
    counts: np.ndarray
    threshold: float
    recovery_rate: float
    mode: str = ""
    extra: dict = field(default_factory=dict)


def _mean_std(r: np.ndarray) -> tuple[float, float]:
    if len(r) == 0:
        return float("nan"), float("nan")
    mean = float(np.mean(r))
    std = float(np.std(r, ddof=1)) if len(r) > 1 else 0.0
    return mean, std


def histogram(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fixed 0.25-wire bins over [-10, 10] wrapped by two overflow bins."""
    n_bins = int(round(2 * HIST_RANGE / HIST_BIN))
    inner = np.linspace(-HIST_RANGE, HIST_RANGE, n_bins + 1)
    edges = np.concatenate(([-np.inf], inner, [np.inf]))
    counts = np.zeros(n_bins + 2, dtype=np.int64)
    counts[0] = np.sum(r < -HIST_RANGE)
    counts[-1] = np.sum(r > HIST_RANGE)
    counts[1:-1], _ = np.histogram(r[np.abs(r) <= HIST_RANGE], bins=inner)
    return edges, counts


def summarize(residuals: Residuals, threshold: float = DEFAULT_THRESHOLD) -> EvalReport:
    r = residuals.values
    if len(r) == 0:
        raise ValueError("no residuals to summarize")
    mean, std = _mean_std(r)
    per_index = []
    for k in range(N_SUPERLAYERS):
        sel = r[residuals.missing_index == k]
        m, s = _mean_std(sel)
        per_index.append(IndexStats(k, len(sel), m, s))
    edges, counts = histogram(r)
    return EvalReport(
        n=len(r),
        mean=mean,
        std=std,
        per_index=per_index,
        bin_edges=edges,
        counts=counts,
        threshold=float(threshold),
        recovery_rate=recovery_rate(r, threshold),
    )


def recovery_rate(r: np.ndarray, threshold: float) -> float:
    return float(np.mean(np.abs(r) <= threshold))


def compute_residuals(
    net: DenseNetwork,
    test,
    mode: Mode | str = Mode.RANDOM,
    seed: int = 0,
    spec: NormSpec = NormSpec(),
) -> Residuals:
    test = np.asarray(test, dtype=np.float64).reshape(-1, N_SUPERLAYERS)
    if len(test) == 0:
        raise ValueError("empty test set")
    mode = Mode(mode)
    if mode is Mode.RANDOM:
        rows = np.arange(len(test))
        missing = np.random.default_rng(seed).integers(N_SUPERLAYERS, size=len(test))
    else:
        rows = np.repeat(np.arange(len(test)), N_SUPERLAYERS)
        missing = np.tile(np.arange(N_SUPERLAYERS), len(test))
    inputs = normalize(test, spec)[rows]
    inputs[np.arange(len(rows)), missing] = SENTINEL
    # raw network output, unclamped: a poor model may leave [0, 1]
    predicted = _infer_batch(net, inputs, missing) * spec.wires
    return Residuals(missing, test[rows, missing], predicted)


def evaluate(
    net: DenseNetwork,
    test,
    mode: Mode | str = Mode.RANDOM,
    seed: int = 0,
    spec: NormSpec = NormSpec(),
    threshold: float = DEFAULT_THRESHOLD,
) -> EvalReport:
    report = summarize(compute_residuals(net, test, mode, seed, spec), threshold)
    report.mode = Mode(mode).value
    return report


def write_report(report: EvalReport, out_dir) -> None:
    """Write ``report.txt``, ``histogram.csv`` and ``per_index.csv`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = lambda v: format(float(v), ".17g")
    lines = [
        f"mode = {report.mode}",
        f"n = {report.n}",
        f"mean = {g(report.mean)}",
        f"std = {g(report.std)}",
        f"threshold = {g(report.threshold)}",
        f"recovery_rate_proxy = {g(report.recovery_rate)}",
    ]
    lines += [f"{k} = {v}" for k, v in report.extra.items()]
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(out / "histogram.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("bin_low,bin_high,count\n")
        for lo, hi, c in zip(report.bin_edges[:-1], report.bin_edges[1:], report.counts):
            fh.write(f"{g(lo)},{g(hi)},{int(c)}\n")
    with open(out / "per_index.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("index,n,mean,std\n")
        for s in report.per_index:
            fh.write(f"{s.index},{s.n},{g(s.mean)},{g(s.std)}\n")
