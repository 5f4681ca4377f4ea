"""Online momentum-SGD training loop and the text model format."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import CorruptedPair, PairArrays
from .nncore import (
    Activation,
    DenseNetwork,
    NumericalError,
    _train_epoch_kernel,
    n_params,
)

log = logging.getLogger(__name__)

MODEL_MAGIC = "segrestore-model v1"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    max_epochs: int = 2000
    target_mse: float = 1e-5
    shuffle_seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.target_mse < 0:
            raise ValueError("target_mse must be non-negative")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass
class TrainReport:
    epochs_run: int = 0
    history: list[float] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def final_mse(self) -> float:
        return self.history[-1]


def train(
    pairs: PairArrays | Sequence[CorruptedPair],
    cfg: TrainConfig,
    net: DenseNetwork,
) -> TrainReport:
    """Train ``net`` in place, one momentum update per pair, reshuffled every epoch.

    The recorded epoch MSE is the mean of per-pair losses measured just
    before each pair's update.
    """
    if not isinstance(pairs, PairArrays):
        pairs = PairArrays.from_pairs(list(pairs))
    if len(pairs) == 0:
        raise ValueError("no training pairs")
    if pairs.inputs.shape[1] != net.in_dim or pairs.targets.shape[1] != net.out_dim:
        raise ValueError(
            f"pairs are {pairs.inputs.shape[1]}->{pairs.targets.shape[1]}, "
            f"network is {net.in_dim}->{net.out_dim}"
        )
    inputs = np.ascontiguousarray(pairs.inputs, dtype=np.float64)
    targets = np.ascontiguousarray(pairs.targets, dtype=np.float64)
    velocity = np.zeros_like(net.flat)
    rng = np.random.default_rng(cfg.shuffle_seed)
    report = TrainReport()
    t0 = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(pairs))
        total, bad = _train_epoch_kernel(
            net.flat, velocity, net.dims, net.acts, inputs, targets, order,
            cfg.learning_rate, cfg.momentum,
        )
        if bad >= 0:
            raise NumericalError(
                f"non-finite loss at epoch {epoch}, pair index {int(order[bad])}"
            )
        mse = total / len(pairs)
        report.history.append(mse)
        report.epochs_run = epoch
        if epoch % cfg.log_every == 0:
            log.info("epoch %d mean mse %.6g", epoch, mse)
        if mse <= cfg.target_mse:
            break
    report.wall_time = time.perf_counter() - t0
    return report


def write_history(report: TrainReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,mean_mse\n")
        for epoch, mse in enumerate(report.history, start=1):
            fh.write(f"{epoch},{mse:.17g}\n")


# --- model files -------------------------------------------------------------


class ModelFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_model(net: DenseNetwork) -> str:
    lines = [
        MODEL_MAGIC,
        " ".join(str(int(d)) for d in net.dims),
        " ".join(a.tag for a in net.activations),
    ]
    for layer in net.layers:
        for row, bias in zip(layer.weights, layer.biases):
            lines.append(" ".join(format(float(v), ".17g") for v in (*row, bias)))
    return "\n".join(lines) + "\n"


def save_model(net: DenseNetwork, path) -> None:
    _atomic_write(path, format_model(net))


def load_model(path) -> DenseNetwork:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    def line(n: int) -> str:
        if n > len(lines):
            raise ModelFormatError(path, n, "unexpected end of file")
        return lines[n - 1]

    if line(1).strip() != MODEL_MAGIC:
        raise ModelFormatError(path, 1, f"unsupported header {line(1)!r}, expected {MODEL_MAGIC!r}")
    text = line(2)
    try:
        dims = [int(t) for t in text.split()]
    except ValueError:
        raise ModelFormatError(path, 2, "dims must be integers") from None
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ModelFormatError(path, 2, f"invalid dims {dims}")
    tags = line(3).split()
    if len(tags) != len(dims) - 1:
        raise ModelFormatError(path, 3, f"{len(tags)} activations for {len(dims) - 1} layers")
    try:
        acts = [Activation.from_tag(t) for t in tags]
    except ValueError as exc:
        raise ModelFormatError(path, 3, str(exc)) from None

    flat = np.empty(n_params(dims))
    pos = 0
    n = 4
    for n_in, n_out in zip(dims, dims[1:]):
        weights = np.empty((n_out, n_in))
        biases = np.empty(n_out)
        for i in range(n_out):
            text = line(n)
            try:
                values = [float(t) for t in text.split()]
            except ValueError:
                raise ModelFormatError(path, n, "non-numeric parameter") from None
            if len(values) != n_in + 1:
                raise ModelFormatError(path, n, f"expected {n_in + 1} values, got {len(values)}")
            if not np.all(np.isfinite(values)):
                raise ModelFormatError(path, n, "non-finite parameter")
            weights[i] = values[:n_in]
            biases[i] = values[n_in]
            n += 1
        flat[pos : pos + weights.size] = weights.ravel()
        flat[pos + weights.size : pos + weights.size + n_out] = biases
        pos += weights.size + n_out
    if any(s.strip() for s in lines[n - 1 :]):
        raise ModelFormatError(path, n, "trailing content after last layer")
    return DenseNetwork(dims, acts, flat)
