"""Dense feed-forward network with exact backpropagation.

Parameters of every network live in one flat float64 buffer; each layer's
weights (row-major, ``out_dim x in_dim``) are followed by its biases. Layer
objects are views into that buffer, so updates made through either the
flat buffer or the per-layer arrays are visible to both. The numeric
kernels are compiled with numba and shared by the public functions and the
training loop, which keeps the two paths bit-identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

CANONICAL_DIMS = (6, 12, 6, 12, 6)


class Activation(enum.IntEnum):
    SIGMOID = 0
    IDENTITY = 1

    @property
    def tag(self) -> str:
        return self.name.lower()

    @classmethod
    def from_tag(cls, tag: str) -> "Activation":
        try:
            return cls[tag.upper()]
        except KeyError:
            raise ValueError(f"unknown activation tag {tag!r}") from None


class NumericalError(FloatingPointError):
    """A loss or intermediate value became non-finite."""


def _offsets(dims: np.ndarray) -> np.ndarray:
    sizes = dims[1:] * dims[:-1] + dims[1:]
    return np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)


def n_params(dims: Sequence[int]) -> int:
    d = np.asarray(dims, dtype=np.int64)
    return int(np.sum(d[1:] * d[:-1] + d[1:]))


@dataclass(eq=False)
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: Activation = Activation.SIGMOID

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError(
                f"weights {self.weights.shape} and biases {self.biases.shape} disagree"
            )
        if min(self.weights.shape) < 1:
            raise ValueError("layer dimensions must be positive")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


class _FlatLayout:
    """Shared indexing for a flat parameter-shaped buffer."""

    dims: np.ndarray
    flat: np.ndarray

    def _views(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        n_in, n_out = int(self.dims[i]), int(self.dims[i + 1])
        start = int(_offsets(self.dims)[i])
        w = self.flat[start : start + n_in * n_out].reshape(n_out, n_in)
        b = self.flat[start + n_in * n_out : start + n_in * n_out + n_out]
        return w, b

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1


class DenseNetwork(_FlatLayout):
    def __init__(self, dims: Sequence[int], activations: Sequence[Activation], flat=None):
        self.dims = np.asarray(dims, dtype=np.int64)
        self.acts = np.asarray([int(Activation(a)) for a in activations], dtype=np.int64)
        if len(self.dims) < 2 or np.any(self.dims < 1):
            raise ValueError(f"need at least two positive dims, got {list(dims)}")
        if len(self.acts) != len(self.dims) - 1:
            raise ValueError("one activation per layer required")
        size = n_params(self.dims)
        if flat is None:
            self.flat = np.zeros(size)
        else:
            self.flat = np.array(flat, dtype=np.float64)
            if self.flat.shape != (size,):
                raise ValueError(f"expected {size} parameters, got {self.flat.shape}")

    @classmethod
    def from_layers(cls, layers: Sequence[DenseLayer]) -> "DenseNetwork":
        if not layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer output {a.out_dim} does not feed input {b.in_dim}")
        dims = [layers[0].in_dim] + [layer.out_dim for layer in layers]
        net = cls(dims, [layer.activation for layer in layers])
        for i, layer in enumerate(layers):
            w, b = net._views(i)
            w[:] = layer.weights
            b[:] = layer.biases
        return net

    @property
    def layers(self) -> list[DenseLayer]:
        out = []
        for i in range(self.n_layers):
            w, b = self._views(i)
            layer = DenseLayer.__new__(DenseLayer)
            layer.weights, layer.biases = w, b
            layer.activation = Activation(int(self.acts[i]))
            out.append(layer)
        return out

    @property
    def activations(self) -> list[Activation]:
        return [Activation(int(a)) for a in self.acts]

    @property
    def in_dim(self) -> int:
        return int(self.dims[0])

    @property
    def out_dim(self) -> int:
        return int(self.dims[-1])

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(self.dims, self.acts, self.flat)

    def __eq__(self, other):
        if not isinstance(other, DenseNetwork):
            return NotImplemented
        return (
            np.array_equal(self.dims, other.dims)
            and np.array_equal(self.acts, other.acts)
            and np.array_equal(self.flat, other.flat)
        )


class GradientSet(_FlatLayout):
    """Per-parameter gradients (or velocities) laid out like a network."""

    def __init__(self, dims: Sequence[int], flat=None):
        self.dims = np.asarray(dims, dtype=np.int64)
        size = n_params(self.dims)
        self.flat = np.zeros(size) if flat is None else np.array(flat, dtype=np.float64)
        if self.flat.shape != (size,):
            raise ValueError(f"expected {size} values, got {self.flat.shape}")

    @classmethod
    def zeros_like(cls, net: DenseNetwork) -> "GradientSet":
        return cls(net.dims)

    def weights(self, i: int) -> np.ndarray:
        return self._views(i)[0]

    def biases(self, i: int) -> np.ndarray:
        return self._views(i)[1]


def init_network(
    dims: Sequence[int],
    seed: int,
    activation: Activation = Activation.SIGMOID,
) -> DenseNetwork:
    """Xavier-uniform weights, zero biases, reproducible from ``seed``."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"need at least two positive dims, got {dims}")
    net = DenseNetwork(dims, [activation] * (len(dims) - 1))
    rng = np.random.default_rng(seed)
    for i in range(net.n_layers):
        w, _ = net._views(i)
        limit = np.sqrt(6.0 / (dims[i] + dims[i + 1]))
        w[:] = rng.uniform(-limit, limit, size=w.shape)
    return net


# --- compiled kernels -------------------------------------------------------


@njit(cache=True)
def _forward_kernel(flat, dims, acts, x, act_buf):
    """Fill ``act_buf`` with every layer's activations, input first."""
    n0 = dims[0]
    for j in range(n0):
        act_buf[j] = x[j]
    p = 0
    a_in = 0
    for l in range(dims.shape[0] - 1):
        n_in = dims[l]
        n_out = dims[l + 1]
        a_out = a_in + n_in
        b_off = p + n_in * n_out
        for i in range(n_out):
            z = flat[b_off + i]
            row = p + i * n_in
            for j in range(n_in):
                z += flat[row + j] * act_buf[a_in + j]
            if acts[l] == 0:
                z = 1.0 / (1.0 + np.exp(-z))
            act_buf[a_out + i] = z
        p = b_off + n_out
        a_in = a_out


@njit(cache=True)
def _backprop_kernel(flat, dims, acts, x, target, act_buf, delta, grad):
    """Mean-squared-error loss; writes dLoss/dparam into ``grad``."""
    _forward_kernel(flat, dims, acts, x, act_buf)
    n_layers = dims.shape[0] - 1
    d_out = dims[n_layers]
    a_off = act_buf.shape[0] - d_out
    loss = 0.0
    for i in range(d_out):
        diff = act_buf[a_off + i] - target[i]
        loss += diff * diff
        delta[i] = 2.0 * diff / d_out
    loss /= d_out

    p_end = grad.shape[0]
    for l in range(n_layers - 1, -1, -1):
        n_in = dims[l]
        n_out = dims[l + 1]
        a_in = a_off - n_in
        if acts[l] == 0:
            for i in range(n_out):
                y = act_buf[a_off + i]
                delta[i] *= y * (1.0 - y)
        p = p_end - n_in * n_out - n_out
        b_off = p + n_in * n_out
        for i in range(n_out):
            grad[b_off + i] = delta[i]
            row = p + i * n_in
            for j in range(n_in):
                grad[row + j] = delta[i] * act_buf[a_in + j]
        if l > 0:
            # reuse the tail of delta as scratch for the lower layer
            half = delta.shape[0] // 2
            for j in range(n_in):
                s = 0.0
                for i in range(n_out):
                    s += flat[p + i * n_in + j] * delta[i]
                delta[half + j] = s
            for j in range(n_in):
                delta[j] = delta[half + j]
        p_end = p
        a_off = a_in
    return loss


@njit(cache=True)
def _momentum_kernel(flat, grad, vel, lr, momentum):
    for k in range(flat.shape[0]):
        vel[k] = momentum * vel[k] - lr * grad[k]
        flat[k] += vel[k]


@njit(cache=True)
def _train_epoch_kernel(flat, vel, dims, acts, inputs, targets, order, lr, momentum):
    """One online pass; returns (loss sum, index of first non-finite loss or -1)."""
    act_buf = np.empty(np.sum(dims))
    delta = np.empty(2 * np.max(dims))
    grad = np.empty(flat.shape[0])
    total = 0.0
    for n in range(order.shape[0]):
        k = order[n]
        loss = _backprop_kernel(flat, dims, acts, inputs[k], targets[k], act_buf, delta, grad)
        if not np.isfinite(loss):
            return total, n
        total += loss
        _momentum_kernel(flat, grad, vel, lr, momentum)
    return total, -1


# --- public operations ------------------------------------------------------


def _vector(v, n: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.shape != (n,):
        raise ValueError(f"{what} has shape {arr.shape}, expected ({n},)")
    return arr


def _scratch(net: DenseNetwork) -> tuple[np.ndarray, np.ndarray]:
    return np.empty(int(net.dims.sum())), np.empty(2 * int(net.dims.max()))


def forward(net: DenseNetwork, x) -> np.ndarray:
    x = _vector(x, net.in_dim, "input")
    act_buf, _ = _scratch(net)
    _forward_kernel(net.flat, net.dims, net.acts, x, act_buf)
    return act_buf[-net.out_dim :].copy()


def loss(net: DenseNetwork, x, target) -> float:
    out = forward(net, x)
    target = _vector(target, net.out_dim, "target")
    return float(np.mean((out - target) ** 2))


def backprop(net: DenseNetwork, x, target) -> tuple[float, GradientSet]:
    """Return the MSE loss and its exact gradient for one sample."""
    x = _vector(x, net.in_dim, "input")
    target = _vector(target, net.out_dim, "target")
    act_buf, delta = _scratch(net)
    grads = GradientSet.zeros_like(net)
    value = _backprop_kernel(net.flat, net.dims, net.acts, x, target, act_buf, delta, grads.flat)
    if not (np.isfinite(value) and np.all(np.isfinite(grads.flat))):
        raise NumericalError("non-finite value during backpropagation")
    return float(value), grads


def numerical_gradient(net: DenseNetwork, x, target, epsilon: float = 1e-5) -> GradientSet:
    """Central finite differences of the MSE loss, one parameter at a time."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x = _vector(x, net.in_dim, "input")
    target = _vector(target, net.out_dim, "target")
    act_buf, _ = _scratch(net)
    d_out = net.out_dim
    work = net.flat.copy()
    grads = GradientSet.zeros_like(net)

    def value():
        _forward_kernel(work, net.dims, net.acts, x, act_buf)
        return np.mean((act_buf[-d_out:] - target) ** 2)

    for k in range(work.shape[0]):
        saved = work[k]
        work[k] = saved + epsilon
        up = value()
        work[k] = saved - epsilon
        down = value()
        work[k] = saved
        grads.flat[k] = (up - down) / (2.0 * epsilon)
    return grads


def apply_update(
    net: DenseNetwork,
    grads: GradientSet,
    velocity: GradientSet,
    lr: float,
    momentum: float,
) -> GradientSet:
    """Momentum SGD step, in place on ``net`` and ``velocity``."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if not 0 <= momentum < 1:
        raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
    for g in (grads, velocity):
        if not np.array_equal(g.dims, net.dims):
            raise ValueError(f"gradient dims {list(g.dims)} do not match network {list(net.dims)}")
    _momentum_kernel(net.flat, grads.flat, velocity.flat, float(lr), float(momentum))
    return velocity


def relative_error(analytic, numeric) -> float:
    """Norm-wise relative difference of two gradient vectors.

    Element-wise ratios are dominated by finite-difference round-off on
    near-zero components, so the comparison is made on whole vectors.
    """
    a = np.ravel(getattr(analytic, "flat", analytic))
    n = np.ravel(getattr(numeric, "flat", numeric))
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def gradient_check(net: DenseNetwork, n_trials: int = 10, seed: int = 0, epsilon: float = 1e-5) -> float:
    """Worst relative error between backprop and finite differences on random samples in [0, 1]."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        x, t = rng.random(net.in_dim), rng.random(net.out_dim)
        _, grads = backprop(net, x, t)
        worst = max(worst, relative_error(grads, numerical_gradient(net, x, t, epsilon)))
    return worst
