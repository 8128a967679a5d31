"""Small numpy multilayer perceptrons with hand-written reverse mode.

Everything runs in float64 on ``(batch, features)`` arrays. A net records
its last forward pass so that :meth:`DenseNet.backward` can return exact
parameter gradients and the gradient with respect to the input.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

ACTIVATIONS = ("linear", "elu", "tanh")
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DivergenceError(FloatingPointError):
    """Raised when a loss or gradient stops being finite."""


def _act(z, kind):
    if kind == "linear":
        return z
    if kind == "elu":
        return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))
    return np.tanh(z)


def _act_grad(z, a, kind):
    if kind == "linear":
        return np.ones_like(z)
    if kind == "elu":
        return np.where(z > 0, 1.0, a + 1.0)
    return 1.0 - a * a


class DenseNet:
    """Fully connected net; ``sizes = [in, h1, ..., out]``.

    Weights are stored as ``(fan_in, fan_out)`` so a forward step is
    ``x @ W + b``. Initialisation is uniform in ``±1/sqrt(fan_in)``.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator | None = None,
        hidden_activation: str = "elu",
        output_activation: str = "linear",
        activations: Sequence[str] | None = None,
    ):
        if len(sizes) < 2:
            raise ValueError("a net needs at least an input and an output width")
        self.sizes = [int(s) for s in sizes]
        n_layers = len(self.sizes) - 1
        if activations is None:
            activations = [hidden_activation] * (n_layers - 1) + [output_activation]
        if len(activations) != n_layers or any(a not in ACTIVATIONS for a in activations):
            raise ValueError(f"need {n_layers} activations from {ACTIVATIONS}, got {activations}")
        self.activations = list(activations)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, fan_out))
        self._cache = None

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    @property
    def layers(self):
        return [
            (self.params[2 * i], self.params[2 * i + 1], self.activations[i])
            for i in range(len(self.activations))
        ]

    def forward(self, x, record: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"expected input width {self.sizes[0]}, got {x.shape[-1]}")
        cache = []
        a = x
        for W, b, kind in self.layers:
            z = a @ W + b
            out = _act(z, kind)
            cache.append((a, z, out))
            a = out
        self._cache = (cache, squeeze) if record else None
        return a[0] if squeeze else a

    __call__ = forward

    def backward(self, upstream) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of ``sum(upstream * output)`` w.r.t. params and input."""
        if self._cache is None:
            raise RuntimeError("backward called without a recorded forward pass")
        cache, squeeze = self._cache
        g = np.asarray(upstream, dtype=float)
        if squeeze:
            g = g[None, :]
        grads: list[np.ndarray] = [None] * len(self.params)
        for i in range(len(cache) - 1, -1, -1):
            a_in, z, out = cache[i]
            kind = self.activations[i]
            if kind != "linear":
                g = g * _act_grad(z, out, kind)
            grads[2 * i] = a_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, (g[0] if squeeze else g)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} values, got {flat.size}")
        offset = 0
        for p in self.params:
            p[...] = flat[offset : offset + p.size].reshape(p.shape)
            offset += p.size

    def copy(self) -> "DenseNet":
        twin = DenseNet.__new__(DenseNet)
        twin.sizes = list(self.sizes)
        twin.activations = list(self.activations)
        twin.params = [p.copy() for p in self.params]
        twin._cache = None
        return twin


def forward(net: DenseNet, x) -> np.ndarray:
    return net.forward(x)


def backward(net: DenseNet, upstream):
    return net.backward(upstream)


class Adam:
    """Adam over a list of arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError(f"expected {len(self.params)} gradients, got {len(grads)}")
        for p, g in zip(self.params, grads):
            if np.shape(g) != p.shape:
                raise ValueError(f"gradient shape {np.shape(g)} does not match parameter {p.shape}")
            if not np.all(np.isfinite(g)):
                raise DivergenceError("non-finite gradient")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}


def optimizer_step(opt: Adam, grads) -> list[np.ndarray]:
    opt.step(grads)
    return opt.params


def log_softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits) -> np.ndarray:
    return np.exp(log_softmax(logits))


def categorical_from_logits(logits, rng: np.random.Generator | None = None):
    """Sample an arm and return ``(index, log_probs, entropy)``.

    Works on a single logit vector or a ``(batch, D)`` array. ``index`` is
    ``None`` when no generator is given.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.shape[-1] < 1:
        raise ValueError("need at least one logit")
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    log_p = log_softmax(logits)
    p = np.exp(log_p)
    entropy = -(p * log_p).sum(axis=-1)
    index = None
    if rng is not None:
        cdf = np.cumsum(p, axis=-1)
        u = rng.random(p.shape[:-1] + (1,))
        index = np.minimum((u > cdf).sum(axis=-1), p.shape[-1] - 1)
        if index.ndim == 0:
            index = int(index)
    return index, log_p, entropy


def log1m_tanh_sq(u) -> np.ndarray:
    """``log(1 - tanh(u)^2)`` without cancellation for large ``|u|``."""
    u = np.asarray(u, dtype=float)
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def squashed_gaussian_sample(
    mean,
    log_std,
    p_max: float,
    rng: np.random.Generator | None = None,
    noise=None,
):
    """Sample ``p = p_max (tanh(u) + 1) / 2`` with ``u ~ N(mean, exp(log_std)^2)``.

    Returns ``(power, log_density)`` where the density is over ``p`` itself,
    i.e. it carries both the tanh Jacobian and the ``p_max / 2`` scale.
    Pass ``noise`` to fix the standard-normal draw (reparameterisation).
    """
    mean = np.asarray(mean, dtype=float)
    log_std = np.asarray(log_std, dtype=float)
    if noise is None:
        noise = rng.standard_normal(np.broadcast(mean, log_std).shape)
    u = mean + np.exp(log_std) * noise
    power = p_max * (np.tanh(u) + 1.0) / 2.0
    log_density = (
        -0.5 * noise ** 2 - log_std - LOG_SQRT_2PI - log1m_tanh_sq(u) - math.log(p_max / 2.0)
    )
    return power, log_density


def grad_check(
    params: list[np.ndarray],
    loss_fn: Callable[[], float],
    analytic: list[np.ndarray],
    step: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """Max elementwise relative error between ``analytic`` and central differences.

    ``loss_fn`` is re-evaluated with each entry of ``params`` perturbed in
    place; the relative error of an entry is ``|a - n| / max(|a|, |n|, floor)``.
    """
    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.reshape(-1)
        gflat = np.asarray(g, dtype=float).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            num = (up - down) / (2.0 * step)
            err = abs(gflat[i] - num) / max(abs(gflat[i]), abs(num), floor)
            worst = max(worst, err)
    return worst


# -- checkpoint format -------------------------------------------------------
#
#   magic   4 bytes  b"CRNN"
#   version u32      1
#   layers  u32      L
#   widths  u32 * (L + 1)
#   acts    u8  * L  (0 linear, 1 elu, 2 tanh)
#   params  f64 * P  W0 (row-major, fan_in x fan_out), b0, W1, b1, ...
#
# All integers and floats are little-endian.

_MAGIC = b"CRNN"
_VERSION = 1


def save_net(net: DenseNet, path) -> None:
    n_layers = len(net.activations)
    header = _MAGIC + struct.pack(f"<II{n_layers + 1}I", _VERSION, n_layers, *net.sizes)
    header += bytes(ACTIVATIONS.index(a) for a in net.activations)
    Path(path).write_bytes(header + net.get_flat().astype("<f8").tobytes())


def load_net(path) -> DenseNet:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    sizes = struct.unpack_from(f"<{n_layers + 1}I", data, offset)
    offset += 4 * (n_layers + 1)
    acts = [ACTIVATIONS[b] for b in data[offset : offset + n_layers]]
    offset += n_layers
    net = DenseNet(sizes, activations=acts)
    flat = np.frombuffer(data, dtype="<f8", offset=offset)
    net.set_flat(flat)
    return net
