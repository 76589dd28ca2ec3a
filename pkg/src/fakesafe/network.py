"""Fully connected networks with hand-written forward and backward passes.

Layer stacks are described by small spec dataclasses; a :class:`Network`
holds the parameters, gradient buffers, and batch-norm running statistics,
and gates dropout/batch-norm behaviour on its train/infer mode. The
elementwise and reduction work runs on the selected kernel backend.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from fakesafe.backends import kernels as K
from fakesafe.errors import ConfigError, ShapeError, StateError
from fakesafe.numerics import make_rng

WEIGHT_INIT_STDDEV = 0.02
TRAIN, INFER = "train", "infer"


@dataclass(frozen=True)
class Dense:
    in_dim: int
    out_dim: int


@dataclass(frozen=True)
class LeakyReLU:
    alpha: float = 0.2


@dataclass(frozen=True)
class BatchNorm:
    dim: int
    momentum: float = 0.99
    eps: float = 1e-5


@dataclass(frozen=True)
class Dropout:
    rate: float


@dataclass(frozen=True)
class Tanh:
    pass


@dataclass(frozen=True)
class Sigmoid:
    pass


LayerSpec = Union[Dense, LeakyReLU, BatchNorm, Dropout, Tanh, Sigmoid]


def validate_specs(specs):
    """Check dims, rates, and that consecutive width-changing layers chain."""
    current = None
    for i, spec in enumerate(specs):
        if isinstance(spec, Dense):
            if spec.in_dim <= 0 or spec.out_dim <= 0:
                raise ConfigError(f"layer {i}: Dense dims must be positive, got {spec}")
            if current is not None and spec.in_dim != current:
                raise ConfigError(
                    f"layer {i}: Dense expects {spec.in_dim} inputs but the "
                    f"previous layer outputs {current}"
                )
            current = spec.out_dim
        elif isinstance(spec, BatchNorm):
            if spec.dim <= 0:
                raise ConfigError(f"layer {i}: BatchNorm dim must be positive")
            if spec.eps <= 0:
                raise ConfigError(f"layer {i}: BatchNorm eps must be > 0")
            if not 0.0 <= spec.momentum < 1.0:
                raise ConfigError(f"layer {i}: BatchNorm momentum must be in [0, 1)")
            if current is not None and spec.dim != current:
                raise ConfigError(
                    f"layer {i}: BatchNorm dim {spec.dim} does not match the "
                    f"previous layer width {current}"
                )
            current = spec.dim
        elif isinstance(spec, Dropout):
            if not 0.0 <= spec.rate < 1.0:
                raise ConfigError(f"layer {i}: dropout rate must be in [0, 1)")
        elif isinstance(spec, LeakyReLU):
            if not 0.0 < spec.alpha < 1.0:
                raise ConfigError(f"layer {i}: leaky-relu slope must be in (0, 1)")
        elif not isinstance(spec, (Tanh, Sigmoid)):
            raise ConfigError(f"layer {i}: unknown layer spec {spec!r}")


class _DenseLayer:
    def __init__(self, spec, rng, dtype):
        self.spec = spec
        self.w = (rng.normal(0.0, WEIGHT_INIT_STDDEV, (spec.in_dim, spec.out_dim))
                  .astype(dtype))
        self.b = np.zeros(spec.out_dim, dtype=dtype)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x = None

    def forward(self, x, rng, train):
        self._x = x
        return x @ self.w + self.b

    def backward(self, gy):
        if self._x is None:
            raise StateError("dense backward called without a cached forward")
        self.gw += self._x.T @ gy
        self.gb += gy.sum(axis=0)
        return np.ascontiguousarray(gy @ self.w.T)

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.gw, self.gb]

    def state_arrays(self):
        return [self.w, self.b]


class _BatchNormLayer:
    def __init__(self, spec, dtype):
        self.spec = spec
        d = spec.dim
        self.gamma = np.ones(d, dtype=dtype)
        self.beta = np.zeros(d, dtype=dtype)
        self.running_mean = np.zeros(d, dtype=dtype)
        self.running_var = np.ones(d, dtype=dtype)
        self.ggamma = np.zeros_like(self.gamma)
        self.gbeta = np.zeros_like(self.beta)
        self._cache = None

    def forward(self, x, rng, train):
        out = np.empty_like(x)
        if train:
            d = self.spec.dim
            xhat = np.empty_like(x)
            mean = np.empty(d, dtype=x.dtype)
            var = np.empty(d, dtype=x.dtype)
            invstd = np.empty(d, dtype=x.dtype)
            K.bn_train_fwd(x, self.gamma, self.beta, self.spec.eps,
                           out, xhat, mean, var, invstd)
            m = self.spec.momentum
            self.running_mean *= m
            self.running_mean += (1.0 - m) * mean
            self.running_var *= m
            self.running_var += (1.0 - m) * var
            self._cache = (xhat, invstd)
        else:
            K.bn_infer_fwd(x, self.gamma, self.beta, self.running_mean,
                           self.running_var, self.spec.eps, out)
            self._cache = None
        return out

    def backward(self, gy):
        if self._cache is None:
            raise StateError("batch-norm backward requires a train-mode forward")
        xhat, invstd = self._cache
        gx = np.empty_like(gy)
        dgamma = np.empty_like(self.gamma)
        dbeta = np.empty_like(self.beta)
        K.bn_bwd(xhat, invstd, self.gamma, gy, gx, dgamma, dbeta)
        self.ggamma += dgamma
        self.gbeta += dbeta
        return gx

    def params(self):
        return [self.gamma, self.beta]

    def grads(self):
        return [self.ggamma, self.gbeta]

    def state_arrays(self):
        return [self.gamma, self.beta, self.running_mean, self.running_var]


class _ActivationLayer:
    def __init__(self, spec):
        self.spec = spec
        self._cache = None

    def forward(self, x, rng, train):
        out = np.empty_like(x)
        if isinstance(self.spec, LeakyReLU):
            K.leaky_relu_fwd(x, self.spec.alpha, out)
            self._cache = x
        elif isinstance(self.spec, Tanh):
            K.tanh_fwd(x, out)
            self._cache = out
        else:
            K.sigmoid_fwd(x, out)
            self._cache = out
        return out

    def backward(self, gy):
        if self._cache is None:
            raise StateError("activation backward called without a cached forward")
        gx = np.empty_like(gy)
        if isinstance(self.spec, LeakyReLU):
            K.leaky_relu_bwd(self._cache, gy, self.spec.alpha, gx)
        elif isinstance(self.spec, Tanh):
            K.tanh_bwd(self._cache, gy, gx)
        else:
            K.sigmoid_bwd(self._cache, gy, gx)
        return gx

    def params(self):
        return []

    def grads(self):
        return []

    def state_arrays(self):
        return []


class _DropoutLayer:
    def __init__(self, spec):
        self.spec = spec
        self._u = None

    def forward(self, x, rng, train):
        if not train or self.spec.rate == 0.0:
            self._u = None
            return x
        if rng is None:
            raise StateError("dropout in train mode requires an rng")
        self._u = rng.random(x.shape)
        out = np.empty_like(x)
        K.dropout_fwd(x, self._u, self.spec.rate, out)
        return out

    def backward(self, gy):
        if self._u is None:
            return gy
        gx = np.empty_like(gy)
        K.dropout_bwd(self._u, gy, self.spec.rate, gx)
        return gx

    def params(self):
        return []

    def grads(self):
        return []

    def state_arrays(self):
        return []


def _build_layer(spec, rng, dtype):
    if isinstance(spec, Dense):
        return _DenseLayer(spec, rng, dtype)
    if isinstance(spec, BatchNorm):
        return _BatchNormLayer(spec, dtype)
    if isinstance(spec, (LeakyReLU, Tanh, Sigmoid)):
        return _ActivationLayer(spec)
    return _DropoutLayer(spec)


class Network:
    """Ordered layer stack with parameters, gradients, and a mode flag.

    Training mutates a network from a single thread; a frozen infer-mode
    network is safe for concurrent read-only forwards.
    """

    def __init__(self, specs, rng, dtype=np.float32):
        specs = list(specs)
        validate_specs(specs)
        self.specs = specs
        self.dtype = np.dtype(dtype)
        self.mode = TRAIN
        self.layers = [_build_layer(s, rng, self.dtype) for s in specs]
        self._out_shape = None

    @property
    def input_dim(self):
        for spec in self.specs:
            if isinstance(spec, Dense):
                return spec.in_dim
            if isinstance(spec, BatchNorm):
                return spec.dim
        return None

    @property
    def output_dim(self):
        dim = None
        for spec in self.specs:
            if isinstance(spec, Dense):
                dim = spec.out_dim
            elif isinstance(spec, BatchNorm) and dim is None:
                dim = spec.dim
        return dim

    def forward(self, x, rng=None):
        x = np.ascontiguousarray(x, dtype=self.dtype)
        if x.ndim != 2:
            raise ShapeError(f"batch must be 2-D, got shape {x.shape}")
        need = self.input_dim
        if need is not None and x.shape[1] != need:
            raise ShapeError(f"batch has {x.shape[1]} columns, network expects {need}")
        train = self.mode == TRAIN
        for layer in self.layers:
            x = layer.forward(x, rng, train)
        self._out_shape = x.shape
        return x

    def backward(self, upstream_grad):
        if self._out_shape is None:
            raise StateError("backward called before any forward")
        g = np.ascontiguousarray(upstream_grad, dtype=self.dtype)
        if g.shape != self._out_shape:
            raise ShapeError(
                f"upstream gradient shape {g.shape} does not match the last "
                f"forward output {self._out_shape}"
            )
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def parameters(self):
        return [p for layer in self.layers for p in layer.params()]

    def gradients(self):
        return [g for layer in self.layers for g in layer.grads()]

    def state_arrays(self):
        """Parameters plus batch-norm running stats, in layer order."""
        return [a for layer in self.layers for a in layer.state_arrays()]

    def zero_grads(self):
        for g in self.gradients():
            g.fill(0.0)

    def set_mode(self, mode):
        if mode not in (TRAIN, INFER):
            raise ConfigError(f"unknown mode {mode!r}, expected 'train' or 'infer'")
        self.mode = mode
        return self


class AdamState:
    """Per-parameter first/second moments and the shared step counter."""

    def __init__(self, net, learning_rate=2e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.moments = [(np.zeros_like(p), np.zeros_like(p))
                        for p in net.parameters()]

    def step(self, net):
        params = net.parameters()
        grads = net.gradients()
        if len(params) != len(self.moments):
            raise StateError(
                f"adam state tracks {len(self.moments)} parameters, "
                f"network has {len(params)}"
            )
        self.t += 1
        for p, g, (m, v) in zip(params, grads, self.moments):
            if m.shape != p.shape:
                raise StateError(
                    f"adam moment shape {m.shape} does not match parameter {p.shape}"
                )
            K.adam_update(p.reshape(-1), g.reshape(-1), m.reshape(-1),
                          v.reshape(-1), self.t, self.learning_rate,
                          self.beta1, self.beta2, self.eps)


def init_network(specs, rng, dtype=np.float32):
    """Fresh network: dense weights N(0, 0.02^2), zero biases, train mode."""
    return Network(specs, rng, dtype=dtype)


def forward(net, batch, rng=None):
    return net.forward(batch, rng)


def backward(net, upstream_grad):
    return net.backward(upstream_grad)


def adam_step(net, state):
    state.step(net)
    return net, state


def set_mode(net, mode):
    return net.set_mode(mode)


def gradient_check(specs, loss_kind, probe_batch, rng=None, step=1e-5):
    """Worst relative error between analytic and central-difference grads.

    Runs in float64 with dropout removed and batch norm on batch statistics,
    so repeated forwards of the same batch are deterministic.
    """
    if loss_kind not in ("sum", "l2"):
        raise ConfigError(f"unknown loss kind {loss_kind!r}, expected 'sum' or 'l2'")
    rng = rng if rng is not None else make_rng(0)
    specs = [s for s in specs if not isinstance(s, Dropout)]
    net = Network(specs, rng, dtype=np.float64)
    x = np.ascontiguousarray(probe_batch, dtype=np.float64)

    target = None
    if loss_kind == "l2":
        target = rng.standard_normal(net.forward(x).shape)

    def loss(y):
        if loss_kind == "sum":
            return float(y.sum())
        return float(0.5 * ((y - target) ** 2).sum())

    def loss_grad(y):
        if loss_kind == "sum":
            return np.ones_like(y)
        return y - target

    net.zero_grads()
    y = net.forward(x)
    net.backward(loss_grad(y))
    analytic = [g.copy() for g in net.gradients()]
    params = net.parameters()
    if not params:
        return 0.0

    worst = 0.0
    for p, ga in zip(params, analytic):
        flat_p = p.reshape(-1)
        flat_g = ga.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            lp = loss(net.forward(x))
            flat_p[i] = orig - step
            lm = loss(net.forward(x))
            flat_p[i] = orig
            numeric = (lp - lm) / (2.0 * step)
            err = abs(flat_g[i] - numeric) / max(abs(flat_g[i]), abs(numeric), 1e-6)
            worst = max(worst, err)
    return float(worst)
