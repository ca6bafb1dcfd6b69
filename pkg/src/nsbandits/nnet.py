"""Minimal neural-network core with exact hand-written gradients.

Two architectures are supported, both ending in a single linear output unit
without bias so that the penultimate-layer activations can serve as feature
vectors for a linear model:

* feedforward: an optional sinusoidal layer fed only by the time step,
  concatenated with the feature input, then linear / tanh / tanh hidden
  layers;
* recurrent: linear layer, LSTM layer (forget gates, no peepholes), tanh
  layer.

Training is full-batch gradient descent with Adam; the recurrent gradient is
exact backpropagation through the entire sequence. All arithmetic is double
precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

WEIGHT_REDRAW_BOUND = 2.0


@dataclass(frozen=True)
class ArchitectureSpec:
    """Shape of one network. ``sinusoidal_units`` is meaningful only for the
    feedforward kind; the recurrent kind must have zero."""

    kind: str  # "feedforward" | "recurrent"
    input_dim: int
    hidden_sizes: tuple[int, int, int]
    sinusoidal_units: int = 0

    def __post_init__(self):
        if self.kind not in ("feedforward", "recurrent"):
            raise ValueError(f"unknown architecture kind: {self.kind!r}")
        if len(self.hidden_sizes) != 3 or any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden_sizes must be three positive layer widths")
        if self.input_dim < 0 or self.sinusoidal_units < 0:
            raise ValueError("dimensions must be non-negative")
        if self.kind == "recurrent" and self.sinusoidal_units != 0:
            raise ValueError("recurrent networks have no sinusoidal layer")
        if self.kind == "feedforward" and self.input_dim + self.sinusoidal_units < 1:
            raise ValueError("feedforward network needs at least one input")


def _param_shapes(spec: ArchitectureSpec) -> dict[str, tuple]:
    l1, l2, l3 = spec.hidden_sizes
    if spec.kind == "feedforward":
        d = spec.sinusoidal_units
        in0 = d + spec.input_dim
        shapes = {}
        if d > 0:
            shapes["sin_a"] = (d,)
            shapes["sin_b"] = (d,)
        shapes.update({
            "W1": (in0, l1), "b1": (l1,),
            "W2": (l1, l2), "b2": (l2,),
            "W3": (l2, l3), "b3": (l3,),
            "w_out": (l3,),
        })
        return shapes
    shapes = {"W1": (spec.input_dim, l1), "b1": (l1,)}
    for gate in ("i", "f", "o", "g"):
        shapes[f"Wx{gate}"] = (l1, l2)
        shapes[f"Wh{gate}"] = (l2, l2)
        shapes[f"b{gate}"] = (l2,)
    shapes.update({"W3": (l2, l3), "b3": (l3,), "w_out": (l3,)})
    return shapes


def _is_bias(name: str) -> bool:
    return name.startswith("b")


@dataclass
class ParamSet:
    """All trainable parameters of one network plus Adam optimizer state."""

    spec: ArchitectureSpec
    values: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray]
    adam_v: dict[str, np.ndarray]
    adam_step: int = 0

    def copy(self) -> "ParamSet":
        return ParamSet(
            spec=self.spec,
            values={k: v.copy() for k, v in self.values.items()},
            adam_m={k: v.copy() for k, v in self.adam_m.items()},
            adam_v={k: v.copy() for k, v in self.adam_v.items()},
            adam_step=self.adam_step,
        )


@dataclass
class RnnState:
    """Hidden and cell activations of the LSTM layer; zeros when fresh."""

    hidden: np.ndarray
    cell: np.ndarray

    @classmethod
    def zeros(cls, spec: ArchitectureSpec) -> "RnnState":
        l2 = spec.hidden_sizes[1]
        return cls(hidden=np.zeros(l2), cell=np.zeros(l2))


@dataclass
class FeedforwardData:
    """Full-batch supervised set for the feedforward network: one row of
    ``inputs`` plus the matching entry of ``times`` per target reward."""

    inputs: np.ndarray  # (n, input_dim)
    times: np.ndarray  # (n,)
    targets: np.ndarray  # (n,)


@dataclass
class SequenceData:
    """One full supervised sequence for the recurrent network; targets align
    index-for-index with step inputs."""

    inputs: np.ndarray  # (n, input_dim)
    targets: np.ndarray  # (n,)


def init_params(spec: ArchitectureSpec, seed: int) -> ParamSet:
    """Draw weights from a standard Gaussian, redrawing any sample with
    magnitude above two standard deviations; biases start at zero."""
    rng = np.random.default_rng(seed)
    values = {}
    for name, shape in _param_shapes(spec).items():
        if _is_bias(name):
            values[name] = np.zeros(shape)
            continue
        w = rng.standard_normal(shape)
        bad = np.abs(w) > WEIGHT_REDRAW_BOUND
        while np.any(bad):
            w[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(w) > WEIGHT_REDRAW_BOUND
        values[name] = w
    zeros = {k: np.zeros_like(v) for k, v in values.items()}
    return ParamSet(
        spec=spec,
        values=values,
        adam_m=zeros,
        adam_v={k: v.copy() for k, v in zeros.items()},
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def ff_forward_batch(params: ParamSet, times: np.ndarray, inputs: np.ndarray):
    """Forward pass over a batch; returns predictions, penultimate features,
    and the cache needed for the backward pass."""
    spec = params.spec
    v = params.values
    times = np.asarray(times, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != spec.input_dim:
        raise ValueError(
            f"expected inputs of shape (n, {spec.input_dim}), got {inputs.shape}"
        )
    if spec.sinusoidal_units > 0:
        phase = np.outer(times, v["sin_a"]) + v["sin_b"]
        h0 = np.concatenate([np.sin(phase), inputs], axis=1)
    else:
        phase = None
        h0 = inputs
    h1 = h0 @ v["W1"] + v["b1"]
    h2 = np.tanh(h1 @ v["W2"] + v["b2"])
    z = np.tanh(h2 @ v["W3"] + v["b3"])
    preds = z @ v["w_out"]
    cache = (times, phase, h0, h1, h2, z)
    return preds, z, cache


def ff_forward(params: ParamSet, t: float, feature_input: np.ndarray):
    """Single-example forward pass; returns (prediction, penultimate z)."""
    preds, z, _ = ff_forward_batch(
        params, np.array([t], dtype=float), np.asarray(feature_input, dtype=float)[None, :]
    )
    return float(preds[0]), z[0]


def rnn_step(params: ParamSet, state: RnnState, step_input: np.ndarray):
    """One recurrent step; returns (new state, prediction, penultimate u)."""
    v = params.values
    x = np.asarray(step_input, dtype=float)
    if x.shape != (params.spec.input_dim,):
        raise ValueError(
            f"expected step input of shape ({params.spec.input_dim},), got {x.shape}"
        )
    h1 = x @ v["W1"] + v["b1"]
    hp, cp = state.hidden, state.cell
    i = _sigmoid(h1 @ v["Wxi"] + hp @ v["Whi"] + v["bi"])
    f = _sigmoid(h1 @ v["Wxf"] + hp @ v["Whf"] + v["bf"])
    o = _sigmoid(h1 @ v["Wxo"] + hp @ v["Who"] + v["bo"])
    g = np.tanh(h1 @ v["Wxg"] + hp @ v["Whg"] + v["bg"])
    c = f * cp + i * g
    h = o * np.tanh(c)
    u = np.tanh(h @ v["W3"] + v["b3"])
    pred = float(u @ v["w_out"])
    return RnnState(hidden=h, cell=c), pred, u


def rnn_forward_sequence(params: ParamSet, inputs: np.ndarray):
    """Run the network over a whole sequence from a fresh state.

    Returns (predictions, features, final state) where ``features`` stacks
    the penultimate vector of every step.
    """
    state = RnnState.zeros(params.spec)
    preds = np.empty(len(inputs))
    feats = np.empty((len(inputs), params.spec.hidden_sizes[2]))
    for k, x in enumerate(inputs):
        state, preds[k], feats[k] = rnn_step(params, state, x)
    return preds, feats, state


def _reg_term(params: ParamSet, lam: float) -> float:
    return lam * sum(float(np.sum(p * p)) for p in params.values.values())


def loss(params: ParamSet, data, lam: float) -> float:
    """Mean squared error plus L2 penalty over every trainable parameter."""
    if len(data.targets) == 0:
        raise ValueError("empty supervised set")
    if isinstance(data, FeedforwardData):
        preds, _, _ = ff_forward_batch(params, data.times, data.inputs)
    else:
        preds, _, _ = rnn_forward_sequence(params, data.inputs)
    err = preds - data.targets
    return float(np.mean(err * err)) + _reg_term(params, lam)


def _ff_gradient(params: ParamSet, data: FeedforwardData) -> dict[str, np.ndarray]:
    spec = params.spec
    v = params.values
    preds, z, cache = ff_forward_batch(params, data.times, data.inputs)
    times, phase, h0, h1, h2, _ = cache
    n = len(data.targets)
    dpred = 2.0 * (preds - data.targets) / n

    grads = {"w_out": z.T @ dpred}
    dz = np.outer(dpred, v["w_out"])
    da3 = dz * (1.0 - z * z)
    grads["W3"] = h2.T @ da3
    grads["b3"] = da3.sum(axis=0)
    dh2 = da3 @ v["W3"].T
    da2 = dh2 * (1.0 - h2 * h2)
    grads["W2"] = h1.T @ da2
    grads["b2"] = da2.sum(axis=0)
    dh1 = da2 @ v["W2"].T
    grads["W1"] = h0.T @ dh1
    grads["b1"] = dh1.sum(axis=0)
    if spec.sinusoidal_units > 0:
        dh0 = dh1 @ v["W1"].T
        ds = dh0[:, : spec.sinusoidal_units]
        dphase = ds * np.cos(phase)
        grads["sin_a"] = (dphase * times[:, None]).sum(axis=0)
        grads["sin_b"] = dphase.sum(axis=0)
    return grads


def _rnn_gradient(params: ParamSet, data: SequenceData) -> dict[str, np.ndarray]:
    v = params.values
    inputs = np.asarray(data.inputs, dtype=float)
    n = len(data.targets)
    l2 = params.spec.hidden_sizes[1]

    # Forward pass, keeping every intermediate needed for BPTT.
    state = RnnState.zeros(params.spec)
    cache = []
    preds = np.empty(n)
    for k in range(n):
        x = inputs[k]
        h1 = x @ v["W1"] + v["b1"]
        hp, cp = state.hidden, state.cell
        i = _sigmoid(h1 @ v["Wxi"] + hp @ v["Whi"] + v["bi"])
        f = _sigmoid(h1 @ v["Wxf"] + hp @ v["Whf"] + v["bf"])
        o = _sigmoid(h1 @ v["Wxo"] + hp @ v["Who"] + v["bo"])
        g = np.tanh(h1 @ v["Wxg"] + hp @ v["Whg"] + v["bg"])
        c = f * cp + i * g
        tc = np.tanh(c)
        h = o * tc
        u = np.tanh(h @ v["W3"] + v["b3"])
        preds[k] = u @ v["w_out"]
        cache.append((x, h1, hp, cp, i, f, o, g, c, tc, h, u))
        state = RnnState(hidden=h, cell=c)

    dpred = 2.0 * (preds - data.targets) / n
    grads = {name: np.zeros(shape) for name, shape in _param_shapes(params.spec).items()}
    dh_next = np.zeros(l2)
    dc_next = np.zeros(l2)
    for k in range(n - 1, -1, -1):
        x, h1, hp, cp, i, f, o, g, c, tc, h, u = cache[k]
        grads["w_out"] += dpred[k] * u
        du = dpred[k] * v["w_out"]
        da3 = du * (1.0 - u * u)
        grads["W3"] += np.outer(h, da3)
        grads["b3"] += da3
        dh = da3 @ v["W3"].T + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * cp
        dc_next = dc * f
        dzi = di * i * (1.0 - i)
        dzf = df * f * (1.0 - f)
        dzo = do * o * (1.0 - o)
        dzg = dg * (1.0 - g * g)
        dh1 = np.zeros_like(h1)
        dh_next = np.zeros(l2)
        for gate, dz in (("i", dzi), ("f", dzf), ("o", dzo), ("g", dzg)):
            grads[f"Wx{gate}"] += np.outer(h1, dz)
            grads[f"Wh{gate}"] += np.outer(hp, dz)
            grads[f"b{gate}"] += dz
            dh1 += dz @ v[f"Wx{gate}"].T
            dh_next += dz @ v[f"Wh{gate}"].T
        grads["W1"] += np.outer(x, dh1)
        grads["b1"] += dh1
    return grads


def gradient(params: ParamSet, data, lam: float) -> dict[str, np.ndarray]:
    """Exact gradient of :func:`loss`; the recurrent case backpropagates
    through the full sequence."""
    if len(data.targets) == 0:
        raise ValueError("empty supervised set")
    if isinstance(data, FeedforwardData):
        grads = _ff_gradient(params, data)
    else:
        grads = _rnn_gradient(params, data)
    for name, p in params.values.items():
        grads[name] = grads[name] + 2.0 * lam * p
    return grads


def adam_step(params: ParamSet, grads: dict[str, np.ndarray], lr: float) -> ParamSet:
    """One Adam update (beta1=0.9, beta2=0.999, eps=1e-8); returns a new
    ParamSet with advanced moments and step counter."""
    out = params.copy()
    out.adam_step += 1
    t = out.adam_step
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for name, g in grads.items():
        m = out.adam_m[name]
        vv = out.adam_v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        vv *= ADAM_BETA2
        vv += (1.0 - ADAM_BETA2) * g * g
        out.values[name] = out.values[name] - lr * (m / bc1) / (
            np.sqrt(vv / bc2) + ADAM_EPS
        )
    return out


def train(params: ParamSet, data, lam: float, lr: float, steps: int) -> ParamSet:
    """Run ``steps`` full-batch Adam updates, warm-starting from ``params``."""
    for _ in range(steps):
        params = adam_step(params, gradient(params, data, lam), lr)
    return params
