"""Secure inference for small CNNs with public weights over additive shares.

Linear layers (fc, conv, mean pooling) run locally on every party's share,
with biases added by party 1.  Activations call the secure protocols:
square uses a Beaver product, relu and max pooling use batched comparisons
whose public signs select shares, and sigmoid combines ranged
exponentiation with a masked reciprocal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ModelError
from .scalar import _exp_ranged, add_public, sec_cmp_str, sec_mul, sec_recip_str
from .simnet import Session

LAYER_KINDS = ("fc", "conv", "square", "relu", "sigmoid", "maxpool", "meanpool", "flatten")


@dataclass
class Layer:
    kind: str
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None
    stride: int = 1
    window: int = 2

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ModelError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("fc", "conv"):
            if self.weights is None:
                raise ModelError(f"{self.kind} layer needs weights")
            self.weights = np.asarray(self.weights, dtype=np.float64)
            nout = self.weights.shape[0]
            self.bias = np.zeros(nout) if self.bias is None else np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (nout,):
                raise ModelError(f"{self.kind} bias has shape {self.bias.shape}, expected ({nout},)")
            if self.kind == "fc" and self.weights.ndim != 2:
                raise ModelError("fc weights must be (out, in)")
            if self.kind == "conv" and self.weights.ndim != 4:
                raise ModelError("conv weights must be (out, in, k, k)")

    def out_shape(self, shape: tuple) -> tuple:
        if self.kind == "fc":
            if shape != (self.weights.shape[1],):
                raise ModelError(f"fc expects input ({self.weights.shape[1]},), got {shape}")
            return (self.weights.shape[0],)
        if self.kind == "conv":
            o, c, kh, kw = self.weights.shape
            if len(shape) != 3 or shape[0] != c:
                raise ModelError(f"conv expects ({c}, H, W), got {shape}")
            h = (shape[1] - kh) // self.stride + 1
            w = (shape[2] - kw) // self.stride + 1
            if h < 1 or w < 1:
                raise ModelError(f"conv kernel larger than input {shape}")
            return (o, h, w)
        if self.kind in ("maxpool", "meanpool"):
            if len(shape) != 3 or shape[1] % self.window or shape[2] % self.window:
                raise ModelError(f"pool window {self.window} does not tile input {shape}")
            return (shape[0], shape[1] // self.window, shape[2] // self.window)
        if self.kind == "flatten":
            return (int(np.prod(shape)),)
        return shape


@dataclass
class ModelSpec:
    input_shape: tuple
    layers: list = field(default_factory=list)

    def __post_init__(self):
        self.input_shape = tuple(int(v) for v in self.input_shape)
        self.shapes()

    def shapes(self) -> list:
        out = [self.input_shape]
        for layer in self.layers:
            out.append(layer.out_shape(out[-1]))
        return out

    # persistence: JSON with flattened decimal parameter arrays
    def to_dict(self) -> dict:
        layers = []
        for L in self.layers:
            d = {"kind": L.kind}
            if L.weights is not None:
                d.update(shape=list(L.weights.shape), weights=L.weights.ravel().tolist(), bias=L.bias.tolist())
            if L.kind == "conv":
                d["stride"] = L.stride
            if L.kind in ("maxpool", "meanpool"):
                d["window"] = L.window
            layers.append(d)
        return {"input_shape": list(self.input_shape), "layers": layers}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        try:
            layers = []
            for ld in d["layers"]:
                w = ld.get("weights")
                if w is not None:
                    w = np.asarray(w, dtype=np.float64).reshape(ld["shape"])
                layers.append(Layer(ld["kind"], w, ld.get("bias"), int(ld.get("stride", 1)), int(ld.get("window", 2))))
            return cls(tuple(d["input_shape"]), layers)
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"malformed model description: {e}") from e

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> "ModelSpec":
        with open(path) as f:
            try:
                return cls.from_dict(json.load(f))
            except json.JSONDecodeError as e:
                raise ModelError(f"model file is not valid JSON: {e}") from e


# --- linear pieces (work on a leading batch/party axis) ------------------------------

def _fc(x, L):
    return x @ L.weights.T


def _conv(x, L):
    o, c, kh, kw = L.weights.shape
    win = sliding_window_view(x, (kh, kw), axis=(-2, -1))[..., ::L.stride, ::L.stride, :, :]
    return np.einsum("...chwij,ocij->...ohw", win, L.weights)


def _bias_shape(L):
    return L.bias[:, None, None] if L.kind == "conv" else L.bias


def _windows(x, k):
    """(..., C, H, W) -> (..., C, H/k, W/k, k*k)."""
    *lead, c, h, w = x.shape
    x = x.reshape(*lead, c, h // k, k, w // k, k)
    x = np.moveaxis(x, -3, -2)
    return x.reshape(*lead, c, h // k, w // k, k * k)


def _max_from_wins(wins_signs, k2):
    """Index of the first window entry that is >= every other entry."""
    pairs = list(combinations(range(k2), 2))
    ge = np.ones(wins_signs.shape[:-1] + (k2,), dtype=bool)
    for p, (a, b) in enumerate(pairs):
        sg = wins_signs[..., p]
        ge[..., a] &= sg >= 0
        ge[..., b] &= sg <= 0
    return np.argmax(ge, axis=-1)


def window_pairs(window: int) -> int:
    k2 = window * window
    return k2 * (k2 - 1) // 2


# --- inference --------------------------------------------------------------------------

def infer_plain(model: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.input_shape:
        try:
            x = x.reshape(model.input_shape)
        except ValueError:
            raise ModelError(f"input shape {x.shape} does not match model {model.input_shape}") from None
    for L in model.layers:
        if L.kind in ("fc", "conv"):
            x = (_fc(x, L) if L.kind == "fc" else _conv(x, L)) + _bias_shape(L)
        elif L.kind == "square":
            x = x * x
        elif L.kind == "relu":
            x = np.maximum(x, 0.0)
        elif L.kind == "sigmoid":
            with np.errstate(over="ignore"):
                x = 1.0 / (1.0 + np.exp(-x))
        elif L.kind == "maxpool":
            x = _windows(x, L.window).max(axis=-1)
        elif L.kind == "meanpool":
            x = _windows(x, L.window).mean(axis=-1)
        elif L.kind == "flatten":
            x = x.reshape(-1)
    return x


def _sigmoid(s, x, tag="sigmoid"):
    e, over, under = yield from _exp_ranged(s, -x, np.e, 32, tag)
    # overflow of exp(-x) means sigmoid is 0; underflow means 1
    e = np.where(over | under, 0.0, e)
    r = yield from sec_recip_str(s, add_public(s, e, 1.0), tag=tag)
    r = np.where(over, 0.0, r)
    return r


def infer_secure(s: Session, model: ModelSpec, x, stats: dict | None = None):
    """Protocol generator: forward pass on shares ``x`` of shape (n, *input_shape).

    ``stats`` (optional) accumulates the number of secure comparisons.
    """
    stats = {} if stats is None else stats
    stats.setdefault("comparisons", 0)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1:] != model.input_shape:
        raise ModelError(f"input shares {x.shape[1:]} do not match model {model.input_shape}")
    for L in model.layers:
        if L.kind in ("fc", "conv"):
            x = _fc(x, L) if L.kind == "fc" else _conv(x, L)
            x[0] += _bias_shape(L)
        elif L.kind == "square":
            x = yield from sec_mul(s, x, x, tag="square")
        elif L.kind == "relu":
            stats["comparisons"] += x[0].size
            sign = yield from sec_cmp_str(s, x, np.zeros_like(x), tag="relu")
            x = np.where(sign > 0, x, 0.0)
        elif L.kind == "sigmoid":
            x = yield from _sigmoid(s, x)
        elif L.kind == "maxpool":
            w = _windows(x, L.window)
            k2 = L.window * L.window
            pairs = list(combinations(range(k2), 2))
            lhs = np.stack([w[..., a] for a, _ in pairs], axis=-1)
            rhs = np.stack([w[..., b] for _, b in pairs], axis=-1)
            stats["comparisons"] += lhs[0].size
            signs = yield from sec_cmp_str(s, lhs, rhs, tag="maxpool")
            idx = _max_from_wins(signs, k2)
            x = np.take_along_axis(w, np.broadcast_to(idx[None, ..., None], w.shape[:-1] + (1,)), -1)[..., 0]
        elif L.kind == "meanpool":
            x = _windows(x, L.window).mean(axis=-1)
        elif L.kind == "flatten":
            x = x.reshape(x.shape[0], -1)
    return x


@dataclass
class InferenceReport:
    logits: np.ndarray
    plain: np.ndarray
    rounds: int
    comm_lunits: object
    comparisons: int
    exposures: int

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.logits - self.plain)))


def run_inference(model: ModelSpec, x, n: int = 2, seed: int = 0, **session_kw) -> InferenceReport:
    s = Session(n, seed=seed, **session_kw)
    x = np.asarray(x, dtype=np.float64).reshape(model.input_shape)
    stats = {}
    out = s.run(infer_secure(s, model, s.share(x), stats))
    t = s.transcript
    return InferenceReport(out.sum(axis=0), infer_plain(model, x), t.rounds, t.comm_lunits, stats["comparisons"],
                           t.exposure_count())


# --- the three reference architectures at desk scale ------------------------------------

def _rand_layer(rng, kind, shape, **kw):
    fan_in = int(np.prod(shape[1:]))
    w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), shape)
    return Layer(kind, w, rng.normal(0.0, 0.1, shape[0]), **kw)


def square_net(rng, width: int = 4, side: int = 8) -> ModelSpec:
    """One conv and two fc layers with square activations."""
    h = (side - 3) // 2 + 1
    return ModelSpec((1, side, side), [
        _rand_layer(rng, "conv", (width, 1, 3, 3), stride=2), Layer("square"), Layer("flatten"),
        _rand_layer(rng, "fc", (16, width * h * h)), Layer("square"),
        _rand_layer(rng, "fc", (10, 16)),
    ])


def relu_pool_net(rng, width: int = 4, side: int = 8) -> ModelSpec:
    """Two conv and two fc layers with relu and max pooling."""
    h1 = side - 2          # 3x3 conv
    h2 = h1 // 2           # pool
    h3 = h2 - 1            # 2x2 conv
    if h3 % 2:
        raise ModelError("side too small for this architecture")
    return ModelSpec((1, side, side), [
        _rand_layer(rng, "conv", (width, 1, 3, 3)), Layer("relu"), Layer("maxpool", window=2),
        _rand_layer(rng, "conv", (width, width, 2, 2)), Layer("relu"), Layer("maxpool", window=2),
        Layer("flatten"), _rand_layer(rng, "fc", (16, width * (h3 // 2) ** 2)), Layer("relu"),
        _rand_layer(rng, "fc", (10, 16)),
    ])


def deep_relu_net(rng, width: int = 4, side: int = 8) -> ModelSpec:
    """Seven 2x2 conv layers and one fc layer, relu after each conv."""
    layers = [_rand_layer(rng, "conv", (width, 1, 2, 2)), Layer("relu")]
    for _ in range(6):
        layers += [_rand_layer(rng, "conv", (width, width, 2, 2)), Layer("relu")]
    h = side - 7
    layers += [Layer("flatten"), _rand_layer(rng, "fc", (10, width * h * h))]
    return ModelSpec((1, side, side), layers)


ARCHITECTURES = {"square": square_net, "relu-pool": relu_pool_net, "deep-relu": deep_relu_net}
