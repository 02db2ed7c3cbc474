"""Function approximators with hand-written backward passes, and Adam.

Both families expose the same small surface used by the agents:

* ``params``: list of arrays, updated in place by the optimiser
* ``forward(x) -> (out, cache)``
* ``backward(cache, grad_out) -> (param_grads, grad_x)``

Batches are row-major: ``x`` is ``(n, in_width)``.
"""
from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import all_words, word_to_bits


class Mlp:
    """Fully connected net, tanh on hidden layers, identity on the output."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases):
            raise ValueError("need one bias vector per layer")
        for w, b in zip(weights, biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"inconsistent layer shapes {w.shape} / {b.shape}")
        for w0, w1 in zip(weights, weights[1:]):
            if w0.shape[1] != w1.shape[0]:
                raise ValueError("layer widths do not chain")
        self.weights = weights
        self.biases = biases

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise ValueError(f"expected input of width {self.widths[0]}, got shape {x.shape}")
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.tanh(h)
            acts.append(h)
        return h, acts

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, acts, grad_out):
        grads = []
        g = np.asarray(grad_out, dtype=float)
        for i in range(len(self.weights) - 1, -1, -1):
            if i < len(self.weights) - 1:
                g = g * (1.0 - acts[i + 1] ** 2)
            grads.append(g.sum(axis=0))
            grads.append(acts[i].T @ g)
            g = g @ self.weights[i].T
        grads.reverse()  # [w0, b0, w1, b1, ...]
        return grads, g

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_mlp(widths, rng: np.random.Generator, bias: float = 0.01) -> Mlp:
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise ValueError(f"bad layer widths {widths}")
    weights, biases = [], []
    for n_in, n_out in zip(widths, widths[1:]):
        lim = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-lim, lim, size=(n_in, n_out)))
        biases.append(np.full(n_out, bias))
    return Mlp(weights, biases)


# --- polynomial features ----------------------------------------------------

def bit_monomials(b: int, degree: int | None = None) -> list[tuple[int, ...]]:
    """Subsets of bit positions, graded then lexicographic; ``()`` is the constant."""
    degree = b if degree is None else min(degree, b)
    out: list[tuple[int, ...]] = []
    for d in range(degree + 1):
        out += list(itertools.combinations(range(b), d))
    return out


def poly_features_bits(bits, degree: int | None = None) -> np.ndarray:
    """Multilinear features of 0/1 inputs: products over distinct-bit subsets.

    With ``b = 2``: ``[1, b1, b2, b1*b2]``.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=float))
    cols = [np.prod(bits[:, list(m)], axis=1) if m else np.ones(len(bits)) for m in bit_monomials(bits.shape[1], degree)]
    return np.stack(cols, axis=1)


def iq_monomials(degree: int) -> list[tuple[int, int]]:
    """(re power, im power) pairs in output order.

    Constant, then pure powers of Re, then pure powers of Im, then mixed
    terms by total degree (higher Re power first). Degree 2 gives
    ``[1, Re, Re^2, Im, Im^2, Re*Im]``.
    """
    if degree < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {degree}")
    out = [(0, 0)]
    out += [(i, 0) for i in range(1, degree + 1)]
    out += [(0, j) for j in range(1, degree + 1)]
    for tot in range(2, degree + 1):
        out += [(i, tot - i) for i in range(tot - 1, 0, -1)]
    return out


def poly_features_iq(s, degree: int) -> np.ndarray:
    s = np.atleast_2d(np.asarray(s, dtype=float))
    re, im = s[:, 0], s[:, 1]
    return np.stack([re**i * im**j for i, j in iq_monomials(degree)], axis=1)


def poly_features_iq_grad(s, degree: int) -> np.ndarray:
    """d features / d (re, im): shape ``(n, n_features, 2)``."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    re, im = s[:, 0], s[:, 1]
    cols = []
    for i, j in iq_monomials(degree):
        d_re = i * re ** max(i - 1, 0) * im**j if i else np.zeros_like(re)
        d_im = j * re**i * im ** max(j - 1, 0) if j else np.zeros_like(re)
        cols.append(np.stack([d_re, d_im], axis=1))
    return np.stack(cols, axis=1)


class PolyModel:
    """Polynomial features followed by one bias-free linear layer.

    ``kind`` is ``"bits"`` (modulator input, multilinear in 0/1 bits) or
    ``"iq"`` (demodulator input, monomials in Re and Im).
    """

    def __init__(self, kind: str, in_width: int, degree: int | None, weight: np.ndarray):
        if kind not in ("bits", "iq"):
            raise ValueError(f"unknown feature kind {kind!r}")
        if kind == "iq" and in_width != 2:
            raise ValueError("iq features need input width 2")
        self.kind = kind
        self.in_width = in_width
        self.degree = degree
        n_feat = len(bit_monomials(in_width, degree)) if kind == "bits" else len(iq_monomials(degree))
        if weight.ndim != 2 or weight.shape[0] != n_feat:
            raise ValueError(f"weight shape {weight.shape} does not match {n_feat} features")
        self.weight = weight

    @property
    def n_features(self) -> int:
        return self.weight.shape[0]

    @property
    def widths(self) -> list[int]:
        return [self.in_width, self.weight.shape[1]]

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weight]

    def features(self, x) -> np.ndarray:
        if self.kind == "bits":
            return poly_features_bits(x, self.degree)
        return poly_features_iq(x, self.degree)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.in_width:
            raise ValueError(f"expected input of width {self.in_width}, got shape {x.shape}")
        f = self.features(x)
        return f @ self.weight, (x, f)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out):
        x, f = cache
        grad_out = np.asarray(grad_out, dtype=float)
        grad_w = f.T @ grad_out
        grad_f = grad_out @ self.weight.T
        if self.kind == "iq":
            grad_x = np.einsum("nf,nfc->nc", grad_f, poly_features_iq_grad(x, self.degree))
        else:
            # input gradient w.r.t. 0/1 bits is never needed
            grad_x = None
        return [grad_w], grad_x

    def copy(self) -> "PolyModel":
        return PolyModel(self.kind, self.in_width, self.degree, self.weight.copy())


def init_poly(kind: str, in_width: int, out_width: int, degree: int | None, rng: np.random.Generator) -> PolyModel:
    n_feat = len(bit_monomials(in_width, degree)) if kind == "bits" else len(iq_monomials(degree))
    lim = 1.0 / np.sqrt(n_feat)
    return PolyModel(kind, in_width, degree, rng.uniform(-lim, lim, size=(n_feat, out_width)))


def word_inputs(b: int) -> np.ndarray:
    """All ``2**b`` words as float bit rows, the modulator's input batch."""
    return word_to_bits(all_words(b), b).astype(float)


# --- Adam -------------------------------------------------------------------

@dataclass
class Adam:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], stepsize: float) -> None:
        """One bias-corrected Adam step, applied to ``params`` in place."""
        if len(params) != len(grads):
            raise ValueError("params and grads differ in length")
        for p, g in zip(params, grads):
            if np.shape(p) != np.shape(g):
                raise ValueError(f"shape mismatch {np.shape(p)} vs {np.shape(g)}")
        if not self.m:
            self.m = [np.zeros_like(p, dtype=float) for p in params]
            self.v = [np.zeros_like(p, dtype=float) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= stepsize * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def copy(self) -> "Adam":
        return Adam(self.beta1, self.beta2, self.eps, self.t, [a.copy() for a in self.m], [a.copy() for a in self.v])


# --- checkpoint files -------------------------------------------------------
#
# Layout, all little-endian:
#   8 bytes   magic b"ECHOAPX1"
#   int64     family code (1 = Mlp, 2 = poly/bits, 3 = poly/iq)
#   int64     polynomial degree (-1 = maximal / not applicable)
#   int64     number of widths L, then L int64 widths
#   float64   parameters in ``params`` order, each C-contiguous

MAGIC = b"ECHOAPX1"
_FAMILY = {"mlp": 1, "bits": 2, "iq": 3}


def dump_approximator(model) -> bytes:
    if isinstance(model, Mlp):
        fam, deg, widths = _FAMILY["mlp"], -1, model.widths
    else:
        fam = _FAMILY[model.kind]
        deg = -1 if model.degree is None else model.degree
        widths = model.widths
    head = MAGIC + struct.pack("<qqq", fam, deg, len(widths)) + struct.pack(f"<{len(widths)}q", *widths)
    body = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in model.params)
    return head + body


def load_approximator(buf: bytes, offset: int = 0):
    """Inverse of :func:`dump_approximator`; returns ``(model, next_offset)``."""
    if buf[offset : offset + 8] != MAGIC:
        raise ValueError("not an approximator checkpoint")
    fam, deg, n = struct.unpack_from("<qqq", buf, offset + 8)
    pos = offset + 32
    widths = list(struct.unpack_from(f"<{n}q", buf, pos))
    pos += 8 * n

    def take(shape):
        nonlocal pos
        count = int(np.prod(shape))
        arr = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).astype(float).reshape(shape)
        pos += 8 * count
        return arr

    if fam == _FAMILY["mlp"]:
        ws, bs = [], []
        for a, b in zip(widths, widths[1:]):
            ws.append(take((a, b)))
            bs.append(take((b,)))
        return Mlp(ws, bs), pos
    kind = "bits" if fam == _FAMILY["bits"] else "iq"
    degree = None if deg < 0 else int(deg)
    n_feat = len(bit_monomials(widths[0], degree)) if kind == "bits" else len(iq_monomials(degree))
    return PolyModel(kind, widths[0], degree, take((n_feat, widths[1]))), pos
