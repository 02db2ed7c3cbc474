"""Modulators and demodulators, learning and fixed, behind one interface.

A learning modulator is a Gaussian policy: its approximator maps the bits
of each word to a mean point, the constellation is rescaled to respect the
average-power cap, and training symbols are drawn around the means with a
single learned standard deviation. Fixed (Classic) parts expose the same
methods; their update calls are no-ops.
"""
from __future__ import annotations

import copy
import struct
from dataclasses import dataclass

import numpy as np

from .approximators import (
    Adam,
    dump_approximator,
    init_mlp,
    init_poly,
    load_approximator,
    word_inputs,
)
from .classic import ClassicScheme, demodulate_classic, make_scheme, soft_logits
from .core import check_bps
from .presets import AgentSpec, Hyperparams


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# --- modulators -------------------------------------------------------------

class LearnedModulator:
    learns = True

    def __init__(self, model, b: int, hp: Hyperparams):
        self.model = model
        self.b = b
        self.hp = hp
        self.sigma = float(np.clip(hp.initial_std, hp.min_std, hp.max_std))
        self.adam_theta = Adam()
        self.adam_sigma = Adam()
        self._inputs = word_inputs(b)

    @property
    def params(self) -> list[np.ndarray]:
        return self.model.params

    def _forward(self):
        raw, cache = self.model.forward(self._inputs)
        power = float(np.mean(np.sum(raw * raw, axis=1)))
        cap = self.hp.max_amplitude
        scale = cap / np.sqrt(power) if self.hp.restrict_energy and power > cap * cap else None
        const = raw * scale if scale is not None else raw
        return const, (cache, raw, power, scale)

    def constellation(self) -> np.ndarray:
        """Mean point per word after the power constraint, shape ``(2**b, 2)``."""
        return self._forward()[0]

    def _backward(self, fwd_cache, grad_const):
        cache, raw, power, scale = fwd_cache
        if scale is None:
            grad_raw = grad_const
        else:
            # const = cap * raw / sqrt(mean |raw|^2)
            k = raw.shape[0]
            proj = np.sum(grad_const * raw) / (k * power)
            grad_raw = scale * (grad_const - raw * proj)
        return self.model.backward(cache, grad_raw)[0]

    def _center_term(self, const):
        lam = self.hp.lambda_center
        if lam <= 0:
            return 0.0, np.zeros_like(const)
        center = const.mean(axis=0)
        grad = np.broadcast_to(2.0 * lam * center / const.shape[0], const.shape).copy()
        return float(lam * center @ center), grad

    def modulate_eval(self, words) -> np.ndarray:
        return self.constellation()[np.asarray(words, dtype=np.int64)]

    def modulate_train(self, words, rng: np.random.Generator):
        """Sample ``s ~ N(mu, sigma^2 I)``; returns ``(s, mu, sigma)``."""
        mu = self.modulate_eval(words)
        s = mu + self.sigma * rng.standard_normal(mu.shape)
        return s, mu, self.sigma

    def policy_loss(self, s, words, rewards):
        """Policy-gradient loss with its gradients; nothing is updated.

        ``loss = -sum_i r_i * log p_i`` with ``log p_i = -|s_i - mu_i|^2 / (2 sigma^2)``,
        plus the centering penalty when ``lambda_center > 0``.
        Returns ``(loss, grads_theta, grad_sigma)``.
        """
        words = np.asarray(words, dtype=np.int64)
        s = np.asarray(s, dtype=float)
        rewards = np.asarray(rewards, dtype=float)
        if s.shape != (len(words), 2) or rewards.shape != words.shape:
            raise ValueError("symbols, words and rewards must describe the same batch")
        const, cache = self._forward()
        mu = const[words]
        diff = s - mu
        sq = np.sum(diff * diff, axis=1)
        var = self.sigma**2
        loss = float(np.sum(rewards * sq) / (2 * var))
        grad_mu = -(rewards[:, None] * diff) / var
        grad_sigma = float(-np.sum(rewards * sq) / self.sigma**3)
        grad_const = np.zeros_like(const)
        np.add.at(grad_const, words, grad_mu)
        c_loss, c_grad = self._center_term(const)
        return loss + c_loss, self._backward(cache, grad_const + c_grad), grad_sigma

    def policy_update(self, s, words, rewards) -> None:
        # an error-free batch carries no feedback: no step, so Adam momentum cannot drift the policy
        if not np.any(rewards) and self.hp.lambda_center <= 0:
            return
        _, grads, grad_sigma = self.policy_loss(s, words, rewards)
        self.adam_theta.step(self.params, grads, self.hp.stepsize_mu)
        sig = np.array([self.sigma])
        self.adam_sigma.step([sig], [np.array([grad_sigma])], self.hp.stepsize_sigma)
        self.sigma = float(np.clip(sig[0], self.hp.min_std, self.hp.max_std))

    def symbol_grads(self, words, grad_s):
        """Backpropagate a loss gradient w.r.t. emitted means into the parameters."""
        words = np.asarray(words, dtype=np.int64)
        const, cache = self._forward()
        grad_const = np.zeros_like(const)
        np.add.at(grad_const, words, np.asarray(grad_s, dtype=float))
        _, c_grad = self._center_term(const)
        return self._backward(cache, grad_const + c_grad)

    def gradient_update(self, words, grad_s) -> None:
        self.adam_theta.step(self.params, self.symbol_grads(words, grad_s), self.hp.stepsize_mu)


class ClassicModulator:
    learns = False

    def __init__(self, scheme: ClassicScheme):
        self.scheme = scheme
        self.b = scheme.b
        self.sigma = 0.0
        self.params: list[np.ndarray] = []

    def constellation(self) -> np.ndarray:
        return self.scheme.points

    def modulate_eval(self, words) -> np.ndarray:
        return self.scheme.points[np.asarray(words, dtype=np.int64)]

    def modulate_train(self, words, rng=None):
        mu = self.modulate_eval(words)
        return mu.copy(), mu, 0.0

    def policy_update(self, s, words, rewards) -> None:
        pass

    def gradient_update(self, words, grad_s) -> None:
        pass


# --- demodulators -----------------------------------------------------------

class LearnedDemodulator:
    learns = True

    def __init__(self, model, b: int, hp: Hyperparams):
        self.model = model
        self.b = b
        self.hp = hp
        self.adam = Adam()

    @property
    def params(self) -> list[np.ndarray]:
        return self.model.params

    def logits(self, received) -> np.ndarray:
        return self.model(np.asarray(received, dtype=float).reshape(-1, 2))

    def decide(self, received) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lowest word
        return np.argmax(self.logits(received), axis=1).astype(np.int64)

    def _weight_params(self) -> list[int]:
        # L1 penalises weight matrices, never biases
        return [i for i, p in enumerate(self.params) if p.ndim == 2]

    def loss(self, received, targets):
        """Weighted cross-entropy plus L1; returns ``(loss, grads, grad_received)``."""
        r = np.asarray(received, dtype=float).reshape(-1, 2)
        t = np.asarray(targets, dtype=np.int64)
        if len(r) != len(t):
            raise ValueError(f"length mismatch: {len(r)} symbols vs {len(t)} labels")
        z, cache = self.model.forward(r)
        zs = z - z.max(axis=1, keepdims=True)
        logsum = np.log(np.exp(zs).sum(axis=1))
        w = self.hp.cross_entropy_weight
        loss = float(w * np.sum(logsum - zs[np.arange(len(t)), t]))
        g = _softmax(z)
        g[np.arange(len(t)), t] -= 1.0
        grads, grad_r = self.model.backward(cache, w * g)
        lam = self.hp.lambda_l1
        if lam > 0:
            for i in self._weight_params():
                loss += float(lam * np.abs(self.params[i]).sum())
                grads[i] = grads[i] + lam * np.sign(self.params[i])
        return loss, grads, grad_r

    def update(self, received, targets) -> np.ndarray:
        """One Adam step on the loss; returns the loss gradient w.r.t. the received symbols."""
        _, grads, grad_r = self.loss(received, targets)
        self.adam.step(self.params, grads, self.hp.stepsize_cross_entropy)
        return grad_r


class ClassicDemodulator:
    learns = False

    def __init__(self, scheme: ClassicScheme):
        self.scheme = scheme
        self.b = scheme.b
        self.params: list[np.ndarray] = []

    def logits(self, received) -> np.ndarray:
        return soft_logits(self.scheme, received)

    def decide(self, received) -> np.ndarray:
        return demodulate_classic(self.scheme, received)

    def loss(self, received, targets):
        """Cross-entropy of the soft (negative squared distance) decision."""
        r = np.asarray(received, dtype=float).reshape(-1, 2)
        t = np.asarray(targets, dtype=np.int64)
        if len(r) != len(t):
            raise ValueError(f"length mismatch: {len(r)} symbols vs {len(t)} labels")
        z = soft_logits(self.scheme, r)
        zs = z - z.max(axis=1, keepdims=True)
        loss = float(np.sum(np.log(np.exp(zs).sum(axis=1)) - zs[np.arange(len(t)), t]))
        g = _softmax(z)
        g[np.arange(len(t)), t] -= 1.0
        # d z_k / d r = -2 (r - c_k)
        diff = r[:, None, :] - self.scheme.points[None]
        grad_r = -2.0 * np.einsum("nk,nkc->nc", g, diff)
        return loss, [], grad_r

    def update(self, received, targets) -> np.ndarray:
        return self.loss(received, targets)[2]


# --- agents -----------------------------------------------------------------

@dataclass
class Agent:
    name: str
    kind: str
    b: int
    mod: LearnedModulator | ClassicModulator
    dem: LearnedDemodulator | ClassicDemodulator

    @property
    def learns(self) -> bool:
        return self.kind != "classic"

    def copy(self) -> "Agent":
        return copy.deepcopy(self)


def make_agent(spec: AgentSpec, rng: np.random.Generator) -> Agent:
    b = check_bps(spec.hp.bits_per_symbol)
    hp = spec.hp
    if spec.kind == "classic":
        scheme = make_scheme(b)
        return Agent(spec.name, "classic", b, ClassicModulator(scheme), ClassicDemodulator(scheme))
    if spec.kind == "neural":
        hidden = list(hp.hidden_layers)
        mod_model = init_mlp([b, *hidden, 2], rng)
        dem_model = init_mlp([2, *hidden, 2**b], rng)
    elif spec.kind == "poly":
        mod_model = init_poly("bits", b, 2, None, rng)
        dem_model = init_poly("iq", 2, 2**b, hp.degree_polynomial, rng)
    else:
        raise ValueError(f"unknown agent kind {spec.kind!r}")
    return Agent(spec.name, spec.kind, b, LearnedModulator(mod_model, b, hp), LearnedDemodulator(dem_model, b, hp))


# --- agent checkpoint files ---------------------------------------------------
#
#   8 bytes  magic b"ECHOAGT1"
#   int64    kind code (0 classic, 1 neural, 2 poly), int64 bits per symbol
#   float64  exploration sigma
#   then, for learning agents, the modulator and demodulator approximators
#   in the format of ``approximators.dump_approximator``.

AGENT_MAGIC = b"ECHOAGT1"
_KIND_CODE = {"classic": 0, "neural": 1, "poly": 2}


def save_agent(agent: Agent, path) -> None:
    buf = AGENT_MAGIC + struct.pack("<qqd", _KIND_CODE[agent.kind], agent.b, float(agent.mod.sigma))
    if agent.learns:
        buf += dump_approximator(agent.mod.model) + dump_approximator(agent.dem.model)
    with open(path, "wb") as f:
        f.write(buf)


def load_agent(path, hp: Hyperparams | None = None, name: str = "loaded") -> Agent:
    """Read a checkpoint; ``hp`` supplies the training hyperparameters (defaults otherwise)."""
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:8] != AGENT_MAGIC:
        raise ValueError(f"{path}: not an agent checkpoint")
    code, b, sigma = struct.unpack_from("<qqd", buf, 8)
    kind = {v: k for k, v in _KIND_CODE.items()}[code]
    hp = hp or Hyperparams(bits_per_symbol=b)
    if kind == "classic":
        scheme = make_scheme(b)
        return Agent(name, kind, b, ClassicModulator(scheme), ClassicDemodulator(scheme))
    mod_model, pos = load_approximator(buf, 32)
    dem_model, _ = load_approximator(buf, pos)
    mod = LearnedModulator(mod_model, b, hp)
    mod.sigma = sigma
    return Agent(name, kind, b, mod, LearnedDemodulator(dem_model, b, hp))
