"""Central finite-difference checks for every hand-written gradient.

Each ``check_*`` builds a small random instance and returns the worst
relative error ``|analytic - numeric| / max(|analytic|, |numeric|)`` over
parameter blocks (norm-wise). Used by the test suite and ``selftest``.
"""
from __future__ import annotations

import numpy as np

from .agents import ClassicDemodulator, LearnedDemodulator, LearnedModulator
from .approximators import init_mlp, init_poly
from .channel import AwgnChannel
from .classic import make_scheme
from .core import make_rng, random_preamble
from .presets import Hyperparams

EPS = 1e-6
TOLERANCE = 1e-4


def numeric_grad(f, arrays, eps: float = EPS) -> list[np.ndarray]:
    """Central differences of scalar ``f()`` w.r.t. each array, perturbed in place."""
    out = []
    for a in arrays:
        g = np.zeros_like(a, dtype=float)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = a[i]
            a[i] = old + eps
            hi = f()
            a[i] = old - eps
            lo = f()
            a[i] = old
            g[i] = (hi - lo) / (2 * eps)
        out.append(g)
    return out


def rel_error(analytic, numeric) -> float:
    worst = 0.0
    for a, n in zip(analytic, numeric):
        a, n = np.asarray(a, dtype=float), np.asarray(n, dtype=float)
        scale = max(np.linalg.norm(a), np.linalg.norm(n))
        if scale > 1e-10:
            worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst


def check_mlp(seed: int = 0) -> float:
    rng = make_rng(seed)
    m = init_mlp([3, 7, 5, 4], rng)
    x = rng.standard_normal((6, 3))
    w = rng.standard_normal((6, 4))
    loss = lambda: float(np.sum(w * m(x)))
    _, acts = m.forward(x)
    grads, gx = m.backward(acts, w)
    return rel_error(grads + [gx], numeric_grad(loss, m.params + [x]))


def check_poly(seed: int = 0) -> float:
    rng = make_rng(seed)
    worst = 0.0
    bits = rng.integers(0, 2, (8, 3)).astype(float)
    pb = init_poly("bits", 3, 2, None, rng)
    w = rng.standard_normal((8, 2))
    _, cache = pb.forward(bits)
    worst = max(worst, rel_error(pb.backward(cache, w)[0], numeric_grad(lambda: float(np.sum(w * pb(bits))), pb.params)))
    for degree in (1, 2, 3):
        pi = init_poly("iq", 2, 4, degree, rng)
        x = rng.standard_normal((5, 2))
        w = rng.standard_normal((5, 4))
        _, cache = pi.forward(x)
        grads, gx = pi.backward(cache, w)
        num = numeric_grad(lambda: float(np.sum(w * pi(x))), pi.params + [x])
        worst = max(worst, rel_error(grads + [gx], num))
    return worst


def _modulator(kind: str, b: int, hp: Hyperparams, rng) -> LearnedModulator:
    model = init_mlp([b, 6, 2], rng) if kind == "neural" else init_poly("bits", b, 2, None, rng)
    return LearnedModulator(model, b, hp)


def check_policy_loss(seed: int = 0) -> float:
    """Policy loss with the power cap active and the centering term on."""
    rng = make_rng(seed)
    worst = 0.0
    for kind in ("neural", "poly"):
        for restrict, cap, lam in ((True, 0.05, 0.7), (True, 50.0, 0.0), (False, 1.0, 2.0)):
            hp = Hyperparams(bits_per_symbol=2, initial_std=0.4, restrict_energy=restrict,
                             max_amplitude=cap, lambda_center=lam)
            mod = _modulator(kind, 2, hp, rng)
            words = rng.integers(0, 4, 12)
            s = mod.modulate_eval(words) + 0.3 * rng.standard_normal((12, 2))
            r = -rng.integers(0, 3, 12).astype(float)
            _, grads, gsig = mod.policy_loss(s, words, r)
            num = numeric_grad(lambda: mod.policy_loss(s, words, r)[0], mod.params)
            worst = max(worst, rel_error(grads, num))
            sig = np.array([mod.sigma])

            def by_sigma():
                mod.sigma = float(sig[0])
                return mod.policy_loss(s, words, r)[0]

            num_sig = numeric_grad(by_sigma, [sig])
            mod.sigma = float(sig[0])
            worst = max(worst, rel_error([np.array([gsig])], num_sig))
    return worst


def check_demod_loss(seed: int = 0) -> float:
    """Weighted cross-entropy plus L1, w.r.t. parameters and received symbols."""
    rng = make_rng(seed)
    worst = 0.0
    for kind in ("neural", "poly"):
        hp = Hyperparams(bits_per_symbol=2, cross_entropy_weight=0.7, lambda_l1=0.05, degree_polynomial=2)
        model = init_mlp([2, 6, 4], rng) if kind == "neural" else init_poly("iq", 2, 4, 2, rng)
        dem = LearnedDemodulator(model, 2, hp)
        r = rng.standard_normal((10, 2))
        t = rng.integers(0, 4, 10)
        _, grads, gr = dem.loss(r, t)
        num = numeric_grad(lambda: dem.loss(r, t)[0], dem.params + [r])
        worst = max(worst, rel_error(grads + [gr], num))
    dem = ClassicDemodulator(make_scheme(2))
    r = rng.standard_normal((10, 2))
    t = rng.integers(0, 4, 10)
    worst = max(worst, rel_error([dem.loss(r, t)[2]], numeric_grad(lambda: dem.loss(r, t)[0], [r])))
    return worst


def check_gp_end_to_end(seed: int = 0) -> float:
    """Echoer loss of the speaker's means plus a frozen noise draw, w.r.t. the speaker."""
    rng = make_rng(seed)
    worst = 0.0
    for cap in (0.1, 10.0):
        hp = Hyperparams(bits_per_symbol=2, max_amplitude=cap, lambda_center=0.3)
        mod = _modulator("neural", 2, hp, rng)
        dem = LearnedDemodulator(init_mlp([2, 6, 4], rng), 2, hp)
        p = random_preamble(rng, 16, 2)
        noise = AwgnChannel(0.3).noise(16, rng)

        def total():
            const = mod.constellation()
            return dem.loss(const[p] + noise, p)[0] + mod._center_term(const)[0]

        grad_s = dem.loss(mod.modulate_eval(p) + noise, p)[2]
        worst = max(worst, rel_error(mod.symbol_grads(p, grad_s), numeric_grad(total, mod.params)))
    return worst


CHECKS = {
    "mlp": check_mlp,
    "poly": check_poly,
    "policy_loss": check_policy_loss,
    "demod_loss": check_demod_loss,
    "gp_end_to_end": check_gp_end_to_end,
}


def run_all(seed: int = 0) -> dict[str, float]:
    return {name: fn(seed) for name, fn in CHECKS.items()}
