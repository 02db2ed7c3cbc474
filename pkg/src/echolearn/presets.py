"""Named hyperparameter bundles.

Field names match the experiment tables they were transcribed from, so a
config file can override any of them by name. Values not listed for an
agent in those tables keep the dataclass default.

``degree_polynomial`` configures the polynomial *demodulator*; polynomial
modulators always use the full multilinear expansion of their input bits.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

KINDS = ("classic", "neural", "poly")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    hidden_layers: tuple[int, ...] = (50,)
    bits_per_symbol: int = 2
    restrict_energy: bool = True
    activation_fn_hidden: str = "tanh"
    optimizer: str = "adam"
    lambda_prob: float = 1e-10
    stepsize_cross_entropy: float = 1e-3
    cross_entropy_weight: float = 1.0
    stepsize_mu: float = 1e-3
    stepsize_sigma: float = 1e-4
    initial_std: float = 0.3
    max_std: float = 1.0
    min_std: float = 0.1
    max_amplitude: float = 1.0
    lambda_center: float = 0.0
    lambda_l1: float = 0.0
    degree_polynomial: int = 1

    def __post_init__(self):
        if self.activation_fn_hidden != "tanh":
            raise ConfigError(f"only tanh hidden activations are supported, got {self.activation_fn_hidden!r}")
        if self.optimizer.lower() != "adam":
            raise ConfigError(f"only the Adam optimizer is supported, got {self.optimizer!r}")
        if not 0 <= self.min_std <= self.max_std:
            raise ConfigError(f"need 0 <= min_std <= max_std, got {self.min_std}, {self.max_std}")
        if self.max_amplitude <= 0:
            raise ConfigError("max_amplitude must be positive")
        if self.degree_polynomial < 1:
            raise ConfigError("degree_polynomial must be >= 1")


HYPERPARAM_FIELDS = tuple(f.name for f in fields(Hyperparams))


@dataclass(frozen=True)
class AgentSpec:
    name: str
    kind: str
    hp: Hyperparams


# GP tables (no exploration parameters; they are unused by gradient passing)
_GP_NEURAL = dict(hidden_layers=(50,), stepsize_mu=3e-2, max_amplitude=1.0,
                  stepsize_cross_entropy=3e-2, cross_entropy_weight=1.0)
_GP_POLY = dict(degree_polynomial=1, stepsize_mu=1e-1, max_amplitude=1.0,
                stepsize_cross_entropy=1e-1, cross_entropy_weight=1.0, lambda_l1=1e-3)

_NEURAL_FAST = dict(hidden_layers=(50,), max_std=1.0, min_std=1e-1, initial_std=3e-1,
                    lambda_prob=1e-10, stepsize_mu=8e-3, stepsize_sigma=1e-4, max_amplitude=1.0,
                    stepsize_cross_entropy=5e-3, cross_entropy_weight=1.0)
_NEURAL_SLOW = dict(_NEURAL_FAST, stepsize_mu=6e-4, stepsize_cross_entropy=1e-3)
_NEURAL_8PSK = dict(hidden_layers=(100,), max_std=1.0, min_std=1e-2, initial_std=2e-1,
                    lambda_prob=1e-10, stepsize_mu=8e-3, stepsize_sigma=4e-3, max_amplitude=1.0,
                    stepsize_cross_entropy=1e-2, cross_entropy_weight=1.0)
_NEURAL_16QAM = dict(hidden_layers=(200,), max_std=1.0, min_std=1e-2, initial_std=1e-1,
                     lambda_prob=1e-10, stepsize_mu=7e-4, stepsize_sigma=5e-4, max_amplitude=1.0,
                     stepsize_cross_entropy=1e-3, cross_entropy_weight=1.0)
_NEURAL_SNR = dict(_NEURAL_FAST, stepsize_mu=1e-3, stepsize_cross_entropy=1e-3)
_NEURAL_RADIO = dict(hidden_layers=(50,), max_std=100.0, min_std=1e-1, initial_std=2e-1,
                     lambda_prob=1e-10, stepsize_mu=1e-3, stepsize_sigma=1e-4, max_amplitude=0.5,
                     lambda_center=125.0, stepsize_cross_entropy=1e-2)

_POLY_FAST = dict(degree_polynomial=1, max_std=2.0, min_std=2e-1, initial_std=1.0,
                  stepsize_mu=4e-2, stepsize_sigma=4e-3, max_amplitude=1.0,
                  stepsize_cross_entropy=1e-2, lambda_l1=1e-3)
_POLY_SLOW = dict(_POLY_FAST, stepsize_mu=3e-2, stepsize_sigma=3e-3)

PRESET_NAMES = ("classic", "neural-fast", "neural-slow", "poly-fast", "poly-slow", "neural-snr", "neural-radio")


def _table(name: str, protocol: str, b: int) -> tuple[str, dict]:
    gp = protocol == "gp"
    if name.startswith("neural"):
        if gp:
            return "neural", _GP_NEURAL
        if name == "neural-fast":
            return "neural", {3: _NEURAL_8PSK, 4: _NEURAL_16QAM}.get(b, _NEURAL_FAST)
        return "neural", {"neural-slow": _NEURAL_SLOW, "neural-snr": _NEURAL_SNR,
                          "neural-radio": _NEURAL_RADIO}[name]
    if gp:
        return "poly", _GP_POLY
    return "poly", {"poly-fast": _POLY_FAST, "poly-slow": _POLY_SLOW}[name]


def resolve_preset(name: str, protocol: str, b: int, overrides: dict | None = None) -> AgentSpec:
    """Expand a preset name into a full :class:`AgentSpec`.

    Gradient passing uses its own tables for every learning preset. At 3
    and 4 bits per symbol ``neural-fast`` picks the order-specific table;
    every other preset keeps its QPSK values.
    """
    key = name.strip().lower()
    if key not in PRESET_NAMES:
        raise ConfigError(f"unknown agent preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    overrides = dict(overrides or {})
    bad = set(overrides) - set(HYPERPARAM_FIELDS)
    if bad:
        raise ConfigError(f"unknown hyperparameter(s): {', '.join(sorted(bad))}")
    if key == "classic":
        return AgentSpec(key, "classic", replace(Hyperparams(bits_per_symbol=b), **overrides))
    kind, table = _table(key, protocol, b)
    values = dict(table, bits_per_symbol=b)
    values.update(overrides)
    values["hidden_layers"] = tuple(values.get("hidden_layers", (50,)))
    return AgentSpec(key, kind, Hyperparams(**values))
