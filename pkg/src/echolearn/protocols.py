"""The four training protocols and the alternating training loop.

Each ``step_*`` runs one exchange with the current speaker, applies that
protocol's updates, and swaps roles. Information available to each side:

=====  =====================================  ==================================
 name   who learns                             feedback
=====  =====================================  ==================================
 GP     echoer demod, speaker mod              gradient of echoer's loss
 LP     echoer demod, speaker mod              per-word bit errors, out of band
 ESP    echoer demod, speaker mod              round trip; preamble shared
 EPP    speaker mod and demod                  round trip only
=====  =====================================  ==================================
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .agents import Agent
from .channel import AwgnChannel
from .core import bit_errors, random_preamble
from .evaluation import TrainingRecord


class ProtocolKind(str, Enum):
    GP = "gp"
    LP = "lp"
    ESP = "esp"
    EPP = "epp"


class UnsupportedConfiguration(ValueError):
    pass


# max training iterations by protocol and bits per symbol
MAX_ITERATIONS = {
    "gp": {2: 100},
    "lp": {2: 600},
    "esp": {2: 2500, 3: 6000, 4: 8000},
    "epp": {2: 3000, 3: 10000, 4: 20000},
}


def default_max_iterations(protocol: str, b: int) -> int:
    table = MAX_ITERATIONS[ProtocolKind(protocol).value]
    # orders without a listed value fall back to the closest listed order
    return table.get(b) or table[min(table, key=lambda k: abs(k - b))]


@dataclass
class TrainerState:
    agents: list[Agent]
    channel: AwgnChannel
    rng: np.random.Generator
    preamble_length: int = 256
    speaker_index: int = 0
    iteration: int = 0
    symbols: int = 0
    last_errors: np.ndarray | None = field(default=None, repr=False)

    @property
    def b(self) -> int:
        return self.agents[0].b

    @property
    def speaker(self) -> Agent:
        return self.agents[self.speaker_index]

    @property
    def echoer(self) -> Agent:
        return self.agents[1 - self.speaker_index]

    def _finish(self) -> "TrainerState":
        self.iteration += 1
        self.symbols += self.preamble_length
        self.speaker_index = 1 - self.speaker_index
        return self


def step_epp(state: TrainerState) -> TrainerState:
    sp, ec, ch, rng = state.speaker, state.echoer, state.channel, state.rng
    p = random_preamble(rng, state.preamble_length, state.b)
    s, _, _ = sp.mod.modulate_train(p, rng)
    p_hat = ec.dem.decide(ch.transmit(s, rng))
    echo, _, _ = ec.mod.modulate_train(p_hat, rng)
    s_til = ch.transmit(echo, rng)
    p_til = sp.dem.decide(s_til)
    errors, _ = bit_errors(p, p_til, state.b)
    sp.mod.policy_update(s, p, -errors)
    sp.dem.update(s_til, p)
    state.last_errors = errors
    return state._finish()


def step_esp(state: TrainerState) -> TrainerState:
    sp, ec, ch, rng = state.speaker, state.echoer, state.channel, state.rng
    p = random_preamble(rng, state.preamble_length, state.b)
    s, _, _ = sp.mod.modulate_train(p, rng)
    s_hat = ch.transmit(s, rng)
    p_hat = ec.dem.decide(s_hat)
    ec.dem.update(s_hat, p)
    echo, _, _ = ec.mod.modulate_train(p_hat, rng)
    p_til = sp.dem.decide(ch.transmit(echo, rng))
    errors, _ = bit_errors(p, p_til, state.b)
    sp.mod.policy_update(s, p, -errors)
    state.last_errors = errors
    return state._finish()


def step_lp(state: TrainerState) -> TrainerState:
    sp, ec, ch, rng = state.speaker, state.echoer, state.channel, state.rng
    p = random_preamble(rng, state.preamble_length, state.b)
    s, _, _ = sp.mod.modulate_train(p, rng)
    s_hat = ch.transmit(s, rng)
    p_hat = ec.dem.decide(s_hat)
    ec.dem.update(s_hat, p)
    errors, _ = bit_errors(p_hat, p, state.b)
    sp.mod.policy_update(s, p, -errors)
    state.last_errors = errors
    return state._finish()


def step_gp(state: TrainerState) -> TrainerState:
    sp, ec, ch, rng = state.speaker, state.echoer, state.channel, state.rng
    p = random_preamble(rng, state.preamble_length, state.b)
    s = sp.mod.modulate_eval(p)
    s_hat = ch.transmit(s, rng)
    ec.dem.update(s_hat, p)
    # the speaker follows the gradient of the echoer's already-updated loss;
    # additive noise means d s_hat / d s is the identity
    grad_s = ec.dem.loss(s_hat, p)[2]
    sp.mod.gradient_update(p, grad_s)
    state.last_errors = None
    return state._finish()


STEPS: dict[str, Callable[[TrainerState], TrainerState]] = {
    "gp": step_gp,
    "lp": step_lp,
    "esp": step_esp,
    "epp": step_epp,
}


def check_pairing(protocol: str, agent1: Agent, agent2: Agent) -> None:
    """Reject pairings that cannot train under ``protocol``."""
    if agent1.b != agent2.b:
        raise UnsupportedConfiguration("agents disagree on bits per symbol")
    if not (agent1.learns or agent2.learns):
        raise UnsupportedConfiguration(f"{protocol}: neither agent has anything to learn")


def checkpoint_schedule(max_iterations: int, n: int = 30) -> np.ndarray:
    """About ``n`` log-spaced iteration counts in ``[1, max_iterations]``, strictly increasing."""
    if max_iterations < 1:
        raise ValueError("need at least one iteration")
    pts = np.unique(np.rint(np.logspace(0, np.log10(max_iterations), n)).astype(np.int64))
    return pts[(pts >= 1) & (pts <= max_iterations)]


class InvariantViolation(AssertionError):
    pass


def _require(ok: bool, msg: str) -> None:
    if not ok:
        raise InvariantViolation(msg)


class InvariantMonitor:
    """Checks the per-step training invariants; raises :class:`InvariantViolation`."""

    def __init__(self, protocol: str):
        self.protocol = ProtocolKind(protocol).value
        self.steps_checked = 0

    @staticmethod
    def _snapshot(agent: Agent):
        return [p.copy() for p in agent.mod.params], [p.copy() for p in agent.dem.params], agent.mod.sigma

    @staticmethod
    def _changed(before, after_params) -> bool:
        return any(not np.array_equal(a, b) for a, b in zip(before, after_params))

    def before(self, state: TrainerState):
        return state.speaker_index, [self._snapshot(a) for a in state.agents]

    def after(self, state: TrainerState, token) -> None:
        speaker, snaps = token
        _require(state.speaker_index == 1 - speaker, "roles did not alternate")
        for idx, agent in enumerate(state.agents):
            mod_before, dem_before, sigma_before = snaps[idx]
            mod_changed = self._changed(mod_before, agent.mod.params) or agent.mod.sigma != sigma_before
            dem_changed = self._changed(dem_before, agent.dem.params)
            if idx == speaker:
                _require(self.protocol == "epp" or not dem_changed, f"{self.protocol}: speaker demod changed")
            else:
                _require(not mod_changed, f"{self.protocol}: echoer mod changed")
                _require(self.protocol != "epp" or not dem_changed, "epp: echoer demod changed")
            if agent.learns:
                hp = agent.mod.hp
                _require(hp.min_std <= agent.mod.sigma <= hp.max_std, f"sigma {agent.mod.sigma} outside bounds")
                if hp.restrict_energy:
                    power = float(np.mean(np.sum(agent.mod.constellation() ** 2, axis=1)))
                    _require(power <= hp.max_amplitude**2 + 1e-9, f"constellation power {power} over the cap")
        self.steps_checked += 1


def train(
    protocol: str,
    agent1: Agent,
    agent2: Agent,
    *,
    train_snr_db: float,
    max_iterations: int,
    rng: np.random.Generator,
    evaluate: Callable[[Agent, Agent], TrainingRecord] | None = None,
    preamble_length: int = 256,
    checkpoints=None,
    monitor: InvariantMonitor | None = None,
) -> list[TrainingRecord]:
    """Alternate speaker roles for ``max_iterations`` steps, evaluating at checkpoints.

    ``evaluate(agent1, agent2)`` must not touch ``rng``; evaluation symbols are
    not counted as transmitted.
    """
    protocol = ProtocolKind(protocol).value
    check_pairing(protocol, agent1, agent2)
    step = STEPS[protocol]
    state = TrainerState([agent1, agent2], AwgnChannel.from_snr(train_snr_db), rng, preamble_length)
    marks = set(int(c) for c in (checkpoint_schedule(max_iterations) if checkpoints is None else checkpoints))
    records: list[TrainingRecord] = []
    while state.iteration < max_iterations:
        token = monitor.before(state) if monitor else None
        step(state)
        if monitor:
            monitor.after(state, token)
        if evaluate is not None and state.iteration in marks:
            rec = evaluate(agent1, agent2)
            rec.iteration = state.iteration
            rec.symbols = state.symbols
            records.append(rec)
    return records

