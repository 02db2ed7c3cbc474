"""Learning modulation schemes between two agents over a simulated AWGN channel."""

from .agents import Agent, load_agent, make_agent, save_agent
from .channel import AwgnChannel
from .classic import load_baseline, make_scheme
from .presets import ConfigError, Hyperparams, resolve_preset
from .protocols import InvariantMonitor, ProtocolKind, UnsupportedConfiguration, train
from .runner import ExperimentConfig, ResultSet, run_experiment, summarize

__version__ = "0.1.0"
