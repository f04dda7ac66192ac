"""Python bindings for the advscen scenario generator."""

import json

from . import _core
from ._core import (
    AdvscenError,
    extract_window,
    loss,
    loss_gradient,
    relevance,
    aggregate_relevance,
    select_collaborators,
)

__all__ = [
    "AdvscenError",
    "aggregate_relevance",
    "default_config",
    "evolve",
    "extract_window",
    "generate",
    "loss",
    "loss_gradient",
    "relevance",
    "select_collaborators",
    "simulate",
]


def _config_text(config):
    return "" if config is None else json.dumps(config)


def default_config():
    return json.loads(_core.default_config())


def generate(prompt, seed_index=0, config=None):
    """Meta-scenario for a shipped prompt name or free-form prompt text.

    Returns (id, scenario dict, Scenic text).
    """
    sid, scenario, scenic = _core.generate(prompt, seed_index, _config_text(config))
    return sid, json.loads(scenario), scenic


def evolve(scenario, scenario_id, config=None):
    """Adds background traffic and perturbs the collaborators."""
    return json.loads(_core.evolve(json.dumps(scenario), scenario_id, _config_text(config)))


def simulate(scenario, stage="adversarial", config=None):
    """Closed-loop rollout of one stage view; returns the metrics dict."""
    return json.loads(_core.simulate(json.dumps(scenario), stage, _config_text(config)))
