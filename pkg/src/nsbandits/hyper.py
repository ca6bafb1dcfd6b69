"""Hyperparameter grids and default settings for every policy family.

The neural-linear grids enumerate the full candidate products (576
feedforward settings, 96 recurrent) for both the contextual and the
non-contextual problem groups; the UCB baselines use small one-dimensional
grids. Default settings are the ones that scored best across each problem
group.
"""

from __future__ import annotations

import itertools

from .agents import PolicySpec

LEARNING_RATES = (0.001, 0.01, 0.1)
EPOCHS = (16, 64)
INTERVALS = (32, 128)
NOISE_VARS = (0.1, 0.3)
PRIOR_VARS = (0.5, 1.0)
NONCONTEXTUAL_LAYERS = ((16, 16, 16), (32, 32, 32))
CONTEXTUAL_LAYERS = ((32, 32, 32), (64, 64, 64))
ORDERS = (1, 4)
NONCONTEXTUAL_SINUSOIDS = (1, 2, 4)
CONTEXTUAL_SINUSOIDS = (2, 4, 8)

DUCB_DISCOUNTS = (0.8, 0.85, 0.9, 0.925, 0.95, 0.97, 0.98, 0.99, 0.995, 0.999)
SWUCB_WINDOWS = (5, 10, 25, 50, 75, 100, 150, 200, 250, 300)


def feedforward_grid(contextual: bool) -> list[PolicySpec]:
    layers = CONTEXTUAL_LAYERS if contextual else NONCONTEXTUAL_LAYERS
    sinusoids = CONTEXTUAL_SINUSOIDS if contextual else NONCONTEXTUAL_SINUSOIDS
    grid = []
    for lr, e, q, s2, t2, hs, n, d in itertools.product(
        LEARNING_RATES, EPOCHS, INTERVALS, NOISE_VARS, PRIOR_VARS,
        layers, ORDERS, sinusoids,
    ):
        grid.append(PolicySpec("fnl_ps", {
            "learning_rate": lr, "train_epochs": e, "train_interval": q,
            "noise_var": s2, "prior_var": t2, "hidden_sizes": hs,
            "order": n, "sinusoidal_units": d,
        }))
    return grid


def recurrent_grid(contextual: bool) -> list[PolicySpec]:
    layers = CONTEXTUAL_LAYERS if contextual else NONCONTEXTUAL_LAYERS
    grid = []
    for lr, e, q, s2, t2, hs in itertools.product(
        LEARNING_RATES, EPOCHS, INTERVALS, NOISE_VARS, PRIOR_VARS, layers,
    ):
        grid.append(PolicySpec("rnl_ps", {
            "learning_rate": lr, "train_epochs": e, "train_interval": q,
            "noise_var": s2, "prior_var": t2, "hidden_sizes": hs,
        }))
    return grid


def ducb_grid() -> list[PolicySpec]:
    return [PolicySpec("ducb", {"discount": g}) for g in DUCB_DISCOUNTS]


def swucb_grid() -> list[PolicySpec]:
    return [PolicySpec("swucb", {"window": w}) for w in SWUCB_WINDOWS]


NAMED_GRIDS = {
    "fnl_noncontextual": lambda: feedforward_grid(contextual=False),
    "fnl_contextual": lambda: feedforward_grid(contextual=True),
    "rnl_noncontextual": lambda: recurrent_grid(contextual=False),
    "rnl_contextual": lambda: recurrent_grid(contextual=True),
    "ducb": ducb_grid,
    "swucb": swucb_grid,
}


def default_policy(name: str, contextual: bool) -> PolicySpec:
    """Group-level default hyperparameter setting for a neural policy."""
    if name == "fnl_ps":
        if contextual:
            params = {"learning_rate": 0.01, "train_epochs": 64, "train_interval": 32,
                      "noise_var": 0.1, "prior_var": 1.0, "hidden_sizes": (32, 32, 32),
                      "order": 1, "sinusoidal_units": 2}
        else:
            params = {"learning_rate": 0.1, "train_epochs": 16, "train_interval": 32,
                      "noise_var": 0.1, "prior_var": 1.0, "hidden_sizes": (32, 32, 32),
                      "order": 1, "sinusoidal_units": 1}
        return PolicySpec("fnl_ps", params)
    if name == "rnl_ps":
        if contextual:
            params = {"learning_rate": 0.001, "train_epochs": 64, "train_interval": 32,
                      "noise_var": 0.3, "prior_var": 0.5, "hidden_sizes": (32, 32, 32)}
        else:
            params = {"learning_rate": 0.01, "train_epochs": 16, "train_interval": 32,
                      "noise_var": 0.1, "prior_var": 0.5, "hidden_sizes": (32, 32, 32)}
        return PolicySpec("rnl_ps", params)
    raise ValueError(f"no default setting for policy {name!r}")


def desk_default_policy(name: str, contextual: bool) -> PolicySpec:
    """Default settings re-derived at short (desk-scale) trial lengths.

    The group defaults above were selected on much longer trials; at a few
    hundred steps the recurrent policy needs a larger learning rate to get
    through enough of the non-stationary structure. These were picked with
    the same normalized-score machinery (``harness.select_defaults``) over
    mini-grids on the synthetic environments at T=600-960.
    """
    if name != "rnl_ps":
        return default_policy(name, contextual)
    if contextual:
        params = {"learning_rate": 0.01, "train_epochs": 64, "train_interval": 32,
                  "noise_var": 0.1, "prior_var": 0.5, "hidden_sizes": (32, 32, 32)}
    else:
        params = {"learning_rate": 0.1, "train_epochs": 16, "train_interval": 32,
                  "noise_var": 0.1, "prior_var": 0.5, "hidden_sizes": (32, 32, 32)}
    return PolicySpec("rnl_ps", params)
