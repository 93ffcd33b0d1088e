"""Built-in experiment templates, one per stability statement.

Each entry pairs a runnable config (smoke-sized budgets) with the statement
it exercises, so the equivalences ship as executable documentation:
``cocstab registry`` lists them and any entry loads through the normal
config path.
"""

from __future__ import annotations

import copy

from .config import ExperimentConfig, parse_config

_DIAGONAL_FIXTURE = {
    "kind": "per_symbol",
    "matrices": [
        [["0.9", "0"], ["0", "0.2"]],
        [["0.3", "0"], ["0", "0.8"]],
    ],
}
_BERNOULLI = {"kind": "full_shift", "alphabet": 2, "weights": ["0.5", "0.5"]}
_ROTATION_SUSPENSION = {
    "kind": "suspension",
    "base": {"kind": "rotation", "angle": "0.1"},
    "roof": "1",
}

TEMPLATES: dict[str, dict] = {
    "discrete-psum-forward": {
        "statement": "a negative exponent makes every trajectory p-sum finite, with C(q) below the geometric-series bound",
        "config": {
            "kind": "datko",
            "seed": 20240101,
            "system": _BERNOULLI,
            "generator": _DIAGONAL_FIXTURE,
            "params": {
                "p": 1.0,
                "points": 12,
                "directions": 2,
                "tolerance": 1e-9,
                "exponent": {"orbits": 32, "n_max": 4096},
            },
        },
    },
    "discrete-psum-converse": {
        "statement": "finite p-sums bound an adapted norm under which returns to a bounded-distortion set contract geometrically",
        "config": {
            "kind": "induce",
            "seed": 20240102,
            "system": _BERNOULLI,
            "generator": _DIAGONAL_FIXTURE,
            "params": {
                "set": {"kind": "cylinder", "word": [0]},
                "points": 12,
                "returns": 64,
                "p": 1.0,
                "check_directions": 2,
                "check_returns": 16,
            },
        },
    },
    "kac-return-times": {
        "statement": "mean return times to a positive-measure set converge to the reciprocal of its measure",
        "config": {
            "kind": "induce",
            "seed": 20240103,
            "system": _BERNOULLI,
            "generator": _DIAGONAL_FIXTURE,
            "params": {
                "set": {"kind": "cylinder", "word": [0]},
                "points": 32,
                "returns": 128,
                "p": 1.0,
                "check_directions": 0,
            },
        },
    },
    "nonuniform-tempering": {
        "statement": "a negative exponent yields a tempered majorant: decay at rate exponent+eps with a sub-exponentially drifting constant",
        "config": {
            "kind": "temper",
            "seed": 20240104,
            "system": _BERNOULLI,
            "generator": _DIAGONAL_FIXTURE,
            "params": {
                "horizon": 512,
                "drift_n_max": 512,
                "exponent": {"orbits": 32, "n_max": 4096},
            },
        },
    },
    "discrete-uniform-certificate": {
        "statement": "a negative max-growth value certifies uniform exponential decay; a nonnegative periodic rate refutes it",
        "config": {
            "kind": "uniform",
            "seed": 20240105,
            "system": _BERNOULLI,
            "generator": {
                "kind": "per_symbol",
                "matrices": [
                    [["0.5", "0.4"], ["0", "0.5"]],
                    [["0.5", "0"], ["0.4", "0.5"]],
                ],
            },
            "params": {"n_budget": 12, "period_budget": 6, "mode": "exact"},
        },
    },
    "continuous-pintegral": {
        "statement": "a negative flow exponent makes every trajectory p-integral finite",
        "config": {
            "kind": "datko",
            "seed": 20240106,
            "system": _ROTATION_SUSPENSION,
            "generator": {"kind": "constant", "matrix": [["-1"]]},
            "integrator_step": 1e-3,
            "params": {
                "p": 1.0,
                "points": 3,
                "directions": 1,
                "tolerance": 1e-9,
                "t_max": 64.0,
                "discretization_points": 2,
                "exponent": {"orbits": 2, "n_max": 16},
            },
        },
    },
    "continuous-discretization": {
        "statement": "the integer-time p-sum is controlled by the p-integral through the exponential bound constant",
        "config": {
            "kind": "datko",
            "seed": 20240107,
            "system": _ROTATION_SUSPENSION,
            "generator": {"kind": "closed_form", "entries": [["-1+0.5*cos(2*pi*q)"]]},
            "integrator_step": 2e-3,
            "params": {
                "p": 1.0,
                "points": 3,
                "directions": 1,
                "tolerance": 1e-9,
                "t_max": 64.0,
                "discretization_points": 3,
                "exponent": {"orbits": 2, "n_max": 16},
            },
        },
    },
    "continuous-uniform-flow": {
        "statement": "a negative grid-sup growth rate at a fixed horizon certifies uniform decay of the flow cocycle",
        "config": {
            "kind": "flow",
            "seed": 20240108,
            "system": _ROTATION_SUSPENSION,
            "generator": {"kind": "closed_form", "entries": [["-1+0.5*cos(2*pi*q)"]]},
            "integrator_step": 2e-3,
            "params": {"t_budget": 20.0, "grid": 8},
        },
    },
    "exponent-birkhoff-integral": {
        "statement": "for scalar cocycles over an equidistributing base the exponent is the space average of log|a|",
        "config": {
            "kind": "lyapunov",
            "seed": 20240109,
            "system": {"kind": "rotation", "angle": "0.381966011250105"},
            "generator": {"kind": "closed_form", "entries": [["exp(-1+0.5*cos(2*pi*q))"]]},
            "params": {"orbits": 8, "n_max": 8192},
        },
    },
}


def registry_list() -> dict[str, dict]:
    """Name -> {statement, config} for every built-in template."""
    return copy.deepcopy(TEMPLATES)


def template_config(name: str) -> ExperimentConfig:
    if name not in TEMPLATES:
        raise KeyError(f"unknown template {name!r}; known: {sorted(TEMPLATES)}")
    return parse_config(copy.deepcopy(TEMPLATES[name]["config"]))
