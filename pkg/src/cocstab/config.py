"""Declarative experiment configs: strict loading, validation, and builders.

A config is one JSON document naming the base system, the generator (matrix
entries as exact decimal strings, so no parser-dependent float drift), the
experiment kind, and its numeric parameters.  Validation happens entirely at
load time: unknown keys are rejected with a suggestion, and every parameter
is checked against the owning routine's preconditions so runs cannot fail
halfway through on bad input.
"""

from __future__ import annotations

import difflib
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .base import (
    BaseSystem,
    CircleRotation,
    DoublingMap,
    FullShift,
    MeasurableSet,
    SubshiftOfFiniteType,
    Suspension,
    _ShiftSystem,
)
from .cocycle import CocycleHandle, Generator

EXPERIMENT_KINDS = ("lyapunov", "datko", "induce", "temper", "uniform", "flow")


class ConfigError(ValueError):
    """A config failed validation; the message names key and constraint."""


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"config key {path!r}: {message}")


def _require_keys(mapping: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    for key in mapping:
        if key not in required and key not in optional:
            known = list(required) + list(optional)
            hint = difflib.get_close_matches(key, known, n=1)
            suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
            _fail(f"{path}.{key}" if path else key, f"unknown key{suggestion}")
    for key in required:
        if key not in mapping:
            _fail(f"{path}.{key}" if path else key, "missing required key")


def _decimal(value, path: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            _fail(path, f"not a decimal number: {value!r}")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    _fail(path, f"expected a number or decimal string, got {type(value).__name__}")
    raise AssertionError


def _decimal_matrix(rows, path: str) -> list[list[float]]:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        _fail(path, "expected a list of rows")
    parsed = []
    for i, row in enumerate(rows):
        out_row = []
        for j, entry in enumerate(row):
            if not isinstance(entry, str):
                _fail(f"{path}[{i}][{j}]", "matrix entries must be exact decimal strings")
            out_row.append(_decimal(entry, f"{path}[{i}][{j}]"))
        parsed.append(out_row)
    if any(len(r) != len(parsed) for r in parsed):
        _fail(path, "matrix must be square")
    return parsed


def _positive_int(value, path: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        _fail(path, f"must be an integer >= {minimum}")
    return value


def _positive_real(value, path: str) -> float:
    v = _decimal(value, path)
    if not v > 0:
        _fail(path, "must be > 0")
    return v


# --- system and generator builders ----------------------------------------


def build_system(spec: dict, path: str = "system") -> BaseSystem:
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail(path, "expected an object with a 'kind'")
    kind = spec["kind"]
    if kind == "full_shift":
        _require_keys(spec, path, ("kind", "alphabet"), ("weights",))
        alphabet = _positive_int(spec["alphabet"], f"{path}.alphabet", minimum=2)
        if "weights" in spec:
            weights = tuple(_decimal(w, f"{path}.weights[{i}]") for i, w in enumerate(spec["weights"]))
        else:
            weights = tuple(1.0 / alphabet for _ in range(alphabet))
        try:
            return FullShift(alphabet, weights)
        except ValueError as exc:
            _fail(f"{path}.weights", str(exc))
    if kind == "sft":
        _require_keys(spec, path, ("kind", "adjacency"), ("markov",))
        markov = None
        if "markov" in spec:
            markov = _decimal_matrix(spec["markov"], f"{path}.markov")
        try:
            return SubshiftOfFiniteType.from_matrix(spec["adjacency"], markov)
        except ValueError as exc:
            _fail(f"{path}.adjacency", str(exc))
    if kind == "rotation":
        _require_keys(spec, path, ("kind", "angle"))
        if isinstance(spec["angle"], str):
            try:
                return CircleRotation.from_string(spec["angle"])
            except (ValueError, ZeroDivisionError) as exc:
                _fail(f"{path}.angle", str(exc))
        return CircleRotation(_decimal(spec["angle"], f"{path}.angle"))
    if kind == "doubling":
        _require_keys(spec, path, ("kind",))
        return DoublingMap()
    if kind == "suspension":
        _require_keys(spec, path, ("kind", "base"), ("roof",))
        base = build_system(spec["base"], f"{path}.base")
        roof = _positive_real(spec.get("roof", "1"), f"{path}.roof")
        try:
            return Suspension(base, roof)
        except ValueError as exc:
            _fail(path, str(exc))
    _fail(f"{path}.kind", f"unknown system kind {kind!r}")
    raise AssertionError


def build_generator(spec: dict, path: str = "generator") -> Generator:
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail(path, "expected an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "constant":
            _require_keys(spec, path, ("kind", "matrix"))
            return Generator.constant(_decimal_matrix(spec["matrix"], f"{path}.matrix"))
        if kind == "per_symbol":
            _require_keys(spec, path, ("kind", "matrices"))
            mats = [
                _decimal_matrix(m, f"{path}.matrices[{i}]") for i, m in enumerate(spec["matrices"])
            ]
            return Generator.per_symbol(mats)
        if kind == "closed_form":
            _require_keys(spec, path, ("kind", "entries"))
            return Generator.closed_form(spec["entries"])
    except ConfigError:
        raise
    except ValueError as exc:
        _fail(path, str(exc))
    _fail(f"{path}.kind", f"unknown generator kind {kind!r}")
    raise AssertionError


def build_set(system: BaseSystem, spec: dict, path: str = "params.set") -> MeasurableSet:
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail(path, "expected an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "cylinder":
            _require_keys(spec, path, ("kind", "word"))
            if not isinstance(system, _ShiftSystem):
                _fail(path, "cylinder sets need a shift system")
            return MeasurableSet.cylinder(system, spec["word"])
        if kind == "intervals":
            _require_keys(spec, path, ("kind", "intervals"))
            ivs = [
                (_decimal(a, f"{path}.intervals[{i}][0]"), _decimal(b, f"{path}.intervals[{i}][1]"))
                for i, (a, b) in enumerate(spec["intervals"])
            ]
            return MeasurableSet.interval_union(system, ivs)
        if kind == "full":
            _require_keys(spec, path, ("kind",))
            return MeasurableSet.whole_space(system)
        if kind == "exclude_periodic":
            _require_keys(spec, path, ("kind", "words"))
            if not isinstance(system, _ShiftSystem):
                _fail(path, "periodic exclusions need a shift system")
            return MeasurableSet.exclude_periodic(system, spec["words"])
    except ConfigError:
        raise
    except ValueError as exc:
        _fail(path, str(exc))
    _fail(f"{path}.kind", f"unknown set kind {kind!r}")
    raise AssertionError


# --- per-experiment parameter schemas --------------------------------------

_EXPONENT_DEFAULTS = {"orbits": 32, "n_max": 4096}


def _validate_exponent_block(block, path: str) -> dict:
    _require_keys(block, path, (), ("orbits", "n_max"))
    out = dict(_EXPONENT_DEFAULTS)
    if "orbits" in block:
        out["orbits"] = _positive_int(block["orbits"], f"{path}.orbits")
    if "n_max" in block:
        out["n_max"] = _positive_int(block["n_max"], f"{path}.n_max", minimum=8)
    return out


def _validate_params(kind: str, params: dict, continuous: bool, system: BaseSystem) -> dict:
    path = "params"
    if kind == "lyapunov":
        _require_keys(params, path, (), ("orbits", "n_max", "t_max"))
        out = {"orbits": 16, "n_max": 4096, "t_max": 64.0}
        if "orbits" in params:
            out["orbits"] = _positive_int(params["orbits"], f"{path}.orbits")
        if "n_max" in params:
            out["n_max"] = _positive_int(params["n_max"], f"{path}.n_max", minimum=8)
        if "t_max" in params:
            out["t_max"] = _positive_real(params["t_max"], f"{path}.t_max")
            if out["t_max"] < 8:
                _fail(f"{path}.t_max", "must be >= 8")
        return out
    if kind == "datko":
        _require_keys(
            params,
            path,
            ("p",),
            ("tolerance", "points", "directions", "n_max", "t_max", "exponent", "discretization_points"),
        )
        out = {
            "p": _positive_real(params["p"], f"{path}.p"),
            "tolerance": 1e-9,
            "points": 16,
            "directions": 2,
            "n_max": 2**16,
            "t_max": 128.0,
            "exponent": dict(_EXPONENT_DEFAULTS),
            "discretization_points": 5 if continuous else 0,
        }
        if "tolerance" in params:
            out["tolerance"] = _positive_real(params["tolerance"], f"{path}.tolerance")
        if "points" in params:
            out["points"] = _positive_int(params["points"], f"{path}.points")
        if "directions" in params:
            out["directions"] = _positive_int(params["directions"], f"{path}.directions")
        if "n_max" in params:
            out["n_max"] = _positive_int(params["n_max"], f"{path}.n_max")
        if "t_max" in params:
            out["t_max"] = _positive_real(params["t_max"], f"{path}.t_max")
        if "exponent" in params:
            out["exponent"] = _validate_exponent_block(params["exponent"], f"{path}.exponent")
        if "discretization_points" in params:
            out["discretization_points"] = _positive_int(params["discretization_points"], f"{path}.discretization_points", minimum=0)
            if not continuous and out["discretization_points"] > 0:
                _fail(f"{path}.discretization_points", "only meaningful for continuous systems")
        return out
    if kind == "induce":
        _require_keys(params, path, ("set",), ("returns", "points", "p", "check_directions", "check_returns"))
        build_set(system, params["set"])  # validates now; rebuilt at run time
        out = {
            "set": params["set"],
            "returns": 100,
            "points": 16,
            "p": 1.0,
            "check_directions": 2,
            "check_returns": 20,
        }
        if "returns" in params:
            out["returns"] = _positive_int(params["returns"], f"{path}.returns")
        if "points" in params:
            out["points"] = _positive_int(params["points"], f"{path}.points")
        if "p" in params:
            out["p"] = _positive_real(params["p"], f"{path}.p")
        if "check_directions" in params:
            out["check_directions"] = _positive_int(params["check_directions"], f"{path}.check_directions", minimum=0)
        if "check_returns" in params:
            out["check_returns"] = _positive_int(params["check_returns"], f"{path}.check_returns")
        return out
    if kind == "temper":
        _require_keys(params, path, (), ("epsilon", "horizon", "drift_n_max", "exponent"))
        out = {"epsilon": None, "horizon": 512, "drift_n_max": 1024, "exponent": dict(_EXPONENT_DEFAULTS)}
        if "epsilon" in params and params["epsilon"] is not None:
            out["epsilon"] = _positive_real(params["epsilon"], f"{path}.epsilon")
        if "horizon" in params:
            out["horizon"] = _positive_int(params["horizon"], f"{path}.horizon", minimum=2**8)
        if "drift_n_max" in params:
            out["drift_n_max"] = _positive_int(params["drift_n_max"], f"{path}.drift_n_max", minimum=64)
        if "exponent" in params:
            out["exponent"] = _validate_exponent_block(params["exponent"], f"{path}.exponent")
        return out
    if kind == "uniform":
        _require_keys(params, path, (), ("n_budget", "period_budget", "mode", "samples"))
        out = {"n_budget": 16, "period_budget": 8, "mode": "exact", "samples": 256}
        if "n_budget" in params:
            out["n_budget"] = _positive_int(params["n_budget"], f"{path}.n_budget")
        if "period_budget" in params:
            out["period_budget"] = _positive_int(params["period_budget"], f"{path}.period_budget")
        if "mode" in params:
            if params["mode"] not in ("exact", "sampled"):
                _fail(f"{path}.mode", "must be 'exact' or 'sampled'")
            out["mode"] = params["mode"]
        if "samples" in params:
            out["samples"] = _positive_int(params["samples"], f"{path}.samples")
        return out
    if kind == "flow":
        _require_keys(params, path, (), ("t_budget", "grid"))
        out = {"t_budget": 16.0, "grid": 32}
        if "t_budget" in params:
            out["t_budget"] = _positive_real(params["t_budget"], f"{path}.t_budget")
        if "grid" in params:
            out["grid"] = _positive_int(params["grid"], f"{path}.grid", minimum=2)
        return out
    raise AssertionError(kind)


@dataclass
class ExperimentConfig:
    """A validated experiment declaration."""

    kind: str
    seed: int
    system_spec: dict
    generator_spec: dict
    params: dict
    integrator_step: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "system": self.system_spec,
            "generator": self.generator_spec,
            "params": self.params,
            "integrator_step": self.integrator_step,
        }

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @property
    def is_continuous(self) -> bool:
        return self.system_spec.get("kind") == "suspension"

    def system(self) -> BaseSystem:
        return build_system(self.system_spec)

    def handle(self) -> CocycleHandle:
        system = self.system()
        generator = build_generator(self.generator_spec)
        time_kind = "continuous" if isinstance(system, Suspension) else "discrete"
        return CocycleHandle(system, generator, time_kind=time_kind, step_h=self.integrator_step)


def parse_config(document: dict) -> ExperimentConfig:
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(document, "", ("kind", "seed", "system", "generator", "params"), ("integrator_step",))
    kind = document["kind"]
    if kind not in EXPERIMENT_KINDS:
        _fail("kind", f"must be one of {EXPERIMENT_KINDS}")
    seed = document["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        _fail("seed", "must be a nonnegative integer")
    system = build_system(document["system"])
    generator = build_generator(document["generator"])
    continuous = isinstance(system, Suspension)
    step = 1e-3
    if "integrator_step" in document:
        step = _positive_real(document["integrator_step"], "integrator_step")
        if not continuous:
            _fail("integrator_step", "only meaningful for suspension systems")
    if kind == "flow" and not continuous:
        _fail("system.kind", "flow experiments need a suspension system")
    if kind in ("induce", "temper", "uniform") and continuous:
        _fail("system.kind", f"{kind} experiments need a discrete-time system")
    # precondition: the handle must be constructible (generator/system pairing)
    time_kind = "continuous" if continuous else "discrete"
    try:
        CocycleHandle(system, generator, time_kind=time_kind, step_h=step)
    except ValueError as exc:
        _fail("generator", str(exc))
    params = _validate_params(kind, document["params"], continuous, system)
    return ExperimentConfig(
        kind=kind,
        seed=seed,
        system_spec=document["system"],
        generator_spec=document["generator"],
        params=params,
        integrator_step=step,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return parse_config(document)


def to_jsonable(value):
    """Recursively convert numpy containers for deterministic JSON output."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value
