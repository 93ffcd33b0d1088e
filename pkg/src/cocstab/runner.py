"""Experiment orchestration: run a config, persist verdict + series + figures.

Every run writes one ``verdict.json`` (with the config hash, the artifact
version, and a sha256 manifest of the other outputs), zero or more CSV
series, and one PNG figure per series.  Outputs are byte-deterministic for a
fixed (config, version, seed): wall time lives only on the in-memory run
record, float formatting is shortest-roundtrip repr, and JSON keys are
sorted.  Exit codes: 0 verdict-positive, 2 verdict-negative,
3 inconclusive, 1 error.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, plots
from .config import ExperimentConfig, build_set, to_jsonable
from .datko import check_discretization_bound, datko_field_experiment, datko_integral
from .induced import (
    build_contraction_certificate,
    build_induced_orbit,
    exponent_transfer_check,
    induced_contraction_check,
    return_times,
)
from .lyapunov import closed_form_exponent, estimate_exponent, estimate_exponent_flow
from .tempering import build_tempered_envelope, drift_check
from .uniform import decide_uniform_stability, decide_uniform_stability_flow

EXIT_POSITIVE = 0
EXIT_NEGATIVE = 2
EXIT_INCONCLUSIVE = 3

_SLACK_TOL = 1e-9


@dataclass
class RunRecord:
    config_hash: str
    version: str
    kind: str
    verdict: str
    exit_code: int
    outputs: dict[str, str]
    wall_time_s: float
    out_dir: Path


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> RunRecord:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    runner = _RUNNERS[config.kind]
    verdict, exit_code, result, files = runner(config, out)
    manifest = {name: _sha256(out / name) for name in sorted(files)}
    document = {
        "version": __version__,
        "config_hash": config.config_hash,
        "kind": config.kind,
        "verdict": verdict,
        "exit_code": exit_code,
        "result": to_jsonable(result),
        "outputs": manifest,
    }
    (out / "verdict.json").write_text(json.dumps(document, sort_keys=True, indent=1) + "\n")
    return RunRecord(
        config_hash=config.config_hash,
        version=__version__,
        kind=config.kind,
        verdict=verdict,
        exit_code=exit_code,
        outputs=manifest,
        wall_time_s=time.perf_counter() - started,
        out_dir=out,
    )


def run_config_dict(document: dict, out_dir: str | Path) -> RunRecord:
    from .config import parse_config

    return run_experiment(parse_config(document), out_dir)


# --- per-kind runners -------------------------------------------------------


def _run_lyapunov(config: ExperimentConfig, out: Path):
    handle = config.handle()
    p = config.params
    if config.is_continuous:
        estimate = estimate_exponent_flow(handle, p["orbits"], p["t_max"], config.seed)
    else:
        estimate = estimate_exponent(handle, p["orbits"], p["n_max"], config.seed)
    closed = closed_form_exponent(handle)
    if estimate.degenerate_zero:
        verdict, code = "degenerate-zero-product", EXIT_INCONCLUSIVE
    elif abs(estimate.value) <= 2.0 * estimate.dispersion or estimate.value == 0.0:
        verdict, code = "inconclusive", EXIT_INCONCLUSIVE
    elif estimate.value < 0:
        verdict, code = "negative-exponent", EXIT_POSITIVE
    else:
        verdict, code = "positive-exponent", EXIT_NEGATIVE
    _write_csv(
        out / "trajectory.csv",
        ["horizon", "rate_estimate"],
        estimate.trajectory,
    )
    plots.exponent_convergence(out / "trajectory.png", estimate.trajectory, estimate.value, closed)
    result = {"estimate": estimate.to_dict(), "closed_form": closed}
    return verdict, code, result, ["trajectory.csv", "trajectory.png"]


def _run_datko(config: ExperimentConfig, out: Path):
    if config.is_continuous:
        return _run_datko_continuous(config, out)
    handle = config.handle()
    p = config.params
    estimate = estimate_exponent(handle, p["exponent"]["orbits"], p["exponent"]["n_max"], config.seed + 1)
    summary = datko_field_experiment(
        handle,
        p["p"],
        p["points"],
        p["directions"],
        config.seed + 2,
        exponent=estimate,
        tolerance=p["tolerance"],
        n_max=p["n_max"],
    )
    verdict = summary.status
    code = {
        "stable-converged": EXIT_POSITIVE,
        "unstable-diverged": EXIT_NEGATIVE,
        "inconclusive": EXIT_INCONCLUSIVE,
    }[summary.status]
    _write_csv(
        out / "samples.csv",
        ["point", "direction", "value", "tail_bound", "converged", "diverged"],
        summary.rows,
    )
    plots.datko_field(out / "c_field.png", summary.c_empirical, summary.c_predicted)
    result = {"summary": summary.to_dict(), "exponent": estimate.to_dict()}
    return verdict, code, result, ["samples.csv", "c_field.png"]


def _run_datko_continuous(config: ExperimentConfig, out: Path):
    handle = config.handle()
    p = config.params
    rng = np.random.default_rng(config.seed)
    rows = []
    first_blocks = None
    all_converged = True
    any_diverged = False
    for i in range(p["points"]):
        q = handle.system.sample_point(rng)
        for j in range(p["directions"]):
            x = rng.standard_normal(handle.dim)
            x = x / np.linalg.norm(x)
            report = datko_integral(handle, q, x, p["p"], tolerance=p["tolerance"], t_max=p["t_max"])
            if first_blocks is None:
                first_blocks = report.log_terms
            rows.append((i, j, report.value, report.tail_bound, report.converged, report.diverged))
            all_converged = all_converged and report.converged
            any_diverged = any_diverged or report.diverged
    disc_rows = []
    min_rel_slack = float("inf")
    for i in range(p["discretization_points"]):
        q = handle.system.sample_point(rng)
        x = rng.standard_normal(handle.dim)
        x = x / np.linalg.norm(x)
        check = check_discretization_bound(handle, q, x, p["p"], t_max=p["t_max"])
        disc_rows.append((i, check.discrete_value, check.integral_value, check.slack, check.relative_slack))
        min_rel_slack = min(min_rel_slack, check.relative_slack)
    if any_diverged:
        verdict, code = "pintegrals-diverge", EXIT_NEGATIVE
    elif all_converged and (not disc_rows or min_rel_slack >= -_SLACK_TOL):
        verdict, code = "pintegrals-converge", EXIT_POSITIVE
    else:
        verdict, code = "inconclusive", EXIT_INCONCLUSIVE
    _write_csv(
        out / "samples.csv",
        ["point", "direction", "value", "tail_bound", "converged", "diverged"],
        rows,
    )
    files = ["samples.csv", "integrand.png"]
    plots.integrand_decay(out / "integrand.png", [] if first_blocks is None else list(first_blocks), p["p"])
    result: dict = {"rows": len(rows), "all_converged": all_converged, "any_diverged": any_diverged}
    if disc_rows:
        _write_csv(
            out / "discretization.csv",
            ["point", "discrete_sum", "integral", "slack", "relative_slack"],
            disc_rows,
        )
        files.append("discretization.csv")
        result["min_relative_slack"] = min_rel_slack
    return verdict, code, result, files


def _run_induce(config: ExperimentConfig, out: Path):
    handle = config.handle()
    p = config.params
    subset = build_set(handle.system, p["set"])
    rng = np.random.default_rng(config.seed)
    kac_rows = []
    ratio_rows = []
    final_ratios = []
    for i in range(p["points"]):
        q = subset.sample_inside(rng)
        times = return_times(handle.system, q, subset, p["returns"])
        ratios = times / np.arange(1, len(times) + 1)
        final_ratios.append(float(ratios[-1]))
        ratio_rows.append((i, ratios))
        for n, t in enumerate(times, start=1):
            kac_rows.append((i, n, int(t), float(t / n)))
    mean_ratio = float(np.mean(final_ratios))
    result: dict = {
        "measure": subset.measure,
        "inverse_measure": 1.0 / subset.measure,
        "mean_final_ratio": mean_ratio,
        "ratio_std": float(np.std(final_ratios, ddof=1)) if len(final_ratios) > 1 else 0.0,
    }
    files = ["returns.csv", "kac.png"]
    _write_csv(out / "returns.csv", ["orbit", "n", "tau_n", "ratio"], kac_rows)
    plots.kac_convergence(out / "kac.png", ratio_rows, 1.0 / subset.measure)
    verdict, code = "kac-ratio-recorded", EXIT_POSITIVE
    if p["check_directions"] > 0:
        certificate = build_contraction_certificate(
            handle, subset, p["p"], points=min(32, 4 * p["points"]), directions=4, seed=config.seed + 1
        )
        q0 = subset.sample_inside(np.random.default_rng(config.seed + 2))
        record = build_induced_orbit(handle, q0, subset, p["check_returns"])
        contraction_rows = []
        min_adapted = float("inf")
        min_norm_slack = float("inf")
        for j in range(p["check_directions"]):
            x = rng.standard_normal(handle.dim)
            x = x / np.linalg.norm(x)
            res = induced_contraction_check(record, handle, certificate, x)
            min_adapted = min(min_adapted, float(np.min(res.adapted_slacks)))
            min_norm_slack = min(min_norm_slack, float(np.min(res.norm_bound_log_slacks)))
            for n in range(record.n_returns):
                contraction_rows.append(
                    (
                        j,
                        n + 1,
                        int(record.return_times[n]),
                        record.products[n].log_norm,
                        res.adapted_slacks[n],
                        res.norm_bound_log_slacks[n],
                    )
                )
        transfer_record = build_induced_orbit(handle, q0, subset, p["returns"])
        transfer = exponent_transfer_check(transfer_record, subset.measure)
        result.update(
            {
                "K": certificate.K,
                "gamma": certificate.gamma,
                "built_from": certificate.built_from,
                "min_adapted_slack": min_adapted,
                "min_norm_log_slack": min_norm_slack,
                "transfer": {
                    "lambda_direct": transfer.lambda_direct,
                    "lambda_induced": transfer.lambda_induced,
                    "kac_ratio": transfer.kac_ratio,
                    "residual": transfer.residual,
                },
            }
        )
        _write_csv(
            out / "contraction.csv",
            ["direction", "n", "tau_n", "log_norm", "adapted_slack", "norm_log_slack"],
            contraction_rows,
        )
        log_gamma = float(np.log(certificate.gamma)) if certificate.gamma > 0 else float("-inf")
        plots.induced_decay(
            out / "induced.png",
            [record.products[n].log_norm for n in range(record.n_returns)],
            float(np.log(certificate.K)),
            log_gamma,
        )
        files += ["contraction.csv", "induced.png"]
        if min_adapted < -_SLACK_TOL or min_norm_slack < -_SLACK_TOL:
            verdict, code = "contraction-violated", EXIT_NEGATIVE
        else:
            verdict, code = "induced-contraction-verified", EXIT_POSITIVE
    return verdict, code, result, files


def _run_temper(config: ExperimentConfig, out: Path):
    handle = config.handle()
    p = config.params
    estimate = estimate_exponent(handle, p["exponent"]["orbits"], p["exponent"]["n_max"], config.seed + 1)
    if not estimate.value < 0:
        return "not-in-stability-regime", EXIT_INCONCLUSIVE, {"exponent": estimate.to_dict()}, []
    eps = p["epsilon"] if p["epsilon"] is not None else abs(estimate.value) / 2.0
    if not estimate.value + eps < 0:
        return "epsilon-too-large", EXIT_INCONCLUSIVE, {"exponent": estimate.to_dict(), "epsilon": eps}, []
    q = handle.system.sample_point(np.random.default_rng(config.seed + 2))
    tempered = build_tempered_envelope(handle, q, estimate.value, eps, horizon=p["horizon"])
    drift = drift_check(handle, q, estimate.value, eps, n_max=p["drift_n_max"])
    ok = (
        tempered.decay_violation <= _SLACK_TOL
        and tempered.growth_violation <= _SLACK_TOL
        and abs(drift.slope) <= 0.05
        and drift.max_increment <= drift.psi + _SLACK_TOL
    )
    verdict = "tempered-bounds-verified" if ok else "tempered-bounds-violated"
    code = EXIT_POSITIVE if ok else EXIT_NEGATIVE
    env_rows = [(n, v) for n, v in enumerate(tempered.log_envelope)]
    t_rows = [(n, v) for n, v in enumerate(tempered.log_tempered)]
    _write_csv(out / "envelope.csv", ["n", "log_envelope"], env_rows)
    _write_csv(out / "tempered.csv", ["n", "log_tempered"], t_rows)
    plots.tempering_series(out / "tempering.png", tempered.log_envelope, tempered.log_tempered, eps)
    result = {
        "exponent": estimate.to_dict(),
        "epsilon": eps,
        "decay_violation": tempered.decay_violation,
        "growth_violation": tempered.growth_violation,
        "drift_slope": drift.slope,
        "drift_endpoint_rate": drift.endpoint_rate,
        "psi": drift.psi,
        "max_increment": drift.max_increment,
    }
    return verdict, code, result, ["envelope.csv", "tempered.csv", "tempering.png"]


def _run_uniform(config: ExperimentConfig, out: Path):
    handle = config.handle()
    p = config.params
    certificate = decide_uniform_stability(
        handle,
        n_budget=p["n_budget"],
        period_budget=p["period_budget"],
        mode=p["mode"],
        samples=p["samples"],
        seed=config.seed,
    )
    verdict = certificate.decision
    code = {
        "uniformly-stable": EXIT_POSITIVE,
        "not-uniformly-stable": EXIT_NEGATIVE,
        "inconclusive": EXIT_INCONCLUSIVE,
    }[certificate.decision]
    _write_csv(
        out / "bounds.csv",
        ["n", "upper_bound"],
        sorted(certificate.upper_bounds.items()),
    )
    _write_csv(
        out / "periodic.csv",
        ["period", "rate", "witness"],
        [(r.period, r.rate, "".join(str(s) for s in r.witness)) for r in certificate.lower_bounds],
    )
    plots.growth_bounds(
        out / "bounds.png", certificate.upper_bounds, [r.rate for r in certificate.lower_bounds]
    )
    return verdict, code, {"certificate": certificate.to_dict()}, ["bounds.csv", "periodic.csv", "bounds.png"]


def _run_flow(config: ExperimentConfig, out: Path):
    handle = config.handle()
    p = config.params
    certificate = decide_uniform_stability_flow(handle, t_budget=p["t_budget"], grid=p["grid"], seed=config.seed)
    verdict = certificate.decision
    code = {
        "uniformly-stable": EXIT_POSITIVE,
        "not-uniformly-stable": EXIT_NEGATIVE,
        "inconclusive": EXIT_INCONCLUSIVE,
    }[certificate.decision]
    _write_csv(
        out / "bounds.csv",
        ["t", "grid_sup_rate"],
        sorted(certificate.upper_bounds.items()),
    )
    plots.growth_bounds(out / "bounds.png", certificate.upper_bounds, [r.rate for r in certificate.lower_bounds])
    return verdict, code, {"certificate": certificate.to_dict()}, ["bounds.csv", "bounds.png"]


_RUNNERS = {
    "lyapunov": _run_lyapunov,
    "datko": _run_datko,
    "induce": _run_induce,
    "temper": _run_temper,
    "uniform": _run_uniform,
    "flow": _run_flow,
}
