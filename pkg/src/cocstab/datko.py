"""p-sum and p-integral stability diagnostics.

``datko_sum`` accumulates (sum_n ||cocycle(q,n) x||^p)^(1/p) in the log
domain with a windowed geometric-ratio stopping rule: once the last window
of terms decays at a fitted ratio safely below 1, the remaining tail is
certified against the requested tolerance.  Divergence (partial sums
exceeding any bound) and exhaustion (no certificate within the term budget)
are first-class verdicts, not errors.  The continuous-time variant
integrates ||cocycle(q,t) x||^p with composite Simpson on the integrator
grid, certifying the tail over unit-time blocks, and the discretization
check verifies the sum-versus-integral comparison inequality with a fitted
exponential bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import BasePoint, Suspension
from .cocycle import (
    CocycleHandle,
    VectorTrajectory,
    _field_on_time,
    _rk4_step,
    fit_exponential_bound,
)
from .lyapunov import LyapunovEstimate
from .tempering import compute_envelope

_WINDOW = 32
_RATIO_CAP = 1.0 - 1e-3
_DIVERGENCE_LOG = 230.0  # relative p-sum beyond e^230 counts as unbounded
_BLOCK = 128


@dataclass
class DatkoReport:
    """One truncated p-sum (or p-integral) along a trajectory."""

    p: float
    q: BasePoint
    x: np.ndarray
    n_terms: int
    value: float
    tail_bound: float
    c_estimate: float
    converged: bool
    diverged: bool
    log_terms: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def log_value_p(self) -> float:
        """log of the p-th power of the partial sum."""
        return self.p * float(np.log(self.value))


def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values))
    if m == float("-inf"):
        return m
    return m + float(np.log(np.sum(np.exp(values - m))))


def _window_certificate(log_terms: list[float]) -> tuple[bool, float]:
    """(certified, fitted log ratio) from the last window of terms."""
    if len(log_terms) < _WINDOW + 1:
        return False, 0.0
    window = np.asarray(log_terms[-(_WINDOW + 1) :])
    if np.any(np.diff(window) >= 0.0):
        return False, 0.0
    log_ratio = (window[-1] - window[0]) / _WINDOW
    return np.exp(log_ratio) < _RATIO_CAP, float(log_ratio)


def _tail_in_value_units(log_sum_p: float, log_tail_p: float, p: float) -> float:
    # S_true^p <= S^p + tail_p, so the value-domain tail is S((1+tail/S^p)^{1/p}-1).
    value = np.exp(log_sum_p / p)
    return float(value * np.expm1(np.log1p(np.exp(log_tail_p - log_sum_p)) / p))


def datko_sum(
    handle: CocycleHandle,
    q: BasePoint,
    x: np.ndarray,
    p: float,
    tolerance: float = 1e-9,
    n_max: int = 2**16,
) -> DatkoReport:
    """Truncated (sum ||cocycle(q,n) x||^p)^(1/p) with a certified tail."""
    if p <= 0:
        raise ValueError("p must be > 0")
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        raise ValueError("direction x must be nonzero")
    if not handle.is_discrete:
        raise ValueError("datko_sum needs a discrete handle; see datko_integral")
    trajectory = VectorTrajectory(handle, q, x)
    log_terms: list[float] = [p * float(np.log(xnorm))]
    log_sum = log_terms[0]
    converged = False
    diverged = False
    log_tail_p = float("-inf")
    while len(log_terms) - 1 < n_max:
        block = trajectory.next_block(min(_BLOCK, n_max - (len(log_terms) - 1)))
        for log_norm in p * block:
            log_terms.append(float(log_norm))
            log_sum = float(np.logaddexp(log_sum, log_norm))
        if log_terms[-1] == float("-inf"):
            converged = True  # the trajectory hit zero; every later term vanishes
            break
        certified, log_ratio = _window_certificate(log_terms)
        if certified:
            log_tail_p = log_terms[-1] + log_ratio - float(np.log1p(-np.exp(log_ratio)))
            if log_tail_p <= float(np.log(tolerance)) + log_sum:
                converged = True
                break
        if log_sum - p * float(np.log(xnorm)) > _DIVERGENCE_LOG * max(1.0, p):
            diverged = True
            break
    value = float(np.exp(log_sum / p))
    tail = 0.0 if log_tail_p == float("-inf") else _tail_in_value_units(log_sum, log_tail_p, p)
    return DatkoReport(
        p=p,
        q=q,
        x=x,
        n_terms=len(log_terms) - 1,
        value=value,
        tail_bound=tail if converged else float("inf"),
        c_estimate=value / xnorm,
        converged=converged,
        diverged=diverged,
        log_terms=np.asarray(log_terms),
    )


class _ContinuousTrajectory:
    """Integrates ||cocycle(q,t) x|| forward one unit-time block at a time."""

    def __init__(self, handle: CocycleHandle, q: BasePoint, x: np.ndarray):
        system = handle.system
        assert isinstance(system, Suspension)
        self.handle = handle
        self.system = system
        self.point = q
        n = max(2, round(1.0 / handle.step_h))
        self.n_steps = n + (n % 2)  # Simpson needs an even segment count
        self.dt = 1.0 / self.n_steps
        xnorm = float(np.linalg.norm(x))
        self.unit = np.asarray(x, dtype=float) / xnorm
        self.logmag = float(np.log(xnorm))

    def next_block(self) -> np.ndarray:
        """log ||v|| at the n_steps+1 grid nodes of the next unit interval."""
        field_fn = _field_on_time(self.handle, self.point)
        out = np.empty(self.n_steps + 1)
        out[0] = self.logmag
        unit, logmag = self.unit, self.logmag
        for k in range(self.n_steps):
            unit = _rk4_step(field_fn, unit, k * self.dt, self.dt)
            nrm = float(np.linalg.norm(unit))
            if nrm == 0.0:
                out[k + 1 :] = float("-inf")
                logmag = float("-inf")
                break
            unit = unit / nrm
            logmag += float(np.log(nrm))
            out[k + 1] = logmag
        self.unit, self.logmag = unit, logmag
        self.point = self.system.flow(self.point, 1.0)  # type: ignore[arg-type]
        return out


def _log_simpson(log_values: np.ndarray, dt: float, p: float) -> float:
    """log of int exp(p * log_values) over one block, composite Simpson."""
    scaled = p * log_values
    m = float(np.max(scaled))
    if m == float("-inf"):
        return float("-inf")
    f = np.exp(scaled - m)
    n = len(f) - 1
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return m + float(np.log(dt / 3.0 * np.sum(weights * f)))


def datko_integral(
    handle: CocycleHandle,
    q: BasePoint,
    x: np.ndarray,
    p: float,
    tolerance: float = 1e-9,
    t_max: float = 128.0,
) -> DatkoReport:
    """Truncated (int_0^T ||cocycle(q,t) x||^p dt)^(1/p) with a certified tail."""
    if p <= 0:
        raise ValueError("p must be > 0")
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    if handle.is_discrete:
        raise ValueError("datko_integral needs a continuous handle")
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        raise ValueError("direction x must be nonzero")
    trajectory = _ContinuousTrajectory(handle, q, x)
    n_blocks = int(round(t_max))
    block_logs: list[float] = []
    log_total = float("-inf")
    converged = False
    diverged = False
    log_tail_p = float("-inf")
    for _ in range(n_blocks):
        grid = trajectory.next_block()
        block_logs.append(_log_simpson(grid, trajectory.dt, p))
        log_total = float(np.logaddexp(log_total, block_logs[-1]))
        if block_logs[-1] == float("-inf"):
            converged = True
            break
        certified, log_ratio = _window_certificate(block_logs)
        if certified:
            log_tail_p = block_logs[-1] + log_ratio - float(np.log1p(-np.exp(log_ratio)))
            if log_tail_p <= float(np.log(tolerance)) + log_total:
                converged = True
                break
        if log_total - p * float(np.log(xnorm)) > _DIVERGENCE_LOG * max(1.0, p):
            diverged = True
            break
    value = float(np.exp(log_total / p))
    tail = 0.0 if log_tail_p == float("-inf") else _tail_in_value_units(log_total, log_tail_p, p)
    return DatkoReport(
        p=p,
        q=q,
        x=x,
        n_terms=len(block_logs),
        value=value,
        tail_bound=tail if converged else float("inf"),
        c_estimate=value / xnorm,
        converged=converged,
        diverged=diverged,
        log_terms=np.asarray(block_logs),
    )


@dataclass
class DiscretizationCheck:
    """Comparison of the integer-time p-sum against the p-integral bound."""

    discrete_value: float
    integral_value: float
    bound_constant: float  # K^p e^{omega p}
    slack: float
    relative_slack: float
    converged: bool


def check_discretization_bound(
    handle: CocycleHandle,
    q: BasePoint,
    x: np.ndarray,
    p: float,
    tolerance: float = 1e-9,
    t_max: float = 128.0,
    bound: tuple[float, float] | None = None,
) -> DiscretizationCheck:
    """Verify sum_n ||...||^p <= K^p e^{omega p} int ||...||^p dt + ||x||^p.

    The unit-time trajectory blocks feed both sides from one pass; the bound
    constant comes from the fitted exponential bound unless supplied.
    """
    if p <= 0:
        raise ValueError("p must be > 0")
    if handle.is_discrete:
        raise ValueError("discretization checks need a continuous handle")
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        raise ValueError("direction x must be nonzero")
    K, omega = bound if bound is not None else fit_exponential_bound(handle)
    trajectory = _ContinuousTrajectory(handle, q, x)
    log_sum_p = p * float(np.log(xnorm))  # n = 0 term
    log_int_p = float("-inf")
    block_logs: list[float] = []
    term_logs: list[float] = [p * float(np.log(xnorm))]
    converged = False
    for _ in range(int(round(t_max))):
        grid = trajectory.next_block()
        block_logs.append(_log_simpson(grid, trajectory.dt, p))
        log_int_p = float(np.logaddexp(log_int_p, block_logs[-1]))
        term_logs.append(p * grid[-1])
        log_sum_p = float(np.logaddexp(log_sum_p, term_logs[-1]))
        ok_blocks, _ = _window_certificate(block_logs)
        ok_terms, _ = _window_certificate(term_logs)
        if (ok_blocks and ok_terms) or block_logs[-1] == float("-inf"):
            converged = True
            break
    if not converged:
        raise RuntimeError("discretization check did not converge within the time budget")
    bound_constant = float(K**p * np.exp(omega * p))
    rhs = bound_constant * float(np.exp(log_int_p)) + xnorm**p
    lhs = float(np.exp(log_sum_p))
    return DiscretizationCheck(
        discrete_value=lhs ** (1.0 / p),
        integral_value=float(np.exp(log_int_p / p)),
        bound_constant=bound_constant,
        slack=rhs - lhs,
        relative_slack=(rhs - lhs) / rhs,
        converged=converged,
    )


@dataclass
class DatkoFieldSummary:
    """Outcome of sweeping p-sums over sampled points and directions."""

    status: str  # "stable-converged" | "unstable-diverged" | "inconclusive"
    p: float
    epsilon: float | None
    points: int
    directions: int
    fraction_converged: float
    fraction_diverged: float
    c_empirical: list[float]
    c_predicted: list[float]
    bound_violations: int
    rows: list[tuple[int, int, float, float, bool, bool]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "p": self.p,
            "epsilon": self.epsilon,
            "points": self.points,
            "directions": self.directions,
            "fraction_converged": self.fraction_converged,
            "fraction_diverged": self.fraction_diverged,
            "c_empirical": self.c_empirical,
            "c_predicted": self.c_predicted,
            "bound_violations": self.bound_violations,
        }


def datko_field_experiment(
    handle: CocycleHandle,
    p: float,
    points: int,
    directions: int,
    seed: int,
    exponent: LyapunovEstimate,
    tolerance: float = 1e-9,
    n_max: int = 2**16,
) -> DatkoFieldSummary:
    """Sweep p-sums over sampled (q, x); contrast against the exponent's sign.

    With a negative exponent every sum must converge and the empirical
    C(q) field is compared against the geometric-series prediction built
    from the envelope constant at epsilon = |exponent|/2; with a positive
    exponent at least 99% of the sums must diverge.
    """
    if abs(exponent.value) <= 2.0 * exponent.dispersion or exponent.value == 0.0:
        return DatkoFieldSummary(
            status="inconclusive",
            p=p,
            epsilon=None,
            points=points,
            directions=directions,
            fraction_converged=float("nan"),
            fraction_diverged=float("nan"),
            c_empirical=[],
            c_predicted=[],
            bound_violations=0,
        )
    rng = np.random.default_rng(seed)
    stable = exponent.value < 0.0
    eps = abs(exponent.value) / 2.0
    n_conv = 0
    n_div = 0
    c_emp: list[float] = []
    c_pred: list[float] = []
    rows: list[tuple[int, int, float, float, bool, bool]] = []
    violations = 0
    for i in range(points):
        q = handle.system.sample_point(rng)
        best_c = 0.0
        longest = 0
        all_ok = True
        for j in range(directions):
            x = rng.standard_normal(handle.dim)
            x = x / np.linalg.norm(x)
            report = datko_sum(handle, q, x, p, tolerance=tolerance, n_max=n_max)
            rows.append((i, j, report.value, report.tail_bound, report.converged, report.diverged))
            n_conv += int(report.converged)
            n_div += int(report.diverged)
            all_ok = all_ok and report.converged
            best_c = max(best_c, report.c_estimate)
            longest = max(longest, report.n_terms)
        if stable and all_ok:
            envelope = compute_envelope(handle, q, exponent.value, eps, n_max=max(64, longest + 1))
            denom = -np.expm1(p * (exponent.value + eps))
            predicted = float(np.exp(envelope.log_value) / denom ** (1.0 / p))
            c_emp.append(best_c)
            c_pred.append(predicted)
            if best_c > predicted * (1.0 + 1e-9):
                violations += 1
    total = points * directions
    if stable:
        status = "stable-converged" if n_conv == total and violations == 0 else "inconclusive"
    else:
        status = "unstable-diverged" if n_div >= 0.99 * total else "inconclusive"
    return DatkoFieldSummary(
        status=status,
        p=p,
        epsilon=eps,
        points=points,
        directions=directions,
        fraction_converged=n_conv / total,
        fraction_diverged=n_div / total,
        c_empirical=c_emp,
        c_predicted=c_pred,
        bound_violations=violations,
        rows=rows,
    )
