"""Adapted norms, contraction certificates, and return-map induced cocycles.

The p-sum along a trajectory is itself a point-dependent norm under which
one step from a set with bounded norm-distortion K contracts by the factor
gamma = (1 - K^{-p})^{1/p}.  Running the cocycle between successive returns
to such a set gives the induced cocycle, whose operator norm then decays
like K gamma^n; Kac's mean-return-time law ties the induced exponent back
to the original one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import BasePoint, BaseSystem, MeasurableSet, step_n
from .cocycle import CocycleHandle, apply_to_vector
from .datko import DatkoReport, datko_sum
from .scaled import ScaledMatrix


class ConvergenceError(RuntimeError):
    """An ingredient p-sum failed to certify its tail."""


@dataclass
class AdaptedNormValue:
    q: BasePoint
    x: np.ndarray
    p: float
    value: float
    converged: bool
    report: DatkoReport | None


def adapted_norm(
    handle: CocycleHandle,
    q: BasePoint,
    x: np.ndarray,
    p: float,
    tolerance: float = 1e-9,
    n_max: int = 2**16,
) -> AdaptedNormValue:
    """The trajectory p-sum of x at q, as a norm value.

    The zero vector has norm 0 by definition (every term vanishes); for any
    other x the value dominates ||x|| through the n = 0 term.
    """
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        return AdaptedNormValue(q, x, p, 0.0, True, None)
    report = datko_sum(handle, q, x, p, tolerance=tolerance, n_max=n_max)
    if report.converged and report.value < xnorm * (1.0 - 1e-12):
        raise AssertionError("adapted norm fell below the n=0 term; numerical inconsistency")
    return AdaptedNormValue(q, x, p, report.value, report.converged, report)


def gamma_from(K: float, p: float) -> float:
    if K < 1.0:
        raise ValueError("K < 1 is impossible: the adapted norm dominates the plain norm")
    if K == 1.0:
        return 0.0
    return float((1.0 - K**-p) ** (1.0 / p))


@dataclass(frozen=True)
class ContractionCertificate:
    """Level data (E, K, gamma) for the adapted-norm contraction."""

    subset: MeasurableSet
    K: float
    gamma: float
    p: float
    samples_checked: int
    built_from: str

    def __post_init__(self):
        if abs(self.gamma - gamma_from(self.K, self.p)) > 1e-12:
            raise ValueError("gamma must equal (1 - K^-p)^(1/p)")


def build_contraction_certificate(
    handle: CocycleHandle,
    subset: MeasurableSet,
    p: float,
    points: int = 64,
    directions: int = 8,
    seed: int = 0,
    tolerance: float = 1e-9,
    margin: float = 0.01,
) -> ContractionCertificate:
    """Bound the norm distortion C(q) over the set and derive gamma.

    When every one-step matrix is a contraction (sup norm b < 1), the
    geometric bound (1 - b^p)^(-1/p) dominates C everywhere, giving a
    certificate no sample can violate.  Otherwise K is the sampled maximum
    plus a safety margin, a finite-sample stand-in for the essential sup.
    """
    rng = np.random.default_rng(seed)
    axes = list(np.eye(handle.dim))
    sampled_max = 1.0
    checked = 0
    for _ in range(points):
        q = subset.sample_inside(rng)
        for x in axes + [rng.standard_normal(handle.dim) for _ in range(max(0, directions - handle.dim))]:
            x = x / np.linalg.norm(x)
            value = adapted_norm(handle, q, x, p, tolerance=tolerance)
            if not value.converged:
                raise ConvergenceError("certificate sampling hit an unconverged p-sum")
            if value.value < 1.0 - 1e-12:
                raise AssertionError("sampled C(q) below 1 violates the sandwich inequality")
            sampled_max = max(sampled_max, value.value)
            checked += 1
    b = float(np.exp(handle.generator.sup_log_norm(handle.system)))
    if b < 1.0:
        K = float((1.0 - b**p) ** (-1.0 / p))
        built_from = "uniform-norm-bound"
        if sampled_max > K * (1.0 + 1e-9):
            raise AssertionError("sampled C(q) exceeded the uniform geometric bound")
    else:
        K = sampled_max * (1.0 + margin)
        built_from = "sampled-max"
    return ContractionCertificate(
        subset=subset,
        K=K,
        gamma=gamma_from(K, p),
        p=p,
        samples_checked=checked,
        built_from=built_from,
    )


def one_step_contraction_check(
    handle: CocycleHandle,
    q: BasePoint,
    m: int,
    x: np.ndarray,
    certificate: ContractionCertificate,
    tolerance: float = 1e-9,
) -> float:
    """gamma ||x||_{q,p} - ||cocycle(q,m) x||_{f^m q, p}; negative means violation.

    With gamma = 0 (degenerate K = 1) the image must vanish outright.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    if not certificate.subset.contains(q):
        raise ValueError("q is outside the certificate's set")
    p = certificate.p
    norm_q = adapted_norm(handle, q, x, p, tolerance=tolerance)
    if not norm_q.converged:
        raise ConvergenceError("adapted norm at q did not converge")
    unit, logmag = apply_to_vector(handle, q, m, x)
    q_m = step_n(handle.system, q, m)
    if logmag == float("-inf"):
        return certificate.gamma * norm_q.value
    image_norm = adapted_norm(handle, q_m, unit, p, tolerance=tolerance)
    if not image_norm.converged:
        raise ConvergenceError("adapted norm at f^m q did not converge")
    return certificate.gamma * norm_q.value - float(np.exp(logmag)) * image_norm.value


# --- induced (return-map) cocycles ----------------------------------------


@dataclass
class InducedOrbitRecord:
    """Returns of an orbit to a set, with the accumulated cocycle products.

    products[k] is the cocycle at the (k+1)-th return time; points[k] is the
    return point itself, i.e. the induced orbit.
    """

    start: BasePoint
    return_times: np.ndarray
    products: list[ScaledMatrix]
    points: list[BasePoint]

    @property
    def n_returns(self) -> int:
        return len(self.return_times)


def return_times(
    system: BaseSystem,
    q: BasePoint,
    subset: MeasurableSet,
    n_returns: int,
    cap: int = 10**6,
) -> np.ndarray:
    """The first n_returns cumulative return times of q to the set."""
    times = np.empty(n_returns, dtype=np.int64)
    point = q
    count = 0
    for t in range(1, cap + 1):
        point = system.step(point)
        if subset.contains(point):
            times[count] = t
            count += 1
            if count == n_returns:
                return times
    raise RuntimeError(f"recurrence not observed: fewer than {n_returns} returns within {cap} steps")


def build_induced_orbit(
    handle: CocycleHandle,
    q: BasePoint,
    subset: MeasurableSet,
    n_returns: int,
    cap: int = 10**6,
) -> InducedOrbitRecord:
    if not subset.contains(q):
        raise ValueError("starting point must lie in the set")
    if subset.measure <= 0.0:
        raise ValueError("the set must have positive measure")
    system = handle.system
    times: list[int] = []
    products: list[ScaledMatrix] = []
    points: list[BasePoint] = []
    product = ScaledMatrix.identity(handle.dim)
    point = q
    for t in range(1, cap + 1):
        product = product.left_multiply(handle.one_step_matrix(point))
        point = system.step(point)
        if subset.contains(point):
            times.append(t)
            products.append(product)
            points.append(point)
            if len(times) == n_returns:
                return InducedOrbitRecord(
                    start=q,
                    return_times=np.asarray(times, dtype=np.int64),
                    products=products,
                    points=points,
                )
    raise RuntimeError(f"recurrence not observed: fewer than {n_returns} returns within {cap} steps")


@dataclass
class InducedContractionResult:
    """Slack of the induced-step contraction along one recorded orbit.

    adapted_slacks are relative: 1 - value_n / (gamma^n ||x||_{q,p});
    norm_bound_log_slacks are log K + n log gamma - log||product_n||.
    """

    adapted_slacks: np.ndarray
    norm_bound_log_slacks: np.ndarray
    start_norm: float


def induced_contraction_check(
    record: InducedOrbitRecord,
    handle: CocycleHandle,
    certificate: ContractionCertificate,
    x: np.ndarray,
    tolerance: float = 1e-9,
) -> InducedContractionResult:
    p = certificate.p
    start = adapted_norm(handle, record.start, x, p, tolerance=tolerance)
    if not start.converged:
        raise ConvergenceError("adapted norm at the orbit start did not converge")
    log_gamma = float(np.log(certificate.gamma)) if certificate.gamma > 0 else float("-inf")
    log_k = float(np.log(certificate.K))
    n = record.n_returns
    adapted_slacks = np.empty(n)
    norm_slacks = np.empty(n)
    for k in range(n):
        steps = k + 1
        unit, logmag = record.products[k].apply(np.asarray(x, dtype=float))
        if logmag == float("-inf"):
            adapted_slacks[k] = 1.0
        else:
            image = adapted_norm(handle, record.points[k], unit, p, tolerance=tolerance)
            if not image.converged:
                raise ConvergenceError("adapted norm at a return point did not converge")
            log_value = logmag + float(np.log(image.value))
            if log_gamma == float("-inf"):
                adapted_slacks[k] = float("-inf")  # gamma = 0 demands exact vanishing
            else:
                bound = steps * log_gamma + float(np.log(start.value))
                adapted_slacks[k] = 1.0 - float(np.exp(log_value - bound))
        product_log_norm = record.products[k].log_norm
        if product_log_norm == float("-inf"):
            norm_slacks[k] = float("inf")
        else:
            norm_slacks[k] = log_k + steps * log_gamma - product_log_norm
    return InducedContractionResult(
        adapted_slacks=adapted_slacks,
        norm_bound_log_slacks=norm_slacks,
        start_norm=start.value,
    )


@dataclass
class TransferResult:
    """Exponent bookkeeping between the original and induced cocycles."""

    lambda_direct: float  # (1/tau_n) log ||cocycle(q, tau_n)||
    lambda_induced: float  # (1/n) log ||induced(q, n)||
    kac_ratio: float  # tau_n / n
    measure: float
    residual: float  # |lambda_direct - measure * lambda_induced|


def exponent_transfer_check(
    record: InducedOrbitRecord,
    measure_e: float,
    lambda_induced: float | None = None,
) -> TransferResult:
    if record.n_returns == 0:
        raise ValueError("record has no returns")
    log_norm = record.products[-1].log_norm
    n = record.n_returns
    tau = float(record.return_times[-1])
    lam_ind = lambda_induced if lambda_induced is not None else log_norm / n
    lam_dir = log_norm / tau
    return TransferResult(
        lambda_direct=lam_dir,
        lambda_induced=lam_ind,
        kac_ratio=tau / n,
        measure=measure_e,
        residual=abs(lam_dir - measure_e * lam_ind),
    )
