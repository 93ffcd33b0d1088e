"""Pointwise envelope constants and tempered bounds for stable cocycles.

For an exponent estimate lam with margin eps (lam + eps < 0), the envelope
C(q) = sup_n ||cocycle(q,n)|| e^{-n(lam+eps)} is finite along typical orbits
and drifts subexponentially; a running sup discounted at rate eps turns it
into a tempered function T with T(orbit position n) <= T(q) e^{eps n} and
||cocycle(q,n)|| <= T(q) e^{(lam+eps) n}.  All quantities live in the log
domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import BasePoint
from .cocycle import CocycleHandle, _step_log_entries, matrix_log_norms

_CERT_WINDOW = 32
_LOG_HALF = float(np.log(0.5))


@dataclass
class EnvelopeValue:
    """Truncated sup of ||cocycle(q,n)|| e^{-n(lam+eps)} with certification."""

    log_value: float
    argmax: int
    converged: bool
    n_max: int


def _certified(values: np.ndarray, log_sup: float) -> bool:
    if len(values) <= _CERT_WINDOW:
        return False
    return bool(np.max(values[-_CERT_WINDOW:]) <= log_sup + _LOG_HALF)


def compute_envelope(
    handle: CocycleHandle,
    q: BasePoint,
    lam_hat: float,
    eps: float,
    n_max: int = 256,
) -> EnvelopeValue:
    """sup over n <= n_max of log||cocycle(q,n)|| - n (lam_hat + eps).

    Certified when the last window of terms has dropped below half the sup;
    an uncertified scan is returned with converged=False, not raised.
    """
    if not lam_hat + eps < 0:
        raise ValueError("envelope needs lam_hat + eps < 0 (stability regime)")
    if n_max < 64:
        raise ValueError("n_max must be at least 64")
    times = np.arange(n_max + 1)
    values = matrix_log_norms(handle, q, times) - times * (lam_hat + eps)
    log_sup = float(np.max(values))
    return EnvelopeValue(
        log_value=log_sup,
        argmax=int(np.argmax(values)),
        converged=_certified(values, log_sup),
        n_max=n_max,
    )


@dataclass
class OrbitEnvelopes:
    """Envelope values at successive orbit positions, plus the norm window
    they were read from: window_log_norms[j, k] = log||cocycle(f^j q, k)||."""

    log_envelope: np.ndarray
    window_log_norms: np.ndarray
    converged: np.ndarray
    lam_hat: float
    eps: float
    n_max: int


def envelope_along_orbit(
    handle: CocycleHandle,
    q: BasePoint,
    lam_hat: float,
    eps: float,
    positions: int,
    n_max: int = 256,
) -> OrbitEnvelopes:
    if not lam_hat + eps < 0:
        raise ValueError("envelope needs lam_hat + eps < 0 (stability regime)")
    if n_max < 64:
        raise ValueError("n_max must be at least 64")
    gen = handle.generator
    if gen.is_diagonal and gen.kind != "constant":
        logs = _step_log_entries(handle, q, positions - 1 + n_max)
        cum = np.vstack([np.zeros(gen.dim), np.cumsum(logs, axis=0)])
        idx = np.arange(positions)[:, None] + np.arange(n_max + 1)[None, :]
        window = np.max(cum[idx] - cum[:positions, None, :], axis=2)
    else:
        window = np.empty((positions, n_max + 1))
        point = q
        times = np.arange(n_max + 1)
        for j in range(positions):
            window[j] = matrix_log_norms(handle, point, times)
            point = handle.system.step(point)
    values = window - np.arange(n_max + 1)[None, :] * (lam_hat + eps)
    log_env = np.max(values, axis=1)
    converged = np.max(values[:, -_CERT_WINDOW:], axis=1) <= log_env + _LOG_HALF
    return OrbitEnvelopes(
        log_envelope=log_env,
        window_log_norms=window,
        converged=converged,
        lam_hat=lam_hat,
        eps=eps,
        n_max=n_max,
    )


@dataclass
class DriftReport:
    """Least-squares drift of the envelope along an orbit."""

    slope: float
    endpoint_rate: float  # (1/n) log C(f^n q) at the last position
    psi: float
    max_increment: float  # max over n of log C(f^n q) - log C(f^{n+1} q)
    positions: int
    all_converged: bool


def drift_check(
    handle: CocycleHandle,
    q: BasePoint,
    lam_hat: float,
    eps: float,
    n_max: int = 1024,
    envelope_n_max: int = 256,
) -> DriftReport:
    """Slope of log C(f^n q) against n, which must vanish for typical orbits.

    Also verifies the one-step increment bound log C(q) - log C(f q) <= psi
    with psi = max(0, -(lam+eps) + sup_q log||A(q)||).
    """
    orbit = envelope_along_orbit(handle, q, lam_hat, eps, positions=n_max + 1, n_max=envelope_n_max)
    if not bool(np.all(orbit.converged)):
        raise RuntimeError("unconverged envelopes along the orbit; raise envelope_n_max")
    env = orbit.log_envelope
    ns = np.arange(len(env), dtype=float)
    slope = float(np.polyfit(ns, env, 1)[0])
    psi = max(0.0, -(lam_hat + eps) + handle.generator.sup_log_norm(handle.system))
    increments = env[:-1] - env[1:]
    return DriftReport(
        slope=slope,
        endpoint_rate=float(env[-1] / n_max),
        psi=psi,
        max_increment=float(np.max(increments)),
        positions=n_max + 1,
        all_converged=True,
    )


@dataclass
class TemperedEnvelope:
    """Tempered majorant T along an orbit, built as a discounted running sup.

    log_tempered[j] = max over k <= horizon - j of log C(f^{j+k} q) - eps k,
    reported for j <= horizon/2 so the truncated sup is stabilized.
    """

    log_tempered: np.ndarray
    log_envelope: np.ndarray
    lam_hat: float
    eps: float
    horizon: int
    decay_violation: float  # max of log||cocycle|| - (log T(j) + k (lam+eps))
    growth_violation: float  # max of log T(j2) - (log T(j1) + eps (j2-j1))


def build_tempered_envelope(
    handle: CocycleHandle,
    q: BasePoint,
    lam_hat: float,
    eps: float,
    horizon: int = 512,
    envelope_n_max: int | None = None,
) -> TemperedEnvelope:
    if horizon < 2**8:
        raise ValueError("horizon must be at least 256")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n_env = envelope_n_max if envelope_n_max is not None else max(64, horizon // 2)
    orbit = envelope_along_orbit(handle, q, lam_hat, eps, positions=horizon + 1, n_max=n_env)
    env = orbit.log_envelope
    half = horizon // 2
    log_t = np.empty(half + 1)
    for j in range(half + 1):
        ks = np.arange(horizon + 1 - j)
        terms = env[j:] - eps * ks
        k_star = int(np.argmax(terms))
        if ks[-1] - k_star < horizon // 4:
            raise ValueError("horizon too small: tempered sup not stabilized over the last quarter")
        log_t[j] = float(terms[k_star])
    # Theorem inequality 1 on the computed norm window: positions j <= half,
    # times k <= n_env, all of which lie inside the window.
    window = orbit.window_log_norms[: half + 1]
    ks = np.arange(n_env + 1)[None, :]
    decay_violation = float(np.max(window - (log_t[:, None] + ks * (lam_hat + eps))))
    # Theorem inequality 2 across all ordered position pairs.
    j1, j2 = np.triu_indices(half + 1, k=0)
    growth_violation = float(np.max(log_t[j2] - log_t[j1] - eps * (j2 - j1)))
    return TemperedEnvelope(
        log_tempered=log_t,
        log_envelope=env,
        lam_hat=lam_hat,
        eps=eps,
        horizon=horizon,
        decay_violation=decay_violation,
        growth_violation=growth_violation,
    )
