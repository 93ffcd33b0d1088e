"""Matrix cocycles over base systems: products, propagators, law checks.

A discrete handle evaluates products A(f^{n-1} q) ... A(q) in overflow-safe
scaled arithmetic; a continuous handle integrates the fundamental-solution
ODE U' = G(flow(q, s)) U with a fixed-step RK4 scheme and per-step
renormalization.  Trajectory helpers return whole arrays of log norms and
use vectorized paths for scalar and diagonal generator families, where the
product norm reduces to cumulative sums of entry logs.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .base import (
    BasePoint,
    BaseSystem,
    CirclePoint,
    CircleRotation,
    DoublingMap,
    FlowPoint,
    SubshiftOfFiniteType,
    Suspension,
    SymbolicPoint,
    _ShiftSystem,
)
from .expressions import compile_entry
from .scaled import ScaledMatrix, relative_difference, spectral_norm

_COORD_GRID = 4096


class Generator:
    """One-step matrices A(q) (discrete) or an infinitesimal field G(q).

    Kinds: ``constant`` (one matrix), ``per_symbol`` (one matrix per base
    symbol), ``closed_form`` (entry expressions in the base coordinate q).
    """

    def __init__(
        self,
        kind: str,
        dim: int,
        matrices: Sequence[np.ndarray] | None = None,
        entries: Sequence[Sequence[str]] | None = None,
    ):
        if kind not in ("constant", "per_symbol", "closed_form"):
            raise ValueError(f"unknown generator kind {kind!r}")
        self.kind = kind
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        self.matrices: tuple[np.ndarray, ...] | None = None
        self.entries: tuple[tuple[str, ...], ...] | None = None
        self._entry_fns = None
        if kind in ("constant", "per_symbol"):
            if not matrices:
                raise ValueError(f"{kind} generator needs matrices")
            mats = tuple(np.asarray(m, dtype=float) for m in matrices)
            for m in mats:
                if m.shape != (self.dim, self.dim):
                    raise ValueError(f"matrix shape {m.shape} does not match dimension {self.dim}")
                if not np.all(np.isfinite(m)):
                    raise ValueError("generator matrices must be finite")
            if kind == "constant" and len(mats) != 1:
                raise ValueError("constant generator takes exactly one matrix")
            self.matrices = mats
        else:
            if entries is None:
                raise ValueError("closed_form generator needs entry expressions")
            rows = tuple(tuple(str(e) for e in row) for row in entries)
            if len(rows) != self.dim or any(len(r) != self.dim for r in rows):
                raise ValueError("entry grid must be dim x dim")
            self.entries = rows
            self._entry_fns = tuple(tuple(compile_entry(e) for e in row) for row in rows)

    @staticmethod
    def constant(matrix) -> "Generator":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return Generator("constant", matrix.shape[0], matrices=[matrix])

    @staticmethod
    def per_symbol(matrices) -> "Generator":
        mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in matrices]
        return Generator("per_symbol", mats[0].shape[0], matrices=mats)

    @staticmethod
    def closed_form(entries) -> "Generator":
        rows = [list(r) for r in entries]
        return Generator("closed_form", len(rows), entries=rows)

    @property
    def is_scalar(self) -> bool:
        return self.dim == 1

    @property
    def is_diagonal(self) -> bool:
        if self.matrices is None:
            return self.dim == 1
        return all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in self.matrices)

    def scaled(self, c: float) -> "Generator":
        if self.matrices is None:
            raise ValueError("scaling is only supported for matrix-table generators")
        return Generator(self.kind, self.dim, matrices=[c * m for m in self.matrices])

    def matrix_at_coordinate(self, x) -> np.ndarray:
        assert self._entry_fns is not None
        return np.array([[float(fn(x)) for fn in row] for row in self._entry_fns])

    def matrices_at_coordinates(self, xs: np.ndarray) -> np.ndarray:
        """Batched closed-form evaluation: (len(xs), dim, dim)."""
        assert self._entry_fns is not None
        out = np.empty((len(xs), self.dim, self.dim))
        for i, row in enumerate(self._entry_fns):
            for j, fn in enumerate(row):
                out[:, i, j] = np.broadcast_to(fn(xs), (len(xs),))
        return out

    def sup_log_norm(self, system: BaseSystem | None = None) -> float:
        """log of sup over the base of the one-step operator norm.

        Exact for matrix tables; a dense-grid value for closed forms.
        """
        if self.matrices is not None:
            return max(float(np.log(spectral_norm(m))) if spectral_norm(m) > 0 else float("-inf") for m in self.matrices)
        xs = np.arange(_COORD_GRID) / _COORD_GRID
        mats = self.matrices_at_coordinates(xs)
        return float(np.log(max(spectral_norm(m) for m in mats)))


def coordinate_of(system: BaseSystem, q: BasePoint) -> float:
    """Real coordinate feeding closed-form generator entries."""
    if isinstance(system, CircleRotation):
        return system._check_point(q).x
    if isinstance(system, DoublingMap):
        return system.coordinate(q)  # type: ignore[arg-type]
    if isinstance(system, Suspension):
        return system.flow_coordinate(q)  # type: ignore[arg-type]
    raise ValueError(f"{system.kind} has no real coordinate for closed-form entries")


class CocycleHandle:
    """A generator attached to a base system, with discrete or continuous time."""

    def __init__(self, system: BaseSystem, generator: Generator, time_kind: str = "discrete", step_h: float = 1e-3):
        if time_kind not in ("discrete", "continuous"):
            raise ValueError("time_kind must be 'discrete' or 'continuous'")
        if time_kind == "continuous":
            if not isinstance(system, Suspension):
                raise ValueError("continuous handles need a suspension semi-flow base")
            if generator.kind == "closed_form" and not isinstance(system.base, CircleRotation):
                raise ValueError("closed-form fields need a rotation base for a flow coordinate")
            if generator.kind == "per_symbol" and not isinstance(system.base, _ShiftSystem):
                raise ValueError("per-symbol fields need a shift base")
            if not step_h > 0:
                raise ValueError("integrator step must be positive")
        else:
            if isinstance(system, Suspension):
                raise ValueError("discrete handles act over maps, not suspensions")
            if generator.kind == "per_symbol":
                if not isinstance(system, _ShiftSystem):
                    raise ValueError("per-symbol generators need a shift base")
                assert generator.matrices is not None
                if len(generator.matrices) != system.alphabet:
                    raise ValueError("per-symbol generator needs one matrix per alphabet symbol")
            if generator.kind == "closed_form" and not isinstance(system, (CircleRotation, DoublingMap)):
                raise ValueError("closed-form generators need a circle coordinate")
        self.system = system
        self.generator = generator
        self.time_kind = time_kind
        self.step_h = float(step_h)

    @property
    def dim(self) -> int:
        return self.generator.dim

    @property
    def is_discrete(self) -> bool:
        return self.time_kind == "discrete"

    def one_step_matrix(self, q: BasePoint) -> np.ndarray:
        """A(q) for discrete handles; the field G(q) for continuous ones."""
        gen = self.generator
        if gen.kind == "constant":
            assert gen.matrices is not None
            return gen.matrices[0]
        if gen.kind == "per_symbol":
            assert gen.matrices is not None
            base = q.base if isinstance(q, FlowPoint) else q
            if not isinstance(base, SymbolicPoint):
                raise ValueError("per-symbol generator needs a symbolic point")
            return gen.matrices[base.window[0]]
        return gen.matrix_at_coordinate(coordinate_of(self.system, q))


# --- discrete products ----------------------------------------------------


def _step_matrices(handle: CocycleHandle, q: BasePoint, start: int, count: int) -> np.ndarray:
    """A(f^k q) for k in [start, start+count), as an array (count, d, d)."""
    gen = handle.generator
    system = handle.system
    if gen.kind == "constant":
        assert gen.matrices is not None
        return np.broadcast_to(gen.matrices[0], (count, gen.dim, gen.dim))
    if gen.kind == "per_symbol":
        assert gen.matrices is not None and isinstance(system, _ShiftSystem)
        symbols = system.orbit_symbols(q, start + count)[start:]  # type: ignore[arg-type]
        return np.stack(gen.matrices)[symbols]
    if isinstance(system, CircleRotation):
        coords = system.orbit_coordinates(q, start + count)[start:]  # type: ignore[arg-type]
    elif isinstance(system, DoublingMap):
        coords = system.orbit_coordinates(q, start + count)[start:]  # type: ignore[arg-type]
    else:
        raise ValueError("closed-form generators need a circle coordinate")
    return gen.matrices_at_coordinates(coords)


def _step_log_entries(handle: CocycleHandle, q: BasePoint, count: int) -> np.ndarray:
    """Per-step log|diagonal entries| array (count, d) for diagonal families."""
    gen = handle.generator
    system = handle.system
    with np.errstate(divide="ignore"):
        if gen.kind == "per_symbol":
            assert gen.matrices is not None and isinstance(system, _ShiftSystem)
            table = np.log(np.abs(np.stack([np.diag(m) for m in gen.matrices])))
            symbols = system.orbit_symbols(q, count)  # type: ignore[arg-type]
            return table[symbols]
        if gen.kind == "constant":
            assert gen.matrices is not None
            row = np.log(np.abs(np.diag(gen.matrices[0])))
            return np.broadcast_to(row, (count, gen.dim))
        coords = handle.system.orbit_coordinates(q, count)  # type: ignore[attr-defined]
        mats = gen.matrices_at_coordinates(coords)
        return np.log(np.abs(np.diagonal(mats, axis1=1, axis2=2)))


def evaluate_product(handle: CocycleHandle, q: BasePoint, n: int) -> ScaledMatrix:
    """The cocycle matrix at time n: A(f^{n-1} q) ... A(q); n = 0 gives Id."""
    if not handle.is_discrete:
        raise ValueError("evaluate_product needs a discrete handle")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return ScaledMatrix.identity(handle.dim)
    gen = handle.generator
    if gen.kind == "constant":
        assert gen.matrices is not None
        return _matrix_power(ScaledMatrix.from_matrix(gen.matrices[0]), n)
    product = ScaledMatrix.identity(handle.dim)
    pos = 0
    while pos < n:
        block = min(4096, n - pos)
        for mat in _step_matrices(handle, q, pos, block):
            product = product.left_multiply(mat)
        pos += block
    return product


def _matrix_power(base: ScaledMatrix, n: int) -> ScaledMatrix:
    result = ScaledMatrix.identity(base.dim)
    factor = base
    while n > 0:
        if n & 1:
            result = factor.matmul(result)
        factor = factor.matmul(factor)
        n >>= 1
    return result


def matrix_log_norms(handle: CocycleHandle, q: BasePoint, times: Sequence[int]) -> np.ndarray:
    """log ||cocycle(q, n)|| for each n in ``times`` (discrete handles).

    Diagonal and scalar families reduce to cumulative sums; the generic path
    walks the product once, reading norms at the requested times.
    """
    times = np.asarray(sorted(int(t) for t in times), dtype=np.int64)
    if len(times) == 0:
        return np.empty(0)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    n_max = int(times[-1])
    gen = handle.generator
    if gen.is_diagonal and gen.kind != "constant":
        logs = _step_log_entries(handle, q, n_max)
        cum = np.vstack([np.zeros(gen.dim), np.cumsum(logs, axis=0)])
        return np.max(cum[times], axis=1)
    if gen.kind == "constant":
        out = np.empty(len(times))
        power = ScaledMatrix.identity(handle.dim)
        prev = 0
        assert gen.matrices is not None
        base = ScaledMatrix.from_matrix(gen.matrices[0])
        for i, n in enumerate(times):
            power = _matrix_power(base, int(n) - prev).matmul(power)
            prev = int(n)
            out[i] = power.log_norm
        return out
    out = np.empty(len(times))
    product = ScaledMatrix.identity(handle.dim)
    pos = 0
    idx = 0
    while idx < len(times) and times[idx] == 0:
        out[idx] = 0.0
        idx += 1
    while idx < len(times):
        target = int(times[idx])
        for mat in _step_matrices(handle, q, pos, target - pos):
            product = product.left_multiply(mat)
        pos = target
        out[idx] = product.log_norm
        idx += 1
    return out


class VectorTrajectory:
    """Streams log ||cocycle(q, n) x|| for n = 0, 1, 2, ... in blocks.

    Keeps per-coordinate log accumulators for diagonal/scalar families and a
    renormalized running vector otherwise, so arbitrarily long trajectories
    neither overflow nor underflow.
    """

    def __init__(self, handle: CocycleHandle, q: BasePoint, x: np.ndarray):
        if not handle.is_discrete:
            raise ValueError("vector trajectories need a discrete handle")
        x = np.asarray(x, dtype=float)
        if x.shape != (handle.dim,):
            raise ValueError(f"direction has shape {x.shape}, expected ({handle.dim},)")
        self.handle = handle
        self.q = q
        self.position = 0
        xnorm = float(np.linalg.norm(x))
        self._fast = handle.generator.is_diagonal
        if self._fast:
            with np.errstate(divide="ignore"):
                self._coord_logs = np.log(np.abs(x))
        else:
            self._unit = x / xnorm if xnorm > 0 else x
            self._logmag = float(np.log(xnorm)) if xnorm > 0 else float("-inf")

    def current_log_norm(self) -> float:
        if self._fast:
            m = np.max(self._coord_logs)
            if m == float("-inf"):
                return m
            return float(m + 0.5 * np.log(np.sum(np.exp(2.0 * (self._coord_logs - m)))))
        return self._logmag

    def next_block(self, size: int) -> np.ndarray:
        """log norms for the next ``size`` steps (positions pos+1 .. pos+size)."""
        if self._fast:
            logs = _step_log_entries(self.handle, self.q, self.position + size)[self.position :]
            cums = self._coord_logs + np.cumsum(logs, axis=0)
            self._coord_logs = cums[-1]
            self.position += size
            m = np.max(cums, axis=1)
            with np.errstate(invalid="ignore"):
                out = m + 0.5 * np.log(np.sum(np.exp(2.0 * (cums - m[:, None])), axis=1))
            return np.where(np.isfinite(m), out, float("-inf"))
        out = np.empty(size)
        mats = _step_matrices(self.handle, self.q, self.position, size)
        unit, logmag = self._unit, self._logmag
        for i in range(size):
            image = mats[i] @ unit
            nrm = float(np.linalg.norm(image))
            if nrm == 0.0 or logmag == float("-inf"):
                unit, logmag = np.zeros_like(unit), float("-inf")
            else:
                unit = image / nrm
                logmag = logmag + float(np.log(nrm))
            out[i] = logmag
        self._unit, self._logmag = unit, logmag
        self.position += size
        return out


def apply_to_vector(handle: CocycleHandle, q: BasePoint, time, x: np.ndarray) -> tuple[np.ndarray, float]:
    """cocycle(q, time) @ x as (unit vector, log magnitude)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (handle.dim,):
        raise ValueError(f"direction has shape {x.shape}, expected ({handle.dim},)")
    if float(np.linalg.norm(x)) == 0.0:
        return np.zeros_like(x), float("-inf")
    if handle.is_discrete:
        n = int(time)
        xnorm = float(np.linalg.norm(x))
        unit, logmag = x / xnorm, float(np.log(xnorm))
        pos = 0
        while pos < n:
            block = min(4096, n - pos)
            for mat in _step_matrices(handle, q, pos, block):
                image = mat @ unit
                nrm = float(np.linalg.norm(image))
                if nrm == 0.0:
                    return np.zeros_like(x), float("-inf")
                unit = image / nrm
                logmag += float(np.log(nrm))
            pos += block
        return unit, logmag
    return _integrate_vector(handle, q, float(time), x)


# --- continuous-time propagators -----------------------------------------


def _field_on_time(handle: CocycleHandle, q: BasePoint) -> Callable[[float], np.ndarray]:
    """G(flow(q, s)) as a function of elapsed time s."""
    system = handle.system
    assert isinstance(system, Suspension)
    gen = handle.generator
    if gen.kind == "constant":
        assert gen.matrices is not None
        g0 = gen.matrices[0]
        return lambda s: g0
    point = system._check_point(q)  # type: ignore[arg-type]
    if gen.kind == "closed_form":
        base = system.base
        assert isinstance(base, CircleRotation)
        x0 = base._check_point(point.base).x
        speed = base.angle / system.roof
        h0 = point.height
        return lambda s: gen.matrix_at_coordinate((x0 + (h0 + s) * speed) % 1.0)
    assert gen.matrices is not None and isinstance(system.base, _ShiftSystem)
    roof, h0 = system.roof, point.height
    shift = system.base
    base_point = point.base

    def field(s: float) -> np.ndarray:
        k = int(math.floor((h0 + s) / roof))
        symbols = shift.orbit_symbols(base_point, k + 1)  # type: ignore[arg-type]
        return gen.matrices[int(symbols[k])]

    return field


def _integration_grid(t: float, h: float) -> tuple[int, float]:
    if t < 0:
        raise ValueError("time must be nonnegative")
    n = max(1, round(t / h))
    return n, t / n


def evaluate_propagator(handle: CocycleHandle, q: BasePoint, t: float) -> ScaledMatrix:
    """Solution operator of U' = G(flow(q, s)) U over [0, t]; t = 0 gives Id."""
    if handle.is_discrete:
        raise ValueError("evaluate_propagator needs a continuous handle")
    if t == 0:
        return ScaledMatrix.identity(handle.dim)
    values, _ = propagator_at_times(handle, q, [t])
    return values[0]


def propagator_at_times(handle: CocycleHandle, q: BasePoint, ts: Sequence[float]) -> tuple[list[ScaledMatrix], np.ndarray]:
    """Propagators at several times from one integration pass.

    Returns (matrices, actual_times); the actual times are the nearest grid
    multiples of the requested ones.
    """
    if handle.is_discrete:
        raise ValueError("propagators need a continuous handle")
    ts = sorted(float(t) for t in ts)
    t_max = ts[-1]
    if t_max == 0.0:
        return [ScaledMatrix.identity(handle.dim) for _ in ts], np.zeros(len(ts))
    n, dt = _integration_grid(t_max, handle.step_h)
    targets = [max(0, round(t / dt)) for t in ts]
    field = _field_on_time(handle, q)
    u = np.eye(handle.dim)
    logscale = 0.0
    out: list[ScaledMatrix] = []
    actual: list[float] = []
    tptr = 0
    while tptr < len(targets) and targets[tptr] == 0:
        out.append(ScaledMatrix.identity(handle.dim))
        actual.append(0.0)
        tptr += 1
    for k in range(n):
        u = _rk4_step(field, u, k * dt, dt)
        nrm = float(np.linalg.norm(u))  # Frobenius trigger; exact norms read at checkpoints
        if not np.isfinite(nrm):
            raise FloatingPointError("non-finite propagator state; generator field may be unbounded")
        if nrm < 0.5 or nrm > 2.0:
            if nrm == 0.0:
                u, logscale = np.zeros_like(u), float("-inf")
            else:
                u = u / nrm
                logscale += float(np.log(nrm))
        while tptr < len(targets) and targets[tptr] == k + 1:
            out.append(_as_scaled(u, logscale))
            actual.append((k + 1) * dt)
            tptr += 1
    while tptr < len(targets):  # targets rounded past the last step
        out.append(_as_scaled(u, logscale))
        actual.append(n * dt)
        tptr += 1
    return out, np.asarray(actual)


def _as_scaled(u: np.ndarray, logscale: float) -> ScaledMatrix:
    base = ScaledMatrix.from_matrix(u)
    return ScaledMatrix(base.unit, base.logscale + logscale)


def _rk4_step(field: Callable[[float], np.ndarray], u: np.ndarray, s: float, h: float) -> np.ndarray:
    g0 = field(s)
    gm = field(s + 0.5 * h)
    g1 = field(s + h)
    k1 = g0 @ u
    k2 = gm @ (u + 0.5 * h * k1)
    k3 = gm @ (u + 0.5 * h * k2)
    k4 = g1 @ (u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate_vector(handle: CocycleHandle, q: BasePoint, t: float, x: np.ndarray) -> tuple[np.ndarray, float]:
    xnorm = float(np.linalg.norm(x))
    unit, logmag = x / xnorm, float(np.log(xnorm))
    if t == 0:
        return unit, logmag
    n, dt = _integration_grid(t, handle.step_h)
    field = _field_on_time(handle, q)
    for k in range(n):
        unit = _rk4_step(field, unit, k * dt, dt)
        nrm = float(np.linalg.norm(unit))
        if nrm == 0.0:
            return np.zeros_like(unit), float("-inf")
        unit = unit / nrm
        logmag += float(np.log(nrm))
    return unit, logmag


def vector_log_norms_continuous(handle: CocycleHandle, q: BasePoint, x: np.ndarray, t_max: float) -> tuple[np.ndarray, float]:
    """log ||cocycle(q, s) x|| on the full integrator grid over [0, t_max].

    Returns (values at s = 0, dt, 2 dt, ..., t_max; the grid step dt).
    """
    x = np.asarray(x, dtype=float)
    xnorm = float(np.linalg.norm(x))
    if xnorm == 0.0:
        raise ValueError("direction must be nonzero")
    n, dt = _integration_grid(t_max, handle.step_h)
    field = _field_on_time(handle, q)
    unit, logmag = x / xnorm, float(np.log(xnorm))
    out = np.empty(n + 1)
    out[0] = logmag
    for k in range(n):
        unit = _rk4_step(field, unit, k * dt, dt)
        nrm = float(np.linalg.norm(unit))
        if nrm == 0.0:
            out[k + 1 :] = float("-inf")
            return out, dt
        unit = unit / nrm
        logmag += float(np.log(nrm))
        out[k + 1] = logmag
    return out, dt


# --- law verification and bounds ------------------------------------------


def verify_cocycle_law(handle: CocycleHandle, samples: int, seed: int) -> float:
    """Max relative residual of cocycle(q, n+m) = cocycle(f^m q, n) cocycle(q, m)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        q = handle.system.sample_point(rng)
        if handle.is_discrete:
            n = int(rng.integers(0, 24))
            m = int(rng.integers(0, 24))
            whole = evaluate_product(handle, q, n + m)
            first = evaluate_product(handle, q, m)
            from .base import step_n

            second = evaluate_product(handle, step_n(handle.system, q, m), n)
        else:
            s = float(rng.uniform(0.0, 2.5))
            t = float(rng.uniform(0.0, 2.5))
            whole = evaluate_propagator(handle, q, s + t)
            first = evaluate_propagator(handle, q, s)
            assert isinstance(handle.system, Suspension)
            second = evaluate_propagator(handle, handle.system.flow(q, s), t)  # type: ignore[arg-type]
        worst = max(worst, relative_difference(whole, second.matmul(first)))
    return worst


def fit_exponential_bound(handle: CocycleHandle) -> tuple[float, float]:
    """(K, omega) with ||cocycle(q, t)|| <= K exp(omega t), from the field's
    logarithmic norm: the symmetric part's top eigenvalue bounds the growth
    rate pointwise, so K = 1 and omega = max(0, sup mu2(G))."""
    if handle.is_discrete:
        raise ValueError("exponential bounds are fitted for continuous handles")
    gen = handle.generator
    if gen.matrices is not None:
        candidates = gen.matrices
    else:
        xs = np.arange(_COORD_GRID) / _COORD_GRID
        candidates = gen.matrices_at_coordinates(xs)
    mu2 = max(float(np.max(np.linalg.eigvalsh(0.5 * (g + g.T)))) for g in candidates)
    return 1.0, max(0.0, mu2 + 1e-9)
