"""Compact base systems: shifts, circle maps, and suspension semi-flows.

Each system carries its ergodic measure (Bernoulli weights, a stationary
Markov chain, or Lebesgue), supports seeded measure-distributed sampling,
single steps / continuous flow steps, exact membership tests for cylinders
and interval unions, and periodic-orbit enumeration where that is finite.

Shift points are a finite symbol window plus a per-point tail seed; stepping
past the window extends it deterministically from the measure, so orbits are
reproducible and the doubling map does not collapse onto dyadic floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

_EXTEND_BLOCK = 64
_MASK64 = (1 << 64) - 1


def _splitmix64(seed: int, index: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _hash_uniform(seed: int, index: int) -> float:
    """Deterministic uniform in [0, 1) addressable by absolute index."""
    return _splitmix64(seed, index) / 2.0**64


def _hash_uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start, start + count, dtype=np.uint64) + np.uint64(1)
    z = (np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15) * idx)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return z.astype(np.float64) / 2.0**64


@dataclass(frozen=True)
class SymbolicPoint:
    """A one-sided symbol sequence: materialized window + deterministic tail.

    ``window[0]`` is the current symbol; ``abs_index`` is its position in the
    original sequence, which keys the tail stream so that stepping commutes
    with extension.
    """

    window: tuple[int, ...]
    abs_index: int
    tail_seed: int


@dataclass(frozen=True)
class CirclePoint:
    x: float


@dataclass(frozen=True)
class FlowPoint:
    base: "SymbolicPoint | CirclePoint"
    height: float


BasePoint = SymbolicPoint | CirclePoint | FlowPoint


class BaseSystem:
    """Common surface for the concrete base systems."""

    kind: str

    def sample_point(self, rng: np.random.Generator) -> BasePoint:
        raise NotImplementedError

    def step(self, q: BasePoint) -> BasePoint:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class _ShiftSystem(BaseSystem):
    """Shared machinery for full shifts, SFTs, and the doubling map."""

    alphabet: int

    def _first_symbol_weights(self) -> np.ndarray:
        raise NotImplementedError

    def _next_symbol(self, prev: int, u: float) -> int:
        raise NotImplementedError

    def _check_point(self, q: BasePoint) -> SymbolicPoint:
        if not isinstance(q, SymbolicPoint):
            raise ValueError(f"point {q!r} is not valid for a {self.kind} system")
        return q

    def sample_point(self, rng: np.random.Generator) -> SymbolicPoint:
        tail_seed = int(rng.integers(0, 2**63))
        first = int(np.searchsorted(np.cumsum(self._first_symbol_weights()), rng.random(), side="right"))
        point = SymbolicPoint((first,), 0, tail_seed)
        return self.extend(point, _EXTEND_BLOCK)

    def point_from_word(self, word: Sequence[int], tail_seed: int) -> SymbolicPoint:
        word = tuple(int(s) for s in word)
        if not word:
            raise ValueError("word must be nonempty")
        for s in word:
            if not 0 <= s < self.alphabet:
                raise ValueError(f"symbol {s} outside alphabet of size {self.alphabet}")
        for a, b in zip(word, word[1:]):
            if not self.transition_allowed(a, b):
                raise ValueError(f"transition {a}->{b} not admissible")
        return SymbolicPoint(word, 0, int(tail_seed))

    def transition_allowed(self, a: int, b: int) -> bool:
        return True

    def extend(self, q: SymbolicPoint, length: int) -> SymbolicPoint:
        """Materialize at least ``length`` symbols from the current position."""
        q = self._check_point(q)
        if len(q.window) >= length:
            return q
        need = max(length - len(q.window), _EXTEND_BLOCK)
        start = q.abs_index + len(q.window)
        symbols = list(q.window)
        prev = symbols[-1]
        for j in range(need):
            u = _hash_uniform(q.tail_seed, start + j)
            prev = self._next_symbol(prev, u)
            symbols.append(prev)
        return replace(q, window=tuple(symbols))

    def step(self, q: SymbolicPoint) -> SymbolicPoint:
        q = self.extend(q, 2)
        return SymbolicPoint(q.window[1:], q.abs_index + 1, q.tail_seed)

    def orbit_symbols(self, q: SymbolicPoint, n: int) -> np.ndarray:
        """First ``n`` symbols of the orbit of q (q itself contributes symbol 0)."""
        q = self.extend(q, n)
        return np.asarray(q.window[:n], dtype=np.int64)

    def periodic_orbits(self, max_period: int) -> list[tuple[tuple[int, ...], int]]:
        """All primitive periodic words up to max_period, one per cyclic class."""
        orbits: list[tuple[tuple[int, ...], int]] = []
        seen: set[tuple[int, ...]] = set()
        for period in range(1, max_period + 1):
            for word in _admissible_cyclic_words(self, period):
                if _primitive_period(word) != period:
                    continue
                canonical = _min_rotation(word)
                if canonical in seen:
                    continue
                seen.add(canonical)
                orbits.append((canonical, period))
        return orbits


def _admissible_cyclic_words(system: _ShiftSystem, length: int):
    word = [0] * length

    def rec(pos: int):
        if pos == length:
            if system.transition_allowed(word[-1], word[0]):
                yield tuple(word)
            return
        for s in range(system.alphabet):
            if pos == 0 or system.transition_allowed(word[pos - 1], s):
                word[pos] = s
                yield from rec(pos + 1)

    yield from rec(0)


def _primitive_period(word: tuple[int, ...]) -> int:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word == word[:d] * (n // d):
            return d
    return n


def _min_rotation(word: tuple[int, ...]) -> tuple[int, ...]:
    return min(word[i:] + word[:i] for i in range(len(word)))


@dataclass(frozen=True)
class FullShift(_ShiftSystem):
    """Full shift on ``alphabet`` symbols with a Bernoulli measure."""

    alphabet: int
    weights: tuple[float, ...]
    kind: str = field(default="full_shift", init=False)

    def __post_init__(self):
        if self.alphabet < 2:
            raise ValueError("alphabet size must be >= 2")
        w = np.asarray(self.weights, dtype=float)
        if len(w) != self.alphabet or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("Bernoulli weights must be nonnegative and sum to 1")

    def _first_symbol_weights(self) -> np.ndarray:
        return np.asarray(self.weights)

    def _next_symbol(self, prev: int, u: float) -> int:
        return int(np.searchsorted(np.cumsum(self.weights), u, side="right"))

    def extend(self, q: SymbolicPoint, length: int) -> SymbolicPoint:
        # i.i.d. tail symbols are index-addressable, so extension is vectorized
        q = self._check_point(q)
        if len(q.window) >= length:
            return q
        need = max(length - len(q.window), _EXTEND_BLOCK)
        start = q.abs_index + len(q.window)
        us = _hash_uniform_block(q.tail_seed, start, need)
        tail = np.searchsorted(np.cumsum(self.weights), us, side="right")
        return replace(q, window=q.window + tuple(int(s) for s in tail))

    def orbit_symbols(self, q: SymbolicPoint, n: int) -> np.ndarray:
        q = self._check_point(q)
        have = len(q.window)
        if have >= n:
            return np.asarray(q.window[:n], dtype=np.int64)
        start = q.abs_index + have
        us = _hash_uniform_block(q.tail_seed, start, n - have)
        tail = np.searchsorted(np.cumsum(self.weights), us, side="right")
        return np.concatenate([np.asarray(q.window, dtype=np.int64), tail.astype(np.int64)])

    def describe(self) -> dict:
        return {"kind": self.kind, "alphabet": self.alphabet, "weights": list(self.weights)}


@dataclass(frozen=True)
class SubshiftOfFiniteType(_ShiftSystem):
    """SFT given by a 0/1 transition matrix, with a stationary Markov measure.

    ``markov`` is the row-stochastic transition-probability matrix; it must
    put mass only on allowed transitions.  Omitted, it defaults to the
    row-normalized adjacency matrix.
    """

    adjacency: tuple[tuple[int, ...], ...]
    markov: tuple[tuple[float, ...], ...]
    kind: str = field(default="sft", init=False)

    @staticmethod
    def from_matrix(adjacency, markov=None) -> "SubshiftOfFiniteType":
        adj = np.asarray(adjacency, dtype=int)
        if markov is None:
            rows = adj / np.maximum(adj.sum(axis=1, keepdims=True), 1)
        else:
            rows = np.asarray(markov, dtype=float)
        return SubshiftOfFiniteType(
            adjacency=tuple(tuple(int(v) for v in row) for row in adj),
            markov=tuple(tuple(float(v) for v in row) for row in rows),
        )

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=int)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("transition matrix entries must be 0 or 1")
        if np.any(adj.sum(axis=1) == 0) or np.any(adj.sum(axis=0) == 0):
            raise ValueError("every row and column of the transition matrix needs a 1")
        mk = np.asarray(self.markov, dtype=float)
        if mk.shape != adj.shape or np.any(mk < 0):
            raise ValueError("Markov rows must be nonnegative and match the adjacency shape")
        if np.any(np.abs(mk.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("each Markov row must sum to 1")
        if np.any((mk > 0) & (adj == 0)):
            raise ValueError("Markov mass on a forbidden transition")

    @property
    def alphabet(self) -> int:
        return len(self.adjacency)

    def transition_allowed(self, a: int, b: int) -> bool:
        return self.adjacency[a][b] == 1

    def stationary_distribution(self) -> np.ndarray:
        mk = np.asarray(self.markov, dtype=float)
        vals, vecs = np.linalg.eig(mk.T)
        i = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, i])
        pi = pi / pi.sum()
        if np.any(pi < -1e-12):
            raise ValueError("Markov chain has no positive stationary distribution")
        return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()

    def _first_symbol_weights(self) -> np.ndarray:
        return self.stationary_distribution()

    def _next_symbol(self, prev: int, u: float) -> int:
        return int(np.searchsorted(np.cumsum(self.markov[prev]), u, side="right"))

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "adjacency": [list(r) for r in self.adjacency],
            "markov": [list(r) for r in self.markov],
        }


@dataclass(frozen=True)
class DoublingMap(_ShiftSystem):
    """x -> 2x mod 1 with Lebesgue measure, realized as the binary shift.

    Points are binary digit streams; the real coordinate is read off the
    leading 53 digits.  Iterating floats directly would collapse onto 0
    after ~53 steps, so the symbolic representation is the honest one.
    """

    kind: str = field(default="doubling", init=False)
    alphabet: int = field(default=2, init=False)

    def _first_symbol_weights(self) -> np.ndarray:
        return np.array([0.5, 0.5])

    def _next_symbol(self, prev: int, u: float) -> int:
        return 0 if u < 0.5 else 1

    def extend(self, q: SymbolicPoint, length: int) -> SymbolicPoint:
        q = self._check_point(q)
        if len(q.window) >= length:
            return q
        need = max(length - len(q.window), _EXTEND_BLOCK)
        us = _hash_uniform_block(q.tail_seed, q.abs_index + len(q.window), need)
        return replace(q, window=q.window + tuple(int(b) for b in (us >= 0.5)))

    def orbit_symbols(self, q: SymbolicPoint, n: int) -> np.ndarray:
        q = self._check_point(q)
        have = len(q.window)
        if have >= n:
            return np.asarray(q.window[:n], dtype=np.int64)
        us = _hash_uniform_block(q.tail_seed, q.abs_index + have, n - have)
        tail = (us >= 0.5).astype(np.int64)
        return np.concatenate([np.asarray(q.window, dtype=np.int64), tail])

    def coordinate(self, q: SymbolicPoint) -> float:
        bits = self.orbit_symbols(q, 53)
        return float(np.sum(bits * 0.5 ** np.arange(1, 54)))

    def orbit_coordinates(self, q: SymbolicPoint, n: int) -> np.ndarray:
        bits = self.orbit_symbols(q, n + 53).astype(float)
        w = 0.5 ** np.arange(1, 54)
        return np.convolve(bits, w, mode="full")[52 : 52 + n]

    def point_from_coordinate(self, x: float, tail_seed: int = 0) -> SymbolicPoint:
        if not 0.0 <= x < 1.0:
            raise ValueError("coordinate must lie in [0, 1)")
        bits = []
        for _ in range(53):
            x *= 2.0
            b = int(x)
            bits.append(b)
            x -= b
        return SymbolicPoint(tuple(bits), 0, int(tail_seed))

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class CircleRotation(BaseSystem):
    """x -> x + angle mod 1 with Lebesgue measure.

    ``angle_exact`` (a Fraction) is kept when the angle was given as a
    decimal string, so rational rotations can enumerate a periodic orbit.
    """

    angle: float
    angle_exact: Fraction | None = None
    kind: str = field(default="rotation", init=False)

    def __post_init__(self):
        if not 0.0 <= self.angle < 1.0:
            raise ValueError("rotation angle must lie in [0, 1)")

    @staticmethod
    def from_string(angle: str) -> "CircleRotation":
        frac = Fraction(angle) % 1
        return CircleRotation(float(frac), angle_exact=frac)

    def sample_point(self, rng: np.random.Generator) -> CirclePoint:
        return CirclePoint(float(rng.random()))

    def _check_point(self, q: BasePoint) -> CirclePoint:
        if not isinstance(q, CirclePoint):
            raise ValueError(f"point {q!r} is not valid for a rotation")
        return q

    def step(self, q: CirclePoint) -> CirclePoint:
        q = self._check_point(q)
        return CirclePoint((q.x + self.angle) % 1.0)

    def orbit_coordinates(self, q: CirclePoint, n: int) -> np.ndarray:
        q = self._check_point(q)
        return (q.x + self.angle * np.arange(n)) % 1.0

    def periodic_orbits(self, max_period: int) -> list[tuple[tuple[float, ...], int]]:
        if self.angle_exact is None:
            return []
        den = self.angle_exact.denominator
        if den > max_period:
            return []
        orbit = tuple(float((k * self.angle_exact) % 1) for k in range(den))
        return [(orbit, den)]

    def describe(self) -> dict:
        d = {"kind": self.kind, "angle": self.angle}
        if self.angle_exact is not None:
            d["angle"] = str(self.angle_exact)
        return d


@dataclass(frozen=True)
class Suspension(BaseSystem):
    """Constant-roof suspension semi-flow over a discrete base system.

    Points are (base point, height in [0, roof)); the flow raises the height
    at unit speed and applies the base map at each roof crossing, so the
    semigroup law is exact bookkeeping.
    """

    base: BaseSystem
    roof: float = 1.0
    kind: str = field(default="suspension", init=False)

    def __post_init__(self):
        if not self.roof > 0.0:
            raise ValueError("roof must be bounded away from 0")
        if isinstance(self.base, Suspension):
            raise ValueError("cannot suspend a suspension")

    def sample_point(self, rng: np.random.Generator) -> FlowPoint:
        return FlowPoint(self.base.sample_point(rng), float(rng.random()) * self.roof)

    def _check_point(self, q: BasePoint) -> FlowPoint:
        if not isinstance(q, FlowPoint):
            raise ValueError(f"point {q!r} is not valid for a suspension")
        if not 0.0 <= q.height < self.roof:
            raise ValueError("suspension height outside [0, roof)")
        return q

    def step(self, q: FlowPoint) -> FlowPoint:
        return self.flow(q, self.roof)

    def flow(self, q: FlowPoint, t: float) -> FlowPoint:
        if t < 0:
            raise ValueError("flow time must be nonnegative")
        q = self._check_point(q)
        total = q.height + t
        crossings = int(math.floor(total / self.roof))
        height = total - crossings * self.roof
        if height >= self.roof:  # guard the floor against rounding at the roof
            crossings += 1
            height = total - crossings * self.roof
        base = q.base
        for _ in range(crossings):
            base = self.base.step(base)
        return FlowPoint(base, height)

    def flow_coordinate(self, q: FlowPoint) -> float:
        """Continuous circle coordinate along the flow (rotation base only)."""
        q = self._check_point(q)
        if not isinstance(self.base, CircleRotation):
            raise ValueError("flow coordinate is only defined over a rotation base")
        return (q.base.x + q.height * self.base.angle / self.roof) % 1.0

    def describe(self) -> dict:
        return {"kind": self.kind, "base": self.base.describe(), "roof": self.roof}


@dataclass(frozen=True)
class MeasurableSet:
    """A cylinder, interval union, whole space, or periodic-word exclusion.

    ``measure`` is exact for cylinders (product / Markov chain weights) and
    interval unions (Lebesgue); exclusion sets of countably many points have
    measure exactly 1 for the atomless measures used here.
    """

    system: BaseSystem
    set_kind: str
    word: tuple[int, ...] = ()
    intervals: tuple[tuple[float, float], ...] = ()
    excluded_words: tuple[tuple[int, ...], ...] = ()

    @staticmethod
    def cylinder(system: _ShiftSystem, word: Sequence[int]) -> "MeasurableSet":
        word = tuple(int(s) for s in word)
        if not word:
            raise ValueError("cylinder word must be nonempty")
        for s in word:
            if not 0 <= s < system.alphabet:
                raise ValueError("cylinder symbol outside alphabet")
        return MeasurableSet(system, "cylinder", word=word)

    @staticmethod
    def interval_union(system: BaseSystem, intervals: Sequence[tuple[float, float]]) -> "MeasurableSet":
        ivs = tuple((float(a), float(b)) for a, b in intervals)
        for a, b in ivs:
            if not (0.0 <= a < b <= 1.0):
                raise ValueError("intervals must satisfy 0 <= a < b <= 1")
        return MeasurableSet(system, "intervals", intervals=ivs)

    @staticmethod
    def whole_space(system: BaseSystem) -> "MeasurableSet":
        return MeasurableSet(system, "full")

    @staticmethod
    def exclude_periodic(system: _ShiftSystem, words: Sequence[Sequence[int]]) -> "MeasurableSet":
        ws = tuple(tuple(int(s) for s in w) for w in words)
        return MeasurableSet(system, "exclude_periodic", excluded_words=ws)

    @property
    def measure(self) -> float:
        if self.set_kind == "full" or self.set_kind == "exclude_periodic":
            return 1.0
        if self.set_kind == "intervals":
            return float(sum(b - a for a, b in self.intervals))
        sys = self.system
        if isinstance(sys, FullShift):
            return float(np.prod([sys.weights[s] for s in self.word]))
        if isinstance(sys, DoublingMap):
            return 0.5 ** len(self.word)
        if isinstance(sys, SubshiftOfFiniteType):
            pi = sys.stationary_distribution()
            m = pi[self.word[0]]
            for a, b in zip(self.word, self.word[1:]):
                m *= sys.markov[a][b]
            return float(m)
        raise ValueError(f"no exact measure for {self.set_kind} on {sys.kind}")

    def contains(self, q: BasePoint) -> bool:
        sys = self.system
        if self.set_kind == "full":
            return True
        if self.set_kind == "cylinder":
            assert isinstance(sys, _ShiftSystem)
            window = sys.orbit_symbols(q, len(self.word))
            return tuple(int(s) for s in window) == self.word
        if self.set_kind == "intervals":
            if isinstance(sys, CircleRotation):
                x = sys._check_point(q).x
            elif isinstance(sys, DoublingMap):
                x = sys.coordinate(q)  # type: ignore[arg-type]
            else:
                raise ValueError("interval sets need a circle coordinate")
            return any(a <= x < b for a, b in self.intervals)
        if self.set_kind == "exclude_periodic":
            assert isinstance(sys, _ShiftSystem)
            for w in self.excluded_words:
                check = sys.orbit_symbols(q, 4 * len(w))
                if tuple(check) == (w * 4)[: len(check)]:
                    return False
            return True
        raise ValueError(f"unknown set kind {self.set_kind}")

    def sample_inside(self, rng: np.random.Generator) -> BasePoint:
        """Measure-distributed sample conditioned on membership (exact for
        cylinders and interval unions, rejection for exclusions)."""
        sys = self.system
        if self.set_kind == "cylinder":
            assert isinstance(sys, _ShiftSystem)
            point = sys.point_from_word(self.word, tail_seed=int(rng.integers(0, 2**63)))
            return sys.extend(point, _EXTEND_BLOCK)
        if self.set_kind == "intervals":
            lengths = np.array([b - a for a, b in self.intervals])
            i = int(np.searchsorted(np.cumsum(lengths / lengths.sum()), rng.random(), side="right"))
            a, b = self.intervals[i]
            x = a + float(rng.random()) * (b - a)
            if isinstance(sys, CircleRotation):
                return CirclePoint(x)
            if isinstance(sys, DoublingMap):
                return sys.point_from_coordinate(x, tail_seed=int(rng.integers(0, 2**63)))
            raise ValueError("interval sets need a circle coordinate")
        for _ in range(10_000):
            q = sys.sample_point(rng)
            if self.contains(q):
                return q
        raise RuntimeError("rejection sampling failed to land in the set")


# --- module-level operation surface -------------------------------------


def sample_point(system: BaseSystem, seed: int) -> BasePoint:
    return system.sample_point(np.random.default_rng(seed))


def step(system: BaseSystem, q: BasePoint) -> BasePoint:
    return system.step(q)


def step_n(system: BaseSystem, q: BasePoint, n: int) -> BasePoint:
    for _ in range(n):
        q = system.step(q)
    return q


def flow_step(system: BaseSystem, q: BasePoint, t: float) -> BasePoint:
    if not isinstance(system, Suspension):
        raise ValueError("flow_step needs a semi-flow; promote a map with Suspension(base, roof=1)")
    if t < 0:
        raise ValueError("flow time must be nonnegative")
    return system.flow(q, t)  # type: ignore[arg-type]


def membership(subset: MeasurableSet, q: BasePoint) -> bool:
    return subset.contains(q)


def enumerate_periodic_orbits(system: BaseSystem, max_period: int):
    if isinstance(system, (_ShiftSystem, CircleRotation)):
        return system.periodic_orbits(max_period)
    raise ValueError(f"periodic orbits are not enumerable for {system.kind}")
