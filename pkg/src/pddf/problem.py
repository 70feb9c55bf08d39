"""Coordinate partially separable problems and sub-function evaluation accounting.

A problem is ``min_{x in X} sum_j f_j(x[S_j])`` where every ``f_j`` is a
black box that only sees the coordinates in its block ``S_j``.  All solvers
in the package pay for sub-function calls through :func:`evaluate_sub`, so
an :class:`EvalCounter` always equals the number of oracle invocations.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "UsageError",
    "EvaluationError",
    "SubFunction",
    "Unbounded",
    "Box",
    "CustomRegion",
    "SeparableProblem",
    "EvalCounter",
    "evaluate_sub",
    "evaluate_full",
    "project",
    "coverage_counts",
    "affected_blocks",
]

Vector = NDArray[np.float64]


class UsageError(ValueError):
    """Invalid arguments or problem definition."""


class EvaluationError(RuntimeError):
    """An oracle produced an unusable value where one is mandatory."""


def _index_set(indices: ArrayLike, n: Optional[int] = None) -> NDArray[np.intp]:
    idx = np.asarray(indices, dtype=np.intp).ravel()
    if idx.size == 0:
        raise UsageError("index set must be nonempty")
    if np.any(np.diff(idx) <= 0):
        raise UsageError(f"index set must be strictly increasing: {idx.tolist()}")
    if idx[0] < 0 or (n is not None and idx[-1] >= n):
        raise UsageError(f"index set {idx.tolist()} out of range for n={n}")
    idx.setflags(write=False)
    return idx


@dataclass(frozen=True)
class SubFunction:
    """One term ``f_j`` of the sum, acting on ``x[block]``.

    ``gradient`` is only consulted by tests and benchmark diagnostics; no
    solver ever calls it.
    """

    block: NDArray[np.intp]
    oracle: Callable[[Vector], float]
    gradient: Optional[Callable[[Vector], Vector]] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "block", _index_set(self.block))

    @property
    def size(self) -> int:
        return int(self.block.size)


class Unbounded:
    """The whole space; projection is the identity."""

    kind = "unbounded"

    def project(self, v: ArrayLike) -> Vector:
        return np.array(v, dtype=float)

    def contains(self, v: ArrayLike) -> bool:
        return True

    def bounds(self, n: int):
        return None

    def __repr__(self):
        return "Unbounded()"


class Box:
    """Axis-aligned box ``lower <= x <= upper`` (infinite entries allowed)."""

    kind = "box"

    def __init__(self, lower: ArrayLike, upper: ArrayLike):
        lower = np.array(lower, dtype=float).ravel()
        upper = np.array(upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise UsageError("box bounds must have the same length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise UsageError("box bounds must not be NaN")
        if np.any(lower > upper):
            raise UsageError("box requires lower <= upper componentwise")
        lower.setflags(write=False)
        upper.setflags(write=False)
        self.lower = lower
        self.upper = upper

    def project(self, v: ArrayLike) -> Vector:
        return np.clip(np.asarray(v, dtype=float), self.lower, self.upper)

    def contains(self, v: ArrayLike) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lower) and np.all(v <= self.upper))

    def bounds(self, n: int):
        if self.lower.size != n:
            raise UsageError(f"box has dimension {self.lower.size}, problem has {n}")
        return self.lower, self.upper

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class CustomRegion:
    """Convex set given only through its Euclidean projection.

    Convexity and exactness of ``projection`` are the caller's
    responsibility; :meth:`spot_check` probes idempotence and
    nonexpansiveness on random pairs.
    """

    kind = "custom"

    def __init__(self, projection: Callable[[Vector], Vector]):
        self.projection = projection

    def project(self, v: ArrayLike) -> Vector:
        return np.asarray(self.projection(np.array(v, dtype=float)), dtype=float)

    def contains(self, v: ArrayLike, atol: float = 1e-12) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.allclose(self.project(v), v, rtol=0.0, atol=atol))

    def bounds(self, n: int):
        return None

    def spot_check(self, n: int, samples: int = 100, seed: int = 0, atol: float = 1e-10) -> bool:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            u, v = rng.normal(scale=3.0, size=(2, n))
            pu, pv = self.project(u), self.project(v)
            if not np.allclose(self.project(pu), pu, rtol=0.0, atol=atol):
                return False
            if np.linalg.norm(pu - pv) > np.linalg.norm(u - v) + atol:
                return False
        return True

    def __repr__(self):
        return f"CustomRegion({self.projection!r})"


def project(region, v: ArrayLike) -> Vector:
    """Euclidean projection of ``v`` onto ``region``."""
    return region.project(v)


class EvalCounter:
    """Per-sub-function evaluation counts.

    Increments are guarded by a lock so one counter can be shared by worker
    threads; per-worker counters combined with :meth:`merge` give the same
    totals.
    """

    def __init__(self, m: int):
        self.per_sub = [0] * m
        self.total = 0
        self._lock = threading.Lock()

    @property
    def m(self) -> int:
        return len(self.per_sub)

    def add(self, j: int, k: int = 1) -> None:
        with self._lock:
            self.per_sub[j] += k
            self.total += k

    def merge(self, other: "EvalCounter") -> "EvalCounter":
        if other.m != self.m:
            raise UsageError("cannot merge counters of different length")
        with self._lock:
            for j, k in enumerate(other.per_sub):
                self.per_sub[j] += k
            self.total += other.total
        return self

    def snapshot(self) -> "EvalCounter":
        c = EvalCounter(self.m)
        with self._lock:
            c.per_sub = list(self.per_sub)
            c.total = self.total
        return c

    def __repr__(self):
        return f"EvalCounter(total={self.total}, per_sub={self.per_sub})"


@dataclass(frozen=True)
class SeparableProblem:
    """``min sum_j f_j(x[S_j])`` over a projectable convex region.

    Immutable after construction; block metadata (coverage counts, positions
    of each coordinate inside each block) is precomputed here.
    """

    n: int
    subs: tuple
    region: object = field(default_factory=Unbounded)
    x0: Vector = None
    name: str = "problem"
    eval_delay: float = 0.0
    fstar: Optional[float] = None
    minimizer: Optional[Vector] = None

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise UsageError("problem dimension must be positive")
        subs = tuple(self.subs)
        if not subs:
            raise UsageError("problem needs at least one sub-function")
        for s in subs:
            if s.block[-1] >= n:
                raise UsageError(f"block {s.block.tolist()} exceeds dimension {n}")
        cov = np.zeros(n, dtype=np.intp)
        for s in subs:
            cov[s.block] += 1
        if np.any(cov == 0):
            missing = np.flatnonzero(cov == 0).tolist()
            raise UsageError(f"variables {missing} belong to no block")
        cov.setflags(write=False)
        if isinstance(self.region, Box):
            self.region.bounds(n)
        x0 = np.zeros(n) if self.x0 is None else np.array(self.x0, dtype=float).ravel()
        if x0.size != n:
            raise UsageError(f"x0 has length {x0.size}, expected {n}")
        if not np.all(np.isfinite(x0)):
            raise UsageError("x0 must be finite")
        if not np.allclose(self.region.project(x0), x0, rtol=0.0, atol=1e-12):
            raise UsageError("x0 is not feasible")
        x0.setflags(write=False)
        affected = [[] for _ in range(n)]
        for j, s in enumerate(subs):
            for i in s.block:
                affected[i].append(j)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "subs", subs)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "_coverage", cov)
        object.__setattr__(self, "_affected", tuple(tuple(a) for a in affected))

    @property
    def m(self) -> int:
        return len(self.subs)

    @property
    def blocks(self) -> list:
        return [s.block for s in self.subs]

    @property
    def has_gradients(self) -> bool:
        return all(s.gradient is not None for s in self.subs)

    def new_counter(self) -> EvalCounter:
        return EvalCounter(self.m)

    def with_delay(self, seconds: float) -> "SeparableProblem":
        """Copy of the problem that sleeps ``seconds`` on every sub-evaluation."""
        return replace(self, eval_delay=float(seconds))

    def with_start(self, x0: ArrayLike) -> "SeparableProblem":
        return replace(self, x0=np.array(x0, dtype=float))

    def gradient(self, x: ArrayLike) -> Vector:
        """Full gradient from the test gradients (not counted, not for solvers)."""
        if not self.has_gradients:
            raise UsageError("some sub-functions have no test gradient")
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        for s in self.subs:
            g[s.block] += s.gradient(x[s.block])
        return g

    def value(self, x: ArrayLike) -> float:
        """Uncounted objective value, for diagnostics only."""
        x = np.asarray(x, dtype=float)
        return float(sum(float(s.oracle(x[s.block])) for s in self.subs))


def evaluate_sub(p: SeparableProblem, j: int, y: ArrayLike, c: EvalCounter) -> float:
    """Return ``f_j(y)`` and charge exactly one evaluation to ``c``.

    Non-finite outputs are returned as they are; solvers treat them as a
    failed sufficient-decrease test.
    """
    if not 0 <= j < p.m:
        raise UsageError(f"block index {j} out of range [0, {p.m})")
    if p.eval_delay > 0.0:
        time.sleep(p.eval_delay)
    value = float(p.subs[j].oracle(np.asarray(y, dtype=float)))
    c.add(j)
    return value


def evaluate_full(p: SeparableProblem, x: ArrayLike, c: EvalCounter) -> float:
    """Return ``sum_j f_j(x[S_j])`` at a cost of exactly ``m`` evaluations."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise UsageError(f"x has shape {x.shape}, expected ({p.n},)")
    total = 0.0
    for j, s in enumerate(p.subs):
        total += evaluate_sub(p, j, x[s.block], c)
    return total


def coverage_counts(p: SeparableProblem) -> NDArray[np.intp]:
    """Number of blocks containing each coordinate."""
    return p._coverage


def affected_blocks(p: SeparableProblem, i: int) -> list:
    """Sorted ids of the blocks whose index set contains coordinate ``i``."""
    if not 0 <= i < p.n:
        raise UsageError(f"coordinate {i} out of range [0, {p.n})")
    return list(p._affected[i])


def is_finite(value: float) -> bool:
    return math.isfinite(value)


def make_problem(
    blocks: Sequence[ArrayLike],
    oracles: Sequence[Callable],
    n: Optional[int] = None,
    region=None,
    x0: Optional[ArrayLike] = None,
    gradients: Optional[Sequence[Optional[Callable]]] = None,
    name: str = "problem",
) -> SeparableProblem:
    """Convenience constructor from parallel lists of blocks and oracles."""
    if len(blocks) != len(oracles):
        raise UsageError("blocks and oracles must have the same length")
    if gradients is None:
        gradients = [None] * len(blocks)
    subs = tuple(SubFunction(np.asarray(b), f, g) for b, f, g in zip(blocks, oracles, gradients))
    if n is None:
        n = 1 + max(int(np.max(b)) for b in blocks)
    return SeparableProblem(n=n, subs=subs, region=region or Unbounded(), x0=x0, name=name)
