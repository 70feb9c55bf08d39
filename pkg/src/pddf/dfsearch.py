"""Derivative-free coordinate search with extrapolation.

One call polls every coordinate once, in ascending order, first along
``+e_i`` and then along ``-e_i``.  A trial step ``a`` is accepted when

    g(w + a d) <= g(w) - gamma * a**2

and an accepted step is expanded geometrically (``a / theta**j``) for as long
as the same test, still measured against ``g(w)`` at the coordinate's start,
keeps holding.  The tentative stepsize of a coordinate becomes the accepted
step on success and is shrunk by ``theta`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .problem import UsageError

__all__ = ["SearchConfig", "SearchOutcome", "df_search", "sufficient_decrease"]


@dataclass(frozen=True)
class SearchConfig:
    """Line-search constants and an optional box on the searched coordinates."""

    gamma: float = 1e-6
    theta: float = 0.5
    max_expansions: int = 50
    lower: Optional[NDArray[np.float64]] = None
    upper: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise UsageError("gamma must be positive")
        if not 0 < self.theta < 1:
            raise UsageError("theta must lie in (0, 1)")
        if int(self.max_expansions) < 1:
            raise UsageError("max_expansions must be at least 1")
        for name in ("lower", "upper"):
            b = getattr(self, name)
            if b is not None:
                object.__setattr__(self, name, np.asarray(b, dtype=float))

    @property
    def bounded(self) -> bool:
        return self.lower is not None or self.upper is not None

    def with_bounds(self, lower, upper) -> "SearchConfig":
        return SearchConfig(self.gamma, self.theta, self.max_expansions, lower, upper)

    def unbounded(self) -> "SearchConfig":
        return SearchConfig(self.gamma, self.theta, self.max_expansions)


@dataclass
class SearchOutcome:
    point: NDArray[np.float64]
    stepsizes: NDArray[np.float64]
    accepted: NDArray[np.float64]
    evals: int
    value: float
    expansions: int = 0
    base_value: float = math.nan


def sufficient_decrease(trial: float, base: float, step: float, gamma: float) -> bool:
    # NaN/inf trial values always fail; equality passes.
    return math.isfinite(trial) and trial <= base - gamma * step * step


def _max_step(w: NDArray, i: int, sign: int, cfg: SearchConfig) -> float:
    if sign > 0:
        return math.inf if cfg.upper is None else float(cfg.upper[i] - w[i])
    return math.inf if cfg.lower is None else float(w[i] - cfg.lower[i])


def _trial(w: NDArray, i: int, value: float, cfg: SearchConfig) -> NDArray:
    t = w.copy()
    # Clip so that w + (u - w) rounding can never leave the box.
    if cfg.lower is not None:
        value = max(value, float(cfg.lower[i]))
    if cfg.upper is not None:
        value = min(value, float(cfg.upper[i]))
    t[i] = value
    return t


def df_search(
    g: Callable[[NDArray[np.float64]], float],
    w: ArrayLike,
    stepsizes: ArrayLike,
    cfg: SearchConfig = SearchConfig(),
    value: Optional[float] = None,
) -> SearchOutcome:
    """Run one coordinate sweep on ``g`` starting from ``w``.

    Parameters
    ----------
    g : callable
        Scalar oracle on the searched vector.
    w : array_like
        Starting point; must lie in the box of ``cfg`` when one is given.
    stepsizes : array_like
        Positive tentative stepsizes, one per coordinate.
    cfg : SearchConfig
    value : float, optional
        Known ``g(w)``; when given, the base evaluation is skipped.

    Returns
    -------
    SearchOutcome
        ``evals`` counts the calls made to ``g`` by this sweep.
    """
    w = np.array(w, dtype=float).ravel()
    alpha = np.array(stepsizes, dtype=float).ravel()
    dim = w.size
    if dim == 0:
        raise UsageError("cannot search an empty vector")
    if alpha.size != dim:
        raise UsageError("one stepsize per coordinate is required")
    if not np.all(alpha > 0):
        raise UsageError("stepsizes must be strictly positive")
    if cfg.lower is not None and np.any(w < cfg.lower):
        raise UsageError("start point violates the lower bound")
    if cfg.upper is not None and np.any(w > cfg.upper):
        raise UsageError("start point violates the upper bound")

    evals = 0
    expansions = 0
    if value is None:
        value = float(g(w.copy()))
        evals += 1
    base_value = value
    gamma, theta = cfg.gamma, cfg.theta
    accepted = np.zeros(dim)
    new_alpha = np.empty(dim)

    for i in range(dim):
        a = alpha[i]
        base = value
        moved = False
        for sign in (1, -1):
            limit = _max_step(w, i, sign, cfg)
            step = min(a, limit)
            if not step > 0:
                continue
            trial = _trial(w, i, w[i] + sign * step, cfg)
            ft = float(g(trial))
            evals += 1
            if not sufficient_decrease(ft, base, step, gamma):
                continue
            best_step, best_val, best_pt = step, ft, trial
            # Greedy extrapolation: stop at the first failing expansion.
            if step == a:
                for j in range(1, int(cfg.max_expansions) + 1):
                    cand = min(a / theta**j, limit)
                    if not cand > best_step:
                        break
                    trial = _trial(w, i, w[i] + sign * cand, cfg)
                    fc = float(g(trial))
                    evals += 1
                    expansions += 1
                    if not sufficient_decrease(fc, base, cand, gamma):
                        break
                    best_step, best_val, best_pt = cand, fc, trial
                    if cand >= limit:
                        break
            w = best_pt
            value = best_val
            accepted[i] = sign * best_step
            new_alpha[i] = best_step
            moved = True
            break
        if not moved:
            new_alpha[i] = theta * a

    return SearchOutcome(
        point=w,
        stepsizes=new_alpha,
        accepted=accepted,
        evals=evals,
        value=value,
        expansions=expansions,
        base_value=base_value,
    )
