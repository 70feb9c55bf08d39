"""Solver settings shared by the library entry points and the command line.

Defaults are the experimental settings of the method: ``gamma=1e-6``,
``theta=0.5``, constant ``xi=1e-2``, ``tau0=1`` growing by 1.1 up to 1e8,
outer stop at step 1e-2 or 100 iterations, 10 minutes of wall clock.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Optional

import yaml

from .baseline import LsConfig
from .dfsearch import SearchConfig
from .pd_solver import PenaltyParams
from .problem import UsageError

__all__ = ["SolverConfig", "load_config", "apply_overrides", "config_keys"]


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 1e-6
    theta: float = 0.5
    xi: float = 1e-2
    xi_schedule: str = "constant"
    tau0: float = 1.0
    tau_growth: float = 1.1
    tau_cap: float = 1e8
    outer_step_tol: float = 1e-2
    max_outer: int = 100
    wall_clock_limit: Optional[float] = 600.0
    workers: int = 1
    max_expansions: int = 50
    # Extensions beyond the published parameter list.
    feas_tol: Optional[float] = 1e-3
    stop_alpha: float = 1e-4
    refine: bool = True
    refine_stop_alpha: float = 1e-4
    refine_structured: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        # Delegate range checks to the component configs.
        self.penalty_params()
        self.search_config()
        self.ls_config()
        self.refine_config()

    def penalty_params(self) -> PenaltyParams:
        return PenaltyParams(
            tau0=self.tau0,
            tau_growth=self.tau_growth,
            tau_cap=self.tau_cap,
            xi=self.xi,
            xi_schedule=self.xi_schedule,
            outer_step_tol=self.outer_step_tol,
            feas_tol=self.feas_tol,
            max_outer=self.max_outer,
            wall_clock_limit=self.wall_clock_limit,
        )

    def search_config(self) -> SearchConfig:
        return SearchConfig(gamma=self.gamma, theta=self.theta, max_expansions=self.max_expansions)

    def ls_config(self) -> LsConfig:
        return LsConfig(
            gamma=self.gamma,
            theta=self.theta,
            stop_alpha=self.stop_alpha,
            wall_clock_limit=self.wall_clock_limit,
            max_expansions=self.max_expansions,
        )

    def refine_config(self) -> LsConfig:
        return replace(self.ls_config(), stop_alpha=self.refine_stop_alpha)

    def as_dict(self) -> dict:
        return asdict(self)


def config_keys() -> list:
    return [f.name for f in fields(SolverConfig)]


_OPTIONAL = {"wall_clock_limit", "feas_tol"}


def _coerce(key: str, value):
    kind = {f.name: f.type for f in fields(SolverConfig)}[key]
    if value is None or (isinstance(value, str) and value.lower() in ("none", "null")):
        if key in _OPTIONAL:
            return None
        raise UsageError(f"{key} cannot be empty")
    try:
        if kind == "bool":
            if isinstance(value, str):
                low = value.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return low in ("true", "1", "yes")
            return bool(value)
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(float(value)) if isinstance(value, str) else int(value)
        if kind == "str":
            return str(value)
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {key}: {value!r}") from None


def _update(cfg: SolverConfig, values: dict) -> SolverConfig:
    known = set(config_keys())
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
    return replace(cfg, **{k: _coerce(k, v) for k, v in values.items()})


def load_config(path=None, base: SolverConfig = SolverConfig()) -> SolverConfig:
    """Read a YAML mapping of configuration keys; ``None`` gives the defaults."""
    if path is None:
        return base
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a mapping")
    return _update(base, data)


def apply_overrides(cfg: SolverConfig, overrides: Iterable[str]) -> SolverConfig:
    """Apply ``key=value`` strings on top of ``cfg``."""
    values = {}
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"override must look like key=value: {item!r}")
        values[key.strip()] = raw.strip()
    return _update(cfg, values)
