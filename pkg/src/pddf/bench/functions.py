"""Native reimplementations of the small test functions used to build the suite.

Formulas follow the standard CUTEst / Moré-Garbow-Hillstrom definitions.
Every function comes with an analytic gradient that is used only by tests
and by post-hoc stationarity diagnostics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from ..problem import UsageError

__all__ = ["BaseFunction", "base_library", "get_base", "quadratic_base"]

Vector = NDArray[np.float64]


@dataclass(frozen=True)
class BaseFunction:
    name: str
    dim: int
    oracle: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    default_start: Tuple[float, ...]
    known_fstar: Optional[float] = None
    minimizer: Optional[Tuple[float, ...]] = None
    default_box: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    def __call__(self, y: Vector) -> float:
        return self.oracle(y)


def _rosenbrock(y):
    a = y[1] - y[0] * y[0]
    b = 1.0 - y[0]
    return float(100.0 * a * a + b * b)


def _rosenbrock_grad(y):
    a = y[1] - y[0] * y[0]
    return np.array([-400.0 * y[0] * a - 2.0 * (1.0 - y[0]), 200.0 * a])


def _tridia(y):
    r = 2.0 * y[1:] - y[:-1]
    w = np.arange(2, y.size + 1, dtype=float)
    return float((y[0] - 1.0) ** 2 + np.dot(w, r * r))


def _tridia_grad(y):
    r = 2.0 * y[1:] - y[:-1]
    w = np.arange(2, y.size + 1, dtype=float)
    g = np.zeros(y.size)
    g[0] = 2.0 * (y[0] - 1.0)
    g[1:] += 4.0 * w * r
    g[:-1] -= 2.0 * w * r
    return g


def _broyden3d_residual(y):
    ypad = np.concatenate(([0.0], y, [0.0]))
    return (3.0 - 2.0 * y) * y - ypad[:-2] - 2.0 * ypad[2:] + 1.0


def _broyden3d(y):
    r = _broyden3d_residual(y)
    return float(np.dot(r, r))


def _broyden3d_grad(y):
    r = _broyden3d_residual(y)
    g = 2.0 * r * (3.0 - 4.0 * y)
    g[:-1] -= 2.0 * r[1:]
    g[1:] -= 4.0 * r[:-1]
    return g


def _arwhead(y):
    # y = (shared, private)
    s = y[1] * y[1] + y[0] * y[0]
    return float(-4.0 * y[1] + 3.0 + s * s)


def _arwhead_grad(y):
    s = y[1] * y[1] + y[0] * y[0]
    return np.array([4.0 * s * y[0], -4.0 + 4.0 * s * y[1]])


def _engval(y):
    s = y[0] * y[0] + y[1] * y[1]
    return float(s * s - 4.0 * y[0] + 3.0)


def _engval_grad(y):
    s = y[0] * y[0] + y[1] * y[1]
    return np.array([4.0 * s * y[0] - 4.0, 4.0 * s * y[1]])


def _woods(y):
    x1, x2, x3, x4 = y
    return float(
        100.0 * (x2 - x1 * x1) ** 2
        + (1.0 - x1) ** 2
        + 90.0 * (x4 - x3 * x3) ** 2
        + (1.0 - x3) ** 2
        + 10.0 * (x2 + x4 - 2.0) ** 2
        + 0.1 * (x2 - x4) ** 2
    )


def _woods_grad(y):
    x1, x2, x3, x4 = y
    a = x2 - x1 * x1
    b = x4 - x3 * x3
    c = x2 + x4 - 2.0
    d = x2 - x4
    return np.array(
        [
            -400.0 * x1 * a - 2.0 * (1.0 - x1),
            200.0 * a + 20.0 * c + 0.2 * d,
            -360.0 * x3 * b - 2.0 * (1.0 - x3),
            180.0 * b + 20.0 * c - 0.2 * d,
        ]
    )


_BEALE_C = (1.5, 2.25, 2.625)


def _beale(y):
    x1, x2 = y
    total = 0.0
    for k, c in enumerate(_BEALE_C, start=1):
        r = c - x1 * (1.0 - x2**k)
        total += r * r
    return float(total)


def _beale_grad(y):
    x1, x2 = y
    g = np.zeros(2)
    for k, c in enumerate(_BEALE_C, start=1):
        r = c - x1 * (1.0 - x2**k)
        g[0] += -2.0 * r * (1.0 - x2**k)
        g[1] += 2.0 * r * x1 * k * x2 ** (k - 1)
    return g


def _freuroth_res(y):
    x1, x2 = y
    r1 = x1 - 13.0 + ((5.0 - x2) * x2 - 2.0) * x2
    r2 = x1 - 29.0 + ((x2 + 1.0) * x2 - 14.0) * x2
    return r1, r2


def _freuroth(y):
    r1, r2 = _freuroth_res(y)
    return float(r1 * r1 + r2 * r2)


def _freuroth_grad(y):
    x2 = y[1]
    r1, r2 = _freuroth_res(y)
    d1 = 10.0 * x2 - 3.0 * x2 * x2 - 2.0
    d2 = 3.0 * x2 * x2 + 2.0 * x2 - 14.0
    return np.array([2.0 * r1 + 2.0 * r2, 2.0 * r1 * d1 + 2.0 * r2 * d2])


def _morebv_parts(y):
    n = y.size
    h = 1.0 / (n + 1)
    t = h * np.arange(1, n + 1)
    ypad = np.concatenate(([0.0], y, [0.0]))
    r = 2.0 * y - ypad[:-2] - ypad[2:] + 0.5 * h * h * (y + t + 1.0) ** 3
    return r, h, t


def _morebv(y):
    r, _, _ = _morebv_parts(y)
    return float(np.dot(r, r))


def _morebv_grad(y):
    r, h, t = _morebv_parts(y)
    g = 2.0 * r * (2.0 + 1.5 * h * h * (y + t + 1.0) ** 2)
    g[1:] -= 2.0 * r[:-1]
    g[:-1] -= 2.0 * r[1:]
    return g


# DIXMAANA constants: alpha=1, beta=0, gamma=delta=0.125, all exponents 0.
DIXMAANA = (1.0, 0.0, 0.125, 0.125)


def _dixmaana(y):
    n = y.size
    M = n // 3
    a, b, c, d = DIXMAANA
    total = 1.0 + a * float(np.dot(y, y))
    q = y[1:] + y[1:] ** 2
    total += b * float(np.sum(y[:-1] ** 2 * q * q))
    total += c * float(np.sum(y[: 2 * M] ** 2 * y[M : 3 * M] ** 4))
    total += d * float(np.sum(y[:M] * y[2 * M : 3 * M]))
    return total


def _dixmaana_grad(y):
    n = y.size
    M = n // 3
    a, b, c, d = DIXMAANA
    g = 2.0 * a * y
    q = y[1:] + y[1:] ** 2
    g[:-1] += 2.0 * b * y[:-1] * q * q
    g[1:] += 2.0 * b * y[:-1] ** 2 * q * (1.0 + 2.0 * y[1:])
    g[: 2 * M] += 2.0 * c * y[: 2 * M] * y[M : 3 * M] ** 4
    g[M : 3 * M] += 4.0 * c * y[: 2 * M] ** 2 * y[M : 3 * M] ** 3
    g[:M] += d * y[2 * M : 3 * M]
    g[2 * M : 3 * M] += d * y[:M]
    return g


def _broyden3d_root(dim: int) -> Tuple[float, ...]:
    # Newton on the tridiagonal residual system from the standard start.
    y = -np.ones(dim)
    for _ in range(50):
        r = _broyden3d_residual(y)
        J = np.diag(3.0 - 4.0 * y) - np.eye(dim, k=-1) - 2.0 * np.eye(dim, k=1)
        y = y - np.linalg.solve(J, r)
    return tuple(float(v) for v in y)


def _morebv_root(dim: int) -> Tuple[float, ...]:
    h = 1.0 / (dim + 1)
    t = h * np.arange(1, dim + 1)
    y = t * (t - 1.0)
    for _ in range(50):
        r, _, _ = _morebv_parts(y)
        J = (
            np.diag(2.0 + 1.5 * h * h * (y + t + 1.0) ** 2)
            - np.eye(dim, k=-1)
            - np.eye(dim, k=1)
        )
        y = y - np.linalg.solve(J, r)
    return tuple(float(v) for v in y)


def quadratic_base(dim: int, seed: int) -> BaseFunction:
    """Strictly convex ``0.5 (y-c)^T A (y-c)`` with a seeded SPD ``A`` and centre ``c``."""
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(dim, dim))
    A = B @ B.T / dim + np.eye(dim)
    c = rng.uniform(-1.0, 1.0, size=dim)
    A.setflags(write=False)
    c.setflags(write=False)

    def f(y):
        d = y - c
        return float(0.5 * d @ A @ d)

    def g(y):
        return A @ (y - c)

    return BaseFunction(
        name=f"QUAD{dim}_{seed}",
        dim=dim,
        oracle=f,
        gradient=g,
        default_start=tuple([2.0] * dim),
        known_fstar=0.0,
        minimizer=tuple(float(v) for v in c),
        default_box=((-0.5,) * dim, (3.0,) * dim),
    )


def _library() -> dict:
    lib = [
        BaseFunction(
            "ROSENBR", 2, _rosenbrock, _rosenbrock_grad, (-1.2, 1.0), 0.0, (1.0, 1.0),
            ((-2.0, -2.0), (2.0, 2.0)),
        ),
        BaseFunction(
            "TRIDIA", 4, _tridia, _tridia_grad, (1.0,) * 4, 0.0, (1.0, 0.5, 0.25, 0.125),
            ((-1.0,) * 4, (2.0,) * 4),
        ),
        BaseFunction(
            "BROYDN3D", 4, _broyden3d, _broyden3d_grad, (-1.0,) * 4, 0.0, _broyden3d_root(4),
            ((-2.0,) * 4, (0.0,) * 4),
        ),
        BaseFunction(
            "ARWHEAD", 2, _arwhead, _arwhead_grad, (1.0, 1.0), 0.0, (0.0, 1.0),
            ((-1.0, -1.0), (2.0, 2.0)),
        ),
        BaseFunction(
            "ENGVAL", 2, _engval, _engval_grad, (2.0, 2.0), None, None,
            ((0.0, 0.0), (3.0, 3.0)),
        ),
        BaseFunction(
            "WOODS", 4, _woods, _woods_grad, (-3.0, -1.0, -3.0, -1.0), 0.0, (1.0,) * 4,
            ((-4.0,) * 4, (4.0,) * 4),
        ),
        BaseFunction(
            "BEALE", 2, _beale, _beale_grad, (1.0, 1.0), 0.0, (3.0, 0.5),
            ((-4.5, -4.5), (4.5, 4.5)),
        ),
        BaseFunction(
            "FREUROTH", 2, _freuroth, _freuroth_grad, (0.5, -2.0), 0.0, (5.0, 4.0),
            ((-10.0, -10.0), (10.0, 10.0)),
        ),
        BaseFunction(
            "MOREBV", 4, _morebv, _morebv_grad,
            tuple(float(t * (t - 1.0)) for t in np.arange(1, 5) / 5.0), 0.0, _morebv_root(4),
            ((-1.0,) * 4, (1.0,) * 4),
        ),
        BaseFunction(
            "DIXMAANA", 3, _dixmaana, _dixmaana_grad, (2.0,) * 3, 1.0, (0.0,) * 3,
            ((-1.0,) * 3, (3.0,) * 3),
        ),
    ]
    return {b.name: b for b in lib}


_LIBRARY = _library()
_QUAD = re.compile(r"^QUAD(\d+)_(\d+)$")


def base_library() -> list:
    """All fixed base functions, in a stable order."""
    return list(_LIBRARY.values())


def get_base(name: str) -> BaseFunction:
    """Look up a base function by name (``QUAD<dim>_<seed>`` builds a quadratic)."""
    key = name.upper()
    if key in _LIBRARY:
        return _LIBRARY[key]
    match = _QUAD.match(key)
    if match:
        return quadratic_base(int(match.group(1)), int(match.group(2)))
    raise UsageError(f"unknown base function {name!r}")
