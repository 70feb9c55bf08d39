"""Build partially separable problems from base functions.

Pattern generators combine copies of :class:`BaseFunction` objects:

* ``chain``: copy ``j+1`` shares its first variable with the last one of copy ``j``;
* ``shared_head``: the first ``s`` variables are common to every copy;
* ``shared_all``: exactly one variable is common to every copy;
* ``disjoint``: no sharing at all.

Element generators (``tridia``, ``broydn3d``, ...) split the classical
variable-dimension test problems into their natural element functions,
which gives ``m`` close to ``n`` and overlapping windows of 1 to 3 variables.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from ..problem import Box, SeparableProblem, SubFunction, Unbounded, UsageError
from .functions import DIXMAANA, BaseFunction, get_base

__all__ = [
    "generate_chain",
    "generate_shared_head",
    "generate_shared_all",
    "generate_disjoint",
    "ELEMENT_PROBLEMS",
    "element_problem",
    "tridia",
    "broydn3d",
    "morebv",
    "dixmaana",
    "woods",
    "arwhead",
    "engval",
    "freuroth",
    "rosenbr",
]

BoxSpec = Union[None, bool, Sequence[float]]


def _region(n: int, box: BoxSpec, default_lo=None, default_hi=None):
    if box is None or box is False:
        return Unbounded()
    if box is True:
        if default_lo is None:
            raise UsageError("no default box for this problem")
        return Box(default_lo, default_hi)
    lo, hi = box
    return Box(np.broadcast_to(np.asarray(lo, float), (n,)), np.broadcast_to(np.asarray(hi, float), (n,)))


def _finish(n, subs, region, x0, name, fstar=None, minimizer=None):
    x0 = region.project(np.asarray(x0, dtype=float))
    if minimizer is not None:
        minimizer = np.asarray(minimizer, dtype=float)
        if not region.contains(minimizer):
            fstar, minimizer = None, None
    if isinstance(region, Box):
        name += "-box"
    return SeparableProblem(
        n=n, subs=tuple(subs), region=region, x0=x0, name=name, fstar=fstar, minimizer=minimizer
    )


def _as_base(b) -> BaseFunction:
    return get_base(b) if isinstance(b, str) else b


def _layout(bases: Sequence[BaseFunction], blocks, n, box, name):
    """Assemble sub-functions, start point, default box and joint minimizer."""
    x0 = np.zeros(n)
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    has_box = all(b.default_box is not None for b in bases)
    xstar = np.full(n, np.nan)
    consistent = all(b.minimizer is not None and b.known_fstar is not None for b in bases)
    subs = []
    for base, blk in zip(bases, blocks):
        subs.append(SubFunction(np.asarray(blk), base.oracle, base.gradient, base.name))
        x0[blk] = base.default_start
        if has_box:
            lo[blk] = base.default_box[0]
            hi[blk] = base.default_box[1]
        if consistent:
            mz = np.asarray(base.minimizer)
            prev = xstar[blk]
            if np.any(~np.isnan(prev) & (np.abs(prev - mz) > 1e-12)):
                consistent = False
            xstar[blk] = mz
    fstar = float(sum(b.known_fstar for b in bases)) if consistent else None
    minimizer = xstar if consistent else None
    region = _region(n, box, lo if has_box else None, hi if has_box else None)
    return _finish(n, subs, region, x0, name, fstar, minimizer)


def generate_chain(base, m: int, box: BoxSpec = None) -> SeparableProblem:
    """``m`` copies of ``base`` linked through one shared variable each."""
    base = _as_base(base)
    if m < 1:
        raise UsageError("m must be at least 1")
    d = base.dim
    if d < 2 and m > 1:
        raise UsageError("chaining needs base dimension >= 2")
    n = m * (d - 1) + 1
    blocks = [np.arange(j * (d - 1), j * (d - 1) + d) for j in range(m)]
    return _layout([base] * m, blocks, n, box, f"{base.name}-chain-m{m}")


def generate_shared_head(bases: Sequence, s: int, box: BoxSpec = None, name: Optional[str] = None) -> SeparableProblem:
    """Sum of different bases sharing their first ``s`` variables."""
    bases = [_as_base(b) for b in bases]
    if not bases:
        raise UsageError("at least one base function is required")
    if s < 1 or any(b.dim < s for b in bases):
        raise UsageError("need 1 <= s <= dim of every base")
    blocks = []
    nxt = s
    for b in bases:
        priv = np.arange(nxt, nxt + b.dim - s)
        nxt += b.dim - s
        blocks.append(np.concatenate((np.arange(s), priv)).astype(np.intp))
    n = nxt
    name = name or "+".join(b.name for b in bases) + f"-head{s}"
    return _layout(bases, blocks, n, box, name)


def generate_shared_all(base, m: int, box: BoxSpec = None) -> SeparableProblem:
    """``m`` copies of ``base`` with only their first variable in common."""
    base = _as_base(base)
    return generate_shared_head([base] * m, 1, box, name=f"{base.name}-shared-m{m}")


def generate_disjoint(base, m: int, box: BoxSpec = None) -> SeparableProblem:
    """``m`` independent copies of ``base``."""
    base = _as_base(base)
    if m < 1:
        raise UsageError("m must be at least 1")
    d = base.dim
    blocks = [np.arange(j * d, (j + 1) * d) for j in range(m)]
    return _layout([base] * m, blocks, m * d, box, f"{base.name}-disjoint-m{m}")


# Element-structured problems -------------------------------------------------


def _uniform_box(n, box, default):
    if box is True:
        box = default
    return _region(n, box)


def tridia(n: int, box: BoxSpec = None) -> SeparableProblem:
    """``(x_1 - 1)^2 + sum_{i>=2} i (2 x_i - x_{i-1})^2`` split into ``n`` elements."""
    if n < 2:
        raise UsageError("tridia needs n >= 2")
    subs = [
        SubFunction(
            np.array([0]),
            lambda y: float((y[0] - 1.0) ** 2),
            lambda y: np.array([2.0 * (y[0] - 1.0)]),
            "TRIDIA1",
        )
    ]
    for i in range(2, n + 1):
        w = float(i)

        def f(y, w=w):
            r = 2.0 * y[1] - y[0]
            return float(w * r * r)

        def g(y, w=w):
            r = 2.0 * y[1] - y[0]
            return np.array([-2.0 * w * r, 4.0 * w * r])

        subs.append(SubFunction(np.array([i - 2, i - 1]), f, g, f"TRIDIA{i}"))
    xstar = 2.0 ** (1 - np.arange(1, n + 1))
    region = _uniform_box(n, box, (-1.0, 2.0))
    return _finish(n, subs, region, np.ones(n), f"TRIDIA-n{n}", 0.0, xstar)


def _window_element(i, n, residual, dresidual, tag):
    """Squared residual of a three-point stencil centred at ``i``."""
    idx = [k for k in (i - 1, i, i + 1) if 0 <= k < n]
    has_prev = i > 0
    has_next = i < n - 1

    def unpack(y):
        k = 0
        prev = 0.0
        if has_prev:
            prev = y[0]
            k = 1
        cur = y[k]
        nxt = y[k + 1] if has_next else 0.0
        return prev, cur, nxt

    def f(y):
        r = residual(*unpack(y))
        return float(r * r)

    def g(y):
        p_, c_, n_ = unpack(y)
        r = residual(p_, c_, n_)
        dp, dc, dn = dresidual(p_, c_, n_)
        out = [dp] if has_prev else []
        out.append(dc)
        if has_next:
            out.append(dn)
        return 2.0 * r * np.array(out)

    return SubFunction(np.array(idx), f, g, f"{tag}{i + 1}")


def broydn3d(n: int, box: BoxSpec = None) -> SeparableProblem:
    """Broyden tridiagonal residuals ``((3-2x_i)x_i - x_{i-1} - 2x_{i+1} + 1)^2``."""
    if n < 2:
        raise UsageError("broydn3d needs n >= 2")
    res = lambda p, c, q: (3.0 - 2.0 * c) * c - p - 2.0 * q + 1.0
    dres = lambda p, c, q: (-1.0, 3.0 - 4.0 * c, -2.0)
    subs = [_window_element(i, n, res, dres, "BROYDN3D") for i in range(n)]
    base = get_base("BROYDN3D")
    xstar = None
    if n == base.dim:
        xstar = base.minimizer
    else:
        from .functions import _broyden3d_root

        xstar = _broyden3d_root(n)
    region = _uniform_box(n, box, (-2.0, 0.0))
    return _finish(n, subs, region, -np.ones(n), f"BROYDN3D-n{n}", 0.0, xstar)


def morebv(n: int, box: BoxSpec = None) -> SeparableProblem:
    """Moré boundary-value residuals split into ``n`` three-point elements."""
    if n < 2:
        raise UsageError("morebv needs n >= 2")
    from .functions import _morebv_root

    h = 1.0 / (n + 1)
    subs = []
    for i in range(n):
        t = (i + 1) * h
        res = lambda p, c, q, t=t: 2.0 * c - p - q + 0.5 * h * h * (c + t + 1.0) ** 3
        dres = lambda p, c, q, t=t: (-1.0, 2.0 + 1.5 * h * h * (c + t + 1.0) ** 2, -1.0)
        subs.append(_window_element(i, n, res, dres, "MOREBV"))
    t = h * np.arange(1, n + 1)
    region = _uniform_box(n, box, (-1.0, 1.0))
    return _finish(n, subs, region, t * (t - 1.0), f"MOREBV-n{n}", 0.0, _morebv_root(n))


def dixmaana(n: int, box: BoxSpec = None) -> SeparableProblem:
    """DIXMAANA (``n = 3M``) with one element per variable."""
    if n < 3 or n % 3:
        raise UsageError("dixmaana needs n a positive multiple of 3")
    M = n // 3
    a, _, c, d = DIXMAANA
    subs = []
    for i in range(n):
        with_c = i < 2 * M
        with_d = i < M
        const = 1.0 if i == 0 else 0.0
        idx = [i] + ([i + M] if with_c else []) + ([i + 2 * M] if with_d else [])

        def f(y, with_c=with_c, with_d=with_d, const=const):
            v = const + a * y[0] * y[0]
            if with_c:
                v += c * y[0] * y[0] * y[1] ** 4
            if with_d:
                v += d * y[0] * y[-1]
            return float(v)

        def g(y, with_c=with_c, with_d=with_d):
            out = np.zeros(y.size)
            out[0] = 2.0 * a * y[0]
            if with_c:
                out[0] += 2.0 * c * y[0] * y[1] ** 4
                out[1] += 4.0 * c * y[0] * y[0] * y[1] ** 3
            if with_d:
                out[0] += d * y[-1]
                out[-1] += d * y[0]
            return out

        subs.append(SubFunction(np.array(idx), f, g, f"DIXMAANA{i + 1}"))
    region = _uniform_box(n, box, (-1.0, 3.0))
    return _finish(n, subs, region, np.full(n, 2.0), f"DIXMAANA-n{n}", 1.0, np.zeros(n))


_WOODS_ELEMENTS = (
    # (local indices, value, gradient)
    ((0, 1), lambda y: 100.0 * (y[1] - y[0] ** 2) ** 2,
     lambda y: np.array([-400.0 * y[0] * (y[1] - y[0] ** 2), 200.0 * (y[1] - y[0] ** 2)])),
    ((0,), lambda y: (1.0 - y[0]) ** 2, lambda y: np.array([-2.0 * (1.0 - y[0])])),
    ((2, 3), lambda y: 90.0 * (y[1] - y[0] ** 2) ** 2,
     lambda y: np.array([-360.0 * y[0] * (y[1] - y[0] ** 2), 180.0 * (y[1] - y[0] ** 2)])),
    ((2,), lambda y: (1.0 - y[0]) ** 2, lambda y: np.array([-2.0 * (1.0 - y[0])])),
    ((1, 3), lambda y: 10.0 * (y[0] + y[1] - 2.0) ** 2,
     lambda y: np.full(2, 20.0 * (y[0] + y[1] - 2.0))),
    ((1, 3), lambda y: 0.1 * (y[0] - y[1]) ** 2,
     lambda y: np.array([0.2 * (y[0] - y[1]), -0.2 * (y[0] - y[1])])),
)


def woods(n: int, box: BoxSpec = None) -> SeparableProblem:
    """Extended Woods function: ``n/4`` groups of six element functions."""
    if n < 4 or n % 4:
        raise UsageError("woods needs n a positive multiple of 4")
    subs = []
    for grp in range(n // 4):
        off = 4 * grp
        for e, (loc, f, g) in enumerate(_WOODS_ELEMENTS):
            subs.append(
                SubFunction(
                    np.array(loc) + off,
                    lambda y, f=f: float(f(y)),
                    g,
                    f"WOODS{grp + 1}.{e + 1}",
                )
            )
    x0 = np.tile([-3.0, -1.0, -3.0, -1.0], n // 4)
    region = _uniform_box(n, box, (-4.0, 4.0))
    return _finish(n, subs, region, x0, f"WOODS-n{n}", 0.0, np.ones(n))


def arwhead(n: int, box: BoxSpec = None) -> SeparableProblem:
    """``sum_{i<n} (-4 x_i + 3) + (x_i^2 + x_n^2)^2``; ``x_n`` is in every element."""
    if n < 2:
        raise UsageError("arwhead needs n >= 2")

    def f(y):
        s = y[0] * y[0] + y[1] * y[1]
        return float(-4.0 * y[0] + 3.0 + s * s)

    def g(y):
        s = y[0] * y[0] + y[1] * y[1]
        return np.array([-4.0 + 4.0 * s * y[0], 4.0 * s * y[1]])

    subs = [SubFunction(np.array([i, n - 1]), f, g, f"ARWHEAD{i + 1}") for i in range(n - 1)]
    xstar = np.ones(n)
    xstar[-1] = 0.0
    region = _uniform_box(n, box, (-1.0, 2.0))
    return _finish(n, subs, region, np.ones(n), f"ARWHEAD-n{n}", 0.0, xstar)


def engval(n: int, box: BoxSpec = None) -> SeparableProblem:
    p = generate_chain("ENGVAL", n - 1, box if box is not True else (0.0, 3.0))
    return _rename(p, f"ENGVAL-n{n}")


def freuroth(n: int, box: BoxSpec = None) -> SeparableProblem:
    p = generate_chain("FREUROTH", n - 1, box if box is not True else (-10.0, 10.0))
    return _rename(p, f"FREUROTH-n{n}")


def rosenbr(n: int, box: BoxSpec = None) -> SeparableProblem:
    if n % 2:
        raise UsageError("rosenbr needs an even n")
    p = generate_disjoint("ROSENBR", n // 2, box if box is not True else (-2.0, 2.0))
    return _rename(p, f"ROSENBR-n{n}")


def _rename(p: SeparableProblem, name: str) -> SeparableProblem:
    from dataclasses import replace

    return replace(p, name=name + ("-box" if isinstance(p.region, Box) else ""))


ELEMENT_PROBLEMS = {
    "TRIDIA": tridia,
    "BROYDN3D": broydn3d,
    "MOREBV": morebv,
    "DIXMAANA": dixmaana,
    "WOODS": woods,
    "ARWHEAD": arwhead,
    "ENGVAL": engval,
    "FREUROTH": freuroth,
    "ROSENBR": rosenbr,
}


def element_problem(name: str, n: int, box: BoxSpec = None) -> SeparableProblem:
    """Element-structured version of a classical problem with ``n`` variables."""
    try:
        gen = ELEMENT_PROBLEMS[name.upper()]
    except KeyError:
        raise UsageError(f"no element-structured generator for {name!r}") from None
    return gen(n, box)
