"""Suite and problem definition files.

Both are YAML.  A problem entry is a mapping with a ``pattern`` key:

``chain``, ``shared_all``, ``disjoint``
    ``base: NAME`` and ``m: COUNT``.
``shared_head``
    ``bases: [NAME, ...]`` and ``s: SHARED``.
``element``
    ``base: NAME`` and ``n: DIM``; the element-structured version of a
    classical problem (TRIDIA, BROYDN3D, MOREBV, DIXMAANA, WOODS, ARWHEAD,
    ENGVAL, FREUROTH, ROSENBR).
``explicit``
    ``blocks: [[i, ...], ...]`` with 1-based variable indices and
    ``functions: NAME`` or one base name per block (each base dimension must
    equal its block size); ``n`` is optional.

Optional keys for every pattern:

* ``box``: ``false`` (default), ``true`` for the default box of the bases,
  ``[lo, hi]`` for a uniform box, or ``{lower: [...], upper: [...]}``;
* ``x0``: start point (projected onto the box);
* ``name``: identifier used in result files.

A suite file is either a list of entries or a mapping with a ``problems``
list.  Base names also accept ``QUAD<dim>_<seed>`` for seeded strictly convex
quadratics.

Example::

    problems:
      - {pattern: chain, base: ROSENBR, m: 5}
      - {pattern: element, base: TRIDIA, n: 10, box: true}
      - {pattern: shared_head, bases: [QUAD3_1, QUAD3_2, QUAD3_3], s: 1}
      - pattern: explicit
        functions: ROSENBR
        blocks: [[1, 2], [2, 3]]
        x0: [0, 0, 0]
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import yaml

from ..problem import Box, SeparableProblem, SubFunction, Unbounded, UsageError
from .functions import get_base
from .generators import (
    element_problem,
    generate_chain,
    generate_disjoint,
    generate_shared_all,
    generate_shared_head,
)

__all__ = ["SuiteEntry", "SuiteSpec", "load_suite", "load_problem", "parse_entry", "default_suite", "acceptance_suite"]

PATTERNS = ("chain", "shared_head", "shared_all", "disjoint", "element", "explicit")
_KEYS = {"pattern", "base", "bases", "m", "s", "n", "box", "x0", "name", "blocks", "functions"}


@dataclass(frozen=True)
class SuiteEntry:
    pattern: str
    bases: Tuple[str, ...]
    m: Optional[int] = None
    s: int = 1
    n: Optional[int] = None
    box: object = False
    x0: Optional[tuple] = None
    name: Optional[str] = None
    blocks: Optional[tuple] = None

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise UsageError(f"unknown pattern {self.pattern!r}; expected one of {PATTERNS}")
        if not self.bases:
            raise UsageError("an entry needs at least one base function")
        if self.pattern in ("chain", "shared_all", "disjoint"):
            if len(self.bases) != 1 or self.m is None:
                raise UsageError(f"pattern {self.pattern} needs one base and m")
        if self.pattern == "element" and (len(self.bases) != 1 or self.n is None):
            raise UsageError("pattern element needs one base and n")
        if self.pattern == "explicit":
            if not self.blocks:
                raise UsageError("pattern explicit needs blocks")
            if len(self.bases) not in (1, len(self.blocks)):
                raise UsageError("explicit entries need one function name or one per block")

    def _box_arg(self):
        if isinstance(self.box, dict):
            return None
        return self.box

    def build(self) -> SeparableProblem:
        box = self._box_arg()
        if self.pattern == "chain":
            p = generate_chain(self.bases[0], self.m, box)
        elif self.pattern == "shared_head":
            p = generate_shared_head(list(self.bases), self.s, box)
        elif self.pattern == "shared_all":
            p = generate_shared_all(self.bases[0], self.m, box)
        elif self.pattern == "disjoint":
            p = generate_disjoint(self.bases[0], self.m, box)
        elif self.pattern == "element":
            p = element_problem(self.bases[0], self.n, box)
        else:
            p = self._explicit()
        if isinstance(self.box, dict):
            p = _with_region(p, _explicit_box(self.box, p.n))
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
            if x0.shape != (p.n,):
                raise UsageError(f"x0 has length {x0.size}, problem has n={p.n}")
            p = replace(p, x0=p.region.project(x0))
        if self.name:
            p = replace(p, name=self.name)
        return p

    def _explicit(self) -> SeparableProblem:
        blocks = [np.asarray(b, dtype=np.intp) - 1 for b in self.blocks]
        if any(b.size and b.min() < 0 for b in blocks):
            raise UsageError("explicit blocks use 1-based indices")
        names = self.bases * len(blocks) if len(self.bases) == 1 else self.bases
        subs = []
        for blk, nm in zip(blocks, names):
            base = get_base(nm)
            if base.dim != blk.size:
                raise UsageError(f"{base.name} has dimension {base.dim}, block {(blk + 1).tolist()} has {blk.size}")
            subs.append(SubFunction(blk, base.oracle, base.gradient, base.name))
        n = self.n if self.n is not None else 1 + max(int(b.max()) for b in blocks)
        x0 = np.zeros(n)
        lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
        for blk, nm in zip(blocks, names):
            base = get_base(nm)
            x0[blk] = base.default_start
            if base.default_box is not None:
                lo[blk], hi[blk] = base.default_box
        if self.box is True:
            region = Box(lo, hi)
        elif self.box in (False, None) or isinstance(self.box, dict):
            region = Unbounded()
        else:
            region = Box(np.full(n, float(self.box[0])), np.full(n, float(self.box[1])))
        return SeparableProblem(
            n=n, subs=tuple(subs), region=region, x0=region.project(x0), name="explicit"
        )

    def label(self) -> str:
        return self.build().name if self.name is None else self.name


def _explicit_box(box: dict, n: int) -> Box:
    if set(box) - {"lower", "upper"}:
        raise UsageError("box mapping accepts only 'lower' and 'upper'")
    lo = np.broadcast_to(np.asarray(box.get("lower", -np.inf), dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(box.get("upper", np.inf), dtype=float), (n,))
    return Box(lo, hi)


def _with_region(p: SeparableProblem, region) -> SeparableProblem:
    fstar, xstar = p.fstar, p.minimizer
    if xstar is not None and not region.contains(xstar):
        fstar, xstar = None, None
    return replace(p, region=region, x0=region.project(p.x0), fstar=fstar, minimizer=xstar)


@dataclass(frozen=True)
class SuiteSpec:
    entries: Tuple[SuiteEntry, ...] = ()
    name: str = "suite"

    def problems(self) -> list:
        probs = [e.build() for e in self.entries]
        names = [p.name for p in probs]
        dupes = sorted({x for x in names if names.count(x) > 1})
        if dupes:
            raise UsageError(f"duplicate problem names in suite: {dupes}")
        return probs


def parse_entry(d: dict) -> SuiteEntry:
    if not isinstance(d, dict):
        raise UsageError(f"problem entry must be a mapping, got {d!r}")
    unknown = set(d) - _KEYS
    if unknown:
        raise UsageError(f"unknown problem keys: {sorted(unknown)}")
    if "pattern" not in d:
        raise UsageError("problem entry needs a pattern")
    if "bases" in d:
        bases = d["bases"]
    elif "functions" in d:
        bases = d["functions"]
    else:
        bases = d.get("base")
    if isinstance(bases, str):
        bases = [bases]
    if not bases:
        raise UsageError("problem entry needs base (or bases/functions)")
    box = d.get("box", False)
    if isinstance(box, list):
        if len(box) != 2:
            raise UsageError("box list must be [lower, upper]")
        box = (float(box[0]), float(box[1]))
    blocks = d.get("blocks")
    try:
        return SuiteEntry(
            pattern=str(d["pattern"]),
            bases=tuple(str(b) for b in bases),
            m=None if d.get("m") is None else int(d["m"]),
            s=int(d.get("s", 1)),
            n=None if d.get("n") is None else int(d["n"]),
            box=box,
            x0=None if d.get("x0") is None else tuple(float(v) for v in d["x0"]),
            name=d.get("name"),
            blocks=None if blocks is None else tuple(tuple(int(i) for i in b) for b in blocks),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid problem entry {d!r}: {exc}") from None


def _read_yaml(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise UsageError(f"malformed file {path}: {exc}") from None


def load_suite(path) -> SuiteSpec:
    data = _read_yaml(path)
    if data is None:
        return SuiteSpec((), Path(path).stem)
    if isinstance(data, dict):
        name = str(data.get("name", Path(path).stem))
        data = data.get("problems") or []
    else:
        name = Path(path).stem
    if not isinstance(data, list):
        raise UsageError("suite file must hold a list of problem entries")
    return SuiteSpec(tuple(parse_entry(d) for d in data), name)


def load_problem(path) -> SeparableProblem:
    data = _read_yaml(path)
    if isinstance(data, dict) and "problems" in data:
        probs = data["problems"]
        if not isinstance(probs, list) or len(probs) != 1:
            raise UsageError("a problem file must define exactly one problem")
        data = probs[0]
    return parse_entry(data).build()


def acceptance_suite() -> SuiteSpec:
    """Twelve problems covering every generated pattern, half of them boxed."""
    E = SuiteEntry
    return SuiteSpec(
        (
            E("chain", ("ROSENBR",), m=5),
            E("chain", ("ROSENBR",), m=25, box=True),
            E("element", ("TRIDIA",), n=10),
            E("element", ("TRIDIA",), n=50, box=True),
            E("element", ("BROYDN3D",), n=10),
            E("element", ("BROYDN3D",), n=20, box=True),
            E("element", ("WOODS",), n=8),
            E("chain", ("WOODS",), m=3, box=True),
            E("shared_head", ("QUAD3_1", "QUAD3_2", "QUAD3_3"), s=1),
            E("shared_head", ("QUAD4_4", "QUAD4_5", "QUAD4_6", "QUAD4_7"), s=2, box=True),
            E("shared_head", ("QUAD5_8", "QUAD5_9"), s=3),
            E("shared_all", ("ARWHEAD",), m=6, box=True),
        ),
        "acceptance",
    )


def default_suite() -> SuiteSpec:
    """The benchmark comparison suite used for the published profile curves.

    Chains use m in {8, 16, 32} and element problems n in {24, 48, 96}, so
    that block sizes stay small against n as in large structured problems.
    """
    E = SuiteEntry
    entries = []
    for m in (8, 16, 32):
        entries.append(E("chain", ("ROSENBR",), m=m))
        entries.append(E("chain", ("WOODS",), m=m // 2, box=True))
        entries.append(E("chain", ("ENGVAL",), m=m))
        entries.append(E("chain", ("FREUROTH",), m=m, box=True))
    for n in (24, 48, 96):
        for nm in ("TRIDIA", "BROYDN3D", "MOREBV", "ARWHEAD"):
            entries.append(E("element", (nm,), n=n, box=(nm in ("BROYDN3D", "ARWHEAD"))))
    entries.append(E("element", ("DIXMAANA",), n=48))
    entries.append(E("element", ("WOODS",), n=48))
    entries.append(E("disjoint", ("BEALE",), m=16))
    entries.append(E("disjoint", ("ROSENBR",), m=16, box=True))
    entries.append(E("shared_all", ("ARWHEAD",), m=16))
    entries.append(E("shared_head", tuple(f"QUAD4_{k}" for k in range(1, 7)), s=2))
    entries.append(E("shared_head", tuple(f"QUAD3_{k}" for k in range(7, 17)), s=1, box=True))
    return SuiteSpec(tuple(entries), "default")
