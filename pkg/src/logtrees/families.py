"""Tree families and their structural parameters.

Three families of random log-trees are supported:

* ``mary``     -- m-ary search trees, branching factor m >= 3.  Tracked
  quantities: space requirement S, key path length K, node path length N.
* ``fbbst``    -- fringe-balanced binary search trees (median-of-(2t+1)
  quicksort), t >= 1.  Tracked: partitioning stages S and total path
  length X.
* ``quadtree`` -- d-dimensional point quadtrees, d >= 1.  Tracked:
  leaves L and internal path length Xi.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class Family(str, Enum):
    MARY = "mary"
    FBBST = "fbbst"
    QUADTREE = "quadtree"


_MIN_PARAM = {Family.MARY: 3, Family.FBBST: 1, Family.QUADTREE: 1}


@dataclass(frozen=True)
class FamilyInstance:
    """A concrete tree family: the family tag plus its integer parameter."""

    family: Family
    parameter: int

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if not isinstance(self.parameter, int):
            raise TypeError(f"parameter must be an int, got {type(self.parameter).__name__}")
        lo = _MIN_PARAM[fam]
        if self.parameter < lo:
            raise ValueError(f"{fam.value} requires parameter >= {lo}, got {self.parameter}")

    @property
    def branches(self) -> int:
        """Number of subtrees below a splitting node."""
        if self.family is Family.MARY:
            return self.parameter
        if self.family is Family.FBBST:
            return 2
        return 2 ** self.parameter

    @property
    def split_threshold(self) -> int:
        """Smallest subtree size that splits into children."""
        if self.family is Family.MARY:
            return self.parameter
        if self.family is Family.FBBST:
            return 2 * self.parameter + 1
        return 2

    def __str__(self) -> str:
        return f"{self.family.value}({self.parameter})"


def mary(m: int) -> FamilyInstance:
    return FamilyInstance(Family.MARY, m)


def fbbst(t: int) -> FamilyInstance:
    return FamilyInstance(Family.FBBST, t)


def quadtree(d: int) -> FamilyInstance:
    return FamilyInstance(Family.QUADTREE, d)


def harmonic(m: int, order: int = 1) -> Fraction:
    """Exact harmonic number H_m (order 1) or H_m^(r) for higher orders."""
    if m < 0:
        raise ValueError("harmonic number needs m >= 0")
    return sum((Fraction(1, k**order) for k in range(1, m + 1)), Fraction(0))


def occupancy_constant(instance: FamilyInstance) -> Fraction:
    """Exact linear-mean coefficient: 1/(2(H_m - 1)) for m-ary trees,
    1/(2(t+1)(H_{2t+2} - H_{t+1})) for fringe-balanced BSTs."""
    if instance.family is Family.MARY:
        m = instance.parameter
        return 1 / (2 * (harmonic(m) - 1))
    if instance.family is Family.FBBST:
        t = instance.parameter
        return 1 / (2 * (t + 1) * (harmonic(2 * t + 2) - harmonic(t + 1)))
    raise ValueError("occupancy constant is defined for mary and fbbst only")
