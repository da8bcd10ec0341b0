"""logtrees: moment asymptotics, phase changes, and limit-law fixed points
for random m-ary search trees, fringe-balanced BSTs, and quadtrees."""

__version__ = "0.1.0"

from .families import Family, FamilyInstance, fbbst, mary, quadtree

__all__ = [
    "Family",
    "FamilyInstance",
    "mary",
    "fbbst",
    "quadtree",
    "__version__",
]
