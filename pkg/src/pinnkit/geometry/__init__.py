"""Computational domains: primitives, CSG composition and space-time products."""

from pinnkit.geometry.base import (
    EPS_BOUNDARY,
    AmbiguousNormalError,
    Geometry,
    GeometryError,
    SamplingError,
)
from pinnkit.geometry.csg import Difference, Intersection, Union
from pinnkit.geometry.primitives import (
    Cuboid,
    Disk,
    Hypercube,
    Hypersphere,
    Interval,
    Polygon,
    Rectangle,
    Sphere,
    Triangle,
)
from pinnkit.geometry.timedomain import SpaceTimeDomain

__all__ = [
    "EPS_BOUNDARY", "AmbiguousNormalError", "Geometry", "GeometryError", "SamplingError",
    "Difference", "Intersection", "Union",
    "Cuboid", "Disk", "Hypercube", "Hypersphere", "Interval", "Polygon", "Rectangle",
    "Sphere", "Triangle", "SpaceTimeDomain",
]
