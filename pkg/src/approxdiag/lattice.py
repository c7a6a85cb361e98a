"""Uniform quantizers and half-open cell geometry over the lattice 2*theta*Z^n.

A lattice point is stored as an integer coordinate vector plus the scalar
quantization parameter, so membership and hashing are exact; the real
embedding 2*theta*coords is derived, never stored.  The quantizer sends x
to the unique lattice point whose half-open cell
[embed - theta, embed + theta) contains it, i.e. floor(x/(2 theta) + 1/2)
per axis, with ties (x exactly on a cell boundary) going to the upper cell.

Floating-point inputs are classified with a documented tie snap: when
x/(2 theta) + 1/2 falls within REL_TIE_SNAP (relative) of an integer it is
treated as that tie.  Decimal parameters such as theta = 0.1 place cell
boundaries at values no float hits exactly; the snap makes probes written
as theta*odd land in the upper cell as the half-open convention demands.
Exact rational inputs (Fraction) bypass the snap entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, UnboundedRegionError
from .rational import to_rational
from .regions import Box, BoxUnion

REL_TIE_SNAP = 1e-9

__all__ = [
    "LatticePoint",
    "quantize",
    "quantize_index",
    "cell_of",
    "lattice_points_in",
    "lattice_image",
]


@dataclass(frozen=True, order=True)
class LatticePoint:
    """Integer lattice coordinates plus quantization parameter."""

    coords: tuple[int, ...]
    theta: float

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError("quantization parameter must be positive")
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def embed(self) -> tuple[float, ...]:
        return tuple(2.0 * self.theta * c for c in self.coords)

    def embed_exact(self) -> tuple[Fraction, ...]:
        two_theta = 2 * to_rational(self.theta)
        return tuple(two_theta * c for c in self.coords)


def quantize_index(x, theta: float) -> int:
    """Scalar quantizer index: floor(x/(2 theta) + 1/2), ties snapped up."""
    if isinstance(x, Fraction):
        t = to_rational(theta)
        q = (x + t) / (2 * t)
        return int(math.floor(q))  # exact: floor of a rational, tie lands up
    if not math.isfinite(x):
        raise DomainError(f"cannot quantize non-finite value {x}")
    q = x / (2.0 * theta) + 0.5
    nearest = math.floor(q + 0.5)
    if abs(q - nearest) <= REL_TIE_SNAP * max(1.0, abs(q)):
        return int(nearest)
    return int(math.floor(q))


def quantize(x, theta: float) -> LatticePoint:
    """Map x to the unique lattice point whose half-open cell contains it."""
    if not theta > 0:
        raise DomainError("quantization parameter must be positive")
    return LatticePoint(tuple(quantize_index(v, theta) for v in x), theta)


def cell_of(q: LatticePoint) -> Box:
    """Half-open cell [embed - theta, embed + theta) of a lattice point."""
    emb = q.embed()
    return Box(
        tuple(v - q.theta for v in emb),
        tuple(v + q.theta for v in emb),
        lower_open=(False,) * q.dim,
        upper_open=(True,) * q.dim,
    )


def _require_bounded(region: BoxUnion):
    if not region.is_bounded():
        raise UnboundedRegionError("lattice enumeration requires a bounded region")


def _axis_intersection_range(lo, hi, lo_open, hi_open, two_theta: Fraction):
    """Index range of embeddings 2*theta*c inside one interval, exactly."""
    flo, fhi = to_rational(lo), to_rational(hi)
    cmin = math.ceil(flo / two_theta)
    if lo_open and flo == two_theta * cmin:
        cmin += 1
    cmax = math.floor(fhi / two_theta)
    if hi_open and fhi == two_theta * cmax:
        cmax -= 1
    return cmin, cmax


def lattice_points_in(region: BoxUnion, theta: float) -> list[LatticePoint]:
    """Lattice points whose embedding lies in the region (intersection
    semantics, exact rational comparisons).  Sorted by coordinates."""
    if not theta > 0:
        raise DomainError("quantization parameter must be positive")
    _require_bounded(region)
    two_theta = 2 * to_rational(theta)
    found: set[tuple[int, ...]] = set()
    for box in region.boxes:
        if box.is_empty():
            continue
        ranges = []
        for i in range(box.dim):
            cmin, cmax = _axis_intersection_range(
                box.lower[i], box.upper[i], box.lower_open[i], box.upper_open[i], two_theta
            )
            if cmin > cmax:
                ranges = None
                break
            ranges.append(range(cmin, cmax + 1))
        if ranges is None:
            continue
        found.update(_product(ranges))
    return [LatticePoint(c, theta) for c in sorted(found)]


def lattice_image(region: BoxUnion, theta: float) -> list[LatticePoint]:
    """Image of the region under the quantizer: every lattice point whose
    cell meets the region, one point per met cell.  Computed from the
    quantizer itself (index intervals per axis, never by sampling), so it is
    consistent with ``quantize`` including its tie treatment: points
    arbitrarily close below an open upper bound land in the bound's own
    cell, so open flags need no range adjustment.  Sorted by coordinates.
    """
    if not theta > 0:
        raise DomainError("quantization parameter must be positive")
    _require_bounded(region)
    found: set[tuple[int, ...]] = set()
    for box in region.boxes:
        if box.is_empty():
            continue
        ranges = []
        for i in range(box.dim):
            cmin = quantize_index(box.lower[i], theta)
            cmax = quantize_index(box.upper[i], theta)
            ranges.append(range(cmin, cmax + 1))
        found.update(_product(ranges))
    return [LatticePoint(c, theta) for c in sorted(found)]


def _product(ranges):
    import itertools

    return itertools.product(*ranges)
