"""Comparison-function algebra (class K and K-infinity scalar gains).

Certificates are expressed with strictly increasing scalar functions that
vanish at zero.  Three representable families cover every certificate we
accept: linear gains a*r, power laws a*r**b, and piecewise-linear curves
anchored at (0, 0).  All three admit exact evaluation and exact inversion,
which keeps the accuracy-parameter inequalities decidable instead of merely
samplable.  The inversion contract is |f(inverse(y)) - y| <= TOL_INV
relative; the closed forms land far below that bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError, RangeError

TOL_INV = 1e-9

_FORMS = ("linear", "power", "pwl")


@dataclass(frozen=True)
class KFunction:
    """Strictly increasing scalar gain with value 0 at 0.

    ``form`` is one of ``linear`` (a*r), ``power`` (a*r**b) or ``pwl``
    (piecewise linear through ``points``, extended past the last breakpoint
    with the final segment slope).  Every representable form is unbounded,
    hence class K-infinity.
    """

    form: str
    a: float = 1.0
    b: float = 1.0
    points: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.form not in _FORMS:
            raise DomainError(f"unknown comparison-function form {self.form!r}")
        if self.form in ("linear", "power"):
            if not self.a > 0:
                raise DomainError("coefficient a must be positive")
            if self.form == "power" and not self.b > 0:
                raise DomainError("exponent b must be positive")
        else:
            pts = tuple((float(r), float(y)) for r, y in self.points)
            if len(pts) < 2 or pts[0] != (0.0, 0.0):
                raise DomainError("pwl form needs >= 2 points starting at (0, 0)")
            for (r0, y0), (r1, y1) in zip(pts, pts[1:]):
                if not (r1 > r0 and y1 > y0):
                    raise DomainError("pwl breakpoints must be strictly increasing")
            object.__setattr__(self, "points", pts)

    # -- constructors ---------------------------------------------------

    @staticmethod
    def linear(a: float) -> "KFunction":
        return KFunction("linear", a=float(a))

    @staticmethod
    def power(a: float, b: float) -> "KFunction":
        return KFunction("power", a=float(a), b=float(b))

    @staticmethod
    def piecewise_linear(points) -> "KFunction":
        return KFunction("pwl", points=tuple(points))

    @staticmethod
    def identity() -> "KFunction":
        return KFunction("linear", a=1.0)

    # -- evaluation -----------------------------------------------------

    @property
    def is_kinf(self) -> bool:
        """All representable forms grow without bound."""
        return True

    def __call__(self, r: float) -> float:
        if r < 0:
            raise DomainError(f"comparison functions are defined on r >= 0, got {r}")
        if self.form == "linear":
            return self.a * r
        if self.form == "power":
            return self.a * r ** self.b
        return self._pwl_eval(r)

    def _pwl_eval(self, r: float) -> float:
        pts = self.points
        if r >= pts[-1][0]:
            r0, y0 = pts[-2]
            r1, y1 = pts[-1]
            return y1 + (r - r1) * (y1 - y0) / (r1 - r0)
        for (r0, y0), (r1, y1) in zip(pts, pts[1:]):
            if r < r1:
                return y0 + (r - r0) * (y1 - y0) / (r1 - r0)
        raise AssertionError("unreachable")

    def inverse(self, y: float) -> float:
        """Exact inverse; defined on y >= 0 since every form is K-infinity."""
        if y < 0:
            raise RangeError(f"inverse is defined on y >= 0, got {y}")
        if y == 0:
            return 0.0
        if self.form == "linear":
            return y / self.a
        if self.form == "power":
            return (y / self.a) ** (1.0 / self.b)
        return self._pwl_inverse(y)

    def _pwl_inverse(self, y: float) -> float:
        pts = self.points
        if y >= pts[-1][1]:
            r0, y0 = pts[-2]
            r1, y1 = pts[-1]
            return r1 + (y - y1) * (r1 - r0) / (y1 - y0)
        for (r0, y0), (r1, y1) in zip(pts, pts[1:]):
            if y < y1:
                return r0 + (y - y0) * (r1 - r0) / (y1 - y0)
        raise AssertionError("unreachable")

    # -- serialization --------------------------------------------------

    def to_json(self) -> dict:
        if self.form == "linear":
            return {"form": "linear", "a": self.a}
        if self.form == "power":
            return {"form": "power", "a": self.a, "b": self.b}
        return {"form": "pwl", "points": [list(p) for p in self.points]}

    @staticmethod
    def from_json(doc: dict) -> "KFunction":
        form = doc.get("form")
        if form == "linear":
            return KFunction.linear(doc["a"])
        if form == "power":
            return KFunction.power(doc["a"], doc.get("b", 1.0))
        if form == "pwl":
            return KFunction.piecewise_linear(tuple(map(tuple, doc["points"])))
        raise DomainError(f"unknown comparison-function form {form!r}")


def compose_eval(f: KFunction, g: KFunction, r: float) -> float:
    """f(g(r)); used for the composed decrease gain in the accuracy check."""
    return f(g(r))


def compose_inverse(f: KFunction, g: KFunction, y: float) -> float:
    """(f o g)^-1 (y) = g^-1(f^-1(y))."""
    return g.inverse(f.inverse(y))
