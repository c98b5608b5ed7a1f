"""Geometry of the metric circle R/Z.

Points are plain floats reduced to [0, 1).  Arcs are open and oriented:
Arc(s, e) is the set of points swept counterclockwise from s to e.  All
predicates work on endpoints in cyclic order; nothing here ever samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Endpoints this close to an integer snap to 0 when reducing mod 1; the
# same tolerance absorbs wraparound noise in cyclic-gap computations.
REDUCE_TOL = 1e-12
# Two points are considered equal below this distance.  Downstream
# separations are never smaller than 1e-6, so there is a wide safety band.
POINT_TOL = 1e-9


def reduce_mod1(x: float) -> float:
    """Reduce a coordinate to [0, 1)."""
    r = x % 1.0
    # x % 1.0 can return exactly 1.0 for tiny negative x, and values
    # within REDUCE_TOL of 1 are the point 0 up to representation noise.
    if r >= 1.0 - REDUCE_TOL:
        return 0.0
    return r


def reduce_mod1_many(xs) -> np.ndarray:
    r = np.asarray(xs, dtype=float) % 1.0
    return np.where(r >= 1.0 - REDUCE_TOL, 0.0, r)


def dist(a: float, b: float) -> float:
    """Distance on R/Z; never exceeds 1/2."""
    d = abs(a - b) % 1.0
    return d if d <= 0.5 else 1.0 - d


def dist_many(a, b) -> np.ndarray:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def points_equal(a: float, b: float) -> bool:
    return dist(a, b) < POINT_TOL


def signed_offset(a: float, b: float) -> float:
    """Displacement from a to b folded into [-1/2, 1/2)."""
    return (b - a + 0.5) % 1.0 - 0.5


def _offset(a: float, b: float) -> float:
    """Counterclockwise offset from a to b in [0, 1), snapped at the wrap."""
    t = (b - a) % 1.0
    if t >= 1.0 - REDUCE_TOL:
        return 0.0
    return t


@dataclass(frozen=True)
class Arc:
    """Open arc traversed counterclockwise from start to end.

    The two degenerate cases carry flags and endpoint 0.  The structure
    itself does not remember open vs closed; complements of open arcs are
    closed and the caller keeps track (predicates below state which
    convention they apply).
    """

    start: float
    end: float
    full: bool = False
    empty: bool = False

    @property
    def length(self) -> float:
        if self.full:
            return 1.0
        if self.empty:
            return 0.0
        return _offset(self.start, self.end)

    @property
    def diameter(self) -> float:
        return min(self.length, 0.5)

    @property
    def midpoint(self) -> float:
        return reduce_mod1(self.start + 0.5 * self.length)

    def complement(self) -> "Arc":
        """Swap endpoints: the complement of the open arc (s, e) is the
        closed arc [e, s]."""
        if self.full:
            return empty_arc()
        if self.empty:
            return full_circle()
        return Arc(self.end, self.start)

    def contains_point(self, x: float, closed: bool = False) -> bool:
        if self.full:
            return True
        if self.empty:
            return False
        t = _offset(self.start, reduce_mod1(x))
        if closed:
            return t <= self.length
        return 0.0 < t < self.length


def arc(start: float, end: float) -> Arc:
    """Proper open arc from start to end; rejects degenerate endpoints."""
    s = reduce_mod1(start)
    e = reduce_mod1(end)
    if dist(s, e) < REDUCE_TOL:
        raise ValueError(
            "degenerate arc endpoints; use full_circle() or empty_arc()"
        )
    return Arc(s, e)


def full_circle() -> Arc:
    return Arc(0.0, 0.0, full=True)


def empty_arc() -> Arc:
    return Arc(0.0, 0.0, empty=True)


def neighborhood(center: float, eps: float) -> Arc:
    """The eps-ball around center, as an arc; whole circle once eps >= 1/2."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if eps >= 0.5:
        return full_circle()
    c = reduce_mod1(center)
    return Arc(reduce_mod1(c - eps), reduce_mod1(c + eps))


def _disjoint_pair(a: Arc, b: Arc) -> bool:
    if a.empty or b.empty:
        return True
    if a.full or b.full:
        return False
    # Open arcs are disjoint exactly when b fits inside the closed
    # complement of a; touching endpoints therefore count as disjoint.
    g = _offset(a.end, b.start)
    return g + a.length + b.length <= 1.0 + REDUCE_TOL


def arcs_pairwise_disjoint(arcs) -> bool:
    """True iff no two of the open arcs share a point."""
    items = list(arcs)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if not _disjoint_pair(items[i], items[j]):
                return False
    return True


def disjoint_margin(a: Arc, b: Arc) -> float:
    """Signed separation of two proper arcs.

    Positive: the smaller of the two cyclic gaps between them.  Negative:
    minus the smaller penetration depth.  Zero means touching endpoints.
    """
    if a.empty or b.empty:
        return 0.5
    if a.full or b.full:
        return -0.5
    g1 = _offset(a.end, b.start)
    g2 = _offset(b.end, a.start)
    s = a.length + b.length
    if g1 + s <= 1.0 + REDUCE_TOL:
        return min(g1, g2)
    return -min(g1 + s - 1.0, g2 + s - 1.0)


def arc_contains_arc(outer: Arc, inner: Arc) -> bool:
    """True iff every point of inner lies in outer (cyclic-order test)."""
    if inner.empty or outer.full:
        return True
    if outer.empty or inner.full:
        return False
    lead = _offset(outer.start, inner.start)
    return lead + inner.length <= outer.length + REDUCE_TOL


def inclusion_margin(outer: Arc, inner: Arc) -> float:
    """Signed slack of inner inside outer.

    Positive: the smaller of the lead/trail gaps between the endpoints.
    Negative: minus the smaller protrusion.  A strictly positive margin
    certifies that the closure of inner lies in the open outer arc.
    """
    if inner.empty or outer.full:
        return 0.5
    if outer.empty or inner.full:
        return -0.5
    lead = _offset(outer.start, inner.start)
    trail = _offset(inner.end, outer.end)
    excess = inner.length - outer.length
    if lead + inner.length <= outer.length + REDUCE_TOL:
        return min(lead, trail)
    return -min(lead + excess, trail + excess)


def uniform_grid(K: int) -> np.ndarray:
    """The grid {k/K : 0 <= k < K} in increasing order."""
    if K < 1:
        raise ValueError("grid size must be >= 1")
    return np.arange(K, dtype=float) / K
