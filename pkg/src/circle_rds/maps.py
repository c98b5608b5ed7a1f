"""Orientation-preserving circle map families.

Four families: Moebius (projective action of positive-determinant 2x2
matrices), piecewise linear homeomorphisms, formal words over a named
generator system, and degree-d lifts of any of these.  Every family
implements:

    eval_point(x)        point image in [0, 1)
    eval_many(xs)        vectorized image
    inverse()            inverse map in the same family
    lift_eval(t)         the canonical increasing degree-one lift, the
                         one with lift_eval(0) in [0, 1)

The circle is identified with the real projective line through
x -> (cos pi x, sin pi x), which turns positive-determinant matrices
into degree-one orientation-preserving diffeomorphisms with the
closed-form derivative 1/|m v|^2 for unimodular m.

Moebius matrices are kept scaled so their largest entry has magnitude
one, with the true unimodular matrix recovered as stored * exp(log_scale).
Compositions renormalize every step, so words of length 10^4 and beyond
neither overflow nor underflow; derivatives and Lipschitz constants are
exposed in log form for the same reason.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circle import Arc, dist, empty_arc, full_circle, reduce_mod1


class MoebiusMap:
    __slots__ = ("a", "b", "c", "d", "log_scale")

    def __init__(self, a: float, b: float, c: float, d: float):
        det = a * d - b * c
        if not det > 0.0:
            raise ValueError("matrix must have positive determinant")
        s = math.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        # det is now 1 within DET_TOL; rescale so max|entry| = 1 and
        # remember the scale in log form
        m = max(abs(a), abs(b), abs(c), abs(d))
        self.a = a / m
        self.b = b / m
        self.c = c / m
        self.d = d / m
        self.log_scale = math.log(m)

    @classmethod
    def _raw(cls, a, b, c, d, log_scale) -> "MoebiusMap":
        obj = object.__new__(cls)
        obj.a, obj.b, obj.c, obj.d = a, b, c, d
        obj.log_scale = log_scale
        return obj

    def __reduce__(self):
        return (MoebiusMap._raw, (self.a, self.b, self.c, self.d, self.log_scale))

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls._raw(1.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def rotation(cls, angle: float) -> "MoebiusMap":
        """Rigid rotation of the circle by `angle` (mod 1)."""
        t = math.pi * reduce_mod1(angle)
        return cls(math.cos(t), -math.sin(t), math.sin(t), math.cos(t))

    @classmethod
    def hyperbolic(cls, strength: float) -> "MoebiusMap":
        """diag(strength, 1/strength): attracts 0, repels 1/2 for strength>1."""
        if not strength > 0.0:
            raise ValueError("strength must be positive")
        return cls(strength, 0.0, 0.0, 1.0 / strength)

    def matrix(self) -> np.ndarray:
        """The unimodular representative (may overflow for long words)."""
        return math.exp(self.log_scale) * np.array(
            [[self.a, self.b], [self.c, self.d]]
        )

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """self after other."""
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        m = max(abs(a), abs(b), abs(c), abs(d))
        return MoebiusMap._raw(
            a / m, b / m, c / m, d / m,
            self.log_scale + other.log_scale + math.log(m),
        )

    def inverse(self) -> "MoebiusMap":
        # adjugate of a unimodular matrix is its inverse; the stored
        # rescaling carries over unchanged
        return MoebiusMap._raw(self.d, -self.b, -self.c, self.a, self.log_scale)

    def eval_point(self, x: float) -> float:
        t = math.pi * x
        vx = math.cos(t)
        vy = math.sin(t)
        num = self.c * vx + self.d * vy
        den = self.a * vx + self.b * vy
        return math.atan2(num, den) / math.pi % 1.0

    def eval_many(self, xs) -> np.ndarray:
        t = np.pi * np.asarray(xs, dtype=float)
        vx = np.cos(t)
        vy = np.sin(t)
        num = self.c * vx + self.d * vy
        den = self.a * vx + self.b * vy
        return np.arctan2(num, den) / np.pi % 1.0

    def log_derivative(self, x: float) -> float:
        t = math.pi * x
        vx = math.cos(t)
        vy = math.sin(t)
        num = self.c * vx + self.d * vy
        den = self.a * vx + self.b * vy
        return -2.0 * self.log_scale - math.log(num * num + den * den)

    def derivative(self, x: float) -> float:
        return math.exp(self.log_derivative(x))

    def log_lipschitz(self) -> float:
        # squared largest singular value of the unimodular representative;
        # sigma^2 of the stored matrix solves y^2 - S y + D^2 = 0
        s = self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2
        det = self.a * self.d - self.b * self.c
        disc = max(s * s - 4.0 * det * det, 0.0)
        sigma2 = 0.5 * (s + math.sqrt(disc))
        return math.log(sigma2) + 2.0 * self.log_scale

    def lipschitz(self) -> float:
        return math.exp(self.log_lipschitz())

    lipschitz_is_exact = True

    def _angle(self, x: float) -> float:
        t = math.pi * x
        vx = math.cos(t)
        vy = math.sin(t)
        return math.atan2(self.c * vx + self.d * vy, self.a * vx + self.b * vy)

    def lift_eval(self, t: float) -> float:
        k = math.floor(t)
        r = t - k
        delta = (self._angle(r) - self._angle(0.0)) % (2.0 * math.pi)
        # the true continuous increment lies in [0, pi); values near 2*pi
        # are wrap noise from r at the seam
        if delta > 1.5 * math.pi:
            delta = 0.0
        return self.eval_point(0.0) + delta / math.pi + k

    def __repr__(self):
        return (
            f"MoebiusMap([[{self.a:.6g}, {self.b:.6g}], "
            f"[{self.c:.6g}, {self.d:.6g}]] * e^{self.log_scale:.6g})"
        )


class PiecewiseLinearMap:
    """Orientation-preserving piecewise-linear circle homeomorphism.

    Defined by breakpoints b_0 < ... < b_{k-1} in [0, 1) and their images
    in matching cyclic order; segments in between are affine with positive
    slope.
    """

    __slots__ = ("breakpoints", "images", "_bx", "_yx", "_lift0")

    def __init__(self, breakpoints: Sequence[float], images: Sequence[float]):
        bp = [reduce_mod1(x) for x in breakpoints]
        im = [reduce_mod1(y) for y in images]
        if len(bp) != len(im):
            raise ValueError("breakpoints and images must have equal length")
        if len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if any(bp[i + 1] <= bp[i] for i in range(len(bp) - 1)):
            raise ValueError("breakpoints must be strictly increasing")
        gaps = [(im[(i + 1) % len(im)] - im[i]) % 1.0 for i in range(len(im))]
        if any(g <= 0.0 for g in gaps) or abs(sum(gaps) - 1.0) > 1e-9:
            raise ValueError("images must be strictly increasing in cyclic order")
        self.breakpoints = tuple(bp)
        self.images = tuple(im)
        # lifted graph on [b_0, b_0 + 1]
        ys = [im[0]]
        for g in gaps[:-1]:
            ys.append(ys[-1] + g)
        self._bx = np.array(bp + [bp[0] + 1.0])
        self._yx = np.array(ys + [ys[0] + 1.0])
        # canonical lift offset: G(0) = G(1) - 1 evaluated on the last segment
        g1 = self._yx[-2] + self._segment_slopes()[-1] * (1.0 - self._bx[-2])
        self._lift0 = math.floor(g1 - 1.0)

    def _segment_slopes(self) -> np.ndarray:
        return np.diff(self._yx) / np.diff(self._bx)

    @property
    def slopes(self) -> np.ndarray:
        return self._segment_slopes()

    def _graph_eval(self, t: float) -> float:
        """The degree-one lift through the raw image data."""
        k = math.floor(t - self._bx[0])
        r = t - k
        j = int(np.searchsorted(self._bx, r, side="right")) - 1
        j = min(max(j, 0), len(self._bx) - 2)
        slope = (self._yx[j + 1] - self._yx[j]) / (self._bx[j + 1] - self._bx[j])
        return self._yx[j] + slope * (r - self._bx[j]) + k

    def lift_eval(self, t: float) -> float:
        return self._graph_eval(t) - self._lift0

    def eval_point(self, x: float) -> float:
        return reduce_mod1(self._graph_eval(reduce_mod1(x)))

    def eval_many(self, xs) -> np.ndarray:
        r = np.asarray(xs, dtype=float) % 1.0
        k = np.floor(r - self._bx[0])
        r = r - k
        vals = np.interp(r, self._bx, self._yx) + k
        out = vals % 1.0
        return np.where(out >= 1.0 - 1e-12, 0.0, out)

    def inverse(self) -> "PiecewiseLinearMap":
        order = np.argsort(self.images)
        inv_bp = [self.images[i] for i in order]
        inv_im = [self.breakpoints[i] for i in order]
        return PiecewiseLinearMap(inv_bp, inv_im)

    def log_lipschitz(self) -> float:
        return math.log(float(np.max(self._segment_slopes())))

    def lipschitz(self) -> float:
        return float(np.max(self._segment_slopes()))

    lipschitz_is_exact = True

    def __repr__(self):
        return f"PiecewiseLinearMap({list(self.breakpoints)}, {list(self.images)})"


class GeneratorSystem:
    """Named base maps with precomputed inverses.

    Letters in words refer to generators by signed 1-based index:
    +i is generator i-1, -i its inverse.
    """

    __slots__ = ("names", "maps", "inverses", "is_moebius")

    def __init__(self, named_maps):
        items = list(named_maps.items()) if isinstance(named_maps, dict) else list(named_maps)
        if not items:
            raise ValueError("generator system needs at least one map")
        self.names = tuple(name for name, _ in items)
        if len(set(self.names)) != len(self.names):
            raise ValueError("generator names must be distinct")
        self.maps = tuple(g for _, g in items)
        self.inverses = tuple(g.inverse() for g in self.maps)
        self.is_moebius = all(isinstance(g, MoebiusMap) for g in self.maps)

    def __len__(self):
        return len(self.maps)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def letter_map(self, letter: int):
        if letter > 0:
            return self.maps[letter - 1]
        return self.inverses[-letter - 1]

    def letter_name(self, letter: int) -> str:
        base = self.names[abs(letter) - 1]
        return base if letter > 0 else base + "^-1"


def reduce_letters(letters) -> tuple:
    """Free reduction: cancel adjacent inverse pairs."""
    out = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


class MapWord:
    """Formal word over a generator system.

    Letters are stored in application order: the first letter acts first.
    Evaluation folds the letters; for all-Moebius systems the word also
    collapses to a single matrix via as_moebius().
    """

    __slots__ = ("system", "letters", "_lift0")

    def __init__(self, system: GeneratorSystem, letters: Sequence[int]):
        n = len(system)
        for l in letters:
            if not isinstance(l, (int, np.integer)) or l == 0 or abs(l) > n:
                raise ValueError(f"letter {l!r} out of range for {n} generators")
        self.system = system
        self.letters = tuple(int(l) for l in letters)
        self._lift0 = None

    @classmethod
    def from_names(cls, system: GeneratorSystem, names: Sequence[str]) -> "MapWord":
        letters = []
        for token in names:
            if token.endswith("^-1"):
                letters.append(-(system.index_of(token[:-3]) + 1))
            else:
                letters.append(system.index_of(token) + 1)
        return cls(system, letters)

    def eval_point(self, x: float) -> float:
        for l in self.letters:
            x = self.system.letter_map(l).eval_point(x)
        return x

    def eval_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        for l in self.letters:
            xs = self.system.letter_map(l).eval_many(xs)
        return xs

    def inverse(self) -> "MapWord":
        return MapWord(self.system, [-l for l in reversed(self.letters)])

    def compose(self, other: "MapWord") -> "MapWord":
        """self after other: other's letters act first."""
        if other.system is not self.system:
            raise ValueError("words must share a generator system")
        return MapWord(self.system, other.letters + self.letters)

    def reduced(self) -> "MapWord":
        return MapWord(self.system, reduce_letters(self.letters))

    def as_moebius(self) -> MoebiusMap:
        if not self.system.is_moebius:
            raise ValueError("word is not over a Moebius system")
        m = MoebiusMap.identity()
        for l in self.letters:
            m = self.system.letter_map(l).compose(m)
        return m

    def log_derivative(self, x: float) -> float:
        """Chain rule along the orbit; letters must be differentiable."""
        total = 0.0
        for l in self.letters:
            g = self.system.letter_map(l)
            if not hasattr(g, "log_derivative"):
                raise ValueError("word contains a letter without a derivative")
            total += g.log_derivative(x)
            x = g.eval_point(x)
        return total

    def derivative(self, x: float) -> float:
        return math.exp(self.log_derivative(x))

    def log_lipschitz(self) -> float:
        """Product of the letters' constants: an upper bound for words."""
        return sum(self.system.letter_map(l).log_lipschitz() for l in self.letters)

    def lipschitz(self) -> float:
        return math.exp(self.log_lipschitz())

    # a product of letter constants only bounds the true constant
    lipschitz_is_exact = False

    def lift_eval(self, t: float) -> float:
        if self._lift0 is None:
            w0 = 0.0
            for l in self.letters:
                w0 = self.system.letter_map(l).lift_eval(w0)
            self._lift0 = math.floor(w0)
        v = t
        for l in self.letters:
            v = self.system.letter_map(l).lift_eval(v)
        return v - self._lift0

    def __repr__(self):
        return "MapWord(" + " ".join(self.system.letter_name(l) for l in self.letters) + ")"


class LiftedMap:
    """Degree-d lift of a circle map.

    x -> (G(d x) + branch) / d  for the canonical lift G of the base map;
    commutes with rotation by 1/d and satisfies pi_d . lift = base . pi_d
    with pi_d(x) = d x mod 1.
    """

    __slots__ = ("base", "degree", "branch")

    def __init__(self, base, degree: int, branch: int):
        if degree < 2:
            raise ValueError("degree must be >= 2")
        if not 0 <= branch < degree:
            raise ValueError("branch must lie in [0, degree)")
        self.base = base
        self.degree = int(degree)
        self.branch = int(branch)

    def eval_point(self, x: float) -> float:
        d = self.degree
        return reduce_mod1((self.base.lift_eval(d * x) + self.branch) / d)

    def eval_many(self, xs) -> np.ndarray:
        return np.array([self.eval_point(float(x)) for x in np.asarray(xs, dtype=float)])

    def lift_eval(self, t: float) -> float:
        # already canonical: G(0) in [0,1) and branch < degree keep the
        # value at 0 inside [0, 1)
        return (self.base.lift_eval(self.degree * t) + self.branch) / self.degree

    def inverse(self) -> "LiftedMap":
        base_inv = self.base.inverse()
        y0 = self.eval_point(0.0)
        best = None
        for b in range(self.degree):
            cand = LiftedMap(base_inv, self.degree, b)
            err = dist(cand.eval_point(y0), 0.0)
            if best is None or err < best[0]:
                best = (err, cand)
        # candidates differ by exactly 1/degree, so the right branch wins
        # by a wide margin
        return best[1]

    def log_derivative(self, x: float) -> float:
        return self.base.log_derivative(reduce_mod1(self.degree * x))

    def derivative(self, x: float) -> float:
        return math.exp(self.log_derivative(x))

    def log_lipschitz(self) -> float:
        # slope at x equals the base slope at d x mod 1, so suprema agree
        return self.base.log_lipschitz()

    def lipschitz(self) -> float:
        return math.exp(self.log_lipschitz())

    @property
    def lipschitz_is_exact(self):
        return self.base.lipschitz_is_exact

    def __repr__(self):
        return f"LiftedMap({self.base!r}, degree={self.degree}, branch={self.branch})"


def moebius_eval(g: MoebiusMap, x: float) -> float:
    return g.eval_point(x)


def moebius_derivative(g: MoebiusMap, x: float) -> float:
    return g.derivative(x)


def lipschitz_constant(g) -> float:
    """Lipschitz constant of a map in one of the four families.

    Exact for Moebius (squared top singular value), piecewise-linear
    (max slope) and lifts (inherited); an upper bound for words, flagged
    through g.lipschitz_is_exact.
    """
    if not hasattr(g, "lipschitz"):
        raise TypeError(f"no Lipschitz data for {type(g).__name__}")
    return g.lipschitz()


def map_inverse(g):
    return g.inverse()


def map_image_arc(g, a: Arc) -> Arc:
    """Exact image of an arc: orientation-preserving maps send the arc
    (s, e) to (g(s), g(e))."""
    if a.full:
        return full_circle()
    if a.empty:
        return empty_arc()
    return Arc(g.eval_point(a.start), g.eval_point(a.end))


def lift(base, d: int, branch: int) -> LiftedMap:
    return LiftedMap(base, d, branch)
