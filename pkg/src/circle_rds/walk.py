"""Seeded realizations of right, left and inverse random walks.

A walk is driven by a finite-support step measure whose atoms are words
over one generator system.  Letters are drawn from a counter-based
generator (Philox) keyed by (seed, stream_id), so distinct stream ids
give independent streams and any (seed, stream_id, n) triple reproduces
the same letters bit for bit, in parallel or not.

Composition conventions, with omega_0 the first letter drawn:

    right walk    f_{omega_n} . ... . f_{omega_0}     (new letter last)
    left walk     f_{omega_0} . ... . f_{omega_n}     (new letter first)
    inverse walk  f_{omega_0}^-1 . ... . f_{omega_n}^-1

All three consume n+1 letters for step count n.  The inverse walk is
the exact inverse of the right walk over the same stream; for Moebius
atoms the two accumulation orders produce bitwise-identical matrices
(adjugation reverses products entry by entry), which the tests pin.
"""

from __future__ import annotations

import numpy as np

from .circle import dist_many, uniform_grid
from .maps import MapWord, MoebiusMap

_MASK64 = (1 << 64) - 1


def _rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    key = [seed & _MASK64, stream_id & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))


class StepMeasure:
    """Finite-support probability measure on circle maps.

    Atoms are (MapWord, weight) pairs over a shared generator system;
    weights must be positive and sum to 1 within 1e-12 (then they are
    renormalized exactly).  The symmetric flag is a word-level check:
    every atom's inverse word must appear with equal weight.  Maps of
    order two under a different word are not recognized as their own
    inverses.
    """

    __slots__ = (
        "atoms",
        "weights",
        "cumulative",
        "system",
        "is_moebius",
        "symmetric",
        "_maps",
        "_inverses",
    )

    def __init__(self, atoms):
        pairs = list(atoms)
        if not pairs:
            raise ValueError("step measure needs at least one atom")
        words = []
        weights = []
        for w, p in pairs:
            if not isinstance(w, MapWord):
                raise ValueError("atoms must be MapWord instances")
            if not p > 0.0:
                raise ValueError("atom weights must be positive")
            words.append(w)
            weights.append(float(p))
        system = words[0].system
        if any(w.system is not system for w in words):
            raise ValueError("atoms must share one generator system")
        total = sum(weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        self.weights = np.array(weights) / total
        self.cumulative = np.cumsum(self.weights)
        self.atoms = tuple(zip(words, (float(p) for p in self.weights)))
        self.system = system
        self.is_moebius = system.is_moebius
        if self.is_moebius:
            self._maps = tuple(w.as_moebius() for w in words)
            self._inverses = tuple(m.inverse() for m in self._maps)
        else:
            self._maps = tuple(words)
            self._inverses = tuple(w.inverse() for w in words)
        by_letters = {}
        for i, w in enumerate(words):
            by_letters.setdefault(w.reduced().letters, i)
        symmetric = True
        for i, w in enumerate(words):
            j = by_letters.get(w.inverse().reduced().letters)
            if j is None or abs(self.weights[j] - self.weights[i]) > 1e-12:
                symmetric = False
                break
        self.symmetric = symmetric

    def __len__(self):
        return len(self._maps)

    def atom_map(self, index: int):
        return self._maps[index]

    def atom_inverse(self, index: int):
        return self._inverses[index]

    def atom_word(self, index: int) -> MapWord:
        return self.atoms[index][0]

    def degeneracy_warnings(self) -> list:
        """Cheap necessary checks; a quiet result proves nothing."""
        out = []
        if len(self._maps) == 1:
            out.append("support is a single atom")
        probe = uniform_grid(1000)
        commuting = True
        for i in range(len(self._maps)):
            for j in range(i + 1, len(self._maps)):
                f, g = self._maps[i], self._maps[j]
                fg = f.eval_many(g.eval_many(probe))
                gf = g.eval_many(f.eval_many(probe))
                if np.max(dist_many(fg, gf)) > 1e-9:
                    commuting = False
        if commuting and len(self._maps) > 1:
            out.append("all atoms commute on a 1000-point probe")
        return out


def sample_letters(mu: StepMeasure, seed: int, stream_id: int, n: int) -> np.ndarray:
    """n i.i.d. atom indices distributed per the weights."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    u = _rng_stream(seed, stream_id).random(n)
    idx = np.searchsorted(mu.cumulative, u, side="right")
    return np.minimum(idx, len(mu) - 1).astype(np.int64)


class WalkState:
    """Right walk extended one letter at a time.

    Drawing letters from a persistent generator one by one yields the
    same stream as a single block draw, so an extended state always
    matches right_walk at the same step count bit for bit.
    """

    __slots__ = ("measure", "seed", "stream_id", "step_count", "composed", "letter_log", "_rng")

    def __init__(self, measure: StepMeasure, seed: int, stream_id: int):
        self.measure = measure
        self.seed = seed
        self.stream_id = stream_id
        self._rng = _rng_stream(seed, stream_id)
        first = self._draw()
        self.letter_log = [first]
        self.composed = measure.atom_map(first)
        self.step_count = 0

    def _draw(self) -> int:
        u = self._rng.random()
        i = int(np.searchsorted(self.measure.cumulative, u, side="right"))
        return min(i, len(self.measure) - 1)

    def advance(self, steps: int = 1) -> "WalkState":
        for _ in range(steps):
            letter = self._draw()
            self.letter_log.append(letter)
            self.composed = self.measure.atom_map(letter).compose(self.composed)
            self.step_count += 1
        return self

    def inverse_map(self):
        return self.composed.inverse()


def right_walk(mu: StepMeasure, seed: int, stream_id: int, n: int):
    """f_{omega_n} . ... . f_{omega_0}; n = 0 gives f_{omega_0}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return WalkState(mu, seed, stream_id).advance(n).composed


def left_walk(mu: StepMeasure, seed: int, stream_id: int, n: int):
    """f_{omega_0} . ... . f_{omega_n} over the same stream as right_walk."""
    letters = sample_letters(mu, seed, stream_id, n + 1)
    m = mu.atom_map(int(letters[0]))
    for letter in letters[1:]:
        m = m.compose(mu.atom_map(int(letter)))
    return m


def inverse_walk(mu: StepMeasure, seed: int, stream_id: int, n: int):
    """(f^n_omega)^-1 = f_{omega_0}^-1 . ... . f_{omega_n}^-1."""
    letters = sample_letters(mu, seed, stream_id, n + 1)
    m = mu.atom_inverse(int(letters[0]))
    for letter in letters[1:]:
        m = m.compose(mu.atom_inverse(int(letter)))
    return m
