"""Ping-pong certificates: exact arc arithmetic over sampled walks.

A pair of maps plays ping-pong on four arcs when the arcs are pairwise
disjoint and each map sends the complement of its source arc strictly
inside its target arc.  Both facts reduce to finitely many endpoint
evaluations because the maps preserve cyclic order, so a certificate is
checkable without any sampling.  Certificates serialize to plain dicts
whose floats round-trip exactly through JSON.

relator_search is the skeptic's tool: a certified pair generates a free
group, so no reduced word can come back to the identity.  The search
brute-forces short words and reports the first one that collapses,
which on genuinely free pairs is none.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .circle import (
    Arc,
    arcs_pairwise_disjoint,
    disjoint_margin,
    dist_many,
    inclusion_margin,
    neighborhood,
    uniform_grid,
)
from .maps import GeneratorSystem, MapWord, map_image_arc


@dataclass(frozen=True)
class PingPongCertificate:
    """Endpoint data and slack for one ping-pong verdict.

    The three named slacks are the worst pairwise arc separation and the
    two image-inclusion margins; worst_slack is their minimum.  All are
    nonnegative whenever verified is True.
    """

    u_f: Arc
    v_f: Arc
    u_g: Arc
    v_g: Arc
    verified: bool
    disjoint_slack: float
    include_f_slack: float
    include_g_slack: float
    worst_slack: float

    def arcs(self) -> Tuple[Arc, Arc, Arc, Arc]:
        return (self.u_f, self.v_f, self.u_g, self.v_g)

    def margins(self) -> Tuple[float, float, float, float]:
        return (self.disjoint_slack, self.include_f_slack,
                self.include_g_slack, self.worst_slack)

    def to_dict(self) -> dict:
        def arc_dict(a: Arc) -> dict:
            return {"start": a.start, "end": a.end}

        return {
            "u_f": arc_dict(self.u_f),
            "v_f": arc_dict(self.v_f),
            "u_g": arc_dict(self.u_g),
            "v_g": arc_dict(self.v_g),
            "verified": self.verified,
            "disjoint_slack": self.disjoint_slack,
            "include_f_slack": self.include_f_slack,
            "include_g_slack": self.include_g_slack,
            "worst_slack": self.worst_slack,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PingPongCertificate":
        def arc_of(d: dict) -> Arc:
            return Arc(float(d["start"]), float(d["end"]))

        return cls(
            arc_of(data["u_f"]),
            arc_of(data["v_f"]),
            arc_of(data["u_g"]),
            arc_of(data["v_g"]),
            bool(data["verified"]),
            float(data["disjoint_slack"]),
            float(data["include_f_slack"]),
            float(data["include_g_slack"]),
            float(data["worst_slack"]),
        )


def check_certificate(f, g, u_f: Arc, v_f: Arc, u_g: Arc, v_g: Arc) -> PingPongCertificate:
    """Exact endpoint verification of the ping-pong inclusions.

    Degenerate (full or empty) arcs yield an unverified certificate with
    -1/2 slack rather than an exception.
    """
    four = (u_f, v_f, u_g, v_g)
    if any(a.full or a.empty for a in four):
        return PingPongCertificate(u_f, v_f, u_g, v_g, False, -0.5, -0.5, -0.5, -0.5)
    dslack = min(disjoint_margin(a, b) for a, b in itertools.combinations(four, 2))
    img_f = map_image_arc(f, u_f.complement())
    img_g = map_image_arc(g, u_g.complement())
    fslack = inclusion_margin(v_f, img_f)
    gslack = inclusion_margin(v_g, img_g)
    verified = arcs_pairwise_disjoint(four) and fslack > 0.0 and gslack > 0.0
    worst = min(dslack, fslack, gslack)
    return PingPongCertificate(u_f, v_f, u_g, v_g, verified,
                               dslack, fslack, gslack, worst)


def walk_candidate_arcs(fwalk, sigma_hat: float, attractor_base: float, radius: float):
    """Source and target balls for one walk: around the repulsor estimate
    and around the pushed base point."""
    if not 0.0 < radius < 0.25:
        raise ValueError("radius must lie in (0, 1/4)")
    target = fwalk.composed if hasattr(fwalk, "composed") else fwalk
    u = neighborhood(sigma_hat, radius)
    v = neighborhood(target.eval_point(attractor_base), radius)
    return u, v


@dataclass(frozen=True)
class TransverseWitness:
    n: int
    eps: float
    arcs: tuple
    transverse: bool


def transverse_test(arcs: Sequence[Arc], n: int, eps: float) -> TransverseWitness:
    """Records whether the four candidate arcs are pairwise disjoint."""
    items = tuple(arcs)
    if len(items) != 4:
        raise ValueError("expected exactly four arcs")
    return TransverseWitness(int(n), float(eps), items, arcs_pairwise_disjoint(items))


def _spellings(max_len: int):
    """Reduced words over f, g as symbol strings, length-lexicographic.

    Symbols are signed letters in outermost-first order; adjacent exact
    inverses are skipped so every emitted word is freely reduced.
    """
    alphabet = (1, -1, 2, -2)
    for length in range(1, max_len + 1):
        frontier = [()]
        for _ in range(length):
            frontier = [w + (s,) for w in frontier for s in alphabet
                        if not w or w[-1] != -s]
        for word in frontier:
            yield word


def relator_search(f, g, max_len: int, probes: int, tol: float):
    """First short reduced word in f, g that acts as the identity.

    Words are tried in length-lexicographic order with letters ordered
    f, f^-1, g, g^-1.  A hit at the probe grid is confirmed on a grid
    ten times finer before being reported.  Returns (found, word); word
    is a MapWord in application order, None when nothing collapses.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if probes < 2:
        raise ValueError("probes must be >= 2")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    system = GeneratorSystem([("f", f), ("g", g)])
    grid = uniform_grid(probes)
    fine = uniform_grid(10 * probes)
    for spelling in _spellings(max_len):
        word = MapWord(system, tuple(reversed(spelling)))
        target = word.as_moebius() if system.is_moebius else word
        if float(np.max(dist_many(target.eval_many(grid), grid))) >= tol:
            continue
        if float(np.max(dist_many(target.eval_many(fine), fine))) < tol:
            return True, word
    return False, None
