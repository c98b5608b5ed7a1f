"""Experiment drivers: rate curves over walk horizon with fixed seeds.

Each driver consumes an ExperimentConfig and produces a report object
with per-horizon counts, Wilson intervals, and a decay fit where the
report's target quantity stayed strictly between 0 and 1.  Trials are
independent across a fixed stream-id layout (8 streams per trial:
channel 0 drives the first measure, 1 the second, 2 the auxiliary
independent walk), so any trial can be recomputed in isolation and
parallel execution is byte-identical to serial.

A trial at horizon n is undetermined when its question is structurally
vacuous at that scale: four disjoint balls need radius < 1/8, a single
inclusion needs radius < 1/2, a self-distance threshold above 1/2 holds
for every pair of points.  Undetermined trials never count as successes
and their rows are excluded from decay fits when nothing at that
horizon was determined.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor, as_completed
import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circle import dist, inclusion_margin, neighborhood, reduce_mod1
from .estimators import DecayFit, wilson_interval
from .maps import LiftedMap, MapWord, GeneratorSystem, map_image_arc
from .pingpong import PingPongCertificate, check_certificate, transverse_test, walk_candidate_arcs
from .walk import StepMeasure, WalkState, sample_letters

RADIUS_FLOOR = 1e-9
PACKING_LIMIT = 0.125  # four disjoint balls force radius < 1/8
STREAMS_PER_TRIAL = 8
_CHUNK = 128  # trials per worker task; fixed so results ignore worker count


@dataclass(frozen=True)
class ExperimentConfig:
    """Frozen inputs shared by the experiment drivers."""

    measure_1: StepMeasure
    measure_2: Optional[StepMeasure]
    n_values: tuple
    trials: int
    eps: tuple
    K: int
    seed: int
    x0: float
    y0: float
    radius: float = 0.02
    asserted_proximal: bool = True

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        if not ns or ns[0] < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n_values must be strictly increasing and >= 1")
        object.__setattr__(self, "n_values", ns)
        es = tuple(float(e) for e in self.eps)
        if not es or any(not 0.0 < e < 1.0 for e in es):
            raise ValueError("eps values must lie in (0, 1)")
        object.__setattr__(self, "eps", es)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.K < 3:
            raise ValueError("K must be >= 3")
        if not 0.0 < self.radius < 0.25:
            raise ValueError("radius must lie in (0, 1/4)")
        object.__setattr__(self, "x0", reduce_mod1(self.x0))
        object.__setattr__(self, "y0", reduce_mod1(self.y0))


@dataclass(frozen=True)
class RateReport:
    """Per-horizon counts with Wilson intervals and an optional decay fit.

    rates count undetermined trials as failures.  The fit regresses
    log(1 - rate) for fit_target "failure", log(rate) for "success",
    over horizons with at least one determined trial and a target
    strictly between the degenerate values.
    """

    name: str
    fit_target: str
    eps: float
    n_values: tuple
    trials: int
    successes: tuple
    undetermined: tuple
    rates: tuple
    wilson: tuple
    fit: Optional[DecayFit]
    statuses: tuple = ()    # per trial: per n status string

    @classmethod
    def from_outcomes(cls, name, fit_target, eps, n_values, trials, statuses):
        """statuses: per-trial sequences of 'success'/'failure'/'undetermined'."""
        if fit_target not in ("failure", "success"):
            raise ValueError("fit_target must be failure or success")
        succ, undet = [], []
        for col, _ in enumerate(n_values):
            s = sum(1 for row in statuses if row[col] == "success")
            u = sum(1 for row in statuses if row[col] == "undetermined")
            succ.append(s)
            undet.append(u)
        rates = tuple(s / trials for s in succ)
        wil = tuple(wilson_interval(s, trials) for s in succ)
        fit_ns, fit_ys = [], []
        for n, s, u, r in zip(n_values, succ, undet, rates):
            if trials - u <= 0:
                continue
            y = 1.0 - r if fit_target == "failure" else r
            if y > 0.0:
                fit_ns.append(n)
                fit_ys.append(y)
        fit = DecayFit.fit(fit_ns, fit_ys)
        return cls(name, fit_target, float(eps), tuple(n_values), trials,
                   tuple(succ), tuple(undet), rates, wil, fit,
                   tuple(tuple(row) for row in statuses))


def _map_trial_chunks(fn, args, trials, workers):
    """Run fn(args, lo, hi) over fixed-size trial spans, merged in order."""
    spans = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]
    if workers <= 1 or len(spans) <= 1:
        out = []
        for lo, hi in spans:
            out.extend(fn(args, lo, hi))
        return out
    results = [None] * len(spans)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, args, lo, hi): k
                   for k, (lo, hi) in enumerate(spans)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
    return [row for chunk in results for row in chunk]


def _dual_states(measure, seed, stream_id):
    """Two cursors on one letter stream: horizon n and horizon 2n."""
    return WalkState(measure, seed, stream_id), WalkState(measure, seed, stream_id)


def _theorem_a_chunk(args, lo, hi):
    cfg, eps = args
    rows = []
    for t in range(lo, hi):
        wa, wa2 = _dual_states(cfg.measure_1, cfg.seed, STREAMS_PER_TRIAL * t)
        wb, wb2 = _dual_states(cfg.measure_2, cfg.seed, STREAMS_PER_TRIAL * t + 1)
        row = []
        for n in cfg.n_values:
            wa.advance(n - wa.step_count)
            wb.advance(n - wb.step_count)
            wa2.advance(2 * n - wa2.step_count)
            wb2.advance(2 * n - wb2.step_count)
            radius = max(eps ** n, RADIUS_FLOOR)
            if radius >= PACKING_LIMIT:
                row.append(("undetermined", None))
                continue
            s1 = wa2.inverse_map().eval_point(cfg.x0)
            s2 = wb2.inverse_map().eval_point(cfg.x0)
            u_f, v_f = walk_candidate_arcs(wa, s1, cfg.x0, radius)
            u_g, v_g = walk_candidate_arcs(wb, s2, cfg.x0, radius)
            witness = transverse_test((u_f, v_f, u_g, v_g), n, eps)
            cert = check_certificate(wa.composed, wb.composed, u_f, v_f, u_g, v_g)
            if witness.transverse and cert.verified:
                row.append(("success", cert))
            else:
                row.append(("failure", None))
        rows.append(row)
    return rows


def trial_pair_maps(cfg: ExperimentConfig, trial: int, n: int):
    """Composed maps of both walks for one trial at horizon n."""
    if cfg.measure_2 is None:
        raise ValueError("needs two measures")
    wa = WalkState(cfg.measure_1, cfg.seed, STREAMS_PER_TRIAL * trial)
    wa.advance(n - wa.step_count)
    wb = WalkState(cfg.measure_2, cfg.seed, STREAMS_PER_TRIAL * trial + 1)
    wb.advance(n - wb.step_count)
    return wa.composed, wb.composed


def single_trial_certificate(cfg: ExperimentConfig, eps: float, n: int,
                             trial: int):
    """Recompute one trial cell through the full driver code path;
    returns (status, certificate or None)."""
    if cfg.measure_2 is None:
        raise ValueError("needs two measures")
    sub = dataclasses.replace(cfg, n_values=(int(n),), eps=(float(eps),))
    row = _theorem_a_chunk((sub, float(eps)), trial, trial + 1)
    return row[0][0]


@dataclass(frozen=True)
class TheoremAResult:
    reports: tuple          # one RateReport per eps
    certificates: tuple     # (eps, n, trial, PingPongCertificate), sorted
    statuses: tuple         # per eps: per trial: per n status string


def theorem_a_experiment(cfg: ExperimentConfig, workers: int = 1) -> TheoremAResult:
    """Success curve for independent walk pairs becoming ping-pong pairs.

    Per trial and horizon, candidate balls of radius eps^n sit on the
    pushed base point and the pullback repulsor estimate at horizon 2n
    of each walk; success means the four balls are transverse and the
    pair certifies.  Every success carries its certificate.
    """
    if cfg.measure_2 is None:
        raise ValueError("theorem_a needs two measures")
    reports, certs, all_statuses = [], [], []
    for eps in cfg.eps:
        rows = _map_trial_chunks(_theorem_a_chunk, (cfg, eps), cfg.trials, workers)
        statuses = tuple(tuple(status for status, _ in row) for row in rows)
        reports.append(RateReport.from_outcomes(
            "theorem_a", "failure", eps, cfg.n_values, cfg.trials, statuses))
        for t, row in enumerate(rows):
            for n, (status, cert) in zip(cfg.n_values, row):
                if cert is not None:
                    certs.append((eps, n, t, cert))
        all_statuses.append(statuses)
    certs.sort(key=lambda item: (item[0], item[1], item[2]))
    return TheoremAResult(tuple(reports), tuple(certs), tuple(all_statuses))


@dataclass(frozen=True)
class DensityResult:
    radius: float
    horizon: int
    certified: tuple  # per n in 1..horizon
    density: float


def theorem_b_density(cfg: ExperimentConfig, workers: int = 1) -> DensityResult:
    """Fraction of horizons n <= N at which one fixed realization pair
    certifies with a fixed ball radius (trial-0 streams)."""
    if cfg.measure_2 is None:
        raise ValueError("density needs two measures")
    if cfg.radius >= PACKING_LIMIT:
        raise ValueError("radius at or above 1/8 can never certify")
    horizon = cfg.n_values[-1]
    wa, wa2 = _dual_states(cfg.measure_1, cfg.seed, 0)
    wb, wb2 = _dual_states(cfg.measure_2, cfg.seed, 1)
    flags = []
    for n in range(1, horizon + 1):
        wa.advance(1)
        wb.advance(1)
        wa2.advance(2)
        wb2.advance(2)
        s1 = wa2.inverse_map().eval_point(cfg.x0)
        s2 = wb2.inverse_map().eval_point(cfg.x0)
        u_f, v_f = walk_candidate_arcs(wa, s1, cfg.x0, cfg.radius)
        u_g, v_g = walk_candidate_arcs(wb, s2, cfg.x0, cfg.radius)
        cert = check_certificate(wa.composed, wb.composed, u_f, v_f, u_g, v_g)
        flags.append(bool(cert.verified))
    return DensityResult(cfg.radius, horizon, tuple(flags),
                         sum(flags) / horizon)


def _inclusion_chunk(args, lo, hi):
    cfg, eps = args
    rows = []
    for t in range(lo, hi):
        wa, wa2 = _dual_states(cfg.measure_1, cfg.seed, STREAMS_PER_TRIAL * t)
        row = []
        for n in cfg.n_values:
            wa.advance(n - wa.step_count)
            wa2.advance(2 * n - wa2.step_count)
            radius = max(eps ** n, RADIUS_FLOOR)
            if radius >= 0.5:
                row.append("undetermined")
                continue
            sigma = wa2.inverse_map().eval_point(cfg.x0)
            source = neighborhood(sigma, radius)
            target = neighborhood(wa.composed.eval_point(cfg.x0), radius)
            image = map_image_arc(wa.composed, source.complement())
            row.append("success" if inclusion_margin(target, image) > 0.0
                       else "failure")
        rows.append(row)
    return rows


def inclusion_rate_experiment(cfg: ExperimentConfig, workers: int = 1) -> tuple:
    """Rate of f^n mapping everything outside the repulsor ball into the
    attractor ball, radius eps^n on both.  One RateReport per eps."""
    reports = []
    for eps in cfg.eps:
        rows = _map_trial_chunks(_inclusion_chunk, (cfg, eps), cfg.trials, workers)
        reports.append(RateReport.from_outcomes(
            "inclusion", "failure", eps, cfg.n_values, cfg.trials, tuple(tuple(r) for r in rows)))
    return tuple(reports)


def _self_distance_chunk(args, lo, hi):
    cfg, t_base = args
    rows = []
    for t in range(lo, hi):
        wa, wa2 = _dual_states(cfg.measure_1, cfg.seed, STREAMS_PER_TRIAL * t)
        row = []
        for n in cfg.n_values:
            wa.advance(n - wa.step_count)
            wa2.advance(2 * n - wa2.step_count)
            threshold = t_base ** n
            if threshold >= 0.5:
                row.append("undetermined")
                continue
            a = wa.composed.eval_point(cfg.x0)
            sigma = wa2.inverse_map().eval_point(cfg.x0)
            row.append("success" if dist(a, sigma) <= threshold else "failure")
        rows.append(row)
    return rows


def self_distance_experiment(cfg: ExperimentConfig, t: float, workers: int = 1) -> RateReport:
    """Rate of the pushed point landing within t^n of the repulsor
    estimate; the success rate itself is the decaying quantity."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    rows = _map_trial_chunks(_self_distance_chunk, (cfg, t), cfg.trials, workers)
    return RateReport.from_outcomes(
        "self_distance", "success", t, cfg.n_values, cfg.trials,
        tuple(tuple(r) for r in rows))


def _ramp_kernel(d: np.ndarray, bandwidth: float) -> np.ndarray:
    # 1 on d <= bandwidth, linear down to 0 at d >= 2*bandwidth.
    return np.clip((2.0 * bandwidth - d) / bandwidth, 0.0, 1.0)


def _independence_chunk(args, lo, hi):
    cfg, bandwidth = args
    n_max = cfg.n_values[-1]
    rows = []
    for t in range(lo, hi):
        wa, wa2 = _dual_states(cfg.measure_1, cfg.seed, STREAMS_PER_TRIAL * t)
        aux_letters = sample_letters(cfg.measure_1, cfg.seed,
                                     STREAMS_PER_TRIAL * t + 2, 2 * n_max + 1)
        aux = cfg.measure_1.atom_map(int(aux_letters[0]))
        aux_at = 0
        row = []
        for n in cfg.n_values:
            wa.advance(n - wa.step_count)
            wa2.advance(2 * n - wa2.step_count)
            while aux_at < 2 * n:
                aux_at += 1
                aux = aux.compose(cfg.measure_1.atom_map(int(aux_letters[aux_at])))
            a = wa.composed.eval_point(cfg.x0)
            sigma = wa2.inverse_map().eval_point(cfg.x0)
            t_hat = aux.eval_point(cfg.x0)
            row.append((dist(a, sigma), dist(sigma, t_hat)))
        rows.append(row)
    return rows


@dataclass(frozen=True)
class IndependenceResult:
    bandwidth: float
    n_values: tuple
    gaps: tuple
    stderrs: tuple
    fit: Optional[DecayFit]


def independence_gap_experiment(cfg: ExperimentConfig, bandwidth: float,
                                workers: int = 1) -> IndependenceResult:
    """Difference between the dependent pair (pushed point, own repulsor)
    and an independent surrogate pair under a tent kernel.

    The surrogate replaces the pushed point by the attractor estimate of
    a left walk on a fresh stream at horizon 2n, which has the same law
    but is independent of the repulsor estimate.
    """
    if not cfg.asserted_proximal:
        raise ValueError("independence gap needs a proximal measure")
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")
    if cfg.trials < 1000:
        raise ValueError("need at least 1000 trials")
    rows = _map_trial_chunks(_independence_chunk, (cfg, bandwidth), cfg.trials, workers)
    gaps, errs = [], []
    for col, n in enumerate(cfg.n_values):
        dep = np.array([rows[t][col][0] for t in range(cfg.trials)])
        ind = np.array([rows[t][col][1] for t in range(cfg.trials)])
        psi_dep = _ramp_kernel(dep, bandwidth)
        psi_ind = _ramp_kernel(ind, bandwidth)
        gaps.append(abs(float(np.mean(psi_dep)) - float(np.mean(psi_ind))))
        errs.append(math.sqrt((float(np.var(psi_dep)) + float(np.var(psi_ind)))
                              / cfg.trials))
    fit = DecayFit.fit(cfg.n_values, gaps, stderrs=errs)
    return IndependenceResult(float(bandwidth), cfg.n_values, tuple(gaps),
                              tuple(errs), fit)


def _hausdorff_point_sets(a: Sequence[float], b: Sequence[float]) -> float:
    worst = 0.0
    for x in a:
        worst = max(worst, min(dist(x, y) for y in b))
    for y in b:
        worst = max(worst, min(dist(x, y) for x in a))
    return worst


def lifted_measure(measure: StepMeasure, degree: int,
                   branches: Optional[Sequence[int]] = None) -> StepMeasure:
    """The measure upstairs: every generator replaced by a degree-d lift."""
    base = measure.system
    if branches is None:
        branches = [0] * len(base.names)
    lifted_system = GeneratorSystem([
        (name, LiftedMap(g, degree, int(b)))
        for name, g, b in zip(base.names, base.maps, branches)
    ])
    atoms = [(MapWord(lifted_system, word.letters), weight)
             for word, weight in measure.atoms]
    return StepMeasure(atoms)


def _lift_chunk(args, lo, hi):
    cfg, degree, branches, horizon = args
    lifted = lifted_measure(cfg.measure_1, degree, branches)
    out = []
    for t in range(lo, hi):
        stream = STREAMS_PER_TRIAL * t
        base_state = WalkState(cfg.measure_1, cfg.seed, stream)
        base_state.advance(2 * horizon)
        sigma = base_state.inverse_map().eval_point(cfg.x0)
        target = [(sigma + j) / degree for j in range(degree)]
        lifted_state = WalkState(lifted, cfg.seed, stream)
        lifted_state.advance(2 * horizon)
        inv = lifted_state.inverse_map()
        found = [inv.eval_point((cfg.y0 + j) / degree) for j in range(degree)]
        out.append(_hausdorff_point_sets(found, target))
    return out


@dataclass(frozen=True)
class LiftResult:
    degree: int
    trials: int
    hausdorff: tuple
    pass_rate: float
    passed: bool


def lifted_repelling_set_test(cfg: ExperimentConfig, degree: int,
                              branches: Optional[Sequence[int]] = None,
                              tolerance: float = 1e-3,
                              pass_fraction: float = 0.9,
                              workers: int = 1) -> LiftResult:
    """Compares the lifted walk's repelling set against the fiber of the
    base repulsor.

    The lifted walk reads the same letter stream as the base walk, so
    its repelling set must sit over the base repulsor: d pullback points
    taken in distinct fibers of an unrelated base point should match
    pi_d^{-1}(sigma_hat) in Hausdorff distance.
    """
    if degree < 2:
        raise ValueError("degree must be >= 2")
    horizon = cfg.n_values[-1]
    dists = _map_trial_chunks(
        _lift_chunk, (cfg, degree, None if branches is None else tuple(branches), horizon),
        cfg.trials, workers)
    hits = sum(1 for d in dists if d <= tolerance)
    rate = hits / cfg.trials
    return LiftResult(degree, cfg.trials, tuple(dists), rate,
                      rate >= pass_fraction)
