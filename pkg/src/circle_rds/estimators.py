"""Monte-Carlo estimators: stationary measure, repulsor, decay rates.

Everything here consumes a StepMeasure and a seed and produces point
estimates with enough bookkeeping (sample arrays, standard errors,
fits) for the experiment drivers to aggregate.  Estimator trials fan
out over stream ids, one per trial, so results are independent of
execution order.

The repulsor of a realization is approximated two ways: the pullback
point (f^n_omega)^-1(x0), whose error decays exponentially, and the
mega-interval scan that looks for the single grid gap blown up to at
least half the circle.  Downstream code treats the pullback at twice
the horizon as ground truth for horizon-n claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circle import Arc, dist, dist_many, empty_arc, reduce_mod1, uniform_grid
from .walk import StepMeasure, WalkState, _rng_stream, sample_letters

_PAIR_STREAM = (1 << 62) + 11  # reserved stream for auxiliary pair draws

WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile
KS_C95 = 1.358  # Kolmogorov-Smirnov 95% coefficient


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Finite sample of circle points, optionally weighted."""

    samples: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("empirical measure needs a nonempty 1-d sample")
        object.__setattr__(self, "samples", arr % 1.0)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != arr.shape or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("weights must be nonnegative and match samples")
            object.__setattr__(self, "weights", w / w.sum())

    def __len__(self):
        return int(self.samples.size)

    def sorted_samples(self) -> np.ndarray:
        return np.sort(self.samples)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log(y) against n."""

    n_values: tuple
    y_values: tuple
    slope: float
    intercept: float
    r_squared: float
    stderrs: Optional[tuple] = None

    @classmethod
    def fit(cls, n_values, y_values, stderrs=None) -> Optional["DecayFit"]:
        """None when fewer than 3 usable (finite, positive) rows remain."""
        ns, ys = [], []
        for n, y in zip(n_values, y_values):
            if y > 0.0 and math.isfinite(y):
                ns.append(float(n))
                ys.append(float(y))
        if len(ns) < 3:
            return None
        x = np.array(ns)
        logy = np.log(np.array(ys))
        slope, intercept = np.polyfit(x, logy, 1)
        pred = slope * x + intercept
        ss_res = float(np.sum((logy - pred) ** 2))
        ss_tot = float(np.sum((logy - np.mean(logy)) ** 2))
        if ss_tot < 1e-30:
            r2 = 1.0 if ss_res < 1e-30 else 0.0
        else:
            r2 = 1.0 - ss_res / ss_tot
        return cls(
            tuple(int(n) for n in ns),
            tuple(ys),
            float(slope),
            float(intercept),
            float(r2),
            None if stderrs is None else tuple(float(s) for s in stderrs),
        )


def wilson_interval(successes: int, trials: int) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = WILSON_Z * WILSON_Z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = WILSON_Z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return (max(center - half, 0.0), min(center + half, 1.0))


def ks_distance_to_uniform(samples) -> float:
    x = np.sort(np.asarray(samples, dtype=float) % 1.0)
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def ks_two_sample(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float) % 1.0)
    b = np.sort(np.asarray(b, dtype=float) % 1.0)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_threshold_95(m: int, n: int) -> float:
    return KS_C95 * math.sqrt((m + n) / (m * n))


def stationary_measure_push(
    mu: StepMeasure, x0: float, n: int, trials: int, seed: int
) -> EmpiricalMeasure:
    """{f^n_omega(x0)} over independent realizations, one stream per trial."""
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    out = np.empty(trials)
    for t in range(trials):
        out[t] = WalkState(mu, seed, t).advance(n).composed.eval_point(x0)
    return EmpiricalMeasure(out)


def stationary_measure_birkhoff(mu: StepMeasure, x0: float, N: int, seed: int) -> EmpiricalMeasure:
    """Orbit samples f^n_omega(x0) for 0 <= n < N along one realization."""
    if N < 1:
        raise ValueError("need N >= 1")
    letters = sample_letters(mu, seed, 0, N)
    out = np.empty(N)
    y = x0
    for k, letter in enumerate(letters):
        y = mu.atom_map(int(letter)).eval_point(y)
        out[k] = y
    return EmpiricalMeasure(out)


def stationarity_residual(mu: StepMeasure, nu: EmpiricalMeasure, seed: int) -> float:
    """KS distance between a sample and its one-step mu-convolution."""
    letters = sample_letters(mu, seed, 1, len(nu))
    pushed = np.empty(len(nu))
    for i, (x, letter) in enumerate(zip(nu.samples, letters)):
        pushed[i] = mu.atom_map(int(letter)).eval_point(float(x))
    return ks_two_sample(nu.samples, pushed)


def repulsor_pullback(mu: StepMeasure, seed: int, stream_id: int, n: int, x0: float) -> float:
    """(f^n_omega)^-1(x0): converges to the repulsor of the realization."""
    if n < 1:
        raise ValueError("need n >= 1")
    return WalkState(mu, seed, stream_id).advance(n).inverse_map().eval_point(x0)


def repulsor_interval(mu: StepMeasure, seed: int, stream_id: int, n: int, K: int):
    """Single grid gap whose image covers at least half the circle.

    Returns (gap arc, True) when exactly one of the K adjacent grid gaps
    has an image of length >= 1/2, else (empty arc, False).
    """
    if K < 3:
        raise ValueError("need K >= 3")
    f = WalkState(mu, seed, stream_id).advance(n).composed
    grid = uniform_grid(K)
    images = f.eval_many(grid)
    hits = []
    for j in range(K):
        a = images[j]
        b = images[(j + 1) % K]
        if (b - a) % 1.0 >= 0.5:
            hits.append(j)
    if len(hits) != 1:
        return empty_arc(), False
    j = hits[0]
    return Arc(float(grid[j]), float(grid[(j + 1) % K])), True


def contraction_in_mean(
    mu: StepMeasure,
    n_values: Sequence[int],
    trials: int,
    pair_grid: int,
    s: float,
    seed: int,
) -> DecayFit:
    """max over point pairs of the trial-mean of d(f^n x, f^n y)^s, fitted.

    Pairs are all unordered pairs of a uniform grid plus 100 seeded
    random pairs; the max is a lower bound on the sup over the circle.
    """
    ns = [int(n) for n in n_values]
    if len(ns) < 3:
        raise ValueError("degenerate fit: need at least 3 n-values")
    if sorted(set(ns)) != ns:
        raise ValueError("n_values must be strictly increasing")
    if pair_grid < 2:
        raise ValueError("pair_grid must be >= 2")
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    grid = uniform_grid(pair_grid)
    extra = _rng_stream(seed, _PAIR_STREAM).random((100, 2))
    points = np.concatenate([grid, extra.ravel()])
    gi, gj = np.triu_indices(pair_grid, k=1)
    ei = pair_grid + 2 * np.arange(100)
    pairs_i = np.concatenate([gi, ei])
    pairs_j = np.concatenate([gj, ei + 1])
    acc = np.zeros((len(ns), pairs_i.size))
    acc_sq = np.zeros_like(acc)
    for t in range(trials):
        state = WalkState(mu, seed, t)
        at = 0
        for row, n in enumerate(ns):
            state.advance(n - at)
            at = n
            img = state.composed.eval_many(points)
            d = dist_many(img[pairs_i], img[pairs_j]) ** s
            acc[row] += d
            acc_sq[row] += d * d
    means = acc / trials
    worst = np.argmax(means, axis=1)
    y = means[np.arange(len(ns)), worst]
    var = acc_sq[np.arange(len(ns)), worst] / trials - y * y
    stderr = np.sqrt(np.maximum(var, 0.0) / trials)
    fit = DecayFit.fit(ns, y, stderrs=stderr)
    if fit is None:
        raise ValueError("degenerate fit: contraction means were not positive")
    return fit


@dataclass(frozen=True)
class HolderFit:
    alpha_hat: float
    c_hat: float
    atomic: bool
    radii: tuple
    masses: tuple


def holder_exponent(nu: EmpiricalMeasure, radii: Sequence[float], centers: int = 256) -> HolderFit:
    """Fit of the maximal ball mass m(r) = max_x nu(B(x, r)) in log-log.

    alpha_hat is the slope: near 1 for spread-out measures, near 0 for
    atoms; atomic is flagged when even the smallest radius traps more
    than half the mass.
    """
    rs = [float(r) for r in radii]
    if any(not 0.0 < r < 0.5 for r in rs):
        raise ValueError("radii must lie in (0, 1/2)")
    if any(rs[i + 1] >= rs[i] for i in range(len(rs) - 1)):
        raise ValueError("radii must be strictly decreasing")
    n = len(nu)
    if rs[-1] < 10.0 / n:
        raise ValueError("smallest radius is below the 10/sample resolution")
    xs = nu.sorted_samples()
    grid = uniform_grid(centers)
    masses = []
    for r in rs:
        lo = np.searchsorted(xs, grid - r, side="left")
        hi = np.searchsorted(xs, grid + r, side="right")
        count = (hi - lo).astype(float)
        # wraparound mass at both ends of the fundamental domain
        count += np.searchsorted(xs, grid + r - 1.0, side="right")
        count += n - np.searchsorted(xs, grid - r + 1.0, side="left")
        masses.append(float(np.max(count)) / n)
    atomic = masses[-1] > 0.5
    usable = [(r, m) for r, m in zip(rs, masses) if m > 0.0]
    if len(usable) < 2:
        raise ValueError("not enough nonzero ball masses to fit")
    lr = np.log([r for r, _ in usable])
    lm = np.log([m for _, m in usable])
    slope, intercept = np.polyfit(lr, lm, 1)
    return HolderFit(float(slope), float(math.exp(intercept)), bool(atomic),
                     tuple(rs), tuple(masses))


def moment_integral(mu: StepMeasure, delta: float) -> float:
    """Sum of weight * max(Lip g, Lip g^-1)^delta, evaluated in logs."""
    if delta < 0.0:
        raise ValueError("delta must be >= 0")
    total = 0.0
    for i, (_, weight) in enumerate(mu.atoms):
        g = mu.atom_map(i)
        ginv = mu.atom_inverse(i)
        if not hasattr(g, "log_lipschitz"):
            raise ValueError("atom lacks Lipschitz data")
        biggest = max(g.log_lipschitz(), ginv.log_lipschitz())
        total += weight * math.exp(delta * biggest)
    return total


def lyapunov_exponent(mu: StepMeasure, x0: float, N: int, seed: int) -> float:
    """Birkhoff average of the derivative cocycle along one realization.

    Each letter's log-derivative is taken at the orbit point it is
    applied to, so the partial sums telescope to log (f^n)'(x0).
    """
    if N < 1:
        raise ValueError("need N >= 1")
    for i in range(len(mu)):
        if not hasattr(mu.atom_map(i), "log_derivative"):
            raise ValueError("atom lacks a derivative")
    letters = sample_letters(mu, seed, 0, N)
    y = x0
    total = 0.0
    for letter in letters:
        g = mu.atom_map(int(letter))
        total += g.log_derivative(y)
        y = g.eval_point(y)
    return total / N
