"""Estimator checks against closed forms, hand cases, and a reference
statistics library.

Frozen numeric literals were produced by independent oracles: Wilson
bounds against statsmodels, KS hand cases by direct CDF counting, and
contraction/Lyapunov rates from fixed-point derivatives of diagonal
matrices (diag(s, 1/s) has derivative 1/s^2 at its attractor).
"""

import math

import numpy as np
import pytest
from statsmodels.stats.proportion import proportion_confint

from circle_rds.circle import dist
from circle_rds.config import SEED, rotations_config, standard_config
from circle_rds.estimators import (
    DecayFit,
    EmpiricalMeasure,
    contraction_in_mean,
    holder_exponent,
    ks_distance_to_uniform,
    ks_threshold_95,
    ks_two_sample,
    lyapunov_exponent,
    moment_integral,
    repulsor_interval,
    repulsor_pullback,
    stationarity_residual,
    stationary_measure_birkhoff,
    stationary_measure_push,
    wilson_interval,
)
from circle_rds.maps import GeneratorSystem, MapWord, MoebiusMap, PiecewiseLinearMap
from circle_rds.walk import StepMeasure

LOG4 = math.log(4.0)


def point_mass(m, name="f"):
    system = GeneratorSystem([(name, m)])
    return StepMeasure([(MapWord.from_names(system, (name,)), 1.0)])


DIAG2 = MoebiusMap(2.0, 0.0, 0.0, 0.5)
DIAG10 = MoebiusMap(10.0, 0.0, 0.0, 0.1)


# ---------------------------------------------------------------- basics


def test_empirical_measure_validation():
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([]))
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        EmpiricalMeasure(np.array([0.1, 0.2]), weights=np.array([1.0, -1.0]))


def test_empirical_measure_normalizes():
    nu = EmpiricalMeasure(np.array([1.25, -0.25]), weights=np.array([2.0, 6.0]))
    assert nu.sorted_samples().tolist() == [0.25, 0.75]
    assert nu.weights.tolist() == [0.25, 0.75]
    assert len(nu) == 2


def test_decay_fit_exact_recovery():
    ns = (5, 10, 15, 20)
    ys = tuple(3.0 * math.exp(-0.3 * n) for n in ns)
    fit = DecayFit.fit(ns, ys)
    assert abs(fit.slope - (-0.3)) < 1e-12
    assert abs(fit.intercept - math.log(3.0)) < 1e-12
    assert abs(fit.r_squared - 1.0) < 1e-12


def test_decay_fit_needs_three_positive_rows():
    assert DecayFit.fit((1, 2), (0.5, 0.25)) is None
    assert DecayFit.fit((1, 2, 3), (0.5, 0.0, 0.25)) is None
    fit = DecayFit.fit((1, 2, 3, 4), (0.5, 0.0, 0.25, 0.125))
    assert fit is not None
    assert fit.n_values == (1, 3, 4)


# ----------------------------------------------------------- proportions


WILSON_CASES = {
    (0, 100): (3.469446951953614e-18, 0.03699349820698568),
    (50, 100): (0.4038315303659956, 0.5961684696340044),
    (100, 100): (0.9630065017930143, 1.0),
    (1, 2000): (8.826773070546787e-05, 0.0028268625032662133),
    (1989, 2000): (0.9901779372483848, 0.9969261029904561),
    (3, 7): (0.15821985525146975, 0.7495416354723428),
}


def test_wilson_matches_frozen_literals():
    for (s, t), (lo, hi) in WILSON_CASES.items():
        got = wilson_interval(s, t)
        assert got == pytest.approx((lo, hi), abs=1e-15)


def test_wilson_matches_reference_library():
    for s, t in WILSON_CASES:
        lo, hi = wilson_interval(s, t)
        ref_lo, ref_hi = proportion_confint(s, t, alpha=0.05, method="wilson")
        assert abs(lo - ref_lo) < 1e-12
        assert abs(hi - ref_hi) < 1e-12


def test_wilson_orders_and_bounds():
    lo, hi = wilson_interval(7, 10)
    assert 0.0 <= lo < 0.7 < hi <= 1.0


# -------------------------------------------------------------------- KS


def test_ks_to_uniform_hand_cases():
    assert ks_distance_to_uniform([0.25, 0.75]) == 0.25
    assert ks_distance_to_uniform([0.5]) == 0.5


def test_ks_two_sample_hand_case():
    assert ks_two_sample([0.2, 0.6], [0.4, 0.8]) == 0.5
    assert ks_two_sample([0.2, 0.6], [0.2, 0.6]) == 0.0


def test_ks_threshold_literals():
    assert ks_threshold_95(100, 100) == pytest.approx(0.19205020177026633, abs=1e-15)
    assert ks_threshold_95(4000, 4000) == pytest.approx(0.030365803134447148, abs=1e-15)


# ------------------------------------------------------ stationary measure


def test_push_point_mass_collapses_to_attractor():
    nu = stationary_measure_push(point_mass(DIAG2), 0.25, 40, 100, 3)
    to_zero = np.minimum(nu.samples, 1.0 - nu.samples)
    assert float(np.max(to_zero)) < 1e-6


def test_push_and_birkhoff_agree_on_standard_pair():
    std = standard_config()
    nu = stationary_measure_push(std.measure_1, std.x0, 40, 4000, SEED)
    orbit = stationary_measure_birkhoff(std.measure_1, std.x0, 4000, SEED)
    assert ks_two_sample(nu.samples, orbit.samples) < ks_threshold_95(4000, 4000)


def test_stationarity_residual_standard_pair():
    std = standard_config()
    nu = stationary_measure_push(std.measure_1, std.x0, 40, 4000, SEED)
    res = stationarity_residual(std.measure_1, nu, SEED)
    assert 0.0 <= res < 3.0 * ks_threshold_95(4000, 4000)


def test_birkhoff_rotations_equidistribute():
    rot = rotations_config()
    orbit = stationary_measure_birkhoff(rot.measure_1, rot.x0, 10_000, SEED)
    assert ks_distance_to_uniform(orbit.samples) < 0.02


def test_push_rejects_bad_sizes():
    with pytest.raises(ValueError):
        stationary_measure_push(point_mass(DIAG2), 0.0, 0, 10, 1)
    with pytest.raises(ValueError):
        stationary_measure_birkhoff(point_mass(DIAG2), 0.0, 0, 1)


# ---------------------------------------------------------------- repulsor


def test_pullback_point_mass_hits_repeller_exactly():
    mu = point_mass(DIAG2)
    assert repulsor_pullback(mu, 1, 0, 30, 0.25) == 0.5
    assert repulsor_pullback(mu, 1, 0, 60, 0.25) == 0.5


def test_pullback_base_point_independence():
    std = standard_config()
    hits = 0
    for t in range(200):
        a = repulsor_pullback(std.measure_1, std.seed, 8 * t, 80, 0.0)
        b = repulsor_pullback(std.measure_1, std.seed, 8 * t, 80, 0.37)
        hits += dist(a, b) < 1e-5
    assert hits >= 190


def test_interval_point_mass_straddles_resolution():
    mu = point_mass(DIAG10)
    arc63, found63 = repulsor_interval(mu, 1, 0, 5, 63)
    assert found63
    assert arc63.start < 0.5 < arc63.end
    # At K = 64 the repeller 0.5 is itself a grid point; the returned
    # gap starts exactly there, so containment is one-sided.
    arc64, found64 = repulsor_interval(mu, 1, 0, 5, 64)
    assert found64
    assert arc64.start == 0.5
    mid = (arc64.start + ((arc64.end - arc64.start) % 1.0) / 2.0) % 1.0
    assert dist(0.5, mid) <= 1.0 / (2 * 64)


def test_interval_identity_measure_finds_nothing():
    mu = point_mass(MoebiusMap.identity())
    _, found = repulsor_interval(mu, 1, 0, 5, 64)
    assert not found


def test_pullback_and_interval_agree_on_standard_pair():
    std = standard_config()
    agree, found_n = 0, 0
    for t in range(200):
        arc, found = repulsor_interval(std.measure_1, std.seed, 8 * t, 60, 512)
        if not found:
            continue
        found_n += 1
        p = repulsor_pullback(std.measure_1, std.seed, 8 * t, 60, std.x0)
        mid = (arc.start + ((arc.end - arc.start) % 1.0) / 2.0) % 1.0
        agree += dist(p, mid) <= 1.0 / 512 + 5e-3
    assert found_n >= 198
    assert agree >= 0.95 * found_n


def test_pullback_samples_spread_out():
    std = standard_config()
    pulls = np.sort([
        repulsor_pullback(std.measure_1, std.seed, 8 * t, 60, std.x0)
        for t in range(1000)
    ])
    biggest = max(
        int(np.searchsorted(pulls, x + 1e-4, side="right")
            - np.searchsorted(pulls, x - 1e-4, side="left"))
        for x in pulls
    )
    assert biggest < 50


# ------------------------------------------------------------- contraction


def test_contraction_point_mass_rate():
    fit = contraction_in_mean(point_mass(DIAG2), (10, 20, 30, 40), 4, 31, 1.0, 99)
    assert fit.slope <= -LOG4 + 0.1
    assert abs(fit.slope + LOG4) < 0.01
    assert fit.r_squared > 0.999


def test_contraction_rotations_flat():
    rot = rotations_config()
    fit = contraction_in_mean(rot.measure_1, (5, 10, 15, 20), 50, 16, 1.0, SEED)
    assert abs(fit.slope) < 1e-3


def test_contraction_means_monotone_within_noise():
    std = standard_config()
    fit = contraction_in_mean(std.measure_1, (10, 20, 30), 50, 8, 1.0, SEED)
    assert fit.stderrs is not None
    for i in range(len(fit.y_values) - 1):
        slack = 2.0 * (fit.stderrs[i] + fit.stderrs[i + 1])
        assert fit.y_values[i + 1] <= fit.y_values[i] + slack


def test_contraction_rejects_bad_params():
    mu = point_mass(DIAG2)
    with pytest.raises(ValueError):
        contraction_in_mean(mu, (10, 20), 4, 8, 1.0, 1)
    with pytest.raises(ValueError):
        contraction_in_mean(mu, (10, 20, 15), 4, 8, 1.0, 1)
    with pytest.raises(ValueError):
        contraction_in_mean(mu, (10, 20, 30), 4, 1, 1.0, 1)
    with pytest.raises(ValueError):
        contraction_in_mean(mu, (10, 20, 30), 4, 8, 0.0, 1)
    with pytest.raises(ValueError):
        contraction_in_mean(mu, (10, 20, 30), 4, 8, 1.5, 1)


# ------------------------------------------------------------------ Hölder


def test_holder_uniform_samples_near_one():
    rng = np.random.default_rng(12345)
    nu = EmpiricalMeasure(rng.random(100_000))
    fit = holder_exponent(nu, np.geomspace(1e-1, 1e-3, 9))
    assert 0.9 <= fit.alpha_hat <= 1.1
    assert not fit.atomic


def test_holder_atomic_samples_flagged():
    nu = EmpiricalMeasure(np.full(2000, 0.37))
    fit = holder_exponent(nu, np.geomspace(1e-1, 1e-2, 5))
    assert fit.alpha_hat == 0.0
    assert fit.atomic


def test_holder_rejects_bad_radii():
    nu = EmpiricalMeasure(np.linspace(0.0, 1.0, 2000, endpoint=False))
    with pytest.raises(ValueError):
        holder_exponent(nu, [1e-3, 1e-1])
    with pytest.raises(ValueError):
        holder_exponent(nu, [0.6, 0.1])
    with pytest.raises(ValueError):
        holder_exponent(nu, [1e-1, 1e-4])


# ------------------------------------------------------------------ moment


def test_moment_identity_and_zeroth():
    ident = point_mass(MoebiusMap.identity())
    assert moment_integral(ident, 2.0) == 1.0
    sym_system = GeneratorSystem([("a", DIAG2)])
    sym = StepMeasure([
        (MapWord.from_names(sym_system, ("a",)), 0.5),
        (MapWord.from_names(sym_system, ("a^-1",)), 0.5),
    ])
    assert moment_integral(sym, 1.0) == 4.0
    assert moment_integral(sym, 0.0) == 1.0


def test_moment_standard_pair_frozen():
    std = standard_config()
    assert moment_integral(std.measure_1, 1.0) == pytest.approx(1.552, abs=1e-12)


def test_moment_rejects_negative_delta():
    with pytest.raises(ValueError):
        moment_integral(point_mass(DIAG2), -1.0)


# ---------------------------------------------------------------- Lyapunov


def test_lyapunov_point_mass_fixed_point_rate():
    val = lyapunov_exponent(point_mass(DIAG2), 0.37, 10_000, 5)
    assert abs(val - (-LOG4)) < 1e-3
    assert lyapunov_exponent(point_mass(DIAG2), 0.37, 10_000, 5) == val


def test_lyapunov_rotations_zero():
    rot = rotations_config()
    assert abs(lyapunov_exponent(rot.measure_1, 0.0, 1000, SEED)) <= 1e-12


def test_lyapunov_rejects_nondifferentiable_atoms():
    pl = PiecewiseLinearMap((0.0, 0.5), (0.0, 0.75))
    mu = point_mass(pl, name="p")
    with pytest.raises(ValueError):
        lyapunov_exponent(mu, 0.0, 10, 1)
    with pytest.raises(ValueError):
        lyapunov_exponent(point_mass(DIAG2), 0.0, 0, 1)
