import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixcomp.data import ComponentSample, PairData
from mixcomp.exceptions import BadDelta, DegenerateSample, DegenerateStats
from mixcomp.kernels import KernelSpec, analytic_L, hs_dist_sq
from mixcomp.operator import build_gram
from mixcomp.simulate import generate
from mixcomp.threshold import (
    ConcentrationStats,
    bound_log_rhs,
    closed_form_threshold,
    concentration_stats,
    pairwise_hs_dist_sq,
    solve_threshold,
    threshold_residual,
)

G05 = KernelSpec("gaussian", 0.5, 1)

# independent 50-digit bisection on the defining equation, L = s2 = 1, N = 100, delta = 0.05
TAU_STAR = 0.28145625417603930818


def mp_closed_form(L, S, n, delta):
    mp.mp.dps = 40
    L, S, n, delta = mp.mpf(L), mp.mpf(S), mp.mpf(n), mp.mpf(delta)
    l2 = mp.log(2 / delta) / n
    return 2 * L * l2 + mp.sqrt(l2 * (S + L**2 * mp.sqrt(mp.log(1 / delta) / n)))


def mp_solve(L, s2, n, delta):
    mp.mp.dps = 50
    L, s2, delta = mp.mpf(L), mp.mpf(s2), mp.mpf(delta)

    def rhs(t):
        return -(t * n / L) * mp.log(1 + t * L / s2) + n * mp.log(1 + t / L - (s2 / L**2) * mp.log(1 + t * L / s2))

    target = mp.log(delta / 2)
    lo, hi = mp.mpf(0), s2 / L
    while rhs(hi) > target:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if rhs(mid) > target else (lo, mid)
    return lo


stats_strategy = st.builds(
    lambda L, frac, n, delta: ConcentrationStats(L, frac * L * L / 2, n, delta),
    L=st.floats(0.05, 5.0),
    frac=st.floats(0.01, 1.0),
    n=st.integers(2, 10_000),
    delta=st.floats(0.001, 0.9),
)


def test_stats_far_apart_pair():
    pair = PairData(ComponentSample([0.0, 100.0]), ComponentSample([0.0, 100.0]))
    s = concentration_stats(pair, G05, G05, 0.05)
    assert s.L_hat == pytest.approx(math.sqrt(2 / math.pi), rel=1e-12)
    assert s.L_hat == pytest.approx(0.797885, abs=1e-6)
    assert s.sigma2_hat == pytest.approx(1 / math.pi, rel=1e-12)
    assert s.sigma2_hat == pytest.approx(0.318310, abs=1e-6)


def test_stats_identical_sample_is_degenerate():
    pair = PairData(ComponentSample(np.ones(5)), ComponentSample(np.zeros(5)))
    with pytest.raises(DegenerateSample):
        concentration_stats(pair, G05, G05, 0.05)


def test_pairwise_matrix_matches_hs_formula():
    rng = np.random.default_rng(1)
    x1, x2 = rng.standard_normal((6, 1)), rng.standard_normal((6, 2))
    k2 = KernelSpec("uniform", 0.7, 2)
    D = pairwise_hs_dist_sq(build_gram(ComponentSample(x1), G05), build_gram(ComponentSample(x2), k2))
    for i in range(6):
        for j in range(6):
            ref = 0.0 if i == j else hs_dist_sq(G05, k2, (x1[i], x2[i]), (x1[j], x2[j]))
            assert D[i, j] == pytest.approx(ref, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_sigma2_bounded_by_half_L_squared(seed):
    rng = np.random.default_rng(seed)
    pair = PairData(ComponentSample(rng.standard_normal(50)), ComponentSample(rng.standard_normal(50)))
    s = concentration_stats(pair, G05, KernelSpec("gaussian", 0.3, 1), 0.1)
    assert 0 < s.sigma2_hat <= s.L_hat**2 / 2


def test_solved_threshold_matches_high_precision_oracle():
    stats = ConcentrationStats(1.0, 1.0, 100, 0.05)
    tau = solve_threshold(stats)
    assert float(mp_solve(1, 1, 100, 0.05)) == pytest.approx(TAU_STAR, rel=1e-15)
    assert tau == pytest.approx(TAU_STAR, abs=1e-11)
    assert abs(threshold_residual(tau, stats)) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(stats=stats_strategy)
def test_solved_threshold_residual(stats):
    tau = solve_threshold(stats)
    assert tau > 0
    assert abs(threshold_residual(tau, stats)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(stats=stats_strategy, undropped=st.booleans())
def test_solved_threshold_decreasing_in_n_and_delta(stats, undropped):
    tau = solve_threshold(stats, undropped)
    more = ConcentrationStats(stats.L_hat, stats.sigma2_hat, 4 * stats.n, stats.delta)
    assert solve_threshold(more, undropped) < tau
    looser = ConcentrationStats(stats.L_hat, stats.sigma2_hat, stats.n, min(0.99, stats.delta * 1.5))
    assert solve_threshold(looser, undropped) < tau


def test_tau_smaller_at_larger_delta_examples():
    for L, s2, n in [(1.0, 1.0, 100), (0.8, 0.05, 2000), (0.3, 0.001, 500)]:
        a = solve_threshold(ConcentrationStats(L, s2, n, 0.05))
        b = solve_threshold(ConcentrationStats(L, s2, n, 0.4))
        assert b < a


@pytest.mark.parametrize("L, s2, n", [(1.0, 1.0, 100), (0.8, 0.05, 2000), (2.0, 0.01, 7)])
def test_rhs_strictly_decreasing(L, s2, n):
    taus = np.geomspace(1e-6, 100 * s2 / L, 2000)
    vals = np.array([bound_log_rhs(t, L, s2, n) for t in taus])
    assert np.all(np.diff(vals) < 0)


def test_undropped_variance_raises_threshold():
    stats = ConcentrationStats(0.8, 0.1, 500, 0.05)
    t0 = solve_threshold(stats)
    t1 = solve_threshold(stats, undropped=True)
    assert t1 > t0
    assert abs(threshold_residual(t1, stats, undropped=True)) <= 1e-10


def test_degenerate_stats():
    with pytest.raises(DegenerateStats):
        solve_threshold(ConcentrationStats(1.0, 0.0, 10, 0.05))
    with pytest.raises(BadDelta):
        ConcentrationStats(1.0, 1.0, 10, 1.0)


def test_closed_form_against_arbitrary_precision():
    assert closed_form_threshold(1.0, 1.0, 100, 0.05) == pytest.approx(float(mp_closed_form(1, 1, 100, 0.05)), rel=1e-14)
    assert closed_form_threshold(1.0, 1.0, 100, 0.05) == pytest.approx(0.2818006044, abs=1e-10)
    # first term and the factor under the root
    assert 2 * math.log(40) / 100 == pytest.approx(0.073778, abs=1e-6)
    assert math.log(40) / 100 == pytest.approx(0.036889, abs=1e-6)
    assert math.sqrt(math.log(20) / 100) == pytest.approx(0.173082, abs=1e-6)
    rng = np.random.default_rng(0)
    for _ in range(50):
        L, S = rng.uniform(0.01, 3, 2)
        n, d = int(rng.integers(2, 5000)), rng.uniform(0.001, 0.499)
        assert closed_form_threshold(L, S, n, d) == pytest.approx(float(mp_closed_form(L, S, n, d)), rel=1e-13)


def test_closed_form_domain_and_monotone():
    assert closed_form_threshold(1, 1, 400, 0.05) < closed_form_threshold(1, 1, 100, 0.05)
    for d in (0.6, 0.5, 0.0):
        with pytest.raises(BadDelta):
            closed_form_threshold(1, 1, 100, d)


@pytest.mark.parametrize("design, n", [("design1", 500), ("design2", 500), ("design4", 500)])
def test_solved_below_closed_form_on_designs(design, n):
    s = generate(design, n, seed=3)
    h = 1.06 * np.std(s.components[0].values, ddof=1) * n ** (-1 / 6)
    k1 = KernelSpec("gaussian", h, 1)
    h2 = 1.06 * np.std(s.components[1].values, ddof=1) * n ** (-1 / 6)
    k2 = KernelSpec("gaussian", h2, 1)
    stats = concentration_stats(s.pair(0, 1), k1, k2, 0.05)
    closed = closed_form_threshold(analytic_L(k1, k2), stats.mean_sq_dist, n, 0.05)
    assert solve_threshold(stats) < closed
