import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpboost.measures import (
    bregman_project,
    density,
    is_smooth,
    kl_divergence,
    normalize,
    projection_scale,
    statistical_distance,
)

weights = st.one_of(st.just(0.0), st.floats(1e-6, 1.0))
measures = st.lists(weights, min_size=2, max_size=12).filter(lambda w: sum(w) > 1e-6)
kappas = st.floats(0.05, 0.95)


@pytest.mark.parametrize("w, d", [((1, 1, 1, 1), 1.0), ((0.5,) * 4, 0.5), ((0, 0), 0.0)])
def test_density(w, d):
    assert density(w) == pytest.approx(d)


def test_density_rejects_out_of_range():
    with pytest.raises(ValueError):
        density([1.5, 0.2])


def test_normalize():
    assert np.allclose(normalize([0.5, 0.25, 0.25]), [0.5, 0.25, 0.25])
    assert np.allclose(normalize([0.3] * 5), 0.2)
    with pytest.raises(ValueError):
        normalize([0, 0])


def test_statistical_distance_examples():
    assert statistical_distance([1, 0], [0, 1]) == 1.0
    assert statistical_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert statistical_distance([0.6, 0.4], [0.5, 0.5]) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        statistical_distance([1.0], [0.5, 0.5])


def test_statistical_distance_is_a_metric_on_grid():
    grid = [np.array([a, 1 - a]) for a in np.linspace(0, 1, 11)]
    for a, b, c in itertools.product(grid, repeat=3):
        dab = statistical_distance(a, b)
        assert dab == pytest.approx(statistical_distance(b, a))
        assert dab <= statistical_distance(a, c) + statistical_distance(c, b) + 1e-12
        assert (dab == 0) == np.allclose(a, b)


def test_kl_examples():
    assert kl_divergence([0.2, 0.5], [0.2, 0.5]) == 0.0
    # term by term: (1 ln 2 - 1 + 0.5) + (0 - 0 + 0.5)
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-12)
    assert kl_divergence([0.5, 0.5], [1, 0.25]) == pytest.approx(
        0.5 * math.log(0.5) + 0.5 * math.log(2) - 1 + 1.25, abs=1e-12)
    with pytest.raises(ValueError):
        kl_divergence([1, 0], [0, 1])


def test_projection_examples():
    w = np.array([0.5, 0.5, 0.5, 0.5])
    assert np.array_equal(bregman_project(w, 0.5), w)
    out = bregman_project([0.8, 0.1, 0.1, 0.2], 0.5)
    assert np.allclose(out, [1.0, 0.25, 0.25, 0.5])
    assert out.sum() == pytest.approx(2.0, abs=1e-12)
    assert projection_scale(np.array([0.8, 0.1, 0.1, 0.2]), 2.0) == pytest.approx(2.5)
    w = np.array([1, 1, 0, 0], dtype=float)
    assert np.array_equal(bregman_project(w, 0.25), w)


@pytest.mark.parametrize("kappa", [0.0, 1.0, -0.1, 1.5])
def test_projection_rejects_kappa(kappa):
    with pytest.raises(ValueError):
        bregman_project([0.2, 0.3], kappa)


def test_projection_rejects_zero_measure():
    with pytest.raises(ValueError):
        bregman_project([0.0, 0.0], 0.5)


def test_projection_handles_tiny_weights():
    w = np.full(1000, 1e-300)
    w[0] = 1e-200
    out = bregman_project(w, 0.3)
    assert out.sum() == pytest.approx(300, abs=1e-9)
    assert out.max() <= 1.0


def _kl_rows(v, w):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(v > 0, v * np.log(v / w), 0.0)
    return terms.sum(axis=1) - v.sum(axis=1) + w.sum()


def grid_minimizer(w, kappa, step=0.1, zooms=30):
    """KL minimizer over feasible measures by grid search with zooming.

    A full grid over [0, 1]^n locates the basin; each zoom re-grids a box of
    two steps around the incumbent at half the step.
    """
    n = w.size
    axes = [np.arange(0, 1 + 1e-9, step)] * n
    best, best_v = np.inf, None
    for _ in range(zooms + 1):
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        pts = pts[pts.sum(axis=1) >= kappa * n - 1e-12]
        if pts.size:
            kl = _kl_rows(pts, w)
            i = int(np.argmin(kl))
            if kl[i] < best:
                best, best_v = float(kl[i]), pts[i]
        step /= 2
        axes = [np.clip(np.linspace(c - 2 * step, c + 2 * step, 5), 0, 1) for c in best_v]
    return best, best_v


def test_projection_matches_grid_oracle_on_small_measures():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        kappa = float(rng.choice([0.3, 0.4, 0.5, 0.6]))
        w = rng.uniform(0.01, 1.0, n) * rng.uniform(0.05, 0.6)
        proj = bregman_project(w, kappa)
        assert abs(proj.sum() - max(w.sum(), kappa * n)) <= 1e-9
        oracle, _ = grid_minimizer(w, kappa)
        kl_proj = kl_divergence(proj, w)
        assert kl_proj <= oracle + 1e-9
        assert abs(kl_proj - oracle) <= 1e-3


def test_projection_beats_every_coarse_grid_point():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 5))
        kappa = 0.5
        w = rng.uniform(0.01, 0.4, n)
        axes = [np.arange(0, 1 + 1e-9, 0.05)] * n
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        pts = pts[pts.sum(axis=1) >= kappa * n - 1e-12]
        assert kl_divergence(bregman_project(w, kappa), w) <= _kl_rows(pts, w).min() + 1e-12


def test_projection_oracle_fine_grid_for_four_points():
    # dense grid around the known optimum of the worked example
    w = np.array([0.8, 0.1, 0.1, 0.2])
    proj = bregman_project(w, 0.5)
    best = math.inf
    for b in np.arange(0.0, 1.0001, 0.01):
        for c in np.arange(0.0, 1.0001, 0.01):
            a, d = 1.0, 2.0 - 1.0 - b - c
            if not 0 <= d <= 1:
                continue
            best = min(best, kl_divergence([a, b, c, d], w))
    assert kl_divergence(proj, w) <= best + 1e-12
    assert kl_divergence(proj, w) >= best - 1e-3


@settings(max_examples=300, deadline=None)
@given(measures, kappas)
def test_projection_properties(w, kappa):
    w = np.array(w)
    if np.count_nonzero(w) < kappa * w.size:
        with pytest.raises(ValueError):
            bregman_project(w, kappa)
        return
    out = bregman_project(w, kappa)
    assert out.max() <= 1.0
    assert out.min() >= 0.0
    assert abs(out.sum() - max(w.sum(), kappa * w.size)) <= 1e-9
    assert np.allclose(bregman_project(out, kappa), out, atol=1e-12)
    assert is_smooth(normalize(out), kappa)
    if w.sum() < kappa * w.size:
        # min(1, c w) with a common scale on the uncapped entries
        free = out < 1.0
        ratios = out[free & (w > 0)] / w[free & (w > 0)]
        assert np.allclose(ratios, ratios[0]) if ratios.size else True
        assert np.all(out >= w - 1e-12)
