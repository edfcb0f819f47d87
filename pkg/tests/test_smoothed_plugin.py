import math

import numpy as np
import pytest

from renest.core import DiscreteDist, DivergenceOrder, GaussianSpec, SampleMatrix, make_rng
from renest.smoothed_plugin import (
    IntegrationConfig,
    SmoothedEmpirical,
    mixture_log_density,
    smoothed_divergence_one_sample,
    smoothed_kl_plugin,
    smoothed_renyi_plugin,
)

ZERO, ONE = SampleMatrix([[0.0]]), SampleMatrix([[1.0]])


def test_log_density_hand_values():
    single = SmoothedEmpirical(ZERO, 1.0)
    assert mixture_log_density(single, [0.0]) == pytest.approx(-0.918939, abs=1e-6)
    pair = SmoothedEmpirical(SampleMatrix([[-0.7], [0.7]]), 1.0)
    shifted = SmoothedEmpirical(SampleMatrix([[0.7]]), 1.0)
    assert mixture_log_density(pair, [0.0]) == pytest.approx(mixture_log_density(shifted, [0.0]), abs=1e-12)


def test_log_density_far_point_is_finite():
    value = mixture_log_density(SmoothedEmpirical(ZERO, 1.0), [100.0])
    assert math.isfinite(value)
    assert -5001.0 < value < -4999.0


def test_single_atom_kl_and_renyi():
    cfg = IntegrationConfig(mc_draws=100_000, seed=3)
    kl = smoothed_kl_plugin(ZERO, ONE, 1.0, cfg)
    assert abs(kl.value - 0.5) <= 3 * kl.mc_std_error
    ren = smoothed_renyi_plugin(ZERO, ONE, 1.0, 2.0, cfg)
    assert abs(ren.value - 1.0) <= 3 * ren.mc_std_error


def test_identical_samples_give_zero():
    X = make_rng(5).standard_normal((50, 2))
    cfg = IntegrationConfig(mc_draws=2000, seed=1)
    assert abs(smoothed_kl_plugin(X, X, 0.5, cfg).value) < 1e-12
    assert abs(smoothed_renyi_plugin(X, X, 0.5, 2.0, cfg).value) < 1e-12


def test_renyi_near_one_tracks_kl():
    rng = make_rng(11)
    X, Y = rng.standard_normal((100, 1)), 0.8 + rng.standard_normal((100, 1))
    cfg = IntegrationConfig(mc_draws=50_000, seed=2)
    kl = smoothed_kl_plugin(X, Y, 0.5, cfg).value
    near = smoothed_renyi_plugin(X, Y, 0.5, 1.001, cfg).value
    assert abs(near - kl) <= 0.01


def test_antithetic_single_atom_is_exact():
    cfg = IntegrationConfig(mc_draws=1000, seed=0, antithetic=True)
    assert smoothed_kl_plugin(ZERO, ONE, 1.0, cfg).value == pytest.approx(0.5, abs=1e-12)


def test_jobs_do_not_change_result():
    rng = make_rng(8)
    X, Y = rng.standard_normal((40, 1)), rng.standard_normal((40, 1)) + 0.5
    one = smoothed_kl_plugin(X, Y, 0.5, IntegrationConfig(mc_draws=40_000, seed=4, jobs=1, chunk_size=5000))
    many = smoothed_kl_plugin(X, Y, 0.5, IntegrationConfig(mc_draws=40_000, seed=4, jobs=3, chunk_size=5000))
    assert one.value == many.value
    assert one.mc_std_error == many.mc_std_error


def test_one_sample_gaussian_target():
    cfg = IntegrationConfig(mc_draws=100_000, seed=6)
    target = GaussianSpec([1.0], 1e-300)
    kl = smoothed_divergence_one_sample(ZERO, target, 1.0, DivergenceOrder.kl(), cfg)
    assert abs(kl.value - 0.5) <= 3 * kl.mc_std_error
    ren = smoothed_divergence_one_sample(ZERO, target, 1.0, DivergenceOrder.renyi(2), cfg)
    assert abs(ren.value - 1.0) <= 3 * ren.mc_std_error


def test_one_sample_consistency():
    X = make_rng(12).standard_normal((2000, 1))
    est = smoothed_divergence_one_sample(
        X, GaussianSpec([0.0], 1.0), 0.5, DivergenceOrder.kl(), IntegrationConfig(mc_draws=5000, seed=1)
    )
    assert est.value <= 0.05


def test_one_sample_discrete_target():
    cfg = IntegrationConfig(mc_draws=50_000, seed=9)
    est = smoothed_divergence_one_sample(ZERO, DiscreteDist([1.0], [1.0]), 1.0, DivergenceOrder.kl(), cfg)
    assert abs(est.value - 0.5) <= 3 * est.mc_std_error


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        smoothed_kl_plugin(np.zeros((3, 1)), np.zeros((3, 2)), 1.0)


def test_same_seed_same_report():
    cfg = IntegrationConfig(mc_draws=3000, seed=21)
    a = smoothed_kl_plugin([[0.0], [0.3]], [[1.0]], 0.7, cfg).to_dict()
    b = smoothed_kl_plugin([[0.0], [0.3]], [[1.0]], 0.7, cfg).to_dict()
    assert a == b
