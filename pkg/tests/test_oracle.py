import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renest.core import DiscreteDist, DivergenceOrder, GaussianSpec
from renest.oracle import (
    divergence_quadrature_1d,
    kl_discrete,
    kl_gaussian,
    renyi_discrete,
    renyi_gaussian,
    smoothed_divergence_quadrature,
)

MU = DiscreteDist([0.0, 1.0], [0.5, 0.5])
NU = DiscreteDist([0.0, 1.0], [0.25, 0.75])


def test_kl_discrete_hand_value():
    assert kl_discrete(MU, NU).value == pytest.approx(0.143841, abs=1e-6)
    assert kl_discrete(MU, MU).value == 0.0


def test_kl_outside_support_is_infinite():
    assert kl_discrete(DiscreteDist([0.0, 2.0], [0.5, 0.5]), NU).value == math.inf


def test_renyi_discrete_hand_values():
    assert renyi_discrete(MU, NU, 2.0).value == pytest.approx(math.log(4 / 3), abs=1e-9)
    # -2 log(sqrt(1/8) + sqrt(3/8)) = 0.0693365, just above the rounded 0.069335
    exact = -2.0 * math.log(math.sqrt(0.125) + math.sqrt(0.375))
    assert renyi_discrete(MU, NU, 0.5).value == pytest.approx(exact, abs=1e-12)
    assert renyi_discrete(NU, NU, 3.0).value == pytest.approx(0.0, abs=1e-15)


def test_renyi_support_cases():
    narrow = DiscreteDist([0.0], [1.0])
    assert renyi_discrete(MU, narrow, 2.0).value == math.inf
    assert renyi_discrete(MU, narrow, 0.5).value == pytest.approx(-2 * math.log(math.sqrt(0.5)))


def test_gaussian_closed_forms():
    g0, g1 = GaussianSpec([0.0], 1.0), GaussianSpec([1.0], 1.0)
    assert kl_gaussian(g0, g1).value == pytest.approx(0.5)
    assert kl_gaussian(g0, g0).value == 0.0
    assert kl_gaussian(g0, GaussianSpec([0.0], 4.0)).value == pytest.approx(0.318147, abs=1e-6)
    assert renyi_gaussian(g0, g1, 2.0).value == pytest.approx(1.0)
    assert renyi_gaussian(g0, g1, 0.5).value == pytest.approx(0.25)


def test_renyi_gaussian_mixing_condition():
    with pytest.raises(ValueError):
        renyi_gaussian(GaussianSpec([0.0], 1.0), GaussianSpec([0.0], 0.4), 2.0)


@pytest.mark.parametrize("order", [DivergenceOrder.kl(), DivergenceOrder.renyi(0.5), DivergenceOrder.renyi(3.0)])
def test_gaussian_matches_quadrature(order):
    g1, g2 = GaussianSpec([0.3], 0.8), GaussianSpec([-0.4], 1.3)

    def logpdf(g):
        return lambda x: -0.5 * (x - g.mean[0]) ** 2 / g.variance - 0.5 * math.log(2 * math.pi * g.variance)

    from renest.oracle import gaussian_divergence

    quad = divergence_quadrature_1d(logpdf(g1), logpdf(g2), -40.0, 40.0, order).value
    assert gaussian_divergence(g1, g2, order).value == pytest.approx(quad, abs=1e-6)


pmf = st.lists(st.floats(0.05, 1.0), min_size=2, max_size=6)


@settings(max_examples=60, deadline=None)
@given(pmf, st.data())
def test_renyi_monotone_in_order(weights, data):
    other = data.draw(st.lists(st.floats(0.05, 1.0), min_size=len(weights), max_size=len(weights)))
    atoms = np.arange(len(weights), dtype=float)
    mu = DiscreteDist(atoms, np.array(weights) / sum(weights))
    nu = DiscreteDist(atoms, np.array(other) / sum(other))
    values = [renyi_discrete(mu, nu, a).value for a in (0.25, 0.5, 0.75)]
    values.append(kl_discrete(mu, nu).value)
    values += [renyi_discrete(mu, nu, a).value for a in (1.5, 2.0, 4.0)]
    assert all(v >= -1e-12 for v in values)
    assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0])
def test_smoothing_does_not_increase_kl(sigma):
    mu = DiscreteDist([-1.0, 0.0, 1.0], [0.6, 0.3, 0.1])
    nu = DiscreteDist([-1.0, 0.0, 1.0], [0.2, 0.3, 0.5])
    smoothed = smoothed_divergence_quadrature(mu, nu, sigma, DivergenceOrder.kl()).value
    assert smoothed <= kl_discrete(mu, nu).value + 1e-6


def test_single_atom_mixture_quadrature_is_gaussian():
    a, b = DiscreteDist([0.0], [1.0]), DiscreteDist([1.0], [1.0])
    assert smoothed_divergence_quadrature(a, b, 1.0, DivergenceOrder.kl()).value == pytest.approx(0.5, abs=1e-8)
    assert smoothed_divergence_quadrature(a, b, 1.0, DivergenceOrder.renyi(2)).value == pytest.approx(1.0, abs=1e-8)
