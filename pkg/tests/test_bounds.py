import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renest import bounds as B
from renest.core import DivergenceOrder, make_rng

E = math.e


def test_b_param():
    assert B.b_param(0, 1) == 0
    assert B.b_param(1, 1) == 5
    assert B.b_param(2, 0.5) == 48


def test_xi_compact():
    assert B.xi_compact(0, 1, 1) == 1.0
    assert B.xi_compact(1, 1, 1, log=True) == 30.0
    assert B.xi_compact(1, 1, 1) == pytest.approx(math.exp(30), rel=1e-12)
    assert B.xi_compact(50, 3, 0.1) == math.inf
    assert math.isfinite(B.xi_compact(50, 3, 0.1, log=True))


def test_xi_tilde():
    assert B.xi_tilde(0, 1, 1) == pytest.approx((3 * E) ** 9, rel=1e-6)
    assert B.xi_tilde(0, 1, 0.25) / B.xi_tilde(0, 1, 1) == pytest.approx(2.0, rel=1e-12)
    values = [B.xi_tilde(r, 2, 0.5) for r in np.linspace(0, 3, 7)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_lambda_renyi():
    assert B.lambda_renyi(2.0, 1, 0.0, 1.0) == pytest.approx(3.0)
    assert B.lambda_renyi(0.5, 2, 0.0, 0.7) == pytest.approx(2.0)
    # exponent (alpha+1) b (1 + r + sqrt(d) sigma/2 + d (alpha+1) b sigma^2) = 3*5*17.5
    assert B.lambda_renyi(2.0, 1, 1.0, 1.0, log=True) == pytest.approx(math.log(3) + 262.5, abs=1e-12)


def test_kl_compact_radius_example():
    res = B.kl_compact_radius(B.CompactParams(r=0, d=1, sigma=1, n=10_000, z=0.1))
    assert res.radius == pytest.approx((3 * E) ** 9 * 0.01 + 0.1, rel=1e-9)
    assert res.radius == pytest.approx(1.595e6, rel=1e-3)
    assert res.probability == pytest.approx(2 * math.exp(-100), rel=1e-12)


def test_kl_compact_zero_z_and_limit():
    res = B.kl_compact_radius(B.CompactParams(r=0.5, d=1, sigma=1, n=100, z=0))
    assert res.raw_probability == 2.0 and res.probability == 1.0
    huge = B.kl_compact_radius(B.CompactParams(r=0.5, d=1, sigma=1, n=10**40, z=0.2))
    assert huge.radius == pytest.approx(B.xi_compact(0.5, 1, 1) * 0.2, rel=1e-6)


def test_renyi_compact_uses_lambda():
    p = B.CompactParams(r=0, d=1, sigma=1, n=10_000, z=0.1)
    ratio = B.renyi_compact_radius(p, 2.0).radius / B.kl_compact_radius(p).radius
    assert ratio == pytest.approx(3.0, rel=1e-12)


def test_one_sample_prefactor():
    assert B.xi_bar(1, 1, 1) == 10
    assert B.one_sample_kl_radius(B.CompactParams(r=0, d=1, sigma=1, n=10, z=0.3)).radius == 0.0
    res = B.one_sample_kl_radius(B.CompactParams(r=1, d=1, sigma=1, n=100, z=0.1))
    assert res.radius == pytest.approx(10 * (B.xi_tilde(1, 1, 1) / 10 + 0.1), rel=1e-12)
    assert res.raw_probability == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_zeta_hat():
    assert B.zeta_hat(16, 4, 2, 1, 0) == 0
    assert B.zeta_hat(16, 4, 2, 1, 1) == pytest.approx(16**0.125 / math.log(17), rel=1e-12)
    assert B.zeta_hat(16, 4, 2, 1, 1) == pytest.approx(0.499, abs=1e-3)
    n, z = 50, 0.3
    assert B.zeta_hat(n, 3, 4, 0, z) == pytest.approx(min(n * z * z, n * z, 1 / math.log(n + 1)), rel=1e-12)


def test_subgauss_constants():
    assert B.xi_check(1, 1, 1) == 1
    assert B.xi_hat(1, 1, 1) / B.xi_tilde(0, 1, 1) == pytest.approx(32.0, rel=1e-12)
    assert B.xi_hat(1, 1, 1) == pytest.approx(5.105e9, rel=1e-3)
    a = B.kl_subgauss_radius(B.SubGaussParams(L=1, p=2, tau=1, d=1, sigma=1, n=10, z=0.1))
    b = B.kl_subgauss_radius(B.SubGaussParams(L=1, p=2, tau=1, d=1, sigma=1, n=10_000, z=0.1))
    assert a.radius == pytest.approx(b.radius, rel=1e-12)
    zero = B.kl_subgauss_radius(B.SubGaussParams(L=1, p=2, tau=0.5, d=1, sigma=1, n=10, z=0))
    assert zero.probability == 1.0 and zero.raw_probability == 3.0


def test_neural_kl():
    res = B.neural_kl_radius(B.NeuralBoundParams(M=E, beta=1, d=1, delta=0.01, n=100, z=0.1))
    assert res.radius == pytest.approx((E + 1) * 0.01 + E * 2 * 0.2, rel=1e-12)
    assert res.radius == pytest.approx(1.1245, abs=1e-4)
    flat = B.neural_kl_radius(B.NeuralBoundParams(M=1, beta=1, d=1, delta=0.05, n=400, z=0.2))
    assert flat.radius == pytest.approx(0.1 + 0.05 + 0.2, rel=1e-12)


def test_v_factor():
    assert B.v_factor(1, 2, 0.5) == pytest.approx(3.0)
    assert B.v_factor(1, 0.5, 0.7) == pytest.approx(2.0)
    assert B.v_factor(E, 2, 0.5) == pytest.approx(4 * E**2 + E**4 * (1 + math.sqrt(2)), rel=1e-12)
    assert B.v_factor(E, 2, 0.5) == pytest.approx(161.37, rel=1e-3)
    grid = [B.v_factor(m, 3.0, 0.4) for m in (1, 1.5, 2, 4, 8)]
    assert all(b >= a for a, b in zip(grid, grid[1:]))


def test_neural_renyi():
    p = B.NeuralBoundParams(M=E, beta=1, d=1, delta=0.01, n=100, z=0.1)
    res = B.neural_renyi_radius(p, 2.0)
    expected = (E**4 + E**2) * 0.01 + B.v_factor(E, 2, 0.5) * 0.2
    assert res.radius == pytest.approx(expected, rel=1e-12)


def test_c_ds_closed_forms():
    assert B.c_ds(1, 1) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-12)
    assert B.c_ds(2, 1) == pytest.approx(math.sqrt(math.pi / 2), abs=1e-12)
    assert B.c_ds(3, 1e-9) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 1.0])
def test_c_ds_matches_monte_carlo(d, s):
    z = make_rng(d, int(100 * s)).standard_normal((1_000_000, d))
    vals = np.linalg.norm(z, axis=1) ** s
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(B.c_ds(d, s) - vals.mean()) <= 3 * se


def test_smoothing_gap():
    kl = DivergenceOrder.kl()
    assert B.smoothing_gap(B.ApproxParams(M=2, d=1, s=1, sigma=0), kl) == 0
    assert B.smoothing_gap(B.ApproxParams(M=1, d=2, s=0.5, sigma=0.3), kl) == pytest.approx(
        2 * B.c_ds(2, 0.5) * 0.3**0.5
    )
    assert B.smoothing_gap(B.ApproxParams(M=2, d=1, s=1, sigma=0.1), kl) == pytest.approx(0.58937, abs=1e-4)
    ren = B.smoothing_gap(B.ApproxParams(M=2, d=1, s=1, sigma=0.1), DivergenceOrder.renyi(0.5))
    assert ren == pytest.approx(B.c_ds(1, 1) * 0.1 * (2**2 + 1.0 * 2**2), rel=1e-12)


def test_unsmoothed_kl():
    r0 = B.unsmoothed_kl_radius(n=100, d=1, s=1, r=0, M=1, z=0.5)
    assert B.c_bar(1, 0) == 0
    assert r0.radius == pytest.approx(B.c_ds(1, 1) * 100 ** (-1 / 7), rel=1e-12)
    k = 1 + 2 + 4
    a = B.unsmoothed_kl_radius(n=50, d=1, s=1, r=1, M=2, z=0.1)
    b = B.unsmoothed_kl_radius(n=50 * 2**k, d=1, s=1, r=1, M=2, z=0.1)
    assert b.radius / a.radius == pytest.approx(0.5, rel=1e-12)
    res = B.unsmoothed_kl_radius(n=10_000, d=1, s=1, r=1, M=2, z=0.1)
    head = (3 * E) ** 9 * 2 ** 3.5 + B.c_ds(1, 1) * 4 + 5 * 2 * 0.1
    assert res.radius == pytest.approx(head * 10_000 ** (-1 / 7), rel=1e-12)
    assert res.raw_probability == pytest.approx(math.exp(-min(10_000 ** (1 / 7) * 0.01, 10_000 ** (4 / 7) * 0.1)))


def test_holder_constants():
    assert B.holder_envelope_sup(2, 1, 1) == 2
    assert B.c_check(1, 1, 0) == pytest.approx(0.5)
    a = B.holder_norm_bound(2, 1, 1.5, 0.5, 1)
    assert B.holder_norm_bound(2, 1, 1.5, 0.25, 1) == pytest.approx(2 * a)
    assert B.holder_norm_bound(2, 0.5, 1.5, 0.5, 1) == B.holder_norm_bound(2, 1, 1.5, 0.5, 1)


def test_covering_constants():
    assert B.covering_constant_ball(1, 1) == pytest.approx(2 * (E + 1) * max(2, 3 * math.log(4 * (E + 1) + 1)))
    assert B.covering_constant_ball(1, 1) == pytest.approx(61.68, rel=1e-3)
    for beta in (1.0, 1.5, 2.5, 4.0):
        grid = [B.covering_constant_ball(d, beta) for d in range(1, 6)]
        assert all(b >= a for a, b in zip(grid, grid[1:]))
    for beta in (0.3, 1.0, 7.5):
        assert 0 < B.covering_constant_ball(2, beta) < math.inf


def test_covering_entropy():
    base = B.covering_entropy_bound(1.0, 1.0, 1, 1.5, 1, 0.5)
    assert B.covering_entropy_bound(0.5, 1.0, 1, 1.5, 1, 0.5) / base == pytest.approx(2 ** (1 / 1.5))
    # r = 0, q = 0: (1 + r)^d = 1 and (1 + 0^0)^{d/beta} = 2^{d/beta} with 0^0 = 1
    collapse = B.covering_entropy_bound(0.2, 0.0, 1, 2.0, 0, 0.5)
    expected = B.covering_constant_class(1, 2.0, 0) * 2 ** 0.5 * 0.5 ** (-0.5) * 0.2 ** (-0.5)
    assert collapse == pytest.approx(expected, rel=1e-12)
    chain = B.covering_constant_ball(1, 1.5) * (2 * B.c_check(1, 1.5, 1)) ** (1 / 1.5)
    value = chain * 2 * 2 ** (1 / 1.5) * 0.5 ** (-1 / 1.5)
    assert B.covering_entropy_bound(1.0, 1.0, 1, 1.5, 1, 0.5) == pytest.approx(value, rel=1e-12)


def test_entropy_integral():
    assert B.entropy_integral(lambda e: 4.0, 2.0) == pytest.approx(4.0, abs=1e-8)
    assert B.entropy_integral(lambda e: 9.0 / e, 1.0) == pytest.approx(6.0, abs=1e-6)
    assert B.entropy_integral(lambda e: 1.0 / e**2, 1.0) == math.inf
    assert B.entropy_integral(lambda e: e ** -0.5, 1.0) == pytest.approx(4.0 / 3.0, abs=1e-6)


def test_orlicz():
    assert B.orlicz_c_q(1.0) == pytest.approx(4 * (1 + 1 / math.log(2) + 16), abs=1e-12)
    assert B.orlicz_c_q(1.0, 2.0) == pytest.approx(2 * B.orlicz_c_q(1.0))
    assert B.orlicz_norm_empirical(np.full(10, 3.0), 1) == pytest.approx(3 / math.log(2), rel=1e-8)
    assert B.orlicz_norm_empirical(np.zeros(4), 2) == 0.0
    x = make_rng(1).standard_normal(500)
    assert B.orlicz_norm_empirical(5 * x, 2) == pytest.approx(5 * B.orlicz_norm_empirical(x, 2), rel=1e-7)
    assert B.orlicz_max_constant(1, 1) == pytest.approx(5 * math.log(3))
    assert B.orlicz_max_constant(7, 2) == pytest.approx(math.sqrt(B.orlicz_max_constant(7, 1)))
    assert B.orlicz_max_constant(8, 1) >= B.orlicz_max_constant(7, 1)


def test_fuk_nagaev():
    zero = B.fuk_nagaev_statistical_prob(0, 10, 1, 1, 1, 1)
    assert zero.raw_probability == 4 and zero.probability == 1
    probs = [B.fuk_nagaev_statistical_prob(z, 100, 0.5, 0.3, 0.2, 1).raw_probability for z in (1, 10, 100, 1000)]
    assert all(b <= a for a, b in zip(probs, probs[1:]))
    mom = [B.fuk_nagaev_moment_prob(z, 100, 0.5, 0.3, 3, 2).raw_probability for z in (1, 10, 100, 1000)]
    assert all(b <= a for a, b in zip(mom, mom[1:]))


def test_audit_exponent():
    assert B.theta_from_bar(0.5, 100) == 25
    assert B.theta_from_bar(2, 10) == 20
    assert B.theta_from_bar(-1, 10) == 0
    bar, theta = B.audit_error_exponent(B.GapParams(alt_gap=0, M=1, alpha=2, a=0.5, delta_n=0, n=100, tau=0.5))
    assert bar <= 0 and theta == 0


RADII = [
    lambda n, z: B.kl_compact_radius(B.CompactParams(0.5, 1, 0.8, n, z)),
    lambda n, z: B.renyi_compact_radius(B.CompactParams(0.5, 2, 0.8, n, z), 3.0),
    lambda n, z: B.one_sample_kl_radius(B.CompactParams(0.5, 1, 0.8, n, z)),
    lambda n, z: B.kl_subgauss_radius(B.SubGaussParams(1.5, 3, 0.5, 1, 0.8, n, z)),
    lambda n, z: B.neural_kl_radius(B.NeuralBoundParams(2, 1, 1, 0.01, n, z)),
    lambda n, z: B.neural_renyi_radius(B.NeuralBoundParams(2, 1, 1, 0.01, n, z), 0.5),
    lambda n, z: B.unsmoothed_kl_radius(n, 1, 0.5, 0.5, 2, z),
]


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(range(len(RADII))),
    st.integers(1, 10**6),
    st.integers(1, 10**6),
    st.floats(0, 5),
    st.floats(0, 5),
)
def test_radius_monotone_and_probability_valid(index, n1, n2, z1, z2):
    fn = RADII[index]
    (n_lo, n_hi), (z_lo, z_hi) = sorted((n1, n2)), sorted((z1, z2))
    a, b, c = fn(n_lo, z_lo), fn(n_lo, z_hi), fn(n_hi, z_lo)
    assert b.radius >= a.radius * (1 - 1e-12)
    assert c.radius <= a.radius * (1 + 1e-12)
    for res in (a, b, c):
        assert 0 <= res.probability <= 1 and res.raw_probability >= res.probability


def test_z_for_tail_inverts_tail():
    z = B.z_for_tail(500, 0.05)
    assert 2 * math.exp(-min(500 * z * z, 500 * z)) == pytest.approx(0.05, rel=1e-9)
