import numpy as np
import pytest

import ricean_mimo as rm
from ricean_mimo.scenario import UserPlacement, arrival_angles


def _placement(angles, L=7):
    angles = np.asarray(angles, dtype=float)
    return UserPlacement(positions=np.zeros((L, angles.size, 2)),
                         arrival_angles=angles)


def test_rho_kernel_diagonal_and_known_values():
    cfg = rm.ScenarioConfig(N=2, K=3, T=64, d_over_lambda=1.0,
                            angle_scheme=(np.pi / 6, 0.0, 0.0))
    rho = rm.rho_kernel(_placement(cfg.angle_scheme), cfg)
    assert rho.N == 2
    assert np.allclose(np.diag(rho.rho), 2.0)
    # sin gap 1/2 at d/lambda = 1 puts the pair phase at pi: 1 + e^{j pi} = 0
    assert abs(rho.rho[0, 1]) < 1e-9
    # coincident angles hit the degenerate branch and give N exactly
    assert rho.rho[1, 2] == 2.0


def test_rho_kernel_matches_brute_force_sum():
    rng = np.random.default_rng(5)
    angles = rng.uniform(-np.pi / 2, np.pi / 2, size=6)
    cfg = rm.ScenarioConfig(N=24, K=6, T=64, angle_scheme=tuple(angles))
    rho = rm.rho_kernel(_placement(angles), cfg)
    n = np.arange(24)
    s = np.sin(angles)
    for k in range(6):
        for i in range(6):
            phi = 2 * np.pi * cfg.d_over_lambda * (s[k] - s[i])
            direct = np.exp(1j * n * phi).sum()
            assert rho.rho[k, i] == pytest.approx(direct, abs=1e-10)
    assert np.allclose(rho.rho, rho.rho.conj().T, atol=1e-10)


def test_cross_power_identities_agree(tiny_bundle):
    for k in range(tiny_bundle.config.K):
        via_inner = rm.los_cross_power_steering(
            tiny_bundle.spectrum, tiny_bundle.steering, tiny_bundle.ricean, k)
        via_rho = rm.los_cross_power_rho(
            tiny_bundle.fading, tiny_bundle.ricean, tiny_bundle.rho, k)
        assert via_inner == pytest.approx(via_rho, rel=1e-10)


def test_sinr_breakdown_accessors():
    br = rm.SinrBreakdown(s_los=3.0, s_ray=1.0, i_los=0.5, i_ray=0.5,
                          rate_prefactor=0.5)
    assert br.sinr == pytest.approx(4.0)
    assert br.rate == pytest.approx(0.5 * np.log2(5.0))


def test_rayleigh_kills_the_los_terms():
    cfg = rm.ScenarioConfig(N=16, ricean_factors=0.0)
    b = rm.build_bundle(cfg)
    br = rm.theorem1_sinr(b.bank, b.spectrum, b.steering, b.fading, b.ricean,
                          cfg.p_u, 0)
    assert br.s_los == 0.0
    assert br.i_los == 0.0
    assert br.s_ray > 0 and br.i_ray > 0


def test_asymptote_unbounded_without_interferers():
    fading = rm.LargeScaleFading(lam=np.full((1, 4), 0.5))
    ricean = rm.RiceanFactors(omega=np.full(4, 2.0))
    out = rm.theorem2_asymptotic(np.ones(8), fading, ricean, 0)
    assert out is rm.UNBOUNDED
    assert repr(out) == "UNBOUNDED"
    assert rm.theorem2_uncorrelated(fading, ricean, 100.0, 0) is rm.UNBOUNDED


def test_asymptote_rejects_empty_delta():
    fading = rm.LargeScaleFading(lam=np.full((2, 4), 0.5))
    ricean = rm.RiceanFactors(omega=np.full(4, 2.0))
    with pytest.raises(ValueError):
        rm.theorem2_asymptotic(np.zeros(8), fading, ricean, 0)


def test_asymptote_collapses_when_uncorrelated():
    cfg = rm.ScenarioConfig(N=32, kappa=0.0)
    b = rm.build_bundle(cfg)
    for k in range(cfg.K):
        general = rm.theorem2_asymptotic(b.bank.delta[k], b.fading, b.ricean, k)
        closed = rm.theorem2_uncorrelated(b.fading, b.ricean, cfg.p_P, k)
        assert general == pytest.approx(closed, rel=1e-10)


def test_power_scaling_ricean_branch_hand_value(tiny_bundle):
    b = tiny_bundle
    k = 3
    th = b.ricean.omega[k]
    want = 64.0 ** 0.5 * 5.0 * b.fading.lam[0, k] * th / (th + 1.0)
    got = rm.theorem3_power_scaling(b.config, b.fading, b.spectrum, b.ricean,
                                    k, 0.5, 5.0, 64)
    assert got == pytest.approx(want, rel=1e-12)


def test_power_scaling_ricean_branch_ignores_correlation():
    a = rm.build_bundle(rm.ScenarioConfig(N=16, kappa=0.0))
    c = rm.build_bundle(rm.ScenarioConfig(N=16, kappa=0.5))
    for k in (0, 5):
        va = rm.theorem3_power_scaling(a.config, a.fading, a.spectrum, a.ricean,
                                       k, 1.0, 2.0, 16)
        vc = rm.theorem3_power_scaling(c.config, c.fading, c.spectrum, c.ricean,
                                       k, 1.0, 2.0, 16)
        assert va == pytest.approx(vc, rel=1e-12)


def test_power_scaling_rayleigh_branch_hand_value():
    cfg = rm.ScenarioConfig(N=16, ricean_factors=0.0)
    b = rm.build_bundle(cfg)
    k, eps, E_u = 2, 0.4, 3.0
    lam = b.fading.lam
    sum_d2 = (b.spectrum.d ** 2).sum()
    pilot = 1.0 / (cfg.K * E_u ** 2 * 16.0 ** (-0.8) * sum_d2)
    want = lam[0, k] ** 2 / ((lam[1:, k] ** 2).sum() + pilot)
    got = rm.theorem3_power_scaling(cfg, b.fading, b.spectrum, b.ricean,
                                    k, eps, E_u, 16)
    assert got == pytest.approx(want, rel=1e-12)


def test_power_scaling_argument_validation(tiny_bundle):
    b = tiny_bundle
    with pytest.raises(ValueError):
        rm.theorem3_power_scaling(b.config, b.fading, b.spectrum, b.ricean,
                                  0, 0.0, 1.0, 16)
    with pytest.raises(ValueError):
        rm.theorem3_power_scaling(b.config, b.fading, b.spectrum, b.ricean,
                                  0, 0.5, -1.0, 16)
    cfg = rm.ScenarioConfig(N=16, ricean_factors=0.0)
    bb = rm.build_bundle(cfg)
    with pytest.raises(ValueError, match="eigenvalues"):
        rm.theorem3_power_scaling(cfg, bb.fading, bb.spectrum, bb.ricean,
                                  0, 0.5, 1.0, 32)


def test_los_and_lmmse_scaling_laws_coincide_for_ricean_users(tiny_bundle):
    b = tiny_bundle
    rng = np.random.default_rng(11)
    for _ in range(20):
        k = int(rng.integers(0, b.config.K))
        eps = float(rng.uniform(0.1, 1.4))
        E_u = float(rng.uniform(0.5, 50.0))
        N = int(rng.integers(8, 2048))
        lhs = rm.theorem6_los_power_scaling(b.fading, b.ricean, k, eps, E_u, N)
        rhs = rm.theorem3_power_scaling(b.config, b.fading, b.spectrum,
                                        b.ricean, k, eps, E_u, N)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_los_sinr_hand_value_single_user():
    cfg = rm.ScenarioConfig(L=1, K=1, N=16, T=64, kappa=0.0,
                            ricean_factors=2.0, p_u=4.0)
    spec = rm.exp_correlation(16, 0.0)
    fading = rm.LargeScaleFading(lam=np.full((1, 1), 0.7))
    placement = _placement(arrival_angles(cfg), L=1)
    steering = rm.steering_matrix(fading, placement, cfg)
    ricean = rm.ricean_factors(cfg)
    rho = rm.rho_kernel(placement, cfg)
    got = rm.theorem4_los_sinr(steering, spec, fading, ricean, rho, 4.0, 0)
    lam, N, th = 0.7, 16, 2.0
    den = lam / (th + 1.0) * lam * N + lam * N / 4.0
    want = th / (th + 1.0) * (lam * N) ** 2 / den
    assert got == pytest.approx(want, rel=1e-12)


def test_los_asymptote_collapses_when_uncorrelated():
    cfg = rm.ScenarioConfig(N=32, kappa=0.0)
    b = rm.build_bundle(cfg)
    for k in range(cfg.K):
        general = rm.theorem5_los_asymptotic(b.steering, b.spectrum, b.fading,
                                             b.ricean, cfg.p_u, k, 32)
        closed = rm.theorem5_uncorrelated(b.fading, b.ricean, cfg.p_u, k, 32)
        assert general == pytest.approx(closed, rel=1e-10)
    with pytest.raises(ValueError, match="eigenvalues"):
        rm.theorem5_los_asymptotic(b.steering, b.spectrum, b.fading, b.ricean,
                                   cfg.p_u, 0, 64)


def test_los_sinr_approaches_its_asymptote():
    """Edge users converge slowly (their cross-steering kernels beat against
    each other), so the per-user gap only has to be small at the largest N;
    the summed gap must shrink along the whole grid."""
    def gaps(N):
        b = rm.build_bundle(rm.ScenarioConfig(N=N))
        out = []
        for k in range(b.config.K):
            exact = rm.theorem4_los_sinr(b.steering, b.spectrum, b.fading,
                                         b.ricean, b.rho, b.config.p_u, k)
            limit = rm.theorem5_los_asymptotic(b.steering, b.spectrum, b.fading,
                                               b.ricean, b.config.p_u, k, N)
            out.append(abs(exact / limit - 1.0))
        return out
    totals = [sum(gaps(N)) for N in (64, 256, 1024)]
    assert totals[0] > totals[1] > totals[2]
    assert max(gaps(1024)) < 0.02


def test_acquisition_ranking_flips_with_antenna_count():
    def sums(N):
        b = rm.build_bundle(rm.ScenarioConfig(N=N))
        pref = (b.config.T - b.config.K) / b.config.T
        lmmse = sum(
            rm.theorem1_sinr(b.bank, b.spectrum, b.steering, b.fading,
                             b.ricean, b.config.p_u, k, rate_prefactor=pref).rate
            for k in range(b.config.K))
        los = sum(
            np.log2(1.0 + rm.theorem4_los_sinr(b.steering, b.spectrum, b.fading,
                                               b.ricean, b.rho, b.config.p_u, k))
            for k in range(b.config.K))
        return lmmse, los
    lm_small, los_small = sums(24)
    lm_big, los_big = sums(512)
    assert lm_small > los_small
    assert los_big > lm_big
