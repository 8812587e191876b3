"""Monte-Carlo estimation of the exact uplink rates plus term-level oracles.

Every estimator here draws in the correlation eigenbasis: scattered channels
become sqrt(lam) * sqrt(d_n) * CN(0,1), the whitened pilot estimate stays
CN(0, I), and all SINR quadratic forms are unitary invariant, so nothing is
lost relative to the physical basis while each trial costs O(L N K + N K^2).

Trial t always draws from a stream derived from (seed, domain, t), so results
are bit-identical no matter how trials are chunked or spread over workers;
reduction happens once over the trial-indexed array in fixed order.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .scenario import build_layout, place_users, large_scale_fading
from .channel import exp_correlation, steering_matrix, ricean_factors, crandn
from .estimator import dft_pilots, filter_bank, error_cov_diag
from .rate_analysis import (rho_kernel, theorem1_sinr, theorem4_los_sinr,
                            los_cross_power_steering, los_cross_power_rho)

_LMMSE_DOMAIN = 0xB1
_LOS_DOMAIN = 0xB2
_PROBE_DOMAIN = 0xB3

PROBE_IDS = ("desired_power", "sigma_interf", "pilot_peer_interf", "noise_power",
             "t4_term_1", "t4_term_2", "t4_term_3", "t4_term_4", "t4_term_5")


class UnknownExpression(Exception):
    """Probe id outside the catalogue."""


@dataclass
class McEstimate:
    mean: float
    std_error: float       # sample std / sqrt(trials)
    trials: int
    seed: int


@dataclass
class McRateResult:
    per_user: list                         # K McEstimates
    sum_rate: McEstimate
    closed_form: list | None = None        # per-user closed-form rates, when reported
    closed_form_sum: float | None = None


@dataclass
class ScenarioBundle:
    """Everything derived from one ScenarioConfig, built once and shared."""
    config: object
    layout: object
    placement: object
    fading: object
    spectrum: object
    steering: object
    ricean: object
    pilots: object
    bank: object
    rho: object


def build_bundle(config):
    layout = build_layout(config)
    placement = place_users(config, layout)
    fading = large_scale_fading(config, placement, layout)
    spectrum = exp_correlation(config.N, config.kappa)
    steering = steering_matrix(fading, placement, config)
    ricean = ricean_factors(config)
    pilots = dft_pilots(config)
    bank = filter_bank(spectrum, fading, ricean, config.p_P)
    rho = rho_kernel(placement, config)
    return ScenarioBundle(config=config, layout=layout, placement=placement, fading=fading,
                          spectrum=spectrum, steering=steering, ricean=ricean, pilots=pilots,
                          bank=bank, rho=rho)


def _trial_rng(seed, *spawn_key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key))


@dataclass
class _EigenState:
    """Per-bundle constants rotated into the eigenbasis."""
    N: int
    K: int
    L: int
    p_u: float
    sp: float              # sqrt(p_P)
    d: np.ndarray
    sqrt_d: np.ndarray
    lam: np.ndarray
    sqrt_lam: np.ndarray
    om: np.ndarray
    c1: np.ndarray         # lam_{1,k}/(omega_k+1)
    los_w: np.ndarray      # sqrt(omega/(omega+1))
    inv1: np.ndarray       # sqrt(1/(omega+1))
    V: np.ndarray          # (N, K) = U^H g_bar
    delta: np.ndarray      # (K, N)
    sqrt_q: np.ndarray     # (K, N)
    a: np.ndarray          # (K, N)
    w2: np.ndarray         # (K,) sum_{l>=2} lam_{l,k}^2
    err_total: np.ndarray  # (N,) eigen diagonal of the summed error covariances


def _eigen_state(bundle):
    cfg = bundle.config
    lam = bundle.fading.lam
    om = bundle.ricean.omega
    L, K = lam.shape
    N = bundle.spectrum.d.size
    err_total = np.zeros(N)
    for i in range(K):
        for l in range(L):
            err_total += error_cov_diag(bundle.bank, l, i)
    return _EigenState(
        N=N, K=K, L=L, p_u=cfg.p_u, sp=math.sqrt(bundle.bank.p_P),
        d=bundle.spectrum.d, sqrt_d=np.sqrt(bundle.spectrum.d),
        lam=lam, sqrt_lam=np.sqrt(lam), om=om,
        c1=lam[0] / (om + 1.0), los_w=np.sqrt(om / (om + 1.0)),
        inv1=np.sqrt(1.0 / (om + 1.0)),
        V=bundle.spectrum.U.conj().T @ bundle.steering.g_bar,
        delta=bundle.bank.delta, sqrt_q=np.sqrt(bundle.bank.q), a=bundle.bank.a,
        w2=(lam[1:] ** 2).sum(axis=0), err_total=err_total)


def _draw_scatter_block(st, seed, domain, t0, t1, with_pilot_noise):
    """Stacked eigen-domain scatter draws (and pilot noise) for trials t0..t1."""
    B = t1 - t0
    scat = np.empty((B, st.L, st.N, st.K), dtype=complex)
    wp = np.empty((B, st.N, st.K), dtype=complex) if with_pilot_noise else None
    for j, t in enumerate(range(t0, t1)):
        rng = _trial_rng(seed, domain, t)
        scat[j] = crandn(rng, (st.L, st.N, st.K))
        if with_pilot_noise:
            wp[j] = crandn(rng, (st.N, st.K))
    # scale in place into scattered channels sqrt(lam_{l,i}) sqrt(d_n) h
    scat *= st.sqrt_lam[None, :, None, :]
    scat *= st.sqrt_d[None, None, :, None]
    return scat, wp


def _lmmse_rate_block(st, seed, t0, t1, out):
    gfr, wp = _draw_scatter_block(st, seed, _LMMSE_DOMAIN, t0, t1, True)
    # pilot observation per user, LOS already stripped, then whitened estimate
    y_star = st.sp * (gfr[:, 0] * st.inv1[None, None, :] + gfr[:, 1:].sum(axis=1)) + wp
    h = st.sqrt_q.T[None] * y_star / st.sp
    what = st.delta.T[None] * h                               # R Q^(1/2) h_hat columns
    ghat = st.c1[None, None, :] * what + st.los_w[None, None, :] * st.V[None]
    inner = np.einsum("bnk,bni->bki", ghat.conj(), ghat)
    cross = np.einsum("bnk,bni->bki", ghat.conj(), what)
    g2 = np.einsum("bkk->bk", inner).real                     # ||ghat_k||^2
    den = ((np.abs(inner) ** 2).sum(axis=2) - g2 ** 2         # other estimated channels
           + (np.abs(cross) ** 2 * st.w2[None, None, :]).sum(axis=2)   # contaminated copies
           + np.einsum("n,bnk->bk", st.err_total, np.abs(ghat) ** 2)   # estimation errors
           + g2 / st.p_u)                                     # thermal noise
    out[t0:t1] = np.log2(1.0 + g2 ** 2 / den)


def _los_den_block(st, seed, t0, t1, out):
    gfr, _ = _draw_scatter_block(st, seed, _LOS_DOMAIN, t0, t1, False)
    comp = st.los_w[None, None, :] * st.V[None] + st.inv1[None, None, :] * gfr[:, 0]
    own = np.einsum("nk,bnk->bk", st.V.conj(), gfr[:, 0])     # v_k^H scatter_k
    ref = np.einsum("nk,bni->bki", st.V.conj(), comp)
    interf = np.einsum("nk,blni->blki", st.V.conj(), gfr[:, 1:])
    out[t0:t1] = (np.abs(own) ** 2 / (st.om + 1.0)[None, :]
                  + (np.abs(ref) ** 2).sum(axis=2)
                  - np.abs(np.einsum("bkk->bk", ref)) ** 2
                  + (np.abs(interf) ** 2).sum(axis=(1, 3))
                  + (st.lam[0] * st.N / st.p_u)[None, :])


def _run_blocks(worker, trials, threads, chunk):
    blocks = [(t0, min(t0 + chunk, trials)) for t0 in range(0, trials, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: worker(*b), blocks))
    else:
        for b in blocks:
            worker(*b)


def mc_rate_lmmse(bundle, trials, seed=None, threads=1, chunk=48):
    """Exact-rate Monte Carlo for the LMMSE route.

    Each trial conditions on the estimates and uses the analytic error
    covariances inside the interference quadratic form; the pilot-overhead
    prefactor (T-K)/T scales the averaged log-rates.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    seed = bundle.config.seed if seed is None else seed
    st = _eigen_state(bundle)
    rates = np.empty((trials, st.K))
    _run_blocks(lambda t0, t1: _lmmse_rate_block(st, seed, t0, t1, rates),
                trials, threads, chunk)
    cfg = bundle.config
    pref = (cfg.T - cfg.K) / cfg.T
    root = math.sqrt(trials)
    per_user = [McEstimate(mean=pref * rates[:, k].mean(),
                           std_error=pref * rates[:, k].std(ddof=1) / root,
                           trials=trials, seed=seed)
                for k in range(st.K)]
    total = rates.sum(axis=1)
    return McRateResult(per_user=per_user,
                        sum_rate=McEstimate(mean=pref * total.mean(),
                                            std_error=pref * total.std(ddof=1) / root,
                                            trials=trials, seed=seed))


def mc_rate_los(bundle, trials, seed=None, threads=1, chunk=48):
    """Rate bound for the LOS-combining route.

    The denominator expectations are sampled and the bound assembled from
    their means (errors propagate through the log via the delta method,
    including cross-user covariance for the sum). The fully closed-form value
    rides along for comparison. No pilot is spent, so the prefactor stays 1.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    seed = bundle.config.seed if seed is None else seed
    st = _eigen_state(bundle)
    dens = np.empty((trials, st.K))
    _run_blocks(lambda t0, t1: _los_den_block(st, seed, t0, t1, dens),
                trials, threads, chunk)

    num = st.om / (st.om + 1.0) * (st.lam[0] * st.N) ** 2
    mean_den = dens.mean(axis=0)
    cov = np.atleast_2d(np.cov(dens, rowvar=False, ddof=1))
    sinr = num / mean_den
    rates = np.log2(1.0 + sinr)
    grad = sinr / (mean_den * (1.0 + sinr)) / math.log(2.0)    # |d rate / d mean_den|
    se = grad * np.sqrt(np.diag(cov) / trials)
    se_sum = math.sqrt(max(grad @ cov @ grad, 0.0) / trials)

    closed = [math.log2(1.0 + theorem4_los_sinr(
        bundle.steering, bundle.spectrum, bundle.fading, bundle.ricean,
        bundle.rho, bundle.config.p_u, k)) for k in range(st.K)]
    per_user = [McEstimate(mean=float(rates[k]), std_error=float(se[k]),
                           trials=trials, seed=seed) for k in range(st.K)]
    return McRateResult(per_user=per_user,
                        sum_rate=McEstimate(mean=float(rates.sum()), std_error=se_sum,
                                            trials=trials, seed=seed),
                        closed_form=closed, closed_form_sum=float(sum(closed)))


def _probe_sample(expression_id, st, k, rng):
    if expression_id in ("desired_power", "sigma_interf", "pilot_peer_interf", "noise_power"):
        h = crandn(rng, (st.N,))
        est_sc = st.delta[k] * h
        ghat = st.c1[k] * est_sc + st.los_w[k] * st.V[:, k]
        if expression_id == "desired_power":
            return float((np.abs(ghat) ** 2).sum() ** 2)
        if expression_id == "sigma_interf":
            w = st.om / (st.om + 1.0)
            proj = np.abs(st.V.conj().T @ ghat) ** 2
            return float((st.a[k] * np.abs(ghat) ** 2).sum()
                         + (w * proj).sum() - w[k] * proj[k])
        if expression_id == "pilot_peer_interf":
            return float(st.w2[k] * np.abs(ghat.conj() @ est_sc) ** 2)
        return float((np.abs(ghat) ** 2).sum() / st.p_u)
    if expression_id == "t4_term_1":
        return float(st.om[k] / (st.om[k] + 1.0) * (st.lam[0, k] * st.N) ** 2)
    if expression_id == "t4_term_2":
        return float(st.lam[0, k] * st.N / st.p_u)
    if expression_id == "t4_term_3":
        g = math.sqrt(st.lam[0, k]) * st.sqrt_d * crandn(rng, (st.N,))
        return float(np.abs(st.V[:, k].conj() @ g) ** 2 / (st.om[k] + 1.0))
    if expression_id == "t4_term_4":
        g = (st.sqrt_lam[1:, None, :] * st.sqrt_d[None, :, None]
             * crandn(rng, (st.L - 1, st.N, st.K)))
        return float((np.abs(np.einsum("n,lni->li", st.V[:, k].conj(), g)) ** 2).sum())
    # t4_term_5: composite reference-cell channels of the other users
    g = st.sqrt_lam[0, None, :] * st.sqrt_d[:, None] * crandn(rng, (st.N, st.K))
    comp = st.los_w[None, :] * st.V + st.inv1[None, :] * g
    proj = np.abs(st.V[:, k].conj() @ comp) ** 2
    return float(proj.sum() - proj[k])


def mc_expectation_probe(expression_id, bundle, trials, seed=None, k=0):
    """Sample one catalogued expectation and return mean with standard error.

    Ids cover the four denominator/numerator pieces of the LMMSE SINR split
    (desired_power, sigma_interf, pilot_peer_interf, noise_power) and the five
    expectation terms of the LOS-combining bound (t4_term_1..5); each has a
    closed-form twin in probe_closed_form.
    """
    if expression_id not in PROBE_IDS:
        raise UnknownExpression(f"unknown expression {expression_id!r}; "
                                f"known ids: {', '.join(PROBE_IDS)}")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    seed = bundle.config.seed if seed is None else seed
    st = _eigen_state(bundle)
    idx = PROBE_IDS.index(expression_id)
    samples = np.empty(trials)
    for t in range(trials):
        samples[t] = _probe_sample(expression_id, st, k, _trial_rng(seed, _PROBE_DOMAIN, idx, t))
    return McEstimate(mean=float(samples.mean()),
                      std_error=float(samples.std(ddof=1) / math.sqrt(trials)),
                      trials=trials, seed=seed)


def probe_closed_form(expression_id, bundle, k=0):
    """Analytic value of the expectation sampled by mc_expectation_probe."""
    if expression_id not in PROBE_IDS:
        raise UnknownExpression(f"unknown expression {expression_id!r}")
    st = _eigen_state(bundle)
    cfg = bundle.config
    th = st.om[k]
    b2 = th / (th + 1.0)
    lk = st.lam[0, k]
    delta2 = st.delta[k] ** 2
    s2 = delta2.sum()
    s4 = (delta2 ** 2).sum()
    vk2 = np.abs(st.V[:, k]) ** 2
    gRg = float((st.d * vk2).sum())
    if expression_id == "desired_power":
        br = theorem1_sinr(bundle.bank, bundle.spectrum, bundle.steering, bundle.fading,
                           bundle.ricean, cfg.p_u, k)
        return br.s_los + br.s_ray
    if expression_id == "sigma_interf":
        w = st.om / (st.om + 1.0)
        qf = (np.abs(st.V) ** 2 * delta2[:, None]).sum(axis=0)
        cross_qf = float((w * qf).sum() - w[k] * qf[k])
        return (st.c1[k] ** 2 * ((st.a[k] * delta2).sum() + cross_qf)
                + b2 * ((st.a[k] * vk2).sum()
                        + los_cross_power_steering(bundle.spectrum, bundle.steering,
                                                   bundle.ricean, k)))
    if expression_id == "pilot_peer_interf":
        qf_kk = float((vk2 * delta2).sum())
        return float(st.w2[k] * (st.c1[k] ** 2 * (s4 + s2 ** 2) + b2 * qf_kk))
    if expression_id == "noise_power":
        return float((st.c1[k] ** 2 * s2 + b2 * lk * st.N) / st.p_u)
    if expression_id == "t4_term_1":
        return float(b2 * (lk * st.N) ** 2)
    if expression_id == "t4_term_2":
        return float(lk * st.N / st.p_u)
    if expression_id == "t4_term_3":
        return float(lk * gRg / (th + 1.0))
    if expression_id == "t4_term_4":
        return float(st.lam[1:].sum() * gRg)
    # t4_term_5
    other = (st.lam[0] / (st.om + 1.0) * gRg)
    return float(los_cross_power_rho(bundle.fading, bundle.ricean, bundle.rho, k)
                 + other.sum() - other[k])
