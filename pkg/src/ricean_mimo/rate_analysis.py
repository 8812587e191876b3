"""Closed-form SINR and rate expressions for both acquisition routes.

The LMMSE/MRC route gets a four-term SINR split (LOS/scattered signal and
interference powers), its large-antenna limit, and the power-scaling law; the
LOS-combining route gets the worst-case-noise rate bound, its linear-in-N
asymptote, and the matching power-scaling law. A cross-steering kernel rho
captures how distinct arrival angles interact on a uniform linear array.

Quadratic forms are always evaluated by projecting v = U^H g_bar once and
summing against diagonals - O(N^2) per user, no dense N x N products.
"""

from dataclasses import dataclass

import numpy as np


class _Unbounded:
    """Distinguished value for a limit that grows without bound (no
    interfering cell). Deliberately not a float so it cannot leak into
    arithmetic unnoticed."""
    __slots__ = ()

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = _Unbounded()


@dataclass
class SinrBreakdown:
    """Signal and interference powers split into LOS-carried and scattered
    parts; all four are nonnegative and dimensionless."""
    s_los: float
    s_ray: float
    i_los: float
    i_ray: float
    rate_prefactor: float = 1.0

    @property
    def sinr(self):
        return (self.s_los + self.s_ray) / (self.i_los + self.i_ray)

    @property
    def rate(self):
        return self.rate_prefactor * np.log2(1.0 + self.sinr)


@dataclass
class RhoKernel:
    rho: np.ndarray        # (K, K) complex, diagonal = N, conjugate-symmetric
    N: int


def _project_los(spectrum, steering):
    """Eigen coordinates of the steering columns: v = U^H g_bar."""
    return spectrum.U.conj().T @ steering.g_bar


def los_cross_power_steering(spectrum, steering, ricean, k):
    """Cross-steering LOS interference seen by user k, from inner products:
    sum_{i != k} (omega_i/(omega_i+1)) |g_bar_k^H g_bar_i|^2."""
    V = _project_los(spectrum, steering)
    w = ricean.omega / (ricean.omega + 1.0)
    inner = np.abs(V[:, k].conj() @ V) ** 2
    return float((w * inner).sum() - w[k] * inner[k])


def los_cross_power_rho(fading, ricean, rho, k):
    """Same quantity through the closed-form kernel:
    lam_{1,k} sum_{i != k} (omega_i lam_{1,i}/(omega_i+1)) |rho_{k,i}|^2."""
    w = ricean.omega / (ricean.omega + 1.0)
    lam1 = fading.lam[0]
    r2 = np.abs(rho.rho[k]) ** 2
    return float(lam1[k] * ((w * lam1 * r2).sum() - w[k] * lam1[k] * r2[k]))


def theorem1_sinr(bank, spectrum, steering, fading, ricean, p_u, k, rate_prefactor=1.0):
    """Four-term SINR approximation for the LMMSE/MRC uplink of user k.

    Expectations of the numerator and denominator of the exact rate are taken
    separately; each splits into a LOS-carried and a scattered part built from
    the filter-bank diagonals and steering quadratic forms.
    """
    N = spectrum.d.size
    om = ricean.omega
    th = om[k]
    lk = fading.lam[0, k]
    c1 = lk / (th + 1.0)
    b2 = th / (th + 1.0)
    delta2 = bank.delta[k] ** 2
    s2 = delta2.sum()
    s4 = (delta2 ** 2).sum()

    V = _project_los(spectrum, steering)
    qf = (np.abs(V) ** 2 * delta2[:, None]).sum(axis=0)         # g_bar_i^H U D_k^2 U^H g_bar_i
    w = om / (om + 1.0)
    lam_other_sq = (fading.lam[1:, k] ** 2).sum()

    s_los = c1 ** 2 * (2.0 * b2 * (lk * N * s2 + qf[k]) + th ** 2 * N ** 2)
    s_ray = c1 ** 4 * (s4 + s2 ** 2)
    i_ray = c1 ** 2 * ((bank.a[k] * delta2).sum() + lam_other_sq * (s4 + s2 ** 2) + s2 / p_u)
    qf_b = float((np.abs(V[:, k]) ** 2 * bank.b[k]).sum())
    cross_qf = float((w * qf).sum() - w[k] * qf[k])
    i_los = (b2 * (qf_b + los_cross_power_steering(spectrum, steering, ricean, k))
             + c1 ** 2 * cross_qf + b2 * lk * N / p_u)
    return SinrBreakdown(s_los=float(s_los), s_ray=float(s_ray),
                         i_los=float(i_los), i_ray=float(i_ray),
                         rate_prefactor=float(rate_prefactor))


def theorem2_asymptotic(delta_k, fading, ricean, k):
    """Large-antenna limit of the LMMSE/MRC SINR, evaluated at the finite-N
    delta spectrum (the limit holds the ratio sum(delta^2)/N fixed).

    With no interfering cell the limit grows without bound and the
    distinguished UNBOUNDED value is returned instead of a float.
    """
    if fading.lam.shape[0] == 1:
        return UNBOUNDED
    delta_k = np.asarray(delta_k)
    s2n = (delta_k ** 2).sum() / delta_k.size
    if s2n <= 0:
        raise ValueError("delta vector must carry positive energy")
    th = ricean.omega[k]
    num = fading.lam[0, k] / (th + 1.0) + th / s2n
    return float(num ** 2 / (fading.lam[1:, k] ** 2).sum())


def theorem2_uncorrelated(fading, ricean, p_P, k):
    """The same limit when R = I, where the delta spectrum collapses:
    [lam_{1,k} + omega_k (sum_{l>=2} lam_{l,k} + 1/p_P)]^2 / sum lam^2."""
    if fading.lam.shape[0] == 1:
        return UNBOUNDED
    th = ricean.omega[k]
    num = fading.lam[0, k] + th * (fading.lam[1:, k].sum() + 1.0 / p_P)
    return float(num ** 2 / (fading.lam[1:, k] ** 2).sum())


def theorem3_power_scaling(config, fading, spectrum, ricean, k, epsilon, E_u, N):
    """Limit SINR of the LMMSE route when per-user power is cut as E_u N^-eps.

    A nonzero Ricean factor keeps N^(1-eps) E_u lam omega/(omega+1), free of
    the antenna correlation; pure Rayleigh decays through the pilot spectrum
    (pilot energy tied to K users, see the K E_u^2 term).
    """
    if epsilon <= 0 or E_u <= 0:
        raise ValueError("epsilon and E_u must be positive")
    th = ricean.omega[k]
    lk = fading.lam[0, k]
    if th > 0:
        return float(N ** (1.0 - epsilon) * E_u * lk * th / (th + 1.0))
    if spectrum.d.size != N:
        raise ValueError(f"spectrum holds {spectrum.d.size} eigenvalues, expected N={N}")
    sum_d2 = (spectrum.d ** 2).sum()
    denom = (fading.lam[1:, k] ** 2).sum() + 1.0 / (config.K * E_u ** 2 * N ** (-2.0 * epsilon) * sum_d2)
    return float(lk ** 2 / denom)


def theorem4_los_sinr(steering, spectrum, fading, ricean, rho, p_u, k):
    """Worst-case-noise SINR bound when the steering column itself is the
    combiner; scattered energy of every user lands in the denominator."""
    N = spectrum.d.size
    om = ricean.omega
    th = om[k]
    lk = fading.lam[0, k]
    v = _project_los(spectrum, steering)[:, k]
    gRg = float((spectrum.d * np.abs(v) ** 2).sum())            # g_bar_k^H R g_bar_k
    den = (los_cross_power_rho(fading, ricean, rho, k)
           + (fading.lam[0] / (om + 1.0)).sum() * gRg
           + fading.lam[1:].sum() * gRg
           + lk * N / p_u)
    return float(th / (th + 1.0) * (lk * N) ** 2 / den)


def theorem5_los_asymptotic(steering, spectrum, fading, ricean, p_u, k, N):
    """Large-antenna behavior of the LOS-combining bound: linear in N once the
    cross-steering terms wash out."""
    if spectrum.d.size != N:
        raise ValueError(f"spectrum holds {spectrum.d.size} eigenvalues, expected N={N}")
    om = ricean.omega
    th = om[k]
    lk = fading.lam[0, k]
    v = _project_los(spectrum, steering)[:, k]
    gRg = float((spectrum.d * np.abs(v) ** 2).sum())
    den = ((fading.lam[0] / (om + 1.0)).sum() * gRg / (N * lk)
           + fading.lam[1:].sum() * gRg / (N * lk)
           + 1.0 / p_u)
    return float(th / (th + 1.0) * lk * N / den)


def theorem5_uncorrelated(fading, ricean, p_u, k, N):
    """R = I form of the asymptote, where g_bar^H R g_bar = N lam_{1,k}."""
    om = ricean.omega
    th = om[k]
    den = (fading.lam[0] / (om + 1.0)).sum() + fading.lam[1:].sum() + 1.0 / p_u
    return float(th / (th + 1.0) * fading.lam[0, k] * N / den)


def theorem6_los_power_scaling(fading, ricean, k, epsilon, E_u, N):
    """Power-scaling limit of the LOS-combining route; coincides with the
    nonzero-Ricean branch of the LMMSE law."""
    if epsilon <= 0 or E_u <= 0:
        raise ValueError("epsilon and E_u must be positive")
    th = ricean.omega[k]
    return float(th * fading.lam[0, k] * E_u * N ** (1.0 - epsilon) / (th + 1.0))


def rho_kernel(angles, config):
    """Cross-steering kernel rho_{k,i} = sum_n e^{j n phi_ki} in closed
    geometric-series form, with the limit value N wherever phi_ki is a
    multiple of 2 pi (|1 - e^{j phi}| < 1e-12 branch)."""
    N = config.N
    s = np.sin(angles.arrival_angles)
    phi = 2.0 * np.pi * config.d_over_lambda * (s[:, None] - s[None, :])
    z = 1.0 - np.exp(1j * phi)
    degenerate = np.abs(z) < 1e-12
    safe = np.where(degenerate, 1.0, z)
    rho = np.where(degenerate, float(N), (1.0 - np.exp(1j * N * phi)) / safe)
    return RhoKernel(rho=rho, N=N)
