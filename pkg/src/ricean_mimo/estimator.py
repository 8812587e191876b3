"""Pilot phase and channel acquisition.

Two acquisition routes feed the rate analysis: the LMMSE chain (correlate
received pilots, strip the known LOS contribution, filter the scattered
residual) and the trivial deterministic LOS estimate. Full pilot reuse across
cells makes same-index users' scattered estimates exactly collinear - the
algebraic face of pilot contamination.

All filter algebra lives in the shared correlation eigenbasis, where every
N x N inverse is a diagonal reciprocal.
"""

from dataclasses import dataclass

import numpy as np

from .channel import crandn


@dataclass
class PilotConfig:
    Phi: np.ndarray        # (K, K) unitary pilot matrix, rows are per-user sequences
    p_P: float


@dataclass
class LmmseFilterBank:
    """Per-user eigen-domain filter diagonals.

    q[k]     : diagonal of Q_k = (lam_{1,k} R/(omega_k+1) + sum_{l>=2} lam_{l,k} R + I/p_P)^-1
    delta[k] : d_n * sqrt(q[k,n]) - the diagonal of R Q_k^(1/2)
    a[k]     : residual-variance diagonal driving the scattered interference power
    b[k]     : a[k] + delta[k]^2 * sum_{l>=2} lam_{l,k}^2
    """
    spectrum: object
    fading: object
    ricean: object
    p_P: float
    q: np.ndarray          # (K, N)
    delta: np.ndarray      # (K, N)
    a: np.ndarray          # (K, N)
    b: np.ndarray          # (K, N)


@dataclass
class EstimatedChannel:
    g_hat: list                     # per-cell (N, K) estimate matrices
    h_hat: np.ndarray | None        # (N, K) whitened estimate vectors (LMMSE route only)


@dataclass
class ErrorCovariance:
    C: np.ndarray          # (N, N) Hermitian estimation-error covariance
    l: int
    k: int


def dft_pilots(config):
    """Unitary DFT pilot book: deterministic, exactly unitary up to rounding."""
    K = config.K
    grid = np.outer(np.arange(K), np.arange(K))
    return PilotConfig(Phi=np.exp(-2j * np.pi * grid / K) / np.sqrt(K), p_P=config.p_P)


def _loadings(fading, ricean):
    """Per-user total prior power loading lam_{1,k}/(omega_k+1) + sum_{l>=2} lam_{l,k}."""
    return fading.lam[0] / (ricean.omega + 1.0) + fading.lam[1:].sum(axis=0)


def filter_bank(spectrum, fading, ricean, p_P):
    d = spectrum.d
    lam = fading.lam
    load = _loadings(fading, ricean)                        # (K,)
    q = 1.0 / (load[:, None] * d[None, :] + 1.0 / p_P)      # (K, N)
    delta = d[None, :] * np.sqrt(q)
    own_sq = (lam[0] / (ricean.omega + 1.0)) ** 2 + (lam[1:] ** 2).sum(axis=0)   # (K,)
    a = load.sum() * d[None, :] - own_sq[:, None] * delta ** 2
    b = a + (lam[1:] ** 2).sum(axis=0)[:, None] * delta ** 2
    return LmmseFilterBank(spectrum=spectrum, fading=fading, ricean=ricean, p_P=float(p_P),
                           q=q, delta=delta, a=a, b=b)


def q_matrix(spectrum, fading, ricean, p_P, k):
    """Physical-basis LMMSE whitening matrix Q_k and its delta diagonal."""
    if p_P <= 0:
        raise ValueError("p_P must be positive")
    d = spectrum.d
    load = _loadings(fading, ricean)[k]
    q = 1.0 / (load * d + 1.0 / p_P)
    Q = (spectrum.U * q) @ spectrum.U.conj().T
    return Q, d * np.sqrt(q)


def error_covariance(bank, fading, ricean, l, k):
    """Estimation-error covariance for the (l, k) channel.

    Reference cell: lam R/(omega+1) - (lam/(omega+1))^2 R Q_k R; interfering
    cells drop the Ricean deflation. Diagonal in the eigenbasis since
    R Q_k R has eigenvalues delta_{k,n}^2.
    """
    diag = error_cov_diag(bank, l, k)
    U = bank.spectrum.U
    return ErrorCovariance(C=(U * diag) @ U.conj().T, l=l, k=k)


def error_cov_diag(bank, l, k):
    """Eigen-domain diagonal of the (l, k) error covariance."""
    d = bank.spectrum.d
    if l == 0:
        c = bank.fading.lam[0, k] / (bank.ricean.omega[k] + 1.0)
    else:
        c = bank.fading.lam[l, k]
    return c * d - c ** 2 * bank.delta[k] ** 2


def run_pilot_phase(channel, pilots, rng, bank=None):
    """One pilot transmission with fresh noise, returning all LMMSE estimates.

    Every cell reuses the same pilot book. After correlating against user k's
    sequence the known LOS contribution is subtracted, the residual is
    whitened into h_hat ~ CN(0, I), and the per-cell estimates are rebuilt
    from it. Requires the realization to carry its generating model pieces.
    """
    if channel.spectrum is None:
        raise ValueError("realization lacks model references; re-draw it rather than reloading")
    spectrum, steering = channel.spectrum, channel.steering
    fading, ricean = channel.fading, channel.ricean
    if bank is None:
        bank = filter_bank(spectrum, fading, ricean, pilots.p_P)
    L, K = fading.lam.shape
    N = spectrum.d.size
    sp = np.sqrt(pilots.p_P)
    om = ricean.omega

    Y = sp * sum(channel.G) @ pilots.Phi + crandn(rng, (N, K))
    y = Y @ pilots.Phi.conj().T                       # per-user pilot correlation
    y_star = y - sp * steering.g_bar * np.sqrt(om / (om + 1.0))

    U = spectrum.U
    h_eig = np.sqrt(bank.q.T) * (U.conj().T @ y_star) / sp      # whitened estimates, eigen coords
    w_eig = bank.delta.T * h_eig                                # R Q^(1/2) h_hat, eigen coords
    w_phys = U @ w_eig
    g_hat = [w_phys * (fading.lam[0] / (om + 1.0))[None, :]
             + steering.g_bar * np.sqrt(om / (om + 1.0))]
    for l in range(1, L):
        g_hat.append(w_phys * fading.lam[l][None, :])
    return EstimatedChannel(g_hat=g_hat, h_hat=U @ h_eig)


def los_estimate(steering):
    """Deterministic acquisition: the steering matrix itself, no pilot spent.

    Only the reference cell is estimated (single-entry list); downstream rate
    bounds treat every scattered component as interference and keep the full
    rate prefactor 1.
    """
    return EstimatedChannel(g_hat=[steering.g_bar.copy()], h_hat=None)
