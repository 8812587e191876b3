"""Correlated Ricean channel model.

Antenna correlation follows the exponential profile [R]_{m,n} = kappa^|m-n|
shared by all users and cells; everything downstream works in the eigenbasis
R = U diag(d) U^H. The reference cell mixes a deterministic uniform-linear-
array steering component with correlated scattering according to per-user
Ricean factors; interfering cells are purely scattered.
"""

import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"MMRL"
_DUMP_VERSION = 1
# floor applied to eigenvalues before sqrt: guards fp negatives as kappa -> 1
_EIG_FLOOR = 1e-14


class InvalidKappa(Exception):
    """Correlation coefficient outside [0, 1)."""


@dataclass
class CorrSpectrum:
    U: np.ndarray          # (N, N) orthonormal eigenvectors
    d: np.ndarray          # (N,) eigenvalues sorted descending, sum = N
    kappa: float


@dataclass
class SteeringMatrix:
    g_bar: np.ndarray      # (N, K), column k = sqrt(lam_{1,k}) * array response of angle k


@dataclass
class RiceanFactors:
    omega: np.ndarray      # (K,) nonnegative linear LOS-to-scatter power ratios


@dataclass
class ChannelRealization:
    """One fast-fading draw: composite per-cell channels plus the underlying
    standard-Gaussian scatter draws (ground truth for estimator tests). The
    generating model pieces ride along so the pilot phase can rebuild priors."""
    G: list                # L matrices (N, K)
    H_frown: np.ndarray | None      # (L, N, K) standard complex Gaussians, None after reload
    spectrum: CorrSpectrum | None = None
    steering: SteeringMatrix | None = None
    fading: object = None
    ricean: RiceanFactors | None = None


def exp_correlation(N, kappa):
    """Eigendecomposition of the exponential correlation matrix kappa^|m-n|."""
    if not (0.0 <= kappa < 1.0):
        raise InvalidKappa(f"kappa must lie in [0, 1), got {kappa}")
    idx = np.arange(N)
    R = float(kappa) ** np.abs(idx[:, None] - idx[None, :])
    w, V = np.linalg.eigh(R)
    order = np.argsort(w)[::-1]
    d = np.maximum(w[order], _EIG_FLOOR)
    return CorrSpectrum(U=V[:, order], d=d, kappa=float(kappa))


def corr_matrix(spectrum):
    """Reconstruct R = U diag(d) U^H."""
    return (spectrum.U * spectrum.d) @ spectrum.U.conj().T


def corr_sqrt(spectrum):
    """Symmetric square root U diag(sqrt(d)) U^H (not a Cholesky factor)."""
    return (spectrum.U * np.sqrt(spectrum.d)) @ spectrum.U.conj().T


def steering_matrix(fading, angles, config):
    """LOS steering matrix for the reference cell.

    Column k carries phase e^{-j(n-1) * 2*pi*(d/lambda) * sin(theta_k)} on
    antenna n and is scaled by sqrt(lam_{1,k}), so its squared norm is
    N * lam_{1,k} exactly.
    """
    n = np.arange(config.N)[:, None]
    phase = 2.0 * np.pi * config.d_over_lambda * np.sin(angles.arrival_angles)[None, :]
    return SteeringMatrix(
        g_bar=np.sqrt(fading.lam[0])[None, :] * np.exp(-1j * n * phase))


def ricean_factors(config):
    return RiceanFactors(omega=np.asarray(config.ricean_factors, dtype=float))


def crandn(rng, shape):
    """CN(0,1) draws: real and imaginary parts i.i.d. N(0, 1/2)."""
    z = rng.standard_normal((2,) + tuple(shape))
    return np.sqrt(0.5) * (z[0] + 1j * z[1])


def draw_channel(spectrum, steering, fading, ricean, rng):
    """One composite channel realization.

    Reference-cell column k mixes the steering column with weight
    sqrt(omega_k/(omega_k+1)) and correlated scatter with weight
    sqrt(1/(omega_k+1)); interfering cells are purely scattered with
    per-column covariance lam_{l,k} * R.
    """
    L, K = fading.lam.shape
    N = spectrum.d.size
    H = crandn(rng, (L, N, K))
    Rh = corr_sqrt(spectrum)
    om = ricean.omega
    G = [steering.g_bar * np.sqrt(om / (om + 1.0))
         + (Rh @ (H[0] * np.sqrt(fading.lam[0]))) * np.sqrt(1.0 / (om + 1.0))]
    for l in range(1, L):
        G.append(Rh @ (H[l] * np.sqrt(fading.lam[l])))
    return ChannelRealization(G=G, H_frown=H, spectrum=spectrum, steering=steering,
                              fading=fading, ricean=ricean)


def dump_realization(path, realization):
    """Serialize the composite channels for cross-language replay.

    Layout: 16-byte header (magic "MMRL", u16 version, u16 N, u16 K, u16 L,
    4 pad bytes, little-endian), then the (L, N, K) stack row-major as
    complex64 interleaved float32 pairs. Scatter draws are not persisted.
    """
    G = np.stack(realization.G).astype("<c8")
    L, N, K = G.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<4sHHHH4x", _MAGIC, _DUMP_VERSION, N, K, L))
        f.write(G.tobytes())


def load_realization(path):
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16:
            raise ValueError(f"{path}: truncated header")
        magic, version, N, K, L = struct.unpack("<4sHHHH4x", header)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a channel dump (bad magic {magic!r})")
        if version != _DUMP_VERSION:
            raise ValueError(f"{path}: unsupported dump version {version}")
        payload = f.read()
    expect = L * N * K * 8
    if len(payload) != expect:
        raise ValueError(f"{path}: payload holds {len(payload)} bytes, expected {expect}")
    G = np.frombuffer(payload, dtype="<c8").reshape(L, N, K)
    return ChannelRealization(G=[G[l].copy() for l in range(L)], H_frown=None)
