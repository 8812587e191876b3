"""Cell geometry, user drops, and distance-based path loss for the multi-cell uplink.

The reference BS sits at the origin of a seven-cell hexagonal cluster with
inter-site distance 2 (inner radius 1). Every cell drops K users on a circle
of radius ``user_radius`` around its own BS; only the distance to the
reference BS matters for path loss, so interfering users carry random seeded
azimuths while reference users keep deterministic arrival angles for the LOS
steering model.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .units import db2pow

# spawn-key tag for the per-cell user-drop streams
_PLACEMENT_DOMAIN = 0xA1

ANGLE_SCHEMES = ("uniform_half_circle", "quarter_offset")


class UnsupportedLayout(Exception):
    """Cell counts other than 7 have no defined hexagonal layout."""


class DegenerateGeometry(Exception):
    """A user fell exactly on the reference BS; path loss is undefined."""


@dataclass
class ScenarioConfig:
    """All scenario knobs. Powers and Ricean factors are linear here;
    ``*_db`` spellings exist only in the JSON mirror (see config_from_dict)."""

    L: int = 7                     # cells (reference cell first)
    K: int = 10                    # users per cell
    N: int = 128                   # BS antennas
    p_u: float = 10.0              # uplink data power (10 dB)
    p_P: float = 100.0             # pilot power (default 10 * p_u)
    T: int = 196                   # coherence interval in symbols
    tau: int | None = None         # pilot length; pinned to K
    ricean_factors: object = db2pow(3.0)   # scalar broadcast or length-K sequence
    kappa: float = 0.2             # exponential antenna-correlation coefficient
    d_over_lambda: float = 0.5     # antenna spacing over wavelength
    alpha: float = 3.7             # path-loss exponent
    user_radius: float = 2.0 / 3.0
    angle_scheme: object = "uniform_half_circle"   # scheme name or explicit angle list
    seed: int = 0
    mc_trials: int = 2000

    def __post_init__(self):
        if self.tau is None:
            self.tau = self.K
        for name in ("L", "K", "N", "T", "tau", "mc_trials"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.tau != self.K:
            raise ValueError(f"pilot length tau must equal K (tau={self.tau}, K={self.K})")
        if not (self.K <= self.tau < self.T):
            raise ValueError(f"need K <= tau < T, got K={self.K}, tau={self.tau}, T={self.T}")
        if not (self.p_u > 0 and self.p_P > 0):
            raise ValueError("p_u and p_P must be positive")
        if not (0.0 <= self.kappa < 1.0):
            raise ValueError(f"kappa must lie in [0, 1), got {self.kappa}")
        if self.d_over_lambda <= 0:
            raise ValueError("d_over_lambda must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.user_radius <= 0:
            raise ValueError("user_radius must be positive")
        if self.mc_trials < 2:
            raise ValueError("mc_trials must be at least 2")
        om = np.atleast_1d(np.asarray(self.ricean_factors, dtype=float))
        if om.size == 1:
            om = np.full(self.K, om.item())
        if om.shape != (self.K,):
            raise ValueError(f"ricean_factors needs 1 or K={self.K} entries, got shape {om.shape}")
        if np.any(om < 0):
            raise ValueError("ricean_factors must be nonnegative")
        self.ricean_factors = tuple(float(v) for v in om)
        if isinstance(self.angle_scheme, str):
            if self.angle_scheme not in ANGLE_SCHEMES:
                raise ValueError(f"unknown angle scheme {self.angle_scheme!r}; "
                                 f"pick one of {ANGLE_SCHEMES} or give an explicit angle list")
        else:
            th = np.asarray(self.angle_scheme, dtype=float)
            if th.shape != (self.K,):
                raise ValueError(f"explicit angles need K={self.K} entries, got shape {th.shape}")
            if np.any(th < -np.pi / 2) or np.any(th >= np.pi / 2):
                raise ValueError("explicit arrival angles must lie in [-pi/2, pi/2)")
            self.angle_scheme = tuple(float(v) for v in th)


@dataclass
class CellLayout:
    bs_positions: np.ndarray        # (L, 2), reference BS first
    inner_radius: float = 1.0
    inter_site_distance: float = 2.0


@dataclass
class UserPlacement:
    positions: np.ndarray           # (L, K, 2)
    arrival_angles: np.ndarray      # (K,) reference-cell LOS angles in [-pi/2, pi/2)


@dataclass
class LargeScaleFading:
    lam: np.ndarray                 # (L, K) path-loss coefficients toward the reference BS


def arrival_angles(config):
    """Deterministic reference-cell arrival angles for the configured scheme."""
    K = config.K
    if isinstance(config.angle_scheme, tuple):
        return np.asarray(config.angle_scheme, dtype=float)
    if config.angle_scheme == "uniform_half_circle":
        return np.pi * np.arange(K) / K - np.pi / 2
    # quarter_offset: (2k-1)/(2K) - pi/4 in radians, k = 1..K
    return (2 * np.arange(1, K + 1) - 1) / (2.0 * K) - np.pi / 4


def build_layout(config):
    """Seven-cell hexagonal cluster: reference BS at the origin, six neighbors
    at distance 2 and angles 2*pi*m/6."""
    if config.L != 7:
        raise UnsupportedLayout(f"hexagonal layout is defined for 7 cells only, got L={config.L}")
    ang = 2.0 * np.pi * np.arange(6) / 6.0
    pos = np.vstack([[0.0, 0.0], np.column_stack([2.0 * np.cos(ang), 2.0 * np.sin(ang)])])
    return CellLayout(bs_positions=pos)


def place_users(config, layout):
    """Drop K users per cell on the radius-``user_radius`` circle around their BS.

    Azimuths are drawn from per-cell substreams of the scenario seed so a
    placement is reproducible cell by cell; arrival angles follow the
    deterministic scheme.
    """
    L, K = config.L, config.K
    pos = np.empty((L, K, 2))
    for l in range(L):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(_PLACEMENT_DOMAIN, l)))
        psi = rng.uniform(0.0, 2.0 * np.pi, size=K)
        pos[l] = layout.bs_positions[l] + config.user_radius * np.column_stack(
            [np.cos(psi), np.sin(psi)])
    return UserPlacement(positions=pos, arrival_angles=arrival_angles(config))


def large_scale_fading(config, placement, layout):
    """Path loss d^(-alpha) from every user to the reference BS; no shadowing.

    Reference users sit on the radius-``user_radius`` circle around the origin,
    so their coefficients all equal user_radius^(-alpha) up to rounding.
    """
    bs1 = layout.bs_positions[0]
    dist = np.linalg.norm(placement.positions - bs1, axis=-1)
    if np.any(dist == 0.0):
        raise DegenerateGeometry("a user coincides with the reference BS")
    return LargeScaleFading(lam=dist ** (-config.alpha))


def config_from_dict(raw):
    """Build a ScenarioConfig from a JSON-style dict.

    Any key spelled ``<name>_db`` is converted to linear via 10^(db/10)
    (elementwise for lists) and must not coexist with its linear twin.
    """
    out = {}
    for key, val in raw.items():
        if key.endswith("_db"):
            base = key[:-3]
            if base in raw:
                raise ValueError(f"both {key!r} and {base!r} given; pick one spelling")
            out[base] = [db2pow(v) for v in val] if isinstance(val, (list, tuple)) else db2pow(val)
        else:
            out[key] = val
    if isinstance(out.get("angle_scheme"), list):
        out["angle_scheme"] = tuple(out["angle_scheme"])
    return ScenarioConfig(**out)


def config_to_dict(config):
    """JSON-ready dict with linear values only (exact round-trip through
    config_from_dict; dB spellings are an input convenience, not an output)."""
    d = asdict(config)
    d["ricean_factors"] = list(config.ricean_factors)
    if isinstance(config.angle_scheme, tuple):
        d["angle_scheme"] = list(config.angle_scheme)
    return d
