"""Property suites for the supporting mathematics.

Three families: moment identities for sums of Gammas (which is how squared
magnitudes of complex Gaussians enter every SINR term), the four extremal
sandwich inequalities behind the asymptotic bounds, and convergence probes
that track the normalized quantities whose decay drives the large-antenna
limits. Results can be serialized as a JSON report.
"""

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import exp_correlation, steering_matrix
from .estimator import filter_bank
from .rate_analysis import rho_kernel

_GAMMA_DOMAIN = 0xC1

PROBE_QUANTITIES = ("delta4_over_N2", "a_delta2_over_N2", "qf_delta2_over_N2",
                    "qf_b_over_N2", "rho2_over_N2")


class UnknownQuantity(Exception):
    """Convergence-probe id outside the catalogue."""


@dataclass
class InequalityCase:
    """A vector of M positive reals summing to M, plus positive weights a, b."""
    x: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 1 or self.x.size < 2:
            raise ValueError("x must be a vector with at least two components")
        if np.any(self.x <= 0):
            raise ValueError("all components of x must be positive")
        if abs(self.x.sum() - self.x.size) > 1e-9 * max(1.0, self.x.size):
            raise ValueError(f"components must sum to M={self.x.size}, got {self.x.sum()}")
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")

    @property
    def M(self):
        return self.x.size


@dataclass
class BoundCheck:
    name: str
    upper: float
    value: float
    lower: float
    upper_ok: bool         # strict: value < upper
    lower_ok: bool         # value >= lower up to fp slack
    slack_upper: float
    slack_lower: float


def check_extremal_inequalities(case):
    """Evaluate the four sandwich bounds for powers of x against ax+b weights.

    Upper bounds are strict for every valid case (the achieving configuration
    puts all mass on one component, which the positivity constraint excludes);
    lower bounds are met with equality exactly at x = (1, ..., 1).
    """
    x, a, b, M = case.x, case.a, case.b, float(case.M)
    lin = a * x + b
    lin_m = a * M + b
    specs = [
        ("square_over_linear", M ** 2 / lin_m, (x ** 2 / lin).sum(), M / (a + b)),
        ("cube_over_linear", M ** 3 / lin_m, (x ** 3 / lin).sum(), M / (a + b)),
        ("quartic_over_square", M ** 4 / lin_m ** 2, (x ** 4 / lin ** 2).sum(), M / (a + b) ** 2),
        ("cube_over_square", M ** 3 / lin_m ** 2, (x ** 3 / lin ** 2).sum(), M / (a + b) ** 2),
    ]
    out = []
    for name, upper, value, lower in specs:
        guard = 1e-12 * max(1.0, abs(lower))
        out.append(BoundCheck(name=name, upper=float(upper), value=float(value),
                              lower=float(lower),
                              upper_ok=bool(value < upper),
                              lower_ok=bool(value >= lower - guard),
                              slack_upper=float(upper - value),
                              slack_lower=float(value - lower)))
    return out


def _sum_gamma_cumulants(components):
    """First four cumulants of a sum of independent Gammas:
    kappa_m = sum_j k_j theta_j^m (m-1)!."""
    k1 = sum(k * t for k, t in components)
    k2 = sum(k * t ** 2 for k, t in components)
    k3 = 2.0 * sum(k * t ** 3 for k, t in components)
    k4 = 6.0 * sum(k * t ** 4 for k, t in components)
    return k1, k2, k3, k4


@dataclass
class GammaMomentReport:
    components: list
    samples: int
    seed: int
    mean_z: float
    second_moment_z: float
    variance_z: float
    observed: dict
    expected: dict


def check_gamma_moments(shape_scale, samples, seed):
    """Sample a sum of independent Gammas and z-score its moments.

    shape_scale lists (k, theta) pairs of the summands. Expected values come
    from exact cumulants; standard errors for the mean and second moment use
    the exact sampling variances, the variance z-score uses the standard iid
    formula for the sample variance.
    """
    components = [(float(k), float(t)) for k, t in shape_scale]
    if any(k <= 0 or t <= 0 for k, t in components):
        raise ValueError("all shapes and scales must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_GAMMA_DOMAIN,)))
    total = np.zeros(samples)
    for k, t in components:
        total += rng.gamma(shape=k, scale=t, size=samples)

    k1, k2, k3, k4 = _sum_gamma_cumulants(components)
    mean = k1
    var = k2
    m2 = k2 + k1 ** 2                                          # E[X^2]
    m4 = k4 + 4.0 * k3 * k1 + 3.0 * k2 ** 2 + 6.0 * k2 * k1 ** 2 + k1 ** 4   # E[X^4]
    mu4 = k4 + 3.0 * k2 ** 2                                   # central 4th moment

    n = samples
    obs_mean = total.mean()
    obs_m2 = (total ** 2).mean()
    obs_var = total.var(ddof=1)
    se_mean = math.sqrt(var / n)
    se_m2 = math.sqrt(max(m4 - m2 ** 2, 0.0) / n)
    se_var = math.sqrt(max(mu4 / n - var ** 2 * (n - 3) / (n * (n - 1)), 0.0))
    return GammaMomentReport(
        components=components, samples=samples, seed=seed,
        mean_z=float((obs_mean - mean) / se_mean),
        second_moment_z=float((obs_m2 - m2) / se_m2),
        variance_z=float((obs_var - var) / se_var),
        observed={"mean": float(obs_mean), "second_moment": float(obs_m2),
                  "variance": float(obs_var)},
        expected={"mean": mean, "second_moment": m2, "variance": var})


def convergence_probe(quantity_id, n_grid, bundle, k=0, i=1):
    """Track one normalized quantity over an ascending antenna grid.

    The spectrum, steering matrix, and filter bank are rebuilt at each N from
    the bundle's scenario (placement and fading do not depend on N). Rows are
    (N, value, gap) with gap = value, the distance-to-zero of the probe.
    """
    if quantity_id not in PROBE_QUANTITIES:
        raise UnknownQuantity(f"unknown quantity {quantity_id!r}; "
                              f"known ids: {', '.join(PROBE_QUANTITIES)}")
    grid = list(n_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N grid must be strictly ascending")
    cfg = bundle.config
    rows = []
    for n in grid:
        cfg_n = dataclasses.replace(cfg, N=int(n))
        if quantity_id == "rho2_over_N2":
            rho = rho_kernel(bundle.placement, cfg_n)
            value = abs(rho.rho[k, i]) ** 2 / n ** 2
        else:
            spectrum = exp_correlation(n, cfg.kappa)
            bank = filter_bank(spectrum, bundle.fading, bundle.ricean, cfg.p_P)
            delta2 = bank.delta[k] ** 2
            if quantity_id == "delta4_over_N2":
                value = (delta2 ** 2).sum() / n ** 2
            elif quantity_id == "a_delta2_over_N2":
                value = (bank.a[k] * delta2).sum() / n ** 2
            else:
                steering = steering_matrix(bundle.fading, bundle.placement, cfg_n)
                v = spectrum.U.conj().T @ steering.g_bar[:, k]
                diag = delta2 if quantity_id == "qf_delta2_over_N2" else bank.b[k]
                value = (np.abs(v) ** 2 * diag).sum() / n ** 2
        rows.append((int(n), float(value), float(value)))
    return rows


def write_report(path, entries):
    """Serialize check results as JSON: list of {check, slack|z, pass}."""
    for e in entries:
        if "check" not in e or "pass" not in e or not ("slack" in e or "z" in e):
            raise ValueError(f"report entry needs check, pass, and slack or z: {e}")
    with open(path, "w") as f:
        json.dump({"checks": entries}, f, indent=2)
        f.write("\n")
