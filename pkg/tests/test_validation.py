import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ricean_mimo as rm

BOUND_NAMES = ("square_over_linear", "cube_over_linear",
               "quartic_over_square", "cube_over_square")


def test_uniform_vector_sits_on_every_lower_bound():
    for M in (2, 5, 17):
        case = rm.InequalityCase(x=np.ones(M), a=0.3, b=2.0)
        checks = rm.check_extremal_inequalities(case)
        assert [c.name for c in checks] == list(BOUND_NAMES)
        for c in checks:
            assert c.upper_ok and c.lower_ok
            assert abs(c.slack_lower) < 1e-12 * max(1.0, abs(c.lower))


def test_bound_values_by_hand_for_two_components():
    checks = {c.name: c for c in rm.check_extremal_inequalities(
        rm.InequalityCase(x=np.array([1.0, 1.0]), a=1.0, b=1.0))}
    c = checks["square_over_linear"]
    assert (c.upper, c.value, c.lower) == pytest.approx((4 / 3, 1.0, 1.0))
    c = checks["cube_over_linear"]
    assert (c.upper, c.value, c.lower) == pytest.approx((8 / 3, 1.0, 1.0))
    c = checks["quartic_over_square"]
    assert (c.upper, c.value, c.lower) == pytest.approx((16 / 9, 0.5, 0.5))
    c = checks["cube_over_square"]
    assert (c.upper, c.value, c.lower) == pytest.approx((8 / 9, 0.5, 0.5))


@settings(max_examples=60, deadline=None)
@given(
    v=st.lists(st.floats(0.05, 10.0, allow_nan=False), min_size=2, max_size=10),
    a=st.floats(0.01, 100.0),
    b=st.floats(0.01, 100.0),
)
def test_bounds_hold_for_arbitrary_positive_cases(v, a, b):
    v = np.asarray(v)
    case = rm.InequalityCase(x=v * (v.size / v.sum()), a=a, b=b)
    for c in rm.check_extremal_inequalities(case):
        assert c.upper_ok, (c.name, c.slack_upper)
        assert c.lower_ok, (c.name, c.slack_lower)


@pytest.mark.parametrize("x,a,b", [
    ([1.0], 1.0, 1.0),                  # too short
    ([2.0, 0.0], 1.0, 1.0),             # component not positive
    ([1.0, 2.0], 1.0, 1.0),             # sums to 3, not 2
    ([1.0, 1.0], 0.0, 1.0),             # weight a
    ([1.0, 1.0], 1.0, -2.0),            # weight b
])
def test_inequality_case_rejects_bad_input(x, a, b):
    with pytest.raises(ValueError):
        rm.InequalityCase(x=np.array(x), a=a, b=b)


def test_gamma_moments_single_exponential():
    rep = rm.check_gamma_moments([(1.0, 1.0)], 20000, seed=3)
    assert rep.expected == {"mean": 1.0, "second_moment": 2.0, "variance": 1.0}
    for z in (rep.mean_z, rep.second_moment_z, rep.variance_z):
        assert abs(z) < 5.0


def test_gamma_moments_mixed_sum():
    comps = [(0.5, 2.0), (3.0, 0.7), (1.2, 1.3)]
    rep = rm.check_gamma_moments(comps, 30000, seed=4)
    k1 = sum(k * t for k, t in comps)
    k2 = sum(k * t ** 2 for k, t in comps)
    assert rep.expected["mean"] == pytest.approx(k1, rel=1e-12)
    assert rep.expected["variance"] == pytest.approx(k2, rel=1e-12)
    assert rep.expected["second_moment"] == pytest.approx(k2 + k1 ** 2, rel=1e-12)
    for z in (rep.mean_z, rep.second_moment_z, rep.variance_z):
        assert abs(z) < 5.0
    again = rm.check_gamma_moments(comps, 30000, seed=4)
    assert again.observed == rep.observed


@pytest.mark.parametrize("comps", [[(0.0, 1.0)], [(1.0, -1.0)], [(2.0, 1.0), (-0.5, 1.0)]])
def test_gamma_moments_reject_nonpositive_parameters(comps):
    with pytest.raises(ValueError):
        rm.check_gamma_moments(comps, 100, seed=0)


@pytest.mark.parametrize("quantity_id", rm.PROBE_QUANTITIES)
def test_probes_decay_on_doubling_grid(tiny_bundle, quantity_id):
    rows = rm.convergence_probe(quantity_id, (64, 128, 256), tiny_bundle)
    assert [n for n, _, _ in rows] == [64, 128, 256]
    values = [v for _, v, _ in rows]
    gaps = [g for _, _, g in rows]
    assert values == gaps
    assert all(v > 0 for v in values)
    assert values[0] > values[1] > values[2]


def test_whitened_energy_per_antenna_is_flat_when_uncorrelated(tiny_bundle):
    """With R = I the delta spectrum is flat, so sum(delta^2)/N is exactly
    N-independent; this is the normalization the asymptotes hold fixed."""
    per_n = []
    for n in (32, 64):
        spec = rm.exp_correlation(n, 0.0)
        bank = rm.filter_bank(spec, tiny_bundle.fading, tiny_bundle.ricean,
                              tiny_bundle.config.p_P)
        per_n.append((bank.delta[0] ** 2).sum() / n)
    assert per_n[0] == pytest.approx(per_n[1], rel=1e-12)


def test_probe_grid_and_id_validation(tiny_bundle):
    with pytest.raises(ValueError, match="ascending"):
        rm.convergence_probe("delta4_over_N2", (64, 64, 128), tiny_bundle)
    with pytest.raises(rm.UnknownQuantity, match="rho2_over_N2"):
        rm.convergence_probe("nope", (8, 16), tiny_bundle)


def test_report_round_trip(tmp_path):
    entries = [
        {"check": "square_over_linear", "pass": True, "slack": 0.25},
        {"check": "gamma_mean", "pass": True, "z": -0.8},
    ]
    path = tmp_path / "report.json"
    rm.write_report(path, entries)
    with open(path) as f:
        assert json.load(f) == {"checks": entries}


def test_report_rejects_incomplete_entries(tmp_path):
    with pytest.raises(ValueError):
        rm.write_report(tmp_path / "r.json", [{"check": "x", "pass": True}])
    with pytest.raises(ValueError):
        rm.write_report(tmp_path / "r.json", [{"pass": True, "slack": 0.1}])
