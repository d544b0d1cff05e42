import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from mcast_handover.analytic import (
    HandoverKind,
    MobilityParams,
    NetworkGeometry,
    Scheme,
    SingularityError,
    bt_window,
    expected_handovers,
    handoff_decomposition,
    handover_probability,
    map_residence_scaling,
    predictive_window,
    reactive_window,
    signalling_overhead,
)

ZERO = NetworkGeometry(t_m1=0, t_m2=0, t_l1=0, t_l2=0, t_l3=0, t_L2=0, t_local_IP=0, t_Ant=0)
durations = st.floats(0, 500, allow_nan=False)


@st.composite
def geometries(draw):
    return NetworkGeometry(**{name: draw(durations) for name in vars(ZERO)})


def series_oracle(rho, k, tol=1e-15):
    """Partial sums of sum_i i q^i until the terms vanish."""
    q = 1.0 / (1.0 + math.sqrt(k) * rho)
    total, i, term = 0.0, 1, q
    while term > tol * max(total, 1.0):
        total += term
        i += 1
        term = i * q**i
    return total


@pytest.mark.parametrize(
    "kw,t_bu,expected",
    [({"t_L2": 50, "t_local_IP": 0}, 22, 72), ({}, 0, 0), ({"t_L2": 50, "t_local_IP": 10}, 0, 60)],
)
def test_handoff_decomposition(kw, t_bu, expected):
    g = NetworkGeometry(**{**vars(ZERO), **kw})
    assert handoff_decomposition(g, t_bu) == expected


def test_handoff_decomposition_rejects_negative_bu():
    with pytest.raises(ValueError):
        handoff_decomposition(ZERO, -1)


def test_bt_window_examples():
    g = NetworkGeometry(t_L2=50, t_local_IP=0, t_m2=2, t_l2=20, t_l1=20, t_m1=2)
    w = bt_window(g)
    assert (w.loss_window, w.added_delay) == (72, 0)
    assert (bt_window(ZERO).loss_window, bt_window(ZERO).added_delay) == (0, 0)
    assert bt_window(NetworkGeometry(t_l2=30, t_l1=10, t_m1=3, t_m2=3)).added_delay == 20


def test_reactive_window_examples():
    w = reactive_window(NetworkGeometry(t_L2=50, t_local_IP=0, t_m2=2, t_l3=10, t_m1=2))
    assert (w.loss_window, w.added_delay) == (62, 10)
    assert reactive_window(ZERO).loss_window == 0
    assert reactive_window(ZERO).added_delay == 0


@given(geometries(), st.floats(0, 100))
def test_reactive_loss_linear_in_router_distance(g, delta):
    from dataclasses import replace

    grown = replace(g, t_l3=g.t_l3 + delta)
    assert reactive_window(grown).loss_window - reactive_window(g).loss_window == pytest.approx(delta, abs=1e-9)


def test_predictive_success_example_plus_branch():
    w = predictive_window(NetworkGeometry(t_Ant=50, t_l3=10, t_m1=2, t_L2=50))
    assert (w.delta_plus, w.delta_minus, w.loss_window) == (28, 0, 68)


def test_predictive_success_example_minus_branch():
    w = predictive_window(NetworkGeometry(t_Ant=50, t_l3=25, t_m1=2, t_L2=50))
    assert (w.delta_plus, w.delta_minus, w.loss_window) == (0, 2, 25)


@given(geometries())
def test_no_anticipation_is_pure_overrun(g):
    from dataclasses import replace

    w = predictive_window(replace(g, t_Ant=0))
    assert w.delta_plus == 0
    assert w.delta_minus == 2 * g.t_l3 + g.t_m1


def test_predictive_erroneous_adds_reactive_loss():
    g = NetworkGeometry(t_Ant=50, t_l3=10, t_m1=2, t_m2=2, t_L2=50)
    assert predictive_window(g, prediction_correct=False).loss_window == 28 + 62
    assert predictive_window(g, False).added_delay == reactive_window(g).added_delay


@pytest.mark.parametrize("t_ant,t_m1,t_l2", [(50, 2, 50), (80, 3, 60), (20, 1, 40)])
def test_predictive_minimum_by_dense_scan(t_ant, t_m1, t_l2):
    base = dict(t_Ant=t_ant, t_m1=t_m1, t_L2=t_l2)
    grid = np.linspace(0, 100, 40_001)
    losses = np.array([predictive_window(NetworkGeometry(t_l3=x, **base)).loss_window for x in grid])
    assert grid[np.argmin(losses)] == pytest.approx((t_ant - t_m1 + t_l2) / 3, abs=5e-3)


@given(geometries())
def test_window_invariants(g):
    for w in (bt_window(g), reactive_window(g), predictive_window(g), predictive_window(g, False)):
        assert w.loss_window >= 0
        assert w.delta_plus >= 0 and w.delta_minus >= 0
        assert w.delta_plus == 0 or w.delta_minus == 0


@given(geometries())
def test_hierarchical_beats_tunnelling_when_routers_are_close(g):
    assume(g.t_l3 < g.t_l2)
    assert reactive_window(g).loss_window <= bt_window(g).loss_window


@given(geometries())
def test_exactly_one_delta_away_from_balance(g):
    assume(abs(2 * g.t_l3 + g.t_m1 - g.t_Ant) > 1e-9)
    w = predictive_window(g)
    assert (w.delta_plus > 0) != (w.delta_minus > 0)


@given(geometries(), st.floats(-1e-3, 1e-3))
def test_predictive_loss_continuous_in_router_distance(g, eps):
    from dataclasses import replace

    assume(g.t_l3 + eps >= 0)
    a = predictive_window(g).loss_window
    b = predictive_window(replace(g, t_l3=g.t_l3 + eps)).loss_window
    # piecewise-linear with slopes in {-3, -1, +2}
    assert abs(a - b) <= 3 * abs(eps) + 1e-9


def test_handover_probability_examples():
    assert handover_probability(MobilityParams.from_rho(1.0)) == 0.5
    assert handover_probability(MobilityParams.from_rho(0.0)) == 1.0
    assert handover_probability(MobilityParams.from_rho(1.0, k=4), use_map=True) == pytest.approx(1 / 3)


def test_handover_probability_monte_carlo():
    # residence at MAP granularity races the call holding time
    rng = np.random.default_rng(11)
    eta, alpha, k = 0.1, 0.1, 4
    n = 400_000
    residence = rng.exponential(math.sqrt(k) / eta, n)
    holding = rng.exponential(1 / alpha, n)
    p = np.mean(residence < holding)
    se = math.sqrt(p * (1 - p) / n)
    assert abs(p - handover_probability(MobilityParams(alpha, eta, k), use_map=True)) < 4 * se


@given(st.floats(0, 100))
def test_map_form_at_k1_equals_plain(rho):
    p = MobilityParams.from_rho(rho, k=1)
    assert handover_probability(p, use_map=True) == handover_probability(p)


@pytest.mark.parametrize("rho,k,expected", [(1, 1, 2.0), (0.5, 4, 2.0), (2, 1, 0.75)])
def test_expected_handovers_examples(rho, k, expected):
    p = MobilityParams.from_rho(rho, k=k)
    assert expected_handovers(p) == pytest.approx(expected)
    assert series_oracle(rho, k) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("rho", [0.25, 0.5, 1, 2, 5])
@pytest.mark.parametrize("k", [1, 4, 9, 16])
def test_expected_handovers_matches_series(rho, k):
    assert expected_handovers(MobilityParams.from_rho(rho, k=k)) == pytest.approx(series_oracle(rho, k), rel=1e-6)


def test_expected_handovers_singular_at_zero():
    with pytest.raises(SingularityError):
        expected_handovers(MobilityParams.from_rho(0.0))


@given(st.floats(0.01, 50), st.floats(1, 100), st.floats(1.01, 2))
def test_expected_handovers_decreasing(rho, k, factor):
    e = expected_handovers(MobilityParams.from_rho(rho, k=k))
    assert expected_handovers(MobilityParams.from_rho(rho * factor, k=k)) < e
    assert expected_handovers(MobilityParams.from_rho(rho, k=k * factor)) < e


def test_rho_is_alpha_over_eta():
    p = MobilityParams(alpha=0.3, eta=0.7, k=2)
    assert p.rho == 0.3 / 0.7


@pytest.mark.parametrize("kw", [{"alpha": -1, "eta": 1}, {"alpha": 1, "eta": 0}, {"alpha": 1, "eta": 1, "k": 0.5}])
def test_mobility_params_validation(kw):
    with pytest.raises(ValueError):
        MobilityParams(**kw)


@pytest.mark.parametrize("eta,k,expected", [(0.1, 1, 0.1), (0.1, 4, 0.05), (0.1, 9, 0.1 / 3)])
def test_map_residence_scaling(eta, k, expected):
    assert map_residence_scaling(eta, k) == pytest.approx(expected)


def test_signalling_overhead_table():
    assert signalling_overhead(Scheme.REACTIVE, HandoverKind.INTRA_MAP) == 1
    assert signalling_overhead("hmipv6", "inter_map") == 2
    assert signalling_overhead(Scheme.PREDICTIVE, HandoverKind.ANY) == 7
    assert signalling_overhead("fmipv6") == 7


@pytest.mark.parametrize(
    "scheme,kind",
    [(Scheme.PREDICTIVE, "intra_map"), (Scheme.PREDICTIVE, "inter_map"), (Scheme.REACTIVE, "any"), (Scheme.BT, "any")],
)
def test_signalling_overhead_rejects_bad_combinations(scheme, kind):
    with pytest.raises(ValueError):
        signalling_overhead(scheme, kind)


def test_geometry_rejects_negative():
    with pytest.raises(ValueError):
        NetworkGeometry(t_l3=-1)
