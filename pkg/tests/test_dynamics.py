import numpy as np
import pytest

from fockmarket import (MarginError, ModelParams, NumberState, TimeSeries,
                        build_space, build_two_trader, commutator,
                        conserved_operators, default_cutoffs, evolve_expectation,
                        expectation, factorial_weight, heisenberg_series,
                        ladder, number_op, portfolio_operator,
                        price_supply_closed_form, two_trader_labels)
from test_models import effective_model, two_trader_model


def test_timeseries_validation():
    with pytest.raises(ValueError):
        TimeSeries([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        TimeSeries([0.0, 0.0], [1.0, 2.0])
    ts = TimeSeries([0.0, 0.5], [1.0, 2.0], "x")
    assert ts.label == "x"


def test_timeseries_csv(tmp_path):
    ts = TimeSeries(np.linspace(0, 1, 3), np.array([1.0, 2.0, 3.0]), "price")
    path = tmp_path / "s.csv"
    ts.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,price"
    assert lines[1] == "0,1"
    assert len(lines) == 4


def test_closed_form_examples():
    P, O = price_supply_closed_form(3, 1, 0.0)
    assert (P, O) == (3.0, 1.0)
    t = np.linspace(0, 7, 29)
    P, O = price_supply_closed_form(2, 2, t)
    assert np.max(np.abs(P - 2.0)) == 0.0
    P, O = price_supply_closed_form(1, 2, np.pi / 2, lam=1.0)
    assert P == pytest.approx(2.0)
    assert O == pytest.approx(1.0)
    P, O = price_supply_closed_form(3, 1, t, lam=0.7)
    assert np.max(np.abs(P + O - 4.0)) < 1e-12


def test_evolution_conserves_totals():
    state = NumberState((1, 1, 2, 0, 1, 1))
    model = two_trader_model(state, alpha=(0.4, 0.1), beta=(0.3, 0.2))
    times = np.linspace(0, 5, 21)
    for name, op in conserved_operators(model).items():
        ts = evolve_expectation(model, op, state, times, name)
        vals = np.real(ts.values)
        assert np.max(np.abs(vals - vals[0])) < 1e-8, name


def test_evolution_t0_matches_expectation():
    state = NumberState((1, 1, 2, 0, 1, 1))
    model = two_trader_model(state)
    n1 = number_op(model.space, model.space.mode_index(("share", 1)))
    ts = evolve_expectation(model, n1, state, [0.0, 0.3])
    assert ts.values[0] == pytest.approx(expectation(state, n1).real)


def test_price_block_evolution_matches_closed_form():
    state = NumberState((1, 1, 2, 0, 2, 1))
    model = two_trader_model(state)
    space = model.space
    P = number_op(space, space.mode_index(("price", None)))
    Osup = number_op(space, space.mode_index(("supply", None)))
    times = np.linspace(0, 10, 201)
    got_P = evolve_expectation(model.h_po, P, state, times).values
    got_O = evolve_expectation(model.h_po, Osup, state, times).values
    exp_P, exp_O = price_supply_closed_form(1, 2, times)
    assert np.max(np.abs(got_P - exp_P)) < 1e-8
    assert np.max(np.abs(got_O - exp_O)) < 1e-8


def test_margin_error_when_sector_not_representable():
    labels = two_trader_labels()
    state = NumberState((1, 1, 2, 0, 1, 1))
    good = default_cutoffs(labels, state)
    tight = tuple(c - 1 if i in (2, 3) else c for i, c in enumerate(good))
    space = build_space(tight, labels)
    model = build_two_trader(ModelParams(alpha=(0, 0), beta=(0, 0)), space)
    with pytest.raises(MarginError):
        evolve_expectation(model, conserved_operators(model)["N"], state, [0.0, 1.0])


def test_portfolio_initial_value():
    state = NumberState((1, 1, 2, 0, 2, 1))
    model = two_trader_model(state)
    pi = portfolio_operator(model, 1)
    assert expectation(state, pi).real == pytest.approx(1 * 1 + 2)


def test_portfolio_requires_gamma_for_effective():
    state = NumberState((1, 1, 2, 1, 1, 1))
    model = effective_model(state, 1)
    with pytest.raises(ValueError):
        portfolio_operator(model, 1)


def test_effective_portfolio_reduction():
    # gamma n_j(t) + k_j(t) stays pinned to the share count alone:
    # pi_j(t) = pi_j(0) + (gamma - M) (n_j(t) - n_j(0))
    state = NumberState((1, 1, 2, 1, 1, 1))
    M, gamma = 1, 2.5
    model = effective_model(state, M, alpha=(0.2, 0.4), beta=(0.1, 0.3))
    times = np.linspace(0, 4, 9)
    pi = evolve_expectation(
        model, portfolio_operator(model, 1, gamma=gamma), state, times).values
    n1 = evolve_expectation(
        model, number_op(model.space, model.space.mode_index(("share", 1))),
        state, times).values
    ref = pi[0] + (gamma - M) * (n1 - n1[0])
    assert np.max(np.abs(pi - ref)) < 1e-10


def test_two_trader_portfolio_rate_is_price_rate_times_shares():
    state = NumberState((1, 1, 2, 0, 2, 1))
    model = two_trader_model(state)
    space = model.space
    H = model.hamiltonian
    P = number_op(space, space.mode_index(("price", None)))
    n1 = number_op(space, space.mode_index(("share", 1)))
    rate_op = (1j * commutator(H, P)) @ n1
    pi = portfolio_operator(model, 1)
    h = 1e-4
    for t in (0.3, 1.1, 2.7):
        stencil = np.array([t - 2 * h, t - h, t, t + h, t + 2 * h])
        vals = np.real(evolve_expectation(model, pi, state, stencil).values)
        fd = (-vals[4] + 8 * vals[3] - 8 * vals[1] + vals[0]) / (12 * h)
        rate = np.real(evolve_expectation(model, rate_op, state, [t]).values[0])
        assert fd == pytest.approx(rate, abs=1e-6)


def test_series_order_zero():
    state = NumberState((1, 1, 2, 0, 2, 1))
    model = two_trader_model(state)
    pi = portfolio_operator(model, 1)
    sc = heisenberg_series(model, pi, state, 0)
    assert sc.coeffs[0] == pytest.approx(expectation(state, pi))


@pytest.mark.parametrize("state", [
    (1, 1, 2, 1, 2, 1), (2, 0, 3, 1, 1, 2), (1, 2, 2, 2, 3, 1),
    (0, 2, 1, 3, 2, 2), (2, 1, 1, 1, 0, 1)])
def test_series_order_two_is_shares_times_supply_price_gap(state):
    st = NumberState(state)
    model = two_trader_model(st)
    sc = heisenberg_series(model, portfolio_operator(model, 1), st, 3)
    n1, _, _, _, O, M = state
    assert abs(sc.coeffs[2] - n1 * (O - M)) < 1e-10
    assert abs(sc.coeffs[1]) < 1e-10
    assert abs(sc.coeffs[3]) < 1e-10


def _pair_exchange_gap(n1, n2, k1, k2, M):
    kp1 = factorial_weight(k1, M, "rising")
    km1 = factorial_weight(k1, M, "falling")
    kp2 = factorial_weight(k2, M, "rising")
    km2 = factorial_weight(k2, M, "falling")
    return (n1 * kp1 * km2 - n2 * km1 * kp2
            + n1 * n2 * (kp1 * km2 - km1 * kp2))


@pytest.mark.parametrize("state", [
    (1, 1, 2, 1, 2, 1), (2, 1, 3, 1, 1, 1), (1, 2, 2, 3, 1, 1),
    (2, 2, 1, 2, 3, 1), (1, 2, 4, 3, 0, 2)])
def test_share_series_order_two_is_minus_pair_exchange_gap(state):
    # the second-order coefficient of the share count equals minus the
    # weighted pair-exchange imbalance A of the initial state, exactly
    st = NumberState(state)
    model = two_trader_model(st)
    n1op = number_op(model.space, model.space.mode_index(("share", 1)))
    sc = heisenberg_series(model, n1op, st, 2)
    A = _pair_exchange_gap(*state[:4], state[5])
    assert abs(sc.coeffs[2] + A) < 1e-10


def test_series_margin_guard():
    labels = two_trader_labels()
    state = NumberState((1, 1, 2, 0, 1, 1))
    cuts = default_cutoffs(labels, state)
    small = tuple(c - 1 if i == 0 else c for i, c in enumerate(cuts))
    space = build_space(small, labels)
    model = build_two_trader(ModelParams(alpha=(0, 0), beta=(0, 0)), space)
    with pytest.raises(MarginError):
        heisenberg_series(model, portfolio_operator(model, 1), state, 4)


def test_series_truncation_error_scaling():
    # |partial sum at order m - exact| ~ K t^(m+1); slope check on [1e-3, 1e-2]
    state = NumberState((1, 1, 2, 1, 2, 1))
    model = two_trader_model(state)
    pi = portfolio_operator(model, 1)
    order = 3
    sc = heisenberg_series(model, pi, state, order)
    ts = np.geomspace(1e-3, 1e-2, 7)
    exact = np.real(evolve_expectation(model, pi, state, ts).values)
    resid = np.abs(np.real(sc.evaluate(ts)) - exact)
    slope = np.polyfit(np.log(ts), np.log(resid), 1)[0]
    assert abs(slope - (order + 1)) < 0.2


def test_series_evaluate_matches_manual_sum():
    state = NumberState((1, 1, 2, 1, 2, 1))
    model = two_trader_model(state)
    sc = heisenberg_series(model, portfolio_operator(model, 1), state, 4)
    t = 0.2
    manual = sum(c * t ** m for m, c in enumerate(sc.coeffs))
    assert sc.evaluate(t) == pytest.approx(manual)
