import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiplex_market import agents as ag
from multiplex_market.agents import (
    CHARTIST,
    FUNDAMENTALIST,
    FundamentalState,
    Population,
    Status,
    Trader,
)
from multiplex_market.config import SimConfig
from multiplex_market.engine import MarketState


def fund_trader(theta_i=0.0):
    return Trader(0, FUNDAMENTALIST, 40000.0, 200, 200, theta_i=theta_i)


def chart_trader(window):
    return Trader(1, CHARTIST, 40000.0, 200, 200, window=window)


# fundamental values

def test_fundamental_zero_variance_never_moves():
    cfg = SimConfig(sigma_1f=0.0, sigma_2f=0.0)
    fs = FundamentalState()
    rng = np.random.default_rng(0)
    for t in range(200):
        fs = ag.update_fundamental_values(fs, t, cfg, rng)
    assert fs == FundamentalState(0.0, 0.0)


def test_fundamental_off_cadence_unchanged():
    fs = FundamentalState(3.0, -2.0)
    assert ag.update_fundamental_values(fs, 7, SimConfig(), np.random.default_rng(0)) is fs


def test_fundamental_starts_at_zero_and_moves_on_cadence():
    fs = FundamentalState()
    assert (fs.fv1, fs.fv2) == (0.0, 0.0)
    rng = np.random.default_rng(0)
    assert ag.update_fundamental_values(fs, 0, SimConfig(), rng) == fs
    moved = ag.update_fundamental_values(fs, 10, SimConfig(), rng)
    assert moved.fv1 != 0.0 and moved.fv2 != 0.0


def test_fundamental_increment_scale():
    cfg = SimConfig(sigma_1f=2.0, sigma_2f=0.5)
    rng = np.random.default_rng(1)
    steps = np.array([(lambda f: (f.fv1, f.fv2))(
        ag.update_fundamental_values(FundamentalState(), 10, cfg, rng)) for _ in range(20000)])
    np.testing.assert_allclose(steps.std(axis=0), [2.0, 0.5], rtol=0.03)
    np.testing.assert_allclose(steps.mean(axis=0), [0.0, 0.0], atol=0.05)


# expectations

def test_fundamentalist_phi_zero_returns_current_price():
    cfg = SimConfig(phi=0.0, sigma=0.0)
    e = ag.fundamentalist_expectation(fund_trader(25.0), 1, 437.0, FundamentalState(3, 4), cfg,
                                      np.random.default_rng(0))
    assert e == 437.0


def test_fundamentalist_half_way_to_fundamental_price():
    cfg = SimConfig(phi=0.5, sigma=0.0)
    # fundamental price 500 + 0 + 20 = 520
    e = ag.fundamentalist_expectation(fund_trader(20.0), 1, 500.0, FundamentalState(), cfg,
                                      np.random.default_rng(0))
    assert e == pytest.approx(510.0)
    # asset 2 uses its own fundamental value
    e2 = ag.fundamentalist_expectation(fund_trader(0.0), 2, 500.0, FundamentalState(0, 20), cfg,
                                       np.random.default_rng(0))
    assert e2 == pytest.approx(510.0)


def test_fundamentalist_fixed_point():
    cfg = SimConfig(sigma=0.0)
    assert ag.fundamentalist_expectation(fund_trader(), 1, 500.0, FundamentalState(), cfg,
                                         np.random.default_rng(0)) == 500.0


def test_fundamentalist_noise_range():
    cfg = SimConfig(sigma=30.0)
    rng = np.random.default_rng(0)
    draws = np.array([ag.fundamentalist_expectation(fund_trader(), 1, 500.0, FundamentalState(),
                                                    cfg, rng) for _ in range(5000)])
    assert draws.min() >= 470 and draws.max() <= 530
    assert draws.min() < 471 and draws.max() > 529


@settings(max_examples=100, deadline=None)
@given(p=st.floats(10, 2000), theta=st.floats(-30, 30), fv=st.floats(-100, 100),
       phi=st.floats(0.01, 0.99))
def test_fundamentalist_between_price_and_fundamental(p, theta, fv, phi):
    cfg = SimConfig(phi=phi, sigma=0.0)
    pf = 500.0 + fv + theta
    e = ag.fundamentalist_expectation(fund_trader(theta), 1, p, FundamentalState(fv, 0), cfg,
                                      np.random.default_rng(0))
    if abs(pf - p) < 1e-9:
        assert e == pytest.approx(p)
    else:
        assert min(p, pf) < e < max(p, pf)


def test_chartist_flat_history_fixed_point():
    cfg = SimConfig(sigma=0.0)
    e = ag.chartist_expectation(chart_trader(10), 1, [500.0] * 30, cfg, np.random.default_rng(0))
    assert e == 500.0


def test_chartist_hand_example():
    cfg = SimConfig(kappa=2.0, sigma=0.0)
    history = [float(j) for j in range(0, 11)]  # p(j) = j, t = 10
    assert ag.reference_value(history, 4) == pytest.approx(8.0)
    e = ag.chartist_expectation(chart_trader(4), 1, history, cfg, np.random.default_rng(0))
    assert e == pytest.approx(11.0)


def test_chartist_short_history_uses_everything():
    cfg = SimConfig(kappa=2.0, sigma=0.0)
    history = [100.0, 102.0, 104.0]
    assert ag.reference_value(history, 50) == pytest.approx(102.0)
    e = ag.chartist_expectation(chart_trader(50), 1, history, cfg, np.random.default_rng(0))
    assert e == pytest.approx(104.0 + 2.0 / 50 * 2.0)


@settings(max_examples=60, deadline=None)
@given(start=st.floats(50, 1000), step=st.floats(0.01, 10), window=st.integers(2, 100),
       length=st.integers(2, 150))
def test_chartists_follow_trends(start, step, window, length):
    cfg = SimConfig(sigma=0.0)
    up = [start + step * j for j in range(length)]
    down = [start + step * (length - j) for j in range(length)]
    assert ag.chartist_expectation(chart_trader(window), 1, up, cfg, np.random.default_rng(0)) > up[-1]
    assert ag.chartist_expectation(chart_trader(window), 1, down, cfg,
                                   np.random.default_rng(0)) < down[-1]


def test_vector_reference_values_match_scalar():
    rng = np.random.default_rng(4)
    mkt = MarketState(500.0, 480.0, capacity=4)  # force buffer growth
    for _ in range(137):
        mkt.append(*rng.uniform(400, 600, 2))
    windows = rng.integers(2, 201, size=60)
    got = mkt.reference_values(windows)
    for i, w in enumerate(windows):
        assert got[i, 0] == pytest.approx(ag.reference_value(list(mkt.history1), int(w)), rel=1e-12)
        assert got[i, 1] == pytest.approx(ag.reference_value(list(mkt.history2), int(w)), rel=1e-12)


def test_vector_expectations_match_scalar():
    cfg = SimConfig(side=6, sigma=0.0)
    rng = np.random.default_rng(9)
    pop = Population.initial(cfg, rng)
    mkt = MarketState(cfg.p1_0, cfg.p2_0)
    for _ in range(40):
        mkt.append(*rng.uniform(450, 550, 2))
    fs = FundamentalState(4.0, -7.0)
    prices = mkt.prices.copy()
    got = ag.expectations(pop, prices, mkt.reference_values(pop.window), fs, cfg,
                          np.zeros((len(pop), 2)))
    for i in range(len(pop)):
        tr = pop.trader(i)
        for a, hist in ((1, mkt.history1), (2, mkt.history2)):
            if tr.character == FUNDAMENTALIST:
                want = ag.fundamentalist_expectation(tr, a, prices[a - 1], fs, cfg, rng)
            else:
                want = ag.chartist_expectation(tr, a, list(hist), cfg, rng)
            assert got[i, a - 1] == pytest.approx(want, rel=1e-12)


# status

@pytest.mark.parametrize("expected,status", [
    (500.0, Status.HOLDER),
    (520.0, Status.BIDDER),
    (480.0, Status.ASKER),
    (515.0, Status.HOLDER),
    (485.0, Status.HOLDER),
    (515.0001, Status.BIDDER),
    (484.9999, Status.ASKER),
])
def test_decide_status(expected, status):
    assert ag.decide_status(expected, 500.0, 15.0) == status


@settings(max_examples=200, deadline=None)
@given(e=st.floats(-1e4, 1e4), p=st.floats(-1e4, 1e4), tau=st.floats(0, 100))
def test_status_is_a_partition(e, p, tau):
    s = ag.decide_status(e, p, tau)
    arr = ag.decide_status_array(np.array([[e]]), np.array([p]), tau)[0, 0]
    assert s == arr
    assert s in (Status.BIDDER, Status.ASKER, Status.HOLDER)
    assert (s == Status.BIDDER) == (e > p + tau)
    assert (s == Status.ASKER) == (e < p - tau)


# order prices

def test_asker_price_range():
    rng = np.random.default_rng(0)
    prices = [ag.set_order_price(Status.ASKER, 480.0, 500.0, None, 0.0, 1.0, rng)
              for _ in range(2000)]
    assert min(prices) >= 480.0 and max(prices) <= 500.0
    assert min(prices) < 481 and max(prices) > 499


def test_bidder_price_range():
    rng = np.random.default_rng(0)
    prices = [ag.set_order_price(Status.BIDDER, 520.0, 500.0, 505.0, 40000.0, 1.0, rng)
              for _ in range(2000)]
    assert min(prices) >= 505.0 and max(prices) <= 520.0


def test_bidder_without_money_holds():
    rng = np.random.default_rng(0)
    assert ag.set_order_price(Status.BIDDER, 520.0, 500.0, 505.0, 0.0, 1.0, rng) is None
    assert ag.set_order_price(Status.BIDDER, 520.0, 500.0, 505.0, 504.0, 1.0, rng) is None


def test_bidder_budget_caps_price():
    rng = np.random.default_rng(0)
    prices = [ag.set_order_price(Status.BIDDER, 520.0, 500.0, 505.0, 510.0, 1.0, rng)
              for _ in range(500)]
    assert max(prices) <= 510.0


def test_bidder_without_previous_ask_uses_current_price():
    rng = np.random.default_rng(0)
    prices = [ag.set_order_price(Status.BIDDER, 520.0, 500.0, None, 1e6, 1.0, rng)
              for _ in range(500)]
    assert min(prices) >= 500.0


def test_bidder_collapses_to_expected_when_interval_empty():
    rng = np.random.default_rng(0)
    assert ag.set_order_price(Status.BIDDER, 520.0, 500.0, 530.0, 1e6, 1.0, rng) == 520.0


def test_holder_and_empty_asker():
    rng = np.random.default_rng(0)
    assert ag.set_order_price(Status.HOLDER, 520.0, 500.0, 530.0, 1e6, 1.0, rng) is None
    assert ag.set_order_price(Status.ASKER, 480.0, 500.0, None, 0.0, 1.0, rng, holding=0) is None
    # non-positive prices are never posted
    assert ag.set_order_price(Status.ASKER, -40.0, 10.0, None, 0.0, 0.0, rng) is None


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1, 2000), gap=st.floats(0, 200), best=st.one_of(st.none(), st.floats(1, 2000)),
       money=st.floats(0, 1e5), beta=st.floats(0, 5), seed=st.integers(0, 1000))
def test_order_price_inside_interval(p, gap, best, money, beta, seed):
    rng = np.random.default_rng(seed)
    e_bid, e_ask = p + gap, p - gap
    bid = ag.set_order_price(Status.BIDDER, e_bid, p, best, money, beta, rng)
    if bid is not None:
        low = p if best is None else best
        high = min(e_bid, money)
        assert bid > 0 and bid <= money
        if high >= low:
            assert low <= bid <= high
        else:
            assert bid == high
    ask = ag.set_order_price(Status.ASKER, e_ask, p, best, money, beta, rng)
    if ask is not None:
        assert ask > 0
        assert e_ask <= ask <= e_ask + beta * (p - e_ask) + 1e-9


def test_vector_order_prices_feasible():
    cfg = SimConfig(side=20)
    rng = np.random.default_rng(2)
    pop = Population.initial(cfg, rng)
    pop.money[:] = rng.uniform(0, 1200, len(pop))
    pop.holdings[:] = rng.integers(0, 2, size=pop.holdings.shape)
    prices = np.array([500.0, 520.0])
    expected = prices + rng.uniform(-45, 45, size=(len(pop), 2))
    status = ag.decide_status_array(expected, prices, 15.0)
    final, price = ag.order_prices(status, expected, prices, np.array([470.0, np.nan]), pop,
                                   2.5, rng.random((len(pop), 2)))
    bids = final == Status.BIDDER
    asks = final == Status.ASKER
    # only downgrades to holder happen
    assert np.all((final == status) | (final == Status.HOLDER))
    spend = np.where(bids, price, 0.0).sum(axis=1)
    assert np.all(spend <= pop.money)
    assert np.all(pop.holdings[asks[:, 0], 0] >= 1)
    assert np.all(pop.holdings[asks[:, 1], 1] >= 1)
    assert np.all(price[bids | asks] > 0)
    assert np.all(np.isnan(price[~(bids | asks)]))
    # asset 1 bids start at the previous best ask, asset 2 at the current price
    assert np.all(price[bids[:, 0], 0] >= np.minimum(470.0, expected[bids[:, 0], 0]))
    assert np.all(price[bids[:, 1], 1] >= np.minimum(520.0, expected[bids[:, 1], 1]) - 1e-9)


def test_imitation_respects_follower_feasibility():
    cfg = SimConfig(side=2)
    pop = Population.initial(cfg, np.random.default_rng(0))
    pop.money[:] = [1000.0, 0.0, 1000.0, 1000.0]
    pop.holdings[:] = [[5, 5], [5, 5], [0, 0], [5, 5]]
    status = np.array([[Status.BIDDER, Status.HOLDER],
                       [Status.ASKER, Status.ASKER],
                       [Status.HOLDER, Status.BIDDER],
                       [Status.ASKER, Status.HOLDER]], dtype=np.int8)
    price = np.array([[512.0, np.nan], [490.0, 480.0], [np.nan, 530.0], [470.0, np.nan]])
    downgraded = ag.imitate(status, price, 0, np.array([1, 2, 3]), pop)
    # agent 1 cannot pay 512: holder on asset 1; everyone copies the trigger's hold on asset 2
    assert status[1].tolist() == [Status.HOLDER, Status.HOLDER]
    assert status[2].tolist() == [Status.BIDDER, Status.HOLDER]
    assert status[3].tolist() == [Status.BIDDER, Status.HOLDER]
    assert price[2, 0] == 512.0 and price[3, 0] == 512.0
    assert np.isnan(price[1]).all() and np.isnan(price[2, 1])
    assert downgraded == 1


def test_imitated_asks_need_holdings_and_bids_share_budget():
    cfg = SimConfig(side=2)
    pop = Population.initial(cfg, np.random.default_rng(0))
    pop.money[:] = [5000.0, 700.0, 5000.0, 1000.0]
    pop.holdings[:] = [[5, 5], [5, 5], [0, 5], [5, 5]]
    status = np.array([[Status.ASKER, Status.BIDDER]] + [[Status.HOLDER] * 2] * 3, dtype=np.int8)
    price = np.array([[490.0, 600.0]] + [[np.nan, np.nan]] * 3)
    ag.imitate(status, price, 0, np.array([1, 2, 3]), pop)
    assert status[1].tolist() == [Status.ASKER, Status.BIDDER]
    assert status[2].tolist() == [Status.HOLDER, Status.BIDDER]
    assert status[3].tolist() == [Status.ASKER, Status.BIDDER]

    status = np.array([[Status.BIDDER, Status.BIDDER]] + [[Status.HOLDER] * 2] * 3, dtype=np.int8)
    price = np.array([[500.0, 450.0]] + [[np.nan, np.nan]] * 3)
    ag.imitate(status, price, 0, np.array([1, 2, 3]), pop)
    # 700 covers the first bid only; 1000 covers both (500 + 450)
    assert status[1].tolist() == [Status.BIDDER, Status.HOLDER]
    assert status[3].tolist() == [Status.BIDDER, Status.BIDDER]


# wealth and population

def test_wealth_examples():
    t = Trader(0, CHARTIST, 40000.0, 200, 200)
    assert ag.wealth(t, 500.0, 500.0) == 240000.0
    cash = Trader(1, CHARTIST, 1234.5, 0, 0)
    assert ag.wealth(cash, 500.0, 700.0) == 1234.5
    assert ag.wealth(t, 1000.0, 1000.0) - t.money == 2 * (ag.wealth(t, 500.0, 500.0) - t.money)


def test_initial_population_composition():
    cfg = SimConfig()
    pop = Population.initial(cfg, np.random.default_rng(0))
    assert len(pop) == 900
    assert pop.is_fundamentalist.sum() == 225
    assert np.all(pop.wealth(cfg.p1_0, cfg.p2_0) == 240000.0)
    fund = pop.is_fundamentalist
    assert np.all(np.abs(pop.theta[fund]) < 30)
    assert np.all((pop.window[~fund] >= 2) & (pop.window[~fund] <= 100))
    assert pop.trader(int(np.flatnonzero(fund)[0])).character == FUNDAMENTALIST
