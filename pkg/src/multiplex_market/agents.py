"""Traders: portfolios, expectation formation, status decisions and order prices.

The scalar functions (``fundamentalist_expectation``, ``set_order_price``, ...)
operate on one :class:`Trader` and document the rules. The engine uses the
array versions on a :class:`Population`, which implement the same rules for
all agents at once.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .config import SimConfig

log = logging.getLogger(__name__)

FUNDAMENTALIST = "fundamentalist"
CHARTIST = "chartist"


class Status(IntEnum):
    HOLDER = 0
    BIDDER = 1
    ASKER = 2


@dataclass
class Trader:
    id: int
    character: str
    money: float
    q1: int
    q2: int
    theta_i: float = 0.0
    window: int = 2

    def holding(self, asset: int) -> int:
        return self.q1 if asset == 1 else self.q2


@dataclass(frozen=True)
class FundamentalState:
    fv1: float = 0.0
    fv2: float = 0.0

    def value(self, asset: int) -> float:
        return self.fv1 if asset == 1 else self.fv2


def update_fundamental_values(fs: FundamentalState, t: int, cfg: SimConfig,
                              rng: np.random.Generator) -> FundamentalState:
    """Random-walk step of both fundamental values, every ``t_f`` steps (t > 0)."""
    if t <= 0 or t % cfg.t_f:
        return fs
    d1, d2 = rng.normal(0.0, 1.0, size=2)
    return FundamentalState(fs.fv1 + cfg.sigma_1f * d1, fs.fv2 + cfg.sigma_2f * d2)


def _initial_price(cfg: SimConfig, asset: int) -> float:
    return cfg.p1_0 if asset == 1 else cfg.p2_0


def fundamentalist_expectation(trader: Trader, asset: int, p_now: float, fs: FundamentalState,
                               cfg: SimConfig, rng: np.random.Generator) -> float:
    p_fund = _initial_price(cfg, asset) + fs.value(asset) + trader.theta_i
    eps = rng.uniform(-cfg.sigma, cfg.sigma)
    return p_now + cfg.phi * (p_fund - p_now) + eps


def reference_value(history: Sequence[float], window: int) -> float:
    """Mean of the last ``window + 1`` prices, or of all of them if fewer exist."""
    tail = np.asarray(history[-(window + 1):], dtype=float)
    return float(tail.mean())


def chartist_expectation(trader: Trader, asset: int, history: Sequence[float], cfg: SimConfig,
                         rng: np.random.Generator) -> float:
    if len(history) == 0:
        raise ValueError("chartist expectation needs at least one past price")
    p_now = float(history[-1])
    prv = reference_value(history, trader.window)
    eps = rng.uniform(-cfg.sigma, cfg.sigma)
    return p_now + cfg.kappa / trader.window * (p_now - prv) + eps


def decide_status(expected: float, p_now: float, tau: float) -> Status:
    if expected > p_now + tau:
        return Status.BIDDER
    if expected < p_now - tau:
        return Status.ASKER
    return Status.HOLDER


def set_order_price(status: Status, expected: float, p_now: float, best_ask_prev: float | None,
                    money: float, beta_ask: float, rng: np.random.Generator,
                    holding: int | None = None) -> float | None:
    """Draw the personal bid/ask price, or return ``None`` if the trader holds.

    Bidders draw uniformly between the previous best ask (the current price if
    there was none) and ``min(expected, money)``; when the expected price sits
    below that floor the bid collapses to the expected price. Askers draw
    uniformly from ``[expected, expected + beta_ask * (p_now - expected)]``.
    """
    if status == Status.HOLDER:
        return None
    u = rng.random()
    if status == Status.BIDDER:
        low = p_now if best_ask_prev is None else best_ask_prev
        if money <= 0 or money < low:
            return None
        high = min(expected, money)
        price = high if high < low else low + u * (high - low)
    else:
        if holding is not None and holding < 1:
            return None
        price = expected + u * beta_ask * (p_now - expected)
    if price <= 0:
        log.debug("non-positive order price %.6g; trader holds", price)
        return None
    return price


def wealth(trader: Trader, p1: float, p2: float) -> float:
    return trader.money + trader.q1 * p1 + trader.q2 * p2


class Population:
    """Structure-of-arrays view of all traders, used by the engine.

    ``holdings`` has shape ``(N, 2)``: column 0 is asset 1, column 1 asset 2.
    """

    def __init__(self, is_fundamentalist: np.ndarray, money: np.ndarray, holdings: np.ndarray,
                 theta: np.ndarray, window: np.ndarray):
        self.is_fundamentalist = np.asarray(is_fundamentalist, dtype=bool)
        self.money = np.asarray(money, dtype=float)
        self.holdings = np.asarray(holdings, dtype=np.int64)
        self.theta = np.asarray(theta, dtype=float)
        self.window = np.asarray(window, dtype=np.int64)

    @classmethod
    def initial(cls, cfg: SimConfig, rng: np.random.Generator) -> "Population":
        n = cfg.n_agents
        is_fund = np.zeros(n, dtype=bool)
        is_fund[rng.permutation(n)[:cfg.n_fundamentalists]] = True
        theta = rng.uniform(-cfg.theta, cfg.theta, size=n)
        window = rng.integers(2, cfg.T_max + 1, size=n)
        theta[~is_fund] = 0.0
        money = np.full(n, float(cfg.M0))
        holdings = np.empty((n, 2), dtype=np.int64)
        holdings[:, 0] = cfg.Q1_0
        holdings[:, 1] = cfg.Q2_0
        return cls(is_fund, money, holdings, theta, window)

    def __len__(self) -> int:
        return len(self.money)

    def trader(self, i: int) -> Trader:
        return Trader(
            id=i,
            character=FUNDAMENTALIST if self.is_fundamentalist[i] else CHARTIST,
            money=float(self.money[i]),
            q1=int(self.holdings[i, 0]),
            q2=int(self.holdings[i, 1]),
            theta_i=float(self.theta[i]),
            window=int(self.window[i]),
        )

    def wealth(self, p1: float, p2: float) -> np.ndarray:
        return self.money + self.holdings[:, 0] * p1 + self.holdings[:, 1] * p2


def expectations(pop: Population, prices: np.ndarray, prv: np.ndarray, fs: FundamentalState,
                 cfg: SimConfig, eps: np.ndarray) -> np.ndarray:
    """Expected next prices, shape ``(N, 2)``.

    ``prv`` holds each trader's reference (moving-average) value per asset,
    only read for chartists; ``eps`` is the per-trader, per-asset noise.
    """
    fund_price = np.array([cfg.p1_0 + fs.fv1, cfg.p2_0 + fs.fv2])[None, :] + pop.theta[:, None]
    fund = prices + cfg.phi * (fund_price - prices)
    chart = prices + (cfg.kappa / pop.window)[:, None] * (prices - prv)
    return np.where(pop.is_fundamentalist[:, None], fund, chart) + eps


def decide_status_array(expected: np.ndarray, prices: np.ndarray, tau: float) -> np.ndarray:
    status = np.zeros(expected.shape, dtype=np.int8)
    status[expected > prices + tau] = Status.BIDDER
    status[expected < prices - tau] = Status.ASKER
    return status


def order_prices(status: np.ndarray, expected: np.ndarray, prices: np.ndarray,
                 best_ask_prev: np.ndarray, pop: Population, beta_ask: float,
                 u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Array form of :func:`set_order_price` with feasibility across both assets.

    Asset 2 bids are budgeted against the money left after the trader's own
    asset 1 bid, so both orders can always be paid in full. Returns the final
    status (infeasible orders become holders) and the order prices (NaN for
    holders).
    """
    status = status.copy()
    price = np.full(expected.shape, np.nan)
    budget = pop.money.copy()
    for a in range(2):
        low = best_ask_prev[a] if np.isfinite(best_ask_prev[a]) else prices[a]
        exp_a = expected[:, a]

        bid = status[:, a] == Status.BIDDER
        high = np.minimum(exp_a, budget)
        bid_price = np.where(high < low, high, low + u[:, a] * (high - low))
        ok_bid = bid & (budget > 0) & (budget >= low) & (bid_price > 0)

        ask = status[:, a] == Status.ASKER
        ask_price = exp_a + u[:, a] * beta_ask * (prices[a] - exp_a)
        ok_ask = ask & (pop.holdings[:, a] >= 1) & (ask_price > 0)

        price[ok_bid, a] = bid_price[ok_bid]
        price[ok_ask, a] = ask_price[ok_ask]
        status[(bid & ~ok_bid) | (ask & ~ok_ask), a] = Status.HOLDER
        budget[ok_bid] -= bid_price[ok_bid]
    return status, price


def imitate(status: np.ndarray, price: np.ndarray, trigger: int, followers: np.ndarray,
            pop: Population) -> int:
    """Copy the trigger's statuses and prices onto ``followers``, in place.

    Followers who cannot afford the trigger's bid (asset 2 budgeted after the
    asset 1 bid) or hold none of the asset it asks on become holders for that
    asset. Returns the number of follower-asset pairs downgraded to holder.
    """
    if followers.size == 0:
        return 0
    downgraded = 0
    budget = pop.money[followers].copy()
    for a in range(2):
        s = status[trigger, a]
        p = price[trigger, a]
        if s == Status.BIDDER:
            ok = budget >= p
            budget[ok] -= p
        elif s == Status.ASKER:
            ok = pop.holdings[followers, a] >= 1
        else:
            ok = np.ones(followers.size, dtype=bool)
        status[followers, a] = np.where(ok, s, Status.HOLDER)
        price[followers, a] = np.where(ok & (s != Status.HOLDER), p, np.nan)
        downgraded += int(np.count_nonzero(~ok))
    return downgraded
