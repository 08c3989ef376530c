"""Simulation engine wiring the informative layer to the two order books.

One :class:`Simulation` owns every piece of mutable state of a run. A step
runs, in order: fundamental-value update, optional redraw of the
fundamentalists' offsets, independent expectations / status / order prices,
one herding avalanche whose participants copy the trigger's decisions, book
matching and settlement, and the global price update.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from . import agents as ag
from .agents import FundamentalState, Population, Status
from .book import MatchOutcome, imbalance, match_ranked, rank, settle, update_global_prices
from .config import SimConfig
from .herding import AvalancheResult, InformativeState, drive, relax
from .rng import substreams
from .stats import weighted_average_price
from .topology import AdjacencyList, build_small_world

log = logging.getLogger(__name__)


class MarketState:
    """Global prices, their full histories and the fundamental values.

    Histories live in a growable buffer; a running sum of deviations from the
    initial prices gives every chartist's moving average in O(1).
    """

    def __init__(self, p1_0: float, p2_0: float, capacity: int = 1024):
        self.initial = np.array([p1_0, p2_0], dtype=float)
        self._history = np.empty((max(capacity, 1), 2))
        self._cumdev = np.zeros((max(capacity, 1) + 1, 2))
        self._history[0] = self.initial
        self.length = 1
        self.fundamental = FundamentalState()
        # best (lowest) ask of the previous step's book, NaN when there was none
        self.best_ask = np.full(2, np.nan)

    @property
    def prices(self) -> np.ndarray:
        return self._history[self.length - 1]

    @property
    def p1(self) -> float:
        return float(self._history[self.length - 1, 0])

    @property
    def p2(self) -> float:
        return float(self._history[self.length - 1, 1])

    @property
    def history1(self) -> np.ndarray:
        return self._history[:self.length, 0]

    @property
    def history2(self) -> np.ndarray:
        return self._history[:self.length, 1]

    def append(self, p1: float, p2: float) -> None:
        if self.length == self._history.shape[0]:
            grow = self._history.shape[0]
            self._history = np.concatenate([self._history, np.empty((grow, 2))])
            self._cumdev = np.concatenate([self._cumdev, np.zeros((grow, 2))])
        n = self.length
        self._history[n] = (p1, p2)
        self._cumdev[n + 1] = self._cumdev[n] + (self._history[n] - self.initial)
        self.length = n + 1

    def reference_values(self, window: np.ndarray) -> np.ndarray:
        """Moving average over the last ``window + 1`` prices per trader, shape (N, 2)."""
        n = self.length
        k = np.minimum(window + 1, n)
        total = self._cumdev[n][None, :] - self._cumdev[n - k]
        return self.initial[None, :] + total / k[:, None]


@dataclass
class StepResult:
    """Everything one step produced; the engine keeps only the record row."""

    t: int
    status: np.ndarray
    price: np.ndarray
    avalanche: AvalancheResult
    outcomes: tuple[MatchOutcome, MatchOutcome]
    omega: tuple[int, int]
    new_prices: tuple[float, float]
    tallies: tuple[int, int, int, int]


@dataclass
class RunRecord:
    config: SimConfig
    t: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p_avg: np.ndarray
    avalanche_size: np.ndarray
    n_b: np.ndarray  # (steps, 2)
    n_a: np.ndarray
    n_t: np.ndarray
    p_last: np.ndarray  # NaN on steps without trades
    omega: np.ndarray
    # per-step counts summed over both assets: fundamentalist bidders/askers,
    # chartist bidders/askers
    tallies: np.ndarray  # (steps, 4)
    final_money: np.ndarray = field(repr=False, default=None)
    final_holdings: np.ndarray = field(repr=False, default=None)
    is_fundamentalist: np.ndarray = field(repr=False, default=None)
    initial_totals: tuple[float, int, int] = (0.0, 0, 0)

    def __len__(self) -> int:
        return int(self.t.size)

    def final_wealth(self) -> np.ndarray:
        if len(self):
            p1, p2 = self.p1[-1], self.p2[-1]
        else:
            p1, p2 = self.config.p1_0, self.config.p2_0
        return self.final_money + self.final_holdings[:, 0] * p1 + self.final_holdings[:, 1] * p2

    def buy_sell_fractions(self) -> dict[str, float]:
        """Average share of each group holding bidder / asker status per asset and step."""
        n_fund = int(np.count_nonzero(self.is_fundamentalist))
        n_chart = self.is_fundamentalist.size - n_fund
        steps = max(len(self), 1)
        totals = self.tallies.sum(axis=0)

        def frac(count, group):
            return float(count) / (2 * steps * group) if group and len(self) else float("nan")

        return {
            "fund_buy": frac(totals[0], n_fund),
            "fund_sell": frac(totals[1], n_fund),
            "chart_buy": frac(totals[2], n_chart),
            "chart_sell": frac(totals[3], n_chart),
        }


class Simulation:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.rng = substreams(cfg.seed)
        self.graph: AdjacencyList = build_small_world(cfg.side, cfg.rewiring_prob,
                                                      self.rng["topology"])
        init = self.rng["init"]
        self.traders = Population.initial(cfg, init)
        self.informative = InformativeState(
            init.uniform(0.0, cfg.info_threshold, size=cfg.n_agents),
            threshold=cfg.info_threshold, alpha=cfg.alpha)
        self.market = MarketState(cfg.p1_0, cfg.p2_0,
                                  capacity=cfg.transient_steps + cfg.record_steps + 1)
        self.t = 0
        q_weight = cfg.Q1_0 + cfg.Q2_0
        self.weights = ((cfg.Q1_0 / q_weight, cfg.Q2_0 / q_weight) if q_weight
                        else (0.5, 0.5))

    def state_digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.graph.indptr, self.graph.indices, self.traders.is_fundamentalist,
                    self.traders.money, self.traders.holdings, self.traders.theta,
                    self.traders.window, self.informative.info,
                    self.market.history1, self.market.history2):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def step(self) -> StepResult:
        cfg, rng, pop, mkt = self.cfg, self.rng, self.traders, self.market
        t = self.t
        n = len(pop)
        prices = mkt.prices.copy()

        mkt.fundamental = ag.update_fundamental_values(mkt.fundamental, t, cfg, rng["fundamental"])

        if cfg.theta_redraw:
            fund = pop.is_fundamentalist
            pop.theta[fund] = rng["heterogeneity"].uniform(-cfg.theta, cfg.theta,
                                                           size=int(fund.sum()))
        eps = rng["noise"].uniform(-cfg.sigma, cfg.sigma, size=(n, 2))
        prv = mkt.reference_values(pop.window)
        expected = ag.expectations(pop, prices, prv, mkt.fundamental, cfg, eps)
        status = ag.decide_status_array(expected, prices, cfg.tau)
        u = rng["orders"].random((n, 2))
        status, price = ag.order_prices(status, expected, prices, mkt.best_ask, pop,
                                        cfg.beta_ask, u)

        drive(self.informative, rng["drive"])
        _, avalanche = relax(self.informative, self.graph, cfg.max_topplings)
        if avalanche.size > 1:
            followers = np.fromiter((k for k in avalanche.participants if k != avalanche.trigger),
                                    dtype=np.int64)
            followers.sort()
            ag.imitate(status, price, avalanche.trigger, followers, pop)

        outcomes = []
        ties = rng["ties"]
        for a in range(2):
            bidders = np.flatnonzero(status[:, a] == Status.BIDDER)
            askers = np.flatnonzero(status[:, a] == Status.ASKER)
            b_agents, b_prices = rank(bidders, price[bidders, a], descending=True, rng=ties)
            a_agents, a_prices = rank(askers, price[askers, a], descending=False, rng=ties)
            outcomes.append(match_ranked(b_agents, b_prices, a_agents, a_prices))
        for a, outcome in enumerate(outcomes):
            settle(outcome, pop.money, pop.holdings[:, a])

        p1, p2 = update_global_prices(prices[0], prices[1], outcomes[0], outcomes[1],
                                      cfg.delta, cfg.price_floor)
        mkt.append(p1, p2)
        mkt.best_ask[:] = [np.nan if o.best_ask is None else o.best_ask for o in outcomes]
        self.t = t + 1

        fund = pop.is_fundamentalist
        bids = status == Status.BIDDER
        asks = status == Status.ASKER
        tallies = (int(bids[fund].sum()), int(asks[fund].sum()),
                   int(bids[~fund].sum()), int(asks[~fund].sum()))
        return StepResult(
            t=self.t, status=status, price=price, avalanche=avalanche,
            outcomes=(outcomes[0], outcomes[1]),
            omega=(imbalance(outcomes[0]), imbalance(outcomes[1])),
            new_prices=(p1, p2), tallies=tallies,
        )

    def run(self, steps: int | None = None, record: int | None = None) -> RunRecord:
        """Run ``steps`` unrecorded then ``record`` recorded steps (config defaults)."""
        cfg = self.cfg
        steps = cfg.transient_steps if steps is None else steps
        record = cfg.record_steps if record is None else record
        totals = (float(self.traders.money.sum()),
                  int(self.traders.holdings[:, 0].sum()), int(self.traders.holdings[:, 1].sum()))
        for _ in range(steps):
            self.step()

        t = np.empty(record, dtype=np.int64)
        p = np.empty((record, 2))
        size = np.empty(record, dtype=np.int64)
        n_b = np.empty((record, 2), dtype=np.int64)
        n_a = np.empty((record, 2), dtype=np.int64)
        n_t = np.empty((record, 2), dtype=np.int64)
        p_last = np.empty((record, 2))
        omega = np.empty((record, 2), dtype=np.int64)
        tallies = np.empty((record, 4), dtype=np.int64)
        for i in range(record):
            res = self.step()
            t[i] = res.t
            p[i] = res.new_prices
            size[i] = res.avalanche.size
            for a, o in enumerate(res.outcomes):
                n_b[i, a], n_a[i, a], n_t[i, a] = o.n_b, o.n_a, o.n_t
                p_last[i, a] = np.nan if o.p_last is None else o.p_last
            omega[i] = res.omega
            tallies[i] = res.tallies

        w1, w2 = self.weights
        return RunRecord(
            config=cfg, t=t, p1=p[:, 0].copy(), p2=p[:, 1].copy(),
            p_avg=weighted_average_price(p[:, 0], p[:, 1], cfg.Q1_0, cfg.Q2_0)
            if cfg.Q1_0 + cfg.Q2_0 else p[:, 0] * w1 + p[:, 1] * w2,
            avalanche_size=size, n_b=n_b, n_a=n_a, n_t=n_t, p_last=p_last, omega=omega,
            tallies=tallies,
            final_money=self.traders.money.copy(),
            final_holdings=self.traders.holdings.copy(),
            is_fundamentalist=self.traders.is_fundamentalist.copy(),
            initial_totals=totals,
        )


def initialize(cfg: SimConfig) -> Simulation:
    return Simulation(cfg)


def run(cfg: SimConfig) -> RunRecord:
    """Transient plus recorded steps for one configuration; deterministic in ``cfg.seed``."""
    return Simulation(cfg).run()
