"""Per-asset order books: ranking, matching at the ask price, settlement, imbalance
and the cross-coupled global price update."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import SettlementError

log = logging.getLogger(__name__)

BID = "bid"
ASK = "ask"


@dataclass(frozen=True)
class Order:
    agent: int
    side: str
    price: float
    asset: int = 1

    def __post_init__(self):
        if self.side not in (BID, ASK):
            raise ValueError(f"side must be 'bid' or 'ask', got {self.side!r}")
        if not self.price > 0:
            raise ValueError(f"order price must be positive, got {self.price}")


@dataclass
class OrderBook:
    """One asset's book, rebuilt every step.

    Bids are kept by decreasing price and asks by increasing price. Orders at
    equal prices are shuffled with ``rng`` before the stable sort so no agent
    index gets systematic priority.
    """

    asset: int = 1
    bids: list[Order] = field(default_factory=list)
    asks: list[Order] = field(default_factory=list)

    def insert(self, orders: Iterable[Order], rng: np.random.Generator | None = None) -> None:
        orders = list(orders)
        for o in orders:
            if o.asset != self.asset:
                raise ValueError(f"order for asset {o.asset} sent to book {self.asset}")
        bids = self.bids + [o for o in orders if o.side == BID]
        asks = self.asks + [o for o in orders if o.side == ASK]
        if rng is not None:
            bids = [bids[i] for i in rng.permutation(len(bids))]
            asks = [asks[i] for i in rng.permutation(len(asks))]
        self.bids = sorted(bids, key=lambda o: -o.price)
        self.asks = sorted(asks, key=lambda o: o.price)
        both = {o.agent for o in self.bids} & {o.agent for o in self.asks}
        if both:
            raise ValueError(f"agents on both sides of book {self.asset}: {sorted(both)}")

    @property
    def best_bid(self) -> float | None:
        return self.bids[0].price if self.bids else None

    @property
    def best_ask(self) -> float | None:
        return self.asks[0].price if self.asks else None


@dataclass
class MatchOutcome:
    n_b: int
    n_a: int
    n_t: int
    p_last: float | None
    buyers: np.ndarray
    sellers: np.ndarray
    prices: np.ndarray
    best_ask: float | None = None

    @property
    def trades(self) -> list[tuple[int, int, float]]:
        return list(zip(self.buyers.tolist(), self.sellers.tolist(), self.prices.tolist()))


def match(book: OrderBook) -> MatchOutcome:
    """Pair best bid with best ask while the bid is strictly higher.

    Each pair trades one unit at the ask price; matching stops at the first
    pair that does not cross or when a side runs out.
    """
    trades = []
    i = 0
    while i < len(book.bids) and i < len(book.asks):
        bid, ask = book.bids[i], book.asks[i]
        if not bid.price > ask.price:
            break
        trades.append((bid.agent, ask.agent, ask.price))
        i += 1
    buyers = np.array([t[0] for t in trades], dtype=np.int64)
    sellers = np.array([t[1] for t in trades], dtype=np.int64)
    prices = np.array([t[2] for t in trades], dtype=float)
    return MatchOutcome(
        n_b=len(book.bids), n_a=len(book.asks), n_t=len(trades),
        p_last=trades[-1][2] if trades else None,
        buyers=buyers, sellers=sellers, prices=prices,
        best_ask=book.best_ask,
    )


def rank(agents: np.ndarray, prices: np.ndarray, descending: bool,
         rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Array ranking used by the engine: random shuffle, then stable price sort."""
    if rng is not None and agents.size > 1:
        perm = rng.permutation(agents.size)
        agents, prices = agents[perm], prices[perm]
    order = np.argsort(-prices if descending else prices, kind="stable")
    return agents[order], prices[order]


def match_ranked(bid_agents: np.ndarray, bid_prices: np.ndarray,
                 ask_agents: np.ndarray, ask_prices: np.ndarray) -> MatchOutcome:
    """Vectorized :func:`match` on already ranked arrays.

    With bids descending and asks ascending, the crossing pairs form a prefix,
    so the trade count is the length of that prefix.
    """
    k = min(bid_prices.size, ask_prices.size)
    n_t = int(np.count_nonzero(bid_prices[:k] > ask_prices[:k]))
    prices = ask_prices[:n_t]
    return MatchOutcome(
        n_b=int(bid_prices.size), n_a=int(ask_prices.size), n_t=n_t,
        p_last=float(prices[-1]) if n_t else None,
        buyers=bid_agents[:n_t], sellers=ask_agents[:n_t], prices=prices,
        best_ask=float(ask_prices[0]) if ask_prices.size else None,
    )


def settle(outcome: MatchOutcome, money: np.ndarray, holdings: np.ndarray) -> None:
    """Apply an outcome's trades to the portfolio arrays, in place.

    ``holdings`` is the one-dimensional column of the traded asset. Buyers
    (and sellers) within one book are distinct agents, so plain fancy indexing
    is safe.
    """
    if outcome.n_t == 0:
        return
    buyers, sellers, prices = outcome.buyers, outcome.sellers, outcome.prices
    if np.any(money[buyers] < prices):
        bad = buyers[money[buyers] < prices]
        raise SettlementError(f"buyers {bad.tolist()} cannot pay for their trades")
    if np.any(holdings[sellers] < 1):
        bad = sellers[holdings[sellers] < 1]
        raise SettlementError(f"sellers {bad.tolist()} hold nothing to sell")
    if np.any(buyers == sellers):
        raise SettlementError("self-trade in matched outcome")
    money[buyers] -= prices
    money[sellers] += prices
    holdings[buyers] += 1
    holdings[sellers] -= 1


def imbalance(outcome: MatchOutcome) -> int:
    """Signed count of orders left on the dominant side after matching."""
    if outcome.n_b >= outcome.n_a:
        return outcome.n_b - outcome.n_t
    return -(outcome.n_a - outcome.n_t)


def update_global_prices(p1_now: float, p2_now: float, outcome1: MatchOutcome,
                         outcome2: MatchOutcome, delta: float,
                         price_floor: float = 1.0) -> tuple[float, float]:
    """Next global prices: last ask traded (or current price) plus the cross term.

    Asset 1 is shifted by ``delta`` times asset 2's imbalance and vice versa.
    """
    omega1, omega2 = imbalance(outcome1), imbalance(outcome2)
    base1 = outcome1.p_last if outcome1.n_t > 0 else p1_now
    base2 = outcome2.p_last if outcome2.n_t > 0 else p2_now
    p1 = base1 + delta * omega2
    p2 = base2 + delta * omega1
    if p1 < price_floor or p2 < price_floor:
        log.warning("price floor %.6g hit (p1=%.6g, p2=%.6g)", price_floor, p1, p2)
    return max(p1, price_floor), max(p2, price_floor)
