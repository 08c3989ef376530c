"""Informative layer dynamics: global information drive and avalanche relaxation.

Every agent carries an information level. Each step the whole population is
driven by a small random amount, the best-informed agent is brought exactly
to the threshold, and the resulting cascade of threshold crossings is relaxed
on the small-world graph, OFC-style: a toppling agent is reset to zero and
passes ``alpha / degree`` of its level to each neighbor.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import RunawayAvalancheError
from .topology import AdjacencyList

DEFAULT_MAX_TOPPLINGS = 1_000_000


@dataclass
class InformativeState:
    info: np.ndarray
    threshold: float = 1.0
    alpha: float = 0.95

    def __post_init__(self):
        self.info = np.asarray(self.info, dtype=float)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class AvalancheResult:
    trigger: int
    topplings: tuple[int, ...]
    participants: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.topplings)


def drive(state: InformativeState, rng: np.random.Generator) -> InformativeState:
    """Apply one step of global information flow, in place.

    Each level grows by an independent draw from ``[0, threshold - max]``,
    where ``max`` is the highest level before the drive; then the agent now
    holding the highest level is set exactly to the threshold.
    """
    info = state.info
    headroom = max(state.threshold - float(info.max()), 0.0)
    info += rng.uniform(0.0, headroom, size=info.shape)
    info[int(np.argmax(info))] = state.threshold
    return state


def relax(state: InformativeState, graph: AdjacencyList,
          max_topplings: int = DEFAULT_MAX_TOPPLINGS) -> tuple[InformativeState, AvalancheResult]:
    """Relax every over-threshold agent, in place, and record the cascade.

    The queue starts from the agent sitting at the highest level (the one the
    drive brought to threshold); agents pushed to ``>= threshold`` are appended
    FIFO. An agent may topple again if it refills during the same avalanche.
    """
    info = state.info
    threshold = state.threshold
    over = np.flatnonzero(info >= threshold)
    if over.size == 0:
        raise ValueError("relax() needs at least one agent at or above threshold")
    trigger = int(np.argmax(info))
    queue = deque([trigger])
    queued = {trigger}
    for k in over.tolist():
        if k not in queued:
            queue.append(k)
            queued.add(k)

    # plain lists are much faster than numpy scalar indexing in this loop
    levels = info.tolist()
    neighbors = graph.neighbors
    alpha = state.alpha
    topplings: list[int] = []
    while queue:
        k = queue.popleft()
        queued.discard(k)
        level = levels[k]
        if level < threshold:
            continue
        if len(topplings) >= max_topplings:
            info[:] = levels
            raise RunawayAvalancheError(
                f"avalanche exceeded {max_topplings} topplings (alpha={alpha})")
        topplings.append(k)
        levels[k] = 0.0
        nbrs = neighbors[k]
        if not nbrs:
            continue
        share = alpha * level / len(nbrs)
        for j in nbrs:
            levels[j] += share
            if levels[j] >= threshold and j not in queued:
                queue.append(j)
                queued.add(j)
    info[:] = levels
    result = AvalancheResult(trigger, tuple(topplings), frozenset(topplings))
    return state, result
