"""Finite-horizon value iteration over an explicit finite MDP.

Each (state, action) pair has up to K outcomes given by parallel arrays
``succ``, ``prob`` and ``cost`` of shape (N, A, K); ``succ == -1`` marks an
unused outcome slot.  Costs are minimized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FiniteMdp:
    succ: np.ndarray
    prob: np.ndarray
    cost: np.ndarray
    allowed: np.ndarray

    def __post_init__(self):
        self.succ = np.asarray(self.succ, dtype=np.int64)
        self.prob = np.asarray(self.prob, dtype=float)
        self.cost = np.asarray(self.cost, dtype=float)
        self.allowed = np.asarray(self.allowed, dtype=bool)
        if not self.allowed.any(axis=1).all():
            raise ValueError("every state needs at least one allowed action")
        used = self.succ >= 0
        sums = np.where(used, self.prob, 0.0).sum(axis=2)
        if not np.allclose(sums[self.allowed], 1.0):
            raise ValueError("outcome probabilities of allowed actions must sum to 1")
        # unused slots point at a padding state whose value is always 0
        self._succ = np.where(used, self.succ, self.n_states)
        self._prob = np.where(used, self.prob, 0.0)
        self._step = (self._prob * np.where(used, self.cost, 0.0)).sum(axis=2)

    @property
    def n_states(self) -> int:
        return self.succ.shape[0]


def q_values(mdp: FiniteMdp, V: np.ndarray) -> np.ndarray:
    """Expected one-step cost plus ``V`` at the successor; +inf for disallowed actions."""
    padded = np.append(V, 0.0)
    q = mdp._step + np.einsum("sak,sak->sa", mdp._prob, padded[mdp._succ])
    return np.where(mdp.allowed, q, np.inf)


def greedy(q: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Lowest-index action among those within ``rtol`` of the row minimum."""
    best = q.min(axis=1)
    tol = rtol * np.maximum(1.0, np.abs(best))
    return np.argmax(q <= (best + tol)[:, None], axis=1)


def value_iteration(mdp: FiniteMdp, horizon: int, keep_all: bool = False):
    """Optimal expected cost-to-go for ``horizon`` steps and the first-step greedy policy.

    Returns ``(V, policy)``; with ``keep_all`` V is the (horizon+1, N) stack
    V_0..V_H instead of just V_H.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    V = np.zeros(mdp.n_states)
    history = [V]
    q = np.where(mdp.allowed, 0.0, np.inf)
    for _ in range(horizon):
        q = q_values(mdp, V)
        V = q.min(axis=1)
        if keep_all:
            history.append(V)
    policy = greedy(q)
    if keep_all:
        return np.stack(history), policy
    return V, policy
