"""Small deterministic MDP fixtures and a value-iteration solver.

Used to verify the tabular Q-learning implementation against the Bellman
fixed point. The fixtures follow the same reset/step contract as the
adaptation environment (obs, reward, done, info), with integer observations.
"""

from __future__ import annotations

import numpy as np


class FiniteMDP:
    """Deterministic finite-horizon MDP from explicit transition tables.

    transitions[s][a] = (next_state, reward). Episodes run for
    `horizon` steps from state 0.
    """

    def __init__(self, transitions, horizon: int):
        self.transitions = transitions
        self.horizon = horizon
        self.n_states = len(transitions)
        self.n_actions = len(transitions[0])
        self.reset(0)

    def reset(self, seed=0):
        self.state = 0
        self.t = 0
        return self.state

    def step(self, action):
        nxt, r = self.transitions[self.state][int(action)]
        self.state = nxt
        self.t += 1
        done = self.t >= self.horizon
        return self.state, r, done, {"truncated": done}


def two_state_chain() -> FiniteMDP:
    """2 states, 2 actions: action 1 moves to / stays in the rewarding state."""
    transitions = [
        [(0, 0.0), (1, 1.0)],   # from 0: stay (0) or advance (+1)
        [(0, 0.5), (1, 2.0)],   # from 1: fall back (+0.5) or stay (+2)
    ]
    return FiniteMDP(transitions, horizon=12)


def four_state_chain() -> FiniteMDP:
    """4-state corridor; only the far end pays well."""
    transitions = [
        [(0, 0.0), (1, -0.1)],
        [(0, 0.0), (2, -0.1)],
        [(1, 0.0), (3, -0.1)],
        [(2, 0.0), (3, 5.0)],
    ]
    return FiniteMDP(transitions, horizon=16)


def value_iteration(mdp: FiniteMDP, gamma: float, tol: float = 1e-12,
                    max_iter: int = 100000) -> np.ndarray:
    """Infinite-horizon Q fixed point: Q(s,a) = r + gamma * max_a' Q(s',a')."""
    q = np.zeros((mdp.n_states, mdp.n_actions))
    for _ in range(max_iter):
        new = np.empty_like(q)
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                nxt, r = mdp.transitions[s][a]
                new[s, a] = r + gamma * q[nxt].max()
        if np.abs(new - q).max() < tol:
            return new
        q = new
    return q
