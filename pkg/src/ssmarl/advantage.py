"""Advantage estimation and value targets for one episode.

Generalized advantage estimation over a fixed-horizon episode with a zero
bootstrap at the end, empirical discounted return-to-go targets for the
critic, batch standardization for the policy objectives, and the
mean-absolute-advantage scale used to weight suggestion penalties.
"""

from __future__ import annotations

import numpy as np


def gae_advantages(rewards, values, gamma: float, lam: float) -> np.ndarray:
    """A_t = sum_l (gamma*lam)^l delta_{t+l} with delta_t = r_t + gamma V_{t+1} - V_t.

    rewards has length T, values length T+1 (values[-1] is the terminal
    bootstrap, 0 for our fixed-horizon episodes). Computed by the usual
    backward recursion.
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if r.ndim != 1 or v.ndim != 1 or v.size != r.size + 1:
        raise ValueError(f"need values length T+1, got T={r.size}, {v.size} values")
    deltas = r + gamma * v[1:] - v[:-1]
    adv = np.empty_like(deltas)
    acc = 0.0
    for t in range(r.size - 1, -1, -1):
        acc = deltas[t] + gamma * lam * acc
        adv[t] = acc
    return adv


def returns_to_go(rewards, gamma: float) -> np.ndarray:
    """Empirical discounted return from each step to the end of the episode."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError("rewards must be 1-D")
    out = np.empty_like(r)
    acc = 0.0
    for t in range(r.size - 1, -1, -1):
        acc = r[t] + gamma * acc
        out[t] = acc
    return out


def value_loss_and_grad(values, targets):
    """Mean squared error between predictions and targets, with d loss/d values."""
    v = np.asarray(values, dtype=np.float64)
    tgt = np.asarray(targets, dtype=np.float64)
    if v.shape != tgt.shape or v.ndim != 1 or v.size == 0:
        raise ValueError("values and targets must be matching non-empty vectors")
    diff = v - tgt
    loss = float(np.mean(diff**2))
    grad = 2.0 * diff / v.size
    return loss, grad


def standardized(advantages, eps: float = 1e-8) -> np.ndarray:
    """Zero-mean, unit-variance conditioning of a policy-gradient batch.

    Applied to advantages right before they enter a policy objective (value
    regression targets stay raw). Keeping the batch on a fixed scale makes
    gradient magnitudes — and the penalty weight derived from mean |A| —
    independent of how well the critic currently fits, so the balance
    between surrogate and penalty terms stays stable over training.
    """
    a = np.asarray(advantages, dtype=np.float64)
    if a.size == 0:
        raise ValueError("empty advantage batch")
    return (a - a.mean()) / max(float(a.std()), eps)


def advantage_scale(advantages) -> float:
    """Mean absolute advantage over the batch; the penalty weight lives on
    this scale so penalties track the surrogate's magnitude."""
    a = np.asarray(advantages, dtype=np.float64)
    if a.size == 0:
        raise ValueError("empty advantage batch")
    return float(np.mean(np.abs(a)))
