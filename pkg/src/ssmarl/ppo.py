"""Independent clipped policy updates: the substrate under every baseline.

This is a deliberately self-contained implementation of the clipped
surrogate step so coupled updates elsewhere can be checked against it: with
the coupling switched off the two must produce identical gradients.
"""

from __future__ import annotations

import numpy as np

from . import nn

RATIO_FLOOR = 1e-12


def clipped_objective_and_grads(policy: nn.DenseNet, old_rows: np.ndarray,
                                states: np.ndarray, actions: np.ndarray,
                                advantages: np.ndarray, clip_epsilon: float):
    """Batch-mean clipped surrogate and its policy-parameter gradients.

    old_rows[t] is the reference distribution at step t; ratios divide the
    current probability of the taken action by the reference probability
    (floored away from zero). Returns (objective, NetGradients) with the
    gradient pointing in the ascent direction.
    """
    T = states.shape[0]
    probs = nn.policy_distribution(policy, states)
    idx = np.arange(T)
    denom = np.maximum(old_rows[idx, actions], RATIO_FLOOR)
    ratio = probs[idx, actions] / denom
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    u = ratio * advantages
    v = clipped * advantages
    objective = float(np.mean(np.minimum(u, v)))

    # d surrogate / d ratio is the advantage on the unclipped branch and
    # zero once the clipped branch is strictly smaller
    dsurr_dratio = np.where(u <= v, advantages, 0.0)
    dprobs = np.zeros_like(probs)
    dprobs[idx, actions] = dsurr_dratio / denom
    dlogits = nn.softmax_backward(probs, dprobs) / T
    return objective, nn.backward(policy, states, dlogits)


def value_update(value: nn.DenseNet, opt: nn.AdamState, states: np.ndarray,
                 targets: np.ndarray, lr: float) -> float:
    """One Adam step of mean-squared-error regression; returns the loss."""
    v = nn.forward(value, states)[:, 0]
    diff = v - targets
    loss = float(np.mean(diff**2))
    dv = (2.0 * diff / v.size)[:, None]
    grads = nn.backward(value, states, dv)
    nn.adam_step(value, grads, opt, lr)
    return loss


def ascend(net: nn.DenseNet, grads: nn.NetGradients, opt: nn.AdamState,
           lr: float) -> None:
    """Adam ascent: step along +grads by feeding Adam the negation."""
    nn.adam_step(net, nn.scale_gradients(grads, -1.0), opt, lr)
