"""Per-episode evaluation metrics and the CSV log format.

One CSV per (run, seed): a fixed header determined by the environment and
algorithm, then one row per episode. Floats are serialized with repr() so
logs round-trip losslessly and reruns of the same seed produce
byte-identical files. Values must be finite; the writer refuses NaN/Inf
rather than quietly corrupting a log.

Always present: episode index and the normalized collective return
(undiscounted team reward per agent per step). The pursuit environment
adds cooperation rates (and the full cooperate/defect outcome split for
two agents). Suggestion-sharing runs add, per ordered agent pair, the
probability mass the suggestion nets put on the distance-reducing action
(pursuit only, undefined elsewhere) and the mean squared distance between
each agent's policy and what peers suggest for it.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .envs.predation import action_toward_prey, cooperation_flags
from .mmdp import TrajectoryBatch, normalized_collective_return


def ordered_pairs(n: int) -> list:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def pursuit_rates(batch: TrajectoryBatch) -> dict:
    """Cooperation statistics recovered from logged transitions."""
    flags = cooperation_flags(batch.states, batch.next_states)
    out = {"cooperation_rate": float(flags.mean())}
    if batch.n_agents == 2:
        both = flags[:, 0] & flags[:, 1]
        neither = ~flags[:, 0] & ~flags[:, 1]
        out["cc_rate"] = float(both.mean())
        out["dd_rate"] = float(neither.mean())
        out["cd_rate"] = float(1.0 - both.mean() - neither.mean())
    return out


def suggestion_proportions(policy_set, batch: TrajectoryBatch,
                           step_size: float = 1.0) -> dict:
    """Mean suggested probability of the distance-reducing action.

    For each ordered pair (i, j): average over the episode's states of
    pi^ij(toward_j | s_t), skipping steps where agent j sits in the dead
    zone (no strictly distance-reducing action exists). The vanishing
    case of an all-dead-zone episode reports chance level.
    """
    out = {}
    for i, j in ordered_pairs(batch.n_agents):
        rows = nn.policy_distribution(policy_set.agents[i].suggestions[j],
                                      batch.states)
        toward = action_toward_prey(batch.states[:, j], step_size)
        valid = toward >= 0
        if valid.any():
            value = float(rows[valid, toward[valid]].mean())
        else:
            value = 1.0 / rows.shape[1]
        out[(i, j)] = value
    return out


def policy_discrepancies(policy_set, batch: TrajectoryBatch) -> dict:
    """Mean squared distance between own policies and peers' suggestions.

    For each ordered pair (j, i): average over states of
    || pi^ii(.|s_t) - pi^ji(.|s_t) ||^2, i.e. how far agent j's suggestion
    for agent i sits from what agent i actually does.
    """
    out = {}
    own_rows = {i: policy_set.policy_rows(i, batch.states)
                for i in range(batch.n_agents)}
    for j, i in ordered_pairs(batch.n_agents):
        sugg = nn.policy_distribution(policy_set.agents[j].suggestions[i],
                                      batch.states)
        diff = own_rows[i] - sugg
        out[(j, i)] = float(np.sum(diff**2, axis=1).mean())
    return out


def metric_columns(env_kind: str, n_agents: int, algorithm: str) -> list:
    """The fixed CSV header for a run configuration."""
    cols = ["episode", "normalized_return"]
    if env_kind == "predation":
        cols.append("cooperation_rate")
        if n_agents == 2:
            cols += ["cc_rate", "cd_rate", "dd_rate"]
    if algorithm == "ss":
        if env_kind == "predation":
            cols += [f"suggestion_proportion_{i}_{j}"
                     for i, j in ordered_pairs(n_agents)]
        cols += [f"mse_discrepancy_{j}_{i}"
                 for j, i in ordered_pairs(n_agents)]
    return cols


def episode_metrics(env_kind: str, algorithm: str, batch: TrajectoryBatch,
                    episode: int, policy_set=None,
                    step_size: float = 1.0) -> dict:
    """All metric values for one finished episode, keyed by column name."""
    row = {"episode": episode,
           "normalized_return": normalized_collective_return(batch)}
    if env_kind == "predation":
        row.update(pursuit_rates(batch))
    if algorithm == "ss":
        if policy_set is None:
            raise ValueError("suggestion metrics need the policy set")
        if env_kind == "predation":
            for (i, j), v in suggestion_proportions(policy_set, batch,
                                                    step_size).items():
                row[f"suggestion_proportion_{i}_{j}"] = v
        for (j, i), v in policy_discrepancies(policy_set, batch).items():
            row[f"mse_discrepancy_{j}_{i}"] = v
    return row


class MetricWriter:
    """Line-per-episode CSV writer with lossless float formatting."""

    def __init__(self, path, columns):
        self.columns = list(columns)
        self._fh = open(path, "w")
        self._fh.write(",".join(self.columns) + "\n")

    def write_row(self, row: dict) -> None:
        missing = set(self.columns) - set(row)
        extra = set(row) - set(self.columns)
        if missing or extra:
            raise ValueError(f"row keys mismatch: missing={sorted(missing)} "
                             f"extra={sorted(extra)}")
        cells = []
        for col in self.columns:
            v = row[col]
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            else:
                v = float(v)
                if not np.isfinite(v):
                    raise ValueError(f"non-finite value for {col}: {v}")
                cells.append(repr(v))
        self._fh.write(",".join(cells) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_metrics(path) -> dict:
    """Load a metrics CSV into {column: float array} (episode as int)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if any(len(r) != len(header) for r in rows):
        raise ValueError(f"{path}: ragged rows")
    out = {}
    for k, col in enumerate(header):
        vals = [r[k] for r in rows]
        if col == "episode":
            out[col] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            out[col] = np.array([float(v) for v in vals])
    return out
