"""Shared plumbing for the grid environments: moves, clamping, rendering."""

from __future__ import annotations

import numpy as np

# up, down, left, right, stay (row/col deltas)
GRID_MOVES = np.array([[-1, 0], [1, 0], [0, -1], [0, 1], [0, 0]], dtype=np.int64)
N_GRID_ACTIONS = 5


def apply_moves(cells: np.ndarray, actions, rows: int, cols: int) -> np.ndarray:
    """Move agents simultaneously; off-grid moves clamp to the border."""
    acts = np.asarray(actions, dtype=np.int64)
    if np.any((acts < 0) | (acts >= N_GRID_ACTIONS)):
        raise ValueError(f"invalid grid action in {actions}")
    moved = cells + GRID_MOVES[acts]
    moved[:, 0] = np.clip(moved[:, 0], 0, rows - 1)
    moved[:, 1] = np.clip(moved[:, 1], 0, cols - 1)
    return moved


def distinct_cells(rng: np.random.Generator, count: int, rows: int, cols: int,
                   forbidden=()) -> np.ndarray:
    """Sample `count` distinct grid cells avoiding the forbidden set."""
    banned = {tuple(c) for c in forbidden}
    if rows * cols - len(banned) < count:
        raise ValueError("not enough free cells")
    picks = []
    while len(picks) < count:
        cell = (int(rng.integers(rows)), int(rng.integers(cols)))
        if cell not in banned:
            banned.add(cell)
            picks.append(cell)
    return np.array(picks, dtype=np.int64)


def render_grid(rows: int, cols: int, layers: dict[str, np.ndarray]) -> str:
    """ASCII picture: later layers draw over earlier ones.

    layers maps a single display character to a boolean (rows, cols) mask.
    """
    canvas = np.full((rows, cols), ".", dtype="<U1")
    for char, mask in layers.items():
        canvas[mask] = char
    return "\n".join("".join(row) for row in canvas)


def neighborhood_counts(mask: np.ndarray, radius: int) -> np.ndarray:
    """Count true cells within a Chebyshev `radius` window around each cell."""
    rows, cols = mask.shape
    padded = np.zeros((rows + 2 * radius, cols + 2 * radius))
    padded[radius:radius + rows, radius:radius + cols] = mask
    counts = np.zeros((rows, cols))
    for dr in range(2 * radius + 1):
        for dc in range(2 * radius + 1):
            counts += padded[dr:dr + rows, dc:dc + cols]
    return counts
