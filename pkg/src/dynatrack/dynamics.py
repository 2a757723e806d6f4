"""Windowed motion-dynamics estimation and transition-weight normalization.

A ring buffer of cleaned positions feeds first/second finite differences;
their per-axis sample standard deviations form the dynamics vector
[1, sigma_pos, sigma_vel, sigma_acc]. Normalizing by the dynamics factors
and clamping at one yields the transition weights for each derivative.
"""
from __future__ import annotations

import numpy as np

from .errors import (ConfigurationError, ContractViolationError,
                     InsufficientDataError)

# Columns of the dynamics/weight vectors: unity, velocity, acceleration, jerk.
WEIGHT_COLUMNS = 4

MIN_WINDOW = 3


class DynamicsWindow:
    """Fixed-capacity chronological buffer of cleaned ground-plane positions."""

    __slots__ = ("_buf", "count")

    def __init__(self, capacity: int, axes: int = 2):
        if capacity < MIN_WINDOW:
            raise ConfigurationError(
                f"config key 'transition_window': must be >= {MIN_WINDOW}, got {capacity}")
        self._buf = np.zeros((capacity, axes))
        self.count = 0

    @property
    def capacity(self) -> int:
        return self._buf.shape[0]

    @property
    def axes(self) -> int:
        return self._buf.shape[1]

    def push(self, position):
        """Append a position, evicting the oldest when full."""
        buf = self._buf
        if self.count < buf.shape[0]:
            buf[self.count] = position
            self.count += 1
        else:
            buf[:-1] = buf[1:]
            buf[-1] = position

    def as_array(self) -> np.ndarray:
        """Buffered positions, oldest first, shape (count, axes)."""
        return self._buf[:self.count]


def finite_differences(positions: np.ndarray):
    """First and second differences of an (n, axes) position array.

    Requires at least three rows.
    """
    z = np.asarray(positions, dtype=float)
    if z.shape[0] < MIN_WINDOW:
        raise InsufficientDataError(
            f"dynamics window holds {z.shape[0]} positions, need {MIN_WINDOW}")
    d1 = z[1:] - z[:-1]
    d2 = d1[1:] - d1[:-1]
    return d1, d2


def _sample_std(series: np.ndarray) -> np.ndarray:
    """Sample standard deviation over the second-to-last axis (divisor n-1).

    Series shorter than 2 have zero deviation by definition. Spelled out
    rather than delegated to ndarray.std so one formulation serves both the
    single-window and the batched path.
    """
    n = series.shape[-2]
    if n < 2:
        return np.zeros(series.shape[:-2] + series.shape[-1:])
    mean = series.sum(axis=-2) / n
    dev = series - mean[..., None, :]
    return np.sqrt((dev * dev).sum(axis=-2) / (n - 1))


def dynamics_vectors(stacks: np.ndarray) -> np.ndarray:
    """Dynamics vectors for a batch of equal-length windows.

    `stacks` has shape (batch, n, axes); the result has shape
    (batch, axes, 4) with rows [1, sigma_pos, sigma_vel, sigma_acc].
    """
    z = np.asarray(stacks, dtype=float)
    if z.ndim != 3:
        raise ContractViolationError(
            f"expected a (batch, n, axes) stack, got shape {z.shape}")
    if z.shape[1] < MIN_WINDOW:
        raise InsufficientDataError(
            f"dynamics window holds {z.shape[1]} positions, need {MIN_WINDOW}")
    d1 = z[:, 1:] - z[:, :-1]
    d2 = d1[:, 1:] - d1[:, :-1]
    d = np.empty((z.shape[0], z.shape[2], WEIGHT_COLUMNS))
    d[:, :, 0] = 1.0
    d[:, :, 1] = _sample_std(z)
    d[:, :, 2] = _sample_std(d1)
    d[:, :, 3] = _sample_std(d2)
    return d


def dynamics_vector(positions: np.ndarray) -> np.ndarray:
    """Per-axis [1, sigma_pos, sigma_vel, sigma_acc], shape (axes, 4)."""
    z = np.asarray(positions, dtype=float)
    if z.ndim != 2:
        raise ContractViolationError(
            f"expected an (n, axes) position array, got shape {z.shape}")
    return dynamics_vectors(z[None])[0]


def dynamics_factors(factor_velocity: float, factor_acceleration: float,
                     factor_jerk: float) -> np.ndarray:
    """Normalization constants [1, l_v, l_a, l_j]; all must be positive."""
    factors = np.array([1.0, factor_velocity, factor_acceleration, factor_jerk])
    if not np.all(factors > 0):
        raise ConfigurationError(
            "config key 'factor_velocity/factor_acceleration/factor_jerk': "
            f"factors must be positive, got {factors[1:]}")
    return factors


def update_weights(d: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Elementwise min(d / factors, 1). Exact saturation at 1.0.

    Equals the algebraic half-absolute form (see clamped_weights_algebraic)
    for non-negative inputs; that equality is asserted by tests.
    """
    d = np.asarray(d, dtype=float)
    return np.minimum(d / factors, 1.0)


def clamped_weights_algebraic(d_norm: np.ndarray) -> np.ndarray:
    """Clamp written without branching: (1 + d - |1 - d|) / 2."""
    d_norm = np.asarray(d_norm, dtype=float)
    return 0.5 * (1.0 + d_norm - np.abs(1.0 - d_norm))


def smooth_weights(history, window: int) -> np.ndarray:
    """Mean of the most recent `window` raw weight vectors."""
    if window < 1:
        raise ConfigurationError(
            f"config key 'smoothing_window': must be >= 1, got {window}")
    stack = np.asarray(list(history)[-window:], dtype=float)
    if stack.shape[0] == 0:
        raise InsufficientDataError("weight history is empty")
    return stack.mean(axis=0)


def weight_matrix(weights: np.ndarray, order: int, axes: int = 2,
                  aux: int = 0) -> np.ndarray:
    """Diagonal weight matrix over the full state.

    `weights` is one row of 4 shared by all axes or an (axes, 4) array;
    each axis block keeps entries [0..order]. `aux` appends identity rows
    for any trailing unweighted state.
    """
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w.shape[0] == 1 and axes > 1:
        w = np.repeat(w, axes, axis=0)
    if w.shape != (axes, WEIGHT_COLUMNS):
        raise ConfigurationError(
            f"weights shape {w.shape} does not broadcast to ({axes}, {WEIGHT_COLUMNS})")
    diag = np.concatenate([w[a, :order + 1] for a in range(axes)])
    if aux:
        diag = np.concatenate([diag, np.ones(aux)])
    return np.diag(diag)


def weight_diagonal(weights: np.ndarray, order: int) -> np.ndarray:
    """Flattened per-axis diagonal used by the fast predict path."""
    w = np.asarray(weights, dtype=float)
    return w[:, :order + 1].reshape(-1)


def cold_start_weights(mode: str, axes: int = 2) -> np.ndarray:
    """Raw weights used until the window can support estimation."""
    if mode == "identity":
        row = np.ones(WEIGHT_COLUMNS)
    elif mode == "constant_velocity":
        row = np.array([1.0, 1.0, 0.0, 0.0])
    else:
        raise ConfigurationError(
            f"config key 'cold_start_mode': unknown mode {mode!r}")
    return np.tile(row, (axes, 1))
