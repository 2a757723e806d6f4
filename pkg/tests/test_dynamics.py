"""Motion-dynamics weighting: windows, fluctuation vectors, clamped weights."""
import numpy as np
import numpy.testing as npt
import pytest

from dynatrack import dynamics as dyn
from dynatrack.errors import (ConfigurationError, ContractViolationError,
                              InsufficientDataError)

# Sample standard deviations computed with the stdlib statistics module,
# independent of numpy, and frozen here as literals.
STD_POS_01361 = 4.06201920231798        # stdev([0, 1, 3, 6, 10])
STD_VEL_1234 = 1.2909944487358056       # stdev([1, 2, 3, 4])
STD_01234 = 1.5811388300841898          # stdev([0, 1, 2, 3, 4])


def _window(values, capacity=None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    win = dyn.DynamicsWindow(capacity or len(values), axes=values.shape[1])
    for row in values:
        win.push(row)
    return win


def test_window_push_and_eviction_order():
    win = dyn.DynamicsWindow(3, axes=1)
    for v in (1.0, 2.0, 3.0, 4.0):
        win.push(np.array([v]))
    npt.assert_array_equal(win.as_array().ravel(), [2.0, 3.0, 4.0])
    assert win.count == 3


def test_window_capacity_validation():
    with pytest.raises(ConfigurationError):
        dyn.DynamicsWindow(2, axes=1)


def test_finite_differences_exact():
    d1, d2 = dyn.finite_differences(_window([0.0, 1.0, 3.0, 6.0]).as_array())
    npt.assert_array_equal(d1.ravel(), [1.0, 2.0, 3.0])
    npt.assert_array_equal(d2.ravel(), [1.0, 1.0])


def test_finite_differences_insufficient():
    with pytest.raises(InsufficientDataError):
        dyn.finite_differences(np.array([[0.0], [1.0]]))


def test_dynamics_vector_constant_positions():
    d = dyn.dynamics_vector(_window([5.0] * 6).as_array())
    npt.assert_array_equal(d, [[1.0, 0.0, 0.0, 0.0]])


def test_dynamics_vector_linear_ramp():
    d = dyn.dynamics_vector(_window([0.0, 1.0, 2.0, 3.0, 4.0]).as_array())
    assert d[0, 0] == 1.0
    assert d[0, 1] == pytest.approx(STD_01234, abs=1e-14)
    assert d[0, 2] == 0.0
    assert d[0, 3] == 0.0


def test_dynamics_vector_frozen_example():
    d = dyn.dynamics_vector(_window([0.0, 1.0, 3.0, 6.0, 10.0]).as_array())
    assert d[0, 1] == pytest.approx(STD_POS_01361, abs=1e-13)
    assert d[0, 2] == pytest.approx(STD_VEL_1234, abs=1e-14)
    assert d[0, 3] == 0.0


def test_dynamics_vector_axes_independent():
    a = np.array([0.0, 1.0, 3.0, 6.0, 10.0])
    b = np.array([5.0, 5.0, 5.0, 5.0, 5.0])
    d = dyn.dynamics_vector(np.stack([a, b], axis=1))
    assert d.shape == (2, 4)
    assert d[0, 1] == pytest.approx(STD_POS_01361, abs=1e-13)
    npt.assert_array_equal(d[1], [1.0, 0.0, 0.0, 0.0])


def test_dynamics_vectors_batch_matches_single_windows():
    rng = np.random.default_rng(11)
    stack = rng.normal(0.0, 3.0, (40, 8, 2))
    batch = dyn.dynamics_vectors(stack)
    singles = np.stack([dyn.dynamics_vector(stack[i]) for i in range(40)])
    npt.assert_array_equal(batch, singles)


def test_dynamics_vectors_rejects_flat_input():
    with pytest.raises(ContractViolationError):
        dyn.dynamics_vectors(np.zeros((8, 2)))
    with pytest.raises(ContractViolationError):
        dyn.dynamics_vector(np.zeros(8))


def test_update_weights_hand_example():
    d = np.array([[1.0, 0.3, 0.3, 0.3]])
    factors = dyn.dynamics_factors(0.6, 0.3, 0.15)
    w = dyn.update_weights(d, factors)
    npt.assert_array_equal(w, [[1.0, 0.5, 1.0, 1.0]])


def test_update_weights_saturation_is_exact():
    d = np.array([[1.0, 5.0, 0.31, 0.15]])
    factors = dyn.dynamics_factors(0.5, 0.25, 0.15)
    w = dyn.update_weights(d, factors)
    assert w[0, 1] == 1.0
    assert w[0, 2] == 1.0
    assert w[0, 3] == 1.0
    assert w.dtype == np.float64


def test_update_weights_zero_fluctuation_zero_weight():
    d = np.array([[1.0, 0.0, 0.0, 0.0]])
    factors = dyn.dynamics_factors(0.5, 0.25, 0.15)
    npt.assert_array_equal(dyn.update_weights(d, factors),
                           [[1.0, 0.0, 0.0, 0.0]])


def test_dynamics_factors_validation():
    with pytest.raises(ConfigurationError):
        dyn.dynamics_factors(0.0, 0.25, 0.15)
    with pytest.raises(ConfigurationError):
        dyn.dynamics_factors(0.5, -1.0, 0.15)


def test_clamp_matches_algebraic_form():
    # min(x, 1) equals (1 + x - |1 - x|) / 2 for x >= 0
    rng = np.random.default_rng(19)
    d = rng.uniform(0.0, 10.0, size=(10000, 4))
    d[:, 0] = 1.0
    factors = rng.uniform(0.01, 10.0, size=4)
    factors[0] = 1.0
    clamped = dyn.update_weights(d, factors)
    algebraic = dyn.clamped_weights_algebraic(d / factors)
    npt.assert_allclose(clamped, algebraic, rtol=0, atol=1e-12)


def test_update_weights_monotone_in_fluctuation():
    factors = dyn.dynamics_factors(0.5, 0.25, 0.15)
    lo = dyn.update_weights(np.array([[1.0, 0.1, 0.05, 0.01]]), factors)
    hi = dyn.update_weights(np.array([[1.0, 0.2, 0.10, 0.02]]), factors)
    assert np.all(hi >= lo)


def test_smooth_weights_mean_of_history():
    hist = np.array([
        [[1.0, 0.0, 0.0, 0.0]],
        [[1.0, 1.0, 0.0, 0.0]],
        [[1.0, 1.0, 1.0, 0.0]],
    ])
    sm = dyn.smooth_weights(hist, 3)
    npt.assert_allclose(sm, [[1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]], rtol=1e-15)


def test_smooth_weights_window_one_is_passthrough():
    hist = np.array([
        [[1.0, 0.2, 0.3, 0.4]],
        [[1.0, 0.9, 0.8, 0.7]],
    ])
    npt.assert_array_equal(dyn.smooth_weights(hist, 1), hist[-1])


def test_smooth_weights_short_history_uses_what_exists():
    hist = np.array([[[1.0, 0.5, 0.25, 0.0]]])
    npt.assert_array_equal(dyn.smooth_weights(hist, 4), hist[0])
    with pytest.raises(InsufficientDataError):
        dyn.smooth_weights(np.empty((0, 1, 4)), 4)


def test_smooth_weights_stays_in_convex_hull():
    rng = np.random.default_rng(23)
    hist = rng.uniform(0.0, 1.0, size=(6, 2, 4))
    sm = dyn.smooth_weights(hist, 4)
    tail = hist[-4:]
    assert np.all(sm >= tail.min(axis=0) - 1e-15)
    assert np.all(sm <= tail.max(axis=0) + 1e-15)


def test_weight_matrix_identity_when_all_ones():
    W = dyn.weight_matrix(np.ones((2, 4)), order=3)
    npt.assert_array_equal(W, np.eye(8))


def test_weight_matrix_layout():
    w = np.array([[1.0, 0.5, 0.25, 0.1], [1.0, 0.4, 0.2, 0.05]])
    W = dyn.weight_matrix(w, order=3)
    npt.assert_array_equal(np.diag(W),
                           [1.0, 0.5, 0.25, 0.1, 1.0, 0.4, 0.2, 0.05])
    npt.assert_array_equal(W - np.diag(np.diag(W)), np.zeros((8, 8)))


def test_weight_matrix_truncates_to_order():
    w = np.array([[1.0, 0.5, 0.25, 0.1]])
    W = dyn.weight_matrix(w, order=1, axes=1)
    npt.assert_array_equal(np.diag(W), [1.0, 0.5])


def test_weight_matrix_broadcast_and_aux():
    w = np.array([1.0, 0.5, 0.25, 0.1])
    W = dyn.weight_matrix(w, order=3, axes=2, aux=1)
    assert W.shape == (9, 9)
    assert W[8, 8] == 1.0
    npt.assert_array_equal(np.diag(W)[:4], np.diag(W)[4:8])


def test_weight_diagonal_matches_matrix():
    w = np.array([[1.0, 0.5, 0.25, 0.1], [1.0, 0.4, 0.2, 0.05]])
    diag = dyn.weight_diagonal(w, order=3)
    npt.assert_array_equal(diag, np.diag(dyn.weight_matrix(w, order=3)))


def test_cold_start_modes():
    npt.assert_array_equal(dyn.cold_start_weights("identity"),
                           np.ones((2, 4)))
    npt.assert_array_equal(dyn.cold_start_weights("constant_velocity"),
                           [[1.0, 1.0, 0.0, 0.0]] * 2)
    with pytest.raises(ConfigurationError):
        dyn.cold_start_weights("warm")


def test_noise_free_constant_velocity_weights():
    # spacing 0.5 per step is exactly representable, so the higher-order
    # fluctuations vanish exactly and their weights must be exactly zero
    positions = np.arange(8.0)[:, None] * 0.5
    d = dyn.dynamics_vector(positions)
    factors = dyn.dynamics_factors(0.5, 0.25, 0.15)
    w = dyn.update_weights(d, factors)
    assert w[0, 1] == 1.0
    assert w[0, 2] == 0.0
    assert w[0, 3] == 0.0
