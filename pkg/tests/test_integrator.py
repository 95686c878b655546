import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import QUASI_MODES
from mbelab.dynamics import RhsKind, full_rhs
from mbelab.errors import DriftBudgetExceeded, TooManySteps
from mbelab.integrator import default_drift_budget, integrate
from mbelab.model import FullState, ModelParams, Pumping, default_params

FREE = ModelParams(0.0, 1.0, 1.0, p=0.0, gamma=0.0)


def test_free_field_is_single_frequency():
    M0 = 0.7 - 0.2j
    tr = integrate(RhsKind.FULL, FullState(M0, [0, 0, 1]), (0.0, 100.0), FREE, Pumping(0.5), tol=1e-10)
    assert np.max(np.abs(tr.M - np.exp(-1j * tr.times) * M0)) < 1e-10


def test_free_bloch_vector_precesses_about_e3():
    tr = integrate(RhsKind.FULL, [0, 0, 1, 0, 0], (0.0, 100.0), FREE, Pumping(0.0), tol=1e-12)
    w, t = FREE.omega, tr.times
    ref = np.column_stack([np.cos(w * t), -np.sin(w * t), np.zeros_like(t)])
    assert np.max(np.abs(tr.S - ref)) < 1e-10
    assert np.max(np.abs(np.linalg.norm(tr.S, axis=1) - 1.0)) < 1e-12


def test_fifth_order_convergence_under_step_cap():
    # tolerance loose enough that the cap, not the controller, sets the step
    errs = []
    for h in (0.1, 0.05):
        tr = integrate(RhsKind.FULL, [1, 0, 1, 0, 0], (0.0, 100.0), FREE, Pumping(0.0), tol=1e-4, max_step=h)
        errs.append(np.max(np.abs(tr.M - np.exp(-1j * tr.times))))
    assert errs[0] / errs[1] >= 8


def test_error_tracks_tolerance():
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        tr = integrate(RhsKind.FULL, [1, 0, 1, 0, 0], (0.0, 100.0), FREE, Pumping(0.0), tol=tol)
        errs.append(np.max(np.abs(tr.M - np.exp(-1j * tr.times))))
        assert errs[-1] < tol
    assert errs[0] > errs[1] > errs[2]


def test_dense_output_matches_reference_solver():
    params = default_params(0.05, 2.0)
    P = Pumping(0.6 - 0.2j, modes=QUASI_MODES)
    y0 = np.array([0.3, -0.1, 0.0, 0.6, -0.8])
    grid = np.linspace(0.0, 50.0, 317)
    tr = integrate(RhsKind.FULL, y0, (0.0, 50.0), params, P, tol=1e-11, t_eval=grid)
    ref = solve_ivp(lambda t, y: full_rhs(t, y, params, P), (0.0, 50.0), y0, method="DOP853", t_eval=grid, rtol=1e-13, atol=1e-14)
    np.testing.assert_array_equal(tr.times, grid)
    assert np.max(np.abs(tr.states - ref.y.T)) < 1e-8


def test_steps_and_samples_merge_in_order():
    params = default_params(0.05, 2.0)
    grid = np.linspace(0.0, 20.0, 11)
    tr = integrate(RhsKind.FULL, [0.3, 0, 0, 0.6, -0.8], (0.0, 20.0), params, Pumping(1.0), t_eval=grid, include_steps=True)
    assert np.all(np.diff(tr.times) > 0)
    assert set(grid) <= set(tr.times)
    assert len(tr.times) > len(grid)
    assert tr.times[-1] == 20.0


def test_long_horizon_conserves_bloch_norm():
    params = default_params(1e-3, 2.0)
    tr = integrate(RhsKind.FULL, [0.5, 0, 0, 0.6, -0.8], (0.0, 1000.0), params, Pumping(1.0), tol=1e-10)
    n = np.linalg.norm(tr.S, axis=1)
    assert np.max(np.abs(n - n[0])) < 1e-9
    assert tr.metadata["max_bloch_drift"] < 1e-9
    assert tr.times[-1] == 1000.0


def test_averaged_flow_conserves_bloch_norm():
    params = default_params(1e-2, 2.0)
    tr = integrate(RhsKind.AVERAGED, [0.2, -0.4, 0.1, 0.5, 0.3], (0.0, 1000.0), params, Pumping(1.0))
    n = np.linalg.norm(tr.S, axis=1)
    assert np.max(np.abs(n - n[0])) < default_drift_budget(1000.0, 1e-10)


def test_metadata_and_properties():
    params = default_params(1e-2, 2.0)
    tr = integrate(RhsKind.INTERACTION, [0.2, -0.4, 0.1, 0.5, 0.3], (0.0, 5.0), params, Pumping(1.0))
    assert set(tr.metadata) >= {"params_hash", "rhs", "tol", "n_steps", "n_rejected", "max_bloch_drift"}
    assert tr.M.dtype == complex and tr.S.shape == (len(tr), 3)


def test_argument_validation():
    params = default_params()
    with pytest.raises(ValueError, match="tol"):
        integrate(RhsKind.FULL, np.zeros(5), (0, 1), params, Pumping(), tol=1e-3)
    with pytest.raises(ValueError):
        integrate(RhsKind.FULL, np.zeros(5), (1, 0), params, Pumping())
    with pytest.raises(ValueError):
        integrate(RhsKind.FULL, np.zeros(5), (0, 1), params, Pumping(), t_eval=[0.5, 0.2])


def test_failures_report_time():
    params = default_params(1e-2, 2.0)
    with pytest.raises(DriftBudgetExceeded) as e:
        integrate(RhsKind.FULL, [0.3, 0, 0, 0.6, -0.8], (0.0, 100.0), params, Pumping(1.0), tol=1e-4, drift_budget=1e-15)
    assert 0 < e.value.t <= 100.0
    with pytest.raises(TooManySteps) as e:
        integrate(RhsKind.FULL, [0.3, 0, 0, 0.6, -0.8], (0.0, 100.0), params, Pumping(1.0), max_steps=10)
    assert e.value.t is not None and "t =" in str(e.value)


def test_pure_state_norm_conserved():
    params = default_params(0.05, 2.0)
    c = np.array([0.6, 0.0, 0.0, 0.8])
    tr = integrate(RhsKind.PURE, np.concatenate([[0.3, 0.0], c]), (0.0, 100.0), params, Pumping(0.5))
    assert np.max(np.abs(np.sum(tr.states[:, 2:] ** 2, axis=1) - 1)) < 1e-10
