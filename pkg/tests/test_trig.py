import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import QUASI_MODES, random_bloch
from mbelab.dynamics import interaction_field
from mbelab.model import Pumping, default_params, pumping_eval
from mbelab.trig import TrigSeries, field_series, oscillatory_integral_matrix, pump_series


def test_series_algebra():
    t = np.linspace(0, 10, 41)
    c, s = TrigSeries.cos(1.3), TrigSeries.sin(1.3)
    np.testing.assert_allclose((c * c + s * s)(t), 1.0, atol=1e-15)
    assert (c * c + s * s).mean() == 1.0
    e = TrigSeries.exp(0.7, 2 - 1j)
    np.testing.assert_allclose(e.real()(t), np.real((2 - 1j) * np.exp(0.7j * t)), atol=1e-15)
    np.testing.assert_allclose(e.imag()(t), np.imag((2 - 1j) * np.exp(0.7j * t)), atol=1e-15)
    assert (c - c).mean() == 0


def test_pump_series_matches_evaluation():
    P = Pumping(0.4 - 0.3j, modes=QUASI_MODES)
    t = np.linspace(0, 30, 97)
    np.testing.assert_allclose(pump_series(P, 1.0)(t).real, pumping_eval(P, 1.0, t), atol=1e-15)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_field_series_matches_direct_evaluation(seed):
    rng = np.random.default_rng(seed)
    y = np.concatenate([rng.uniform(-1, 1, 2), random_bloch(rng)])
    params = default_params(1e-2, 2.0)
    P = Pumping(0.6 - 0.3j, modes=QUASI_MODES)
    t = rng.uniform(0, 200, 30)
    series = field_series(y, params, P)
    got = np.array([s(t).real for s in series]).T
    np.testing.assert_allclose(got, interaction_field(t, y, params, P), atol=1e-14)


def test_oscillatory_integral_against_quadrature():
    params = default_params(1e-2, 2.0)
    P = Pumping(0.6, modes=QUASI_MODES[:1])
    y = np.array([0.3, -0.2, 0.1, 0.4, -0.5])
    series = field_series(y, params, P)
    T = 7.3
    mean = np.array([s.mean().real for s in series])
    ref = np.array(
        [quad(lambda t, k=k: interaction_field(np.array([t]), y, params, P)[0, k] - mean[k], 0, T, limit=200)[0] for k in range(5)]
    )
    got = oscillatory_integral_matrix([series], [0.0, T])
    assert got[0, 0] == 0
    assert abs(got[1, 0] - np.linalg.norm(ref)) < 1e-10


def test_oscillatory_integral_zero_without_oscillations():
    s = [TrigSeries.const(1.0)] * 5
    np.testing.assert_array_equal(oscillatory_integral_matrix([s], [1.0, 2.0]), 0.0)
