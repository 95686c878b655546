"""Adaptive Dormand-Prince 5(4) integrator with PI step control and dense output.

The stepping loop is compiled with numba and dispatches on :class:`RhsKind`
to the kernels in :mod:`mbelab.dynamics`. Time is accumulated with Kahan
summation so that horizons of ``1/p`` steps do not drift.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import RhsKind, prepare, rhs_kernel
from .errors import DriftBudgetExceeded, StepSizeUnderflow, TooManySteps
from .model import EnvelopeState, FullState, ModelParams, Pumping, params_hash

TOL_MIN, TOL_MAX = 1e-13, 1e-4

# Dormand & Prince (1980) coefficients
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# continuous extension (Hairer, Norsett & Wanner, DOPRI5 dense output)
_D1 = -12715105075 / 11282082432
_D3 = 87487479700 / 32700410799
_D4 = -10690763975 / 1880347072
_D5 = 701980252875 / 199316789632
_D6 = -1453857185 / 822651844
_D7 = 69997945 / 29380423

_SAFE, _BETA = 0.9, 0.04
_FAC_MIN, _FAC_MAX = 0.2, 10.0

_OK, _UNDERFLOW, _DRIFT, _MAXSTEPS = 0, 1, 2, 3

# step acceptance runs at tol * LOCAL_SAFETY: the radial error of the 5th-order
# solution accumulates linearly over O(1/p) horizons
LOCAL_SAFETY = 1e-2
_TOL_FLOOR = 2e-14


@njit(cache=True)
def _grow(buf_t, buf_y, n):
    nt = np.empty(2 * buf_t.size)
    ny = np.empty((2 * buf_t.size, buf_y.shape[1]))
    nt[:n] = buf_t[:n]
    ny[:n] = buf_y[:n]
    return nt, ny


@njit(cache=True)
def _bloch_norm(y):
    return np.sqrt(y[2] * y[2] + y[3] * y[3] + y[4] * y[4])


@njit(cache=True)
def _run(kind, y0, t0, t1, par, amps, freqs, tol, t_eval, include_steps, max_steps, drift_budget, h_max):
    n = y0.size
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ys = np.empty(n)
    ynew = np.empty(n)
    r5 = np.empty(n)

    cap = t_eval.size + 16
    if include_steps:
        cap += 4096
    out_t = np.empty(cap)
    out_y = np.empty((cap, n))
    n_out = 0
    ie = 0

    track = kind != 1
    s0 = _bloch_norm(y0) if track else 0.0
    max_drift = 0.0

    # initial sample
    if ie < t_eval.size and t_eval[ie] <= t0:
        out_t[n_out] = t0
        out_y[n_out] = y
        n_out += 1
        while ie < t_eval.size and t_eval[ie] <= t0:
            ie += 1
    elif include_steps:
        out_t[n_out] = t0
        out_y[n_out] = y
        n_out += 1

    rhs_kernel(kind, t0, y, par, amps, freqs, k1)

    # initial step (Hairer's heuristic)
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = tol + tol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (k1[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    span = t1 - t0
    h = min(h, span)
    for i in range(n):
        ys[i] = y[i] + h * k1[i]
    rhs_kernel(kind, t0 + h, ys, par, amps, freqs, k2)
    d2 = 0.0
    for i in range(n):
        sc = tol + tol * abs(y[i])
        d2 += ((k2[i] - k1[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100 * h, h1, span, h_max)

    t = t0
    comp = 0.0
    err_old = 1e-4
    rejected_last = False
    n_steps = 0
    n_rej = 0
    status = _OK
    expo = 0.2 - _BETA * 0.75

    while t < t1:
        if n_steps >= max_steps:
            status = _MAXSTEPS
            break
        last = False
        if t + h >= t1:
            h = t1 - t
            last = True
        if h <= 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0):
            status = _UNDERFLOW
            break

        for i in range(n):
            ys[i] = y[i] + h * _A21 * k1[i]
        rhs_kernel(kind, t + _C2 * h, ys, par, amps, freqs, k2)
        for i in range(n):
            ys[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        rhs_kernel(kind, t + _C3 * h, ys, par, amps, freqs, k3)
        for i in range(n):
            ys[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs_kernel(kind, t + _C4 * h, ys, par, amps, freqs, k4)
        for i in range(n):
            ys[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        rhs_kernel(kind, t + _C5 * h, ys, par, amps, freqs, k5)
        for i in range(n):
            ys[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
        th = t + h if not last else t1
        rhs_kernel(kind, th, ys, par, amps, freqs, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (_A71 * k1[i] + _A73 * k3[i] + _A74 * k4[i] + _A75 * k5[i] + _A76 * k6[i])
        rhs_kernel(kind, th, ynew, par, amps, freqs, k7)

        err = 0.0
        for i in range(n):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = tol + tol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) ** 2
        err = np.sqrt(err / n)
        n_steps += 1

        if err <= 1.0:
            # PI controller
            fac11 = err ** expo
            fac = fac11 / err_old ** _BETA
            fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFE))
            hnew = h / fac
            err_old = max(err, 1e-4)
            if rejected_last:
                hnew = min(hnew, h)
            rejected_last = False

            for i in range(n):
                r5[i] = h * (_D1 * k1[i] + _D3 * k3[i] + _D4 * k4[i] + _D5 * k5[i] + _D6 * k6[i] + _D7 * k7[i])

            # compensated time update
            if last:
                tnew = t1
            else:
                yh = h - comp
                tnew = t + yh
                comp = (tnew - t) - yh

            while ie < t_eval.size and t_eval[ie] <= tnew:
                s = (t_eval[ie] - t) / h
                s1 = 1.0 - s
                if n_out + 1 >= out_t.size:
                    out_t, out_y = _grow(out_t, out_y, n_out)
                for i in range(n):
                    ydiff = ynew[i] - y[i]
                    bspl = h * k1[i] - ydiff
                    out_y[n_out, i] = y[i] + s * (ydiff + s1 * (bspl + s * ((ydiff - h * k7[i] - bspl) + s1 * r5[i])))
                out_t[n_out] = t_eval[ie]
                n_out += 1
                ie += 1
            if include_steps and (n_out == 0 or out_t[n_out - 1] < tnew):
                if n_out + 1 >= out_t.size:
                    out_t, out_y = _grow(out_t, out_y, n_out)
                out_t[n_out] = tnew
                out_y[n_out] = ynew
                n_out += 1

            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            t = tnew

            if track:
                dr = abs(_bloch_norm(y) - s0)
                if dr > max_drift:
                    max_drift = dr
                if dr > drift_budget:
                    status = _DRIFT
                    break
            h = min(hnew, h_max)
        else:
            n_rej += 1
            rejected_last = True
            fac11 = err ** expo
            h = h / min(1.0 / _FAC_MIN, fac11 / _SAFE)

    return status, out_t[:n_out].copy(), out_y[:n_out].copy(), t, n_steps, n_rej, max_drift


@dataclass
class Trajectory:
    """Time-stamped samples of one integration run."""

    times: np.ndarray
    states: np.ndarray
    kind: RhsKind
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    @property
    def M(self) -> np.ndarray:
        return self.states[:, 0] + 1j * self.states[:, 1]

    @property
    def S(self) -> np.ndarray:
        return self.states[:, 2:5]


def default_drift_budget(span: float, tol: float) -> float:
    """``1e-9`` per ``1e3`` time units at ``tol = 1e-10``, scaled linearly in both."""
    return 1e-9 * max(1.0, span / 1e3) * max(1.0, tol / 1e-10)


def integrate(
    kind,
    state0,
    t_span,
    params: ModelParams,
    P: Pumping,
    tol: float = 1e-10,
    t_eval=None,
    include_steps: bool | None = None,
    drift_budget: float | None = None,
    max_steps: int = 50_000_000,
    max_step: float | None = None,
) -> Trajectory:
    """Integrate one of the systems in :class:`RhsKind` over ``t_span``.

    Parameters
    ----------
    kind : RhsKind
    state0 : FullState, EnvelopeState or array of length 5 (6 for ``PURE``)
    t_span : (t0, t1)
    tol : float
        Mixed absolute/relative local error tolerance, in ``[1e-13, 1e-4]``.
    t_eval : array, optional
        Sample times for dense output. When omitted every accepted step is
        returned.
    include_steps : bool, optional
        Also return accepted step points (merged in time order). Defaults to
        ``t_eval is None``.
    drift_budget : float, optional
        Maximum tolerated ``| |S(t)| - |S(0)| |``; defaults to
        :func:`default_drift_budget`.
    max_step : float, optional
        Upper bound on the step size.

    Raises
    ------
    StepSizeUnderflow, DriftBudgetExceeded, TooManySteps
    """
    kind = RhsKind(kind)
    if not TOL_MIN <= tol <= TOL_MAX:
        raise ValueError(f"tol must lie in [{TOL_MIN}, {TOL_MAX}], got {tol}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (np.isfinite(t0) and np.isfinite(t1) and t1 > t0):
        raise ValueError(f"t_span must be finite and increasing, got {t_span}")
    if isinstance(state0, (FullState, EnvelopeState)):
        y0 = state0.to_array()
    else:
        y0 = np.array(state0, dtype=float).reshape(kind.dim)
    if t_eval is None:
        te = np.empty(0)
        steps = True if include_steps is None else include_steps
    else:
        te = np.asarray(t_eval, dtype=float)
        if te.size and (np.any(np.diff(te) <= 0) or te[0] < t0 or te[-1] > t1):
            raise ValueError("t_eval must be strictly increasing inside t_span")
        steps = False if include_steps is None else include_steps
    if drift_budget is None:
        drift_budget = default_drift_budget(t1 - t0, tol)
    par, amps, freqs = prepare(kind, params, P)
    tol_step = max(tol * LOCAL_SAFETY, _TOL_FLOOR)
    h_max = np.inf if max_step is None else float(max_step)

    status, ts, ys, t_end, nst, nrej, drift = _run(
        int(kind), y0, t0, t1, par, amps, freqs, tol_step, te, bool(steps), int(max_steps), float(drift_budget), h_max
    )
    if status == _UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t = {t_end!r}", t=t_end)
    if status == _DRIFT:
        raise DriftBudgetExceeded(
            f"|S| drifted by {drift:.3e} > budget {drift_budget:.3e} at t = {t_end!r}", t=t_end
        )
    if status == _MAXSTEPS:
        raise TooManySteps(f"max_steps = {max_steps} reached at t = {t_end!r}", t=t_end)
    meta = {
        "params_hash": params_hash(params, P),
        "rhs": kind.name,
        "tol": tol,
        "n_steps": int(nst),
        "n_rejected": int(nrej),
        "max_bloch_drift": float(drift),
    }
    return Trajectory(ts, ys, kind, meta)
