"""Right-hand sides of the full, pure-state, interaction-picture and averaged systems.

State layouts
-------------
* full / interaction / averaged: ``(Re M, Im M, S1, S2, S3)`` (5 reals)
* pure: ``(A, B, Re C1, Im C1, Re C2, Im C2)`` (6 reals)

The scalar kernels are compiled with numba so that :mod:`mbelab.integrator`
can call them inside its stepping loop; the public functions below are thin
wrappers that accept :class:`~mbelab.model.ModelParams` and
:class:`~mbelab.model.Pumping`.
"""
from __future__ import annotations

import enum
from math import cos, sin

import numpy as np
from numba import njit

from .errors import HorizonTooShort, PumpResonantWithMolecule, ResonanceMismatch
from .model import (
    EPS_SEP,
    QUAD_POINTS_PER_PERIOD,
    EnvelopeState,
    FullState,
    ModelParams,
    Pumping,
    pack_params,
    pack_pumping,
)


class RhsKind(enum.IntEnum):
    FULL = 0
    PURE = 1
    INTERACTION = 2
    AVERAGED = 3
    AVERAGED_NON_RESONANT = 4

    @property
    def dim(self) -> int:
        return 6 if self is RhsKind.PURE else 5

    @property
    def has_bloch(self) -> bool:
        return self is not RhsKind.PURE


# packed parameter indices
_OM, _W1, _W2, _P, _G, _C, _HB = range(7)


@njit(cache=True)
def _pump(t, amps, freqs):
    s = 0.0
    for k in range(amps.size):
        ph = freqs[k] * t
        s += amps[k].real * cos(ph) + amps[k].imag * sin(ph)
    return s


@njit(cache=True)
def _full(t, y, par, amps, freqs, out):
    Om = par[_OM]
    w = par[_W2] - par[_W1]
    kap = par[_P] * w
    c = par[_C]
    a2 = 2.0 * kap / c * (y[0] + _pump(t, amps, freqs)) / par[_HB]
    out[0] = Om * y[1]
    out[1] = -Om * y[0] - par[_G] * y[1] + c * kap * y[3] / Om
    out[2] = w * y[3] - a2 * y[4]
    out[3] = -w * y[2]
    out[4] = a2 * y[2]


@njit(cache=True)
def _pure(t, y, par, amps, freqs, out):
    Om = par[_OM]
    w1 = par[_W1]
    w2 = par[_W2]
    kap = par[_P] * (w2 - w1)
    c = par[_C]
    hb = par[_HB]
    A, B, x1, y1, x2, y2 = y[0], y[1], y[2], y[3], y[4], y[5]
    j = 2.0 * kap * (x1 * y2 - y1 * x2)
    ah = kap / c * (A + _pump(t, amps, freqs)) / hb
    out[0] = B
    out[1] = -Om * Om * A - par[_G] * B + c * j
    # C1' = -i w1 C1 + (a/hbar) C2 ;  C2' = -i w2 C2 - (a/hbar) C1
    out[2] = w1 * y1 + ah * x2
    out[3] = -w1 * x1 + ah * y2
    out[4] = w2 * y2 - ah * x1
    out[5] = -w2 * x2 - ah * y1


@njit(cache=True)
def _interaction(t, y, par, amps, freqs, out):
    Om = par[_OM]
    w = par[_W2] - par[_W1]
    p = par[_P]
    c = par[_C]
    pk1 = p * c * w / Om
    pb = p * 2.0 * w / (c * par[_HB])
    cO, sO = cos(Om * t), sin(Om * t)
    cw, sw = cos(w * t), sin(w * t)
    X = par[_G] * (y[1] * cO - y[0] * sO) - pk1 * (-y[2] * sw + y[3] * cw)
    # (-i cos + sin) * X
    out[0] = sO * X
    out[1] = -cO * X
    u = y[0] * cO + y[1] * sO + _pump(t, amps, freqs)
    out[2] = -pb * u * y[4] * cw
    out[3] = -pb * u * y[4] * sw
    out[4] = pb * u * (y[2] * cw + y[3] * sw)


@njit(cache=True)
def _averaged(t, y, par, amps, freqs, out):
    Om = par[_OM]
    w = par[_W2] - par[_W1]
    p = par[_P]
    c = par[_C]
    pk1 = p * c * w / Om
    pb = p * 2.0 * w / (c * par[_HB])
    g = par[_G]
    B1 = y[0] + amps[0].real
    B2 = y[1] + amps[0].imag
    out[0] = -0.5 * (g * y[0] - pk1 * y[2])
    out[1] = -0.5 * (g * y[1] - pk1 * y[3])
    out[2] = -0.5 * pb * y[4] * B1
    out[3] = -0.5 * pb * y[4] * B2
    out[4] = 0.5 * pb * (y[2] * B1 + y[3] * B2)


@njit(cache=True)
def _averaged_nr(t, y, par, amps, freqs, out):
    g = par[_G]
    out[0] = -0.5 * g * y[0]
    out[1] = -0.5 * g * y[1]
    out[2] = 0.0
    out[3] = 0.0
    out[4] = 0.0


@njit(cache=True)
def rhs_kernel(kind, t, y, par, amps, freqs, out):
    if kind == 0:
        _full(t, y, par, amps, freqs, out)
    elif kind == 1:
        _pure(t, y, par, amps, freqs, out)
    elif kind == 2:
        _interaction(t, y, par, amps, freqs, out)
    elif kind == 3:
        _averaged(t, y, par, amps, freqs, out)
    else:
        _averaged_nr(t, y, par, amps, freqs, out)


def _as_array(state, dim=5) -> np.ndarray:
    if isinstance(state, (FullState, EnvelopeState)):
        return state.to_array()
    return np.asarray(state, dtype=float).reshape(dim)


def check_kind(kind: RhsKind, params: ModelParams, P: Pumping) -> None:
    """Reject averaged fields whose frequency assumptions do not hold."""
    kind = RhsKind(kind)
    if kind is RhsKind.AVERAGED and not params.is_resonant():
        raise ResonanceMismatch(
            f"resonant averaged field needs Omega == omega (Omega={params.Omega}, omega={params.omega})"
        )
    if kind is RhsKind.AVERAGED_NON_RESONANT:
        if params.is_resonant():
            raise ResonanceMismatch("non-resonant averaged field needs Omega != omega")
        for _, w in P.modes:
            if abs(abs(w) - params.omega) <= EPS_SEP * params.omega:
                raise PumpResonantWithMolecule(
                    f"pump mode Omega_k={w} coincides with omega={params.omega}"
                )


def prepare(kind, params: ModelParams, P: Pumping):
    """Validated packed arguments for :func:`rhs_kernel`."""
    check_kind(kind, params, P)
    amps, freqs = pack_pumping(P, params.Omega)
    return pack_params(params), amps, freqs


def _eval(kind, t, y, params, P):
    kind = RhsKind(kind)
    par, amps, freqs = prepare(kind, params, P)
    out = np.empty(kind.dim)
    rhs_kernel(int(kind), float(t), _as_array(y, kind.dim), par, amps, freqs, out)
    return out


def full_rhs(t, state, params: ModelParams, P: Pumping) -> np.ndarray:
    """Time derivative of ``(Re M, Im M, S)`` for the lab-frame system."""
    return _eval(RhsKind.FULL, t, state, params, P)


def pure_rhs(t, state, params: ModelParams, P: Pumping) -> np.ndarray:
    """Time derivative of ``(A, B, Re C1, Im C1, Re C2, Im C2)``."""
    return _eval(RhsKind.PURE, t, state, params, P)


def interaction_rhs(t, env, params: ModelParams, P: Pumping) -> np.ndarray:
    """``p * (f_r, g_r)`` in the rotating frame, components ``(Re, Im, 1, 2, 3)``."""
    return _eval(RhsKind.INTERACTION, t, env, params, P)


def averaged_rhs(env, params: ModelParams, P: Pumping, kind=RhsKind.AVERAGED) -> np.ndarray:
    kind = RhsKind(kind)
    if kind not in (RhsKind.AVERAGED, RhsKind.AVERAGED_NON_RESONANT):
        raise ValueError(f"not an averaged kind: {kind!r}")
    return _eval(kind, 0.0, env, params, P)


def theta_matrix(params: ModelParams, P: Pumping, A: float, t: float) -> np.ndarray:
    """so(3) generator of the Bloch flow at field ``A`` and time ``t``."""
    from .model import pumping_eval

    a2 = 2 * params.kappa / params.c * (A + float(pumping_eval(P, params.Omega, t))) / params.hbar
    w = params.omega
    return np.array([[0.0, w, -a2], [-w, 0.0, 0.0], [a2, 0.0, 0.0]])


def interaction_field(t, env, params: ModelParams, P: Pumping) -> np.ndarray:
    """``(f_r, g_r)`` without the factor ``p``; vectorised over ``t``.

    Written independently of the compiled kernel (it builds the field from
    the complex envelope), so tests can cross-check the two.
    """
    y = _as_array(env)
    t = np.asarray(t, dtype=float)
    from .model import pumping_eval

    Om, w = params.Omega, params.omega
    g1 = params.gamma1
    k1 = params.kappa1
    b = params.b
    M = y[0] + 1j * y[1]
    cw, sw = np.cos(w * t), np.sin(w * t)
    field_im = np.imag(np.exp(-1j * Om * t) * M)
    bloch2 = -y[2] * sw + y[3] * cw
    f = -1j * np.exp(1j * Om * t) * (g1 * field_im - k1 * bloch2)
    u = np.real(np.exp(-1j * Om * t) * M) + pumping_eval(P, Om, t)
    g = -b * u * np.stack([y[4] * cw, y[4] * sw, -(y[2] * cw + y[3] * sw)])
    return np.concatenate([np.stack([f.real, f.imag]), g]).T


def average_of_rhs_numeric(env, params: ModelParams, P: Pumping, T: float, T_min: float | None = None):
    """Trapezoid time-average of ``(f_r, g_r)`` at a frozen state over ``[0, T]``.

    Converges to ``averaged_rhs / p``.
    """
    Om = params.Omega
    if T_min is None:
        T_min = 1e3 * 2 * np.pi / Om
    if T < T_min:
        raise HorizonTooShort(f"T = {T} < T_min = {T_min}")
    fmax = max(P.max_frequency(Om), params.omega)
    h_max = 2 * np.pi / fmax / QUAD_POINTS_PER_PERIOD
    n = int(np.ceil(T / h_max))
    # chunked to bound memory on long horizons
    total = np.zeros(5)
    edges = np.linspace(0.0, T, n + 1)
    chunk = 200_000
    for i in range(0, n, chunk):
        t = edges[i : min(i + chunk, n) + 1]
        v = interaction_field(t, env, params, P)
        total += np.trapezoid(v, t, axis=0)
    return total / T
