"""Exact trigonometric-polynomial expansion of the interaction-picture field.

At a frozen state the field ``(f_r, g_r)`` is a finite sum
``sum_k c_k exp(i nu_k t)``. Keeping the expansion explicit gives the exact
time average (the ``nu = 0`` coefficients) and closed-form running integrals
``int_0^T (v - mean) dt = sum_{nu != 0} c (exp(i nu T) - 1) / (i nu)``.
"""
from __future__ import annotations

import numpy as np

from .model import ModelParams, Pumping

_FREQ_DIGITS = 12


class TrigSeries:
    """Sparse complex trigonometric polynomial keyed by frequency."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for nu, c in (terms or {}).items():
            self._add(nu, c)

    def _add(self, nu, c):
        key = round(float(nu), _FREQ_DIGITS) + 0.0
        self.terms[key] = self.terms.get(key, 0j) + complex(c)

    @classmethod
    def const(cls, c):
        return cls({0.0: c})

    @classmethod
    def cos(cls, nu, amp=1.0):
        return cls({nu: amp / 2, -nu: amp / 2})

    @classmethod
    def sin(cls, nu, amp=1.0):
        return cls({nu: amp / 2j, -nu: -amp / 2j})

    @classmethod
    def exp(cls, nu, amp=1.0):
        return cls({nu: amp})

    def __add__(self, other):
        out = TrigSeries(self.terms)
        for nu, c in other.terms.items():
            out._add(nu, c)
        return out

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, other):
        if isinstance(other, TrigSeries):
            out = TrigSeries()
            for n1, c1 in self.terms.items():
                for n2, c2 in other.terms.items():
                    out._add(n1 + n2, c1 * c2)
            return out
        return TrigSeries({nu: c * other for nu, c in self.terms.items()})

    __rmul__ = __mul__

    def conj(self):
        return TrigSeries({-nu: np.conj(c) for nu, c in self.terms.items()})

    def real(self):
        return (self + self.conj()) * 0.5

    def imag(self):
        return (self - self.conj()) * (-0.5j)

    def mean(self) -> complex:
        return self.terms.get(0.0, 0j)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for nu, c in self.terms.items():
            out += c * np.exp(1j * nu * t)
        return out


def pump_series(P: Pumping, Omega: float) -> TrigSeries:
    s = TrigSeries({-Omega: P.Ae / 2, Omega: np.conj(P.Ae) / 2})
    for a, w in P.modes:
        s = s + TrigSeries({-w: a / 2, w: np.conj(a) / 2})
    return s


def field_series(y, params: ModelParams, P: Pumping):
    """Five real-valued series for ``(Re f_r, Im f_r, g_r)`` at frozen state ``y``."""
    M1, M2, S1, S2, S3 = (float(v) for v in y)
    Om, w = params.Omega, params.omega
    g1, k1, b = params.gamma1, params.kappa1, params.b
    bracket = (
        TrigSeries.cos(Om, g1 * M2)
        - TrigSeries.sin(Om, g1 * M1)
        - (TrigSeries.sin(w, -k1 * S1) + TrigSeries.cos(w, k1 * S2))
    )
    f = TrigSeries.exp(Om, -1j) * bracket
    u = TrigSeries.cos(Om, M1) + TrigSeries.sin(Om, M2) + pump_series(P, Om)
    g1s = u * TrigSeries.cos(w, -b * S3)
    g2s = u * TrigSeries.sin(w, -b * S3)
    g3s = u * (TrigSeries.cos(w, b * S1) + TrigSeries.sin(w, b * S2))
    return [f.real(), f.imag(), g1s.real(), g2s.real(), g3s.real()]


def series_mean(series) -> np.ndarray:
    return np.array([s.mean().real for s in series])


def oscillatory_integral_matrix(series_list, T):
    """``|int_0^T (v - mean)|`` for many states at once.

    ``series_list`` holds one 5-component expansion per state. Returns an
    array of shape ``(len(T), n_states)`` with the Euclidean norm over
    components.
    """
    T = np.asarray(T, dtype=float)
    freqs = sorted({nu for comps in series_list for s in comps for nu in s.terms if nu != 0.0})
    if not freqs:
        return np.zeros((T.size, len(series_list)))
    nu = np.array(freqs)
    index = {f: i for i, f in enumerate(freqs)}
    # coefficient tensor: (n_freq, n_states * 5)
    C = np.zeros((nu.size, 5 * len(series_list)), dtype=complex)
    for k, comps in enumerate(series_list):
        for j, s in enumerate(comps):
            for f, c in s.terms.items():
                if f != 0.0:
                    C[index[f], 5 * k + j] = c
    out = np.empty((T.size, len(series_list)))
    chunk = 20_000
    for i in range(0, T.size, chunk):
        Tc = T[i : i + chunk]
        E = (np.exp(1j * np.outer(Tc, nu)) - 1.0) / (1j * nu)
        V = (E @ C).real.reshape(Tc.size, len(series_list), 5)
        out[i : i + chunk] = np.linalg.norm(V, axis=2)
    return out
