"""Parameters, pumping signals and state representations.

Everything here is a plain immutable value; the numerical kernels in
:mod:`mbelab.dynamics` consume the packed arrays produced by
:func:`pack_params` and :func:`pack_pumping`.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BallViolation,
    HorizonTooShort,
    InvalidParameters,
    NotDensityMatrix,
    NormViolation,
)

TOL_BALL = 1e-9
TOL_TRACE = 1e-12
EPS_SEP = 1e-6  # relative to Omega
QUAD_POINTS_PER_PERIOD = 64

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class ModelParams:
    """Constants of the coupled field/two-level system in program units.

    ``p`` and ``gamma`` may be zero, which switches the coupling and the
    damping off (the unperturbed flow); quantities that divide by them
    (``r``, ``gamma1``) then raise.
    """

    omega1: float
    omega2: float
    Omega: float
    p: float
    gamma: float
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("omega1", "omega2", "Omega", "p", "gamma", "c", "hbar"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidParameters(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not self.omega2 > self.omega1:
            raise InvalidParameters(
                f"invariant omega2 > omega1 violated (omega1={self.omega1}, omega2={self.omega2})"
            )
        if not self.Omega > 0:
            raise InvalidParameters(f"invariant Omega > 0 violated (Omega={self.Omega})")
        if self.p < 0 or self.gamma < 0:
            raise InvalidParameters(
                f"invariant p >= 0 and gamma >= 0 violated (p={self.p}, gamma={self.gamma})"
            )
        if not (self.c > 0 and self.hbar > 0):
            raise InvalidParameters(f"invariant c > 0 and hbar > 0 violated (c={self.c}, hbar={self.hbar})")

    @classmethod
    def from_ratio(cls, p: float, r: float, **kw) -> "ModelParams":
        """Build parameters with ``gamma = p / r``."""
        if r <= 0:
            raise InvalidParameters(f"invariant r > 0 violated (r={r})")
        return cls(p=p, gamma=p / r, **kw)

    def with_coupling(self, p: float, gamma: float) -> "ModelParams":
        return ModelParams(self.omega1, self.omega2, self.Omega, p, gamma, self.c, self.hbar)

    @property
    def omega(self) -> float:
        return self.omega2 - self.omega1

    @property
    def kappa(self) -> float:
        return self.p * self.omega

    @property
    def r(self) -> float:
        if self.gamma == 0:
            raise InvalidParameters("r = p/gamma undefined for gamma = 0")
        return self.p / self.gamma

    @property
    def gamma1(self) -> float:
        if self.p == 0:
            raise InvalidParameters("gamma1 = gamma/p undefined for p = 0")
        return self.gamma / self.p

    @property
    def kappa1(self) -> float:
        return self.c * self.omega / self.Omega

    @property
    def b(self) -> float:
        return 2.0 * self.omega / (self.c * self.hbar)

    @property
    def alpha_r(self) -> float:
        return self.gamma1 / self.kappa1

    def beta_r(self, Ae: complex) -> float:
        """``sqrt(1 - alpha_r^2 |Ae|^2)``; raises when the radicand is negative."""
        rad = 1.0 - (self.alpha_r * abs(Ae)) ** 2
        if rad < 0:
            raise InvalidParameters(f"beta_r undefined: alpha_r*|Ae| = {self.alpha_r * abs(Ae)} > 1")
        return math.sqrt(rad)

    def is_resonant(self, rtol: float = 1e-12) -> bool:
        return abs(self.Omega - self.omega) <= rtol * max(self.Omega, self.omega)

    def to_dict(self) -> dict:
        return {
            "omega1": self.omega1,
            "omega2": self.omega2,
            "Omega": self.Omega,
            "p": self.p,
            "gamma": self.gamma,
            "c": self.c,
            "hbar": self.hbar,
        }


@dataclass(frozen=True)
class Pumping:
    """Quasiperiodic pump: resonant amplitude ``Ae`` plus ``(Ae_k, Omega_k)`` modes."""

    Ae: complex = 0j
    modes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "Ae", complex(self.Ae))
        object.__setattr__(
            self, "modes", tuple((complex(a), float(w)) for a, w in self.modes)
        )

    def check(self, Omega: float, eps_sep: float = EPS_SEP) -> "Pumping":
        for a, w in self.modes:
            if not math.isfinite(w) or abs(w - Omega) <= eps_sep * Omega:
                raise InvalidParameters(
                    f"invariant Omega_k != Omega violated (Omega_k={w}, Omega={Omega}, eps_sep={eps_sep})"
                )
        return self

    def rotated(self, phi: float) -> "Pumping":
        """Same pump with the resonant amplitude multiplied by ``exp(i phi)``."""
        return Pumping(self.Ae * np.exp(1j * phi), self.modes)

    def max_frequency(self, Omega: float) -> float:
        return max([Omega] + [abs(w) for _, w in self.modes])

    def to_dict(self) -> dict:
        return {
            "Ae": [self.Ae.real, self.Ae.imag],
            "modes": [{"Ae": [a.real, a.imag], "Omega": w} for a, w in self.modes],
        }


@dataclass(frozen=True)
class FullState:
    """Lab-frame state: complex field amplitude ``M = A + iB/Omega`` and Bloch vector ``S``."""

    M: complex
    S: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "M", complex(self.M))
        object.__setattr__(self, "S", _frozen_vec(self.S))
        _check_ball(self.S)

    def to_array(self) -> np.ndarray:
        return np.array([self.M.real, self.M.imag, *self.S])

    @classmethod
    def from_array(cls, y) -> "FullState":
        return cls(complex(y[0], y[1]), np.asarray(y[2:5], dtype=float))


@dataclass(frozen=True)
class EnvelopeState:
    """Rotating-frame state: envelopes of the field and of the Bloch vector."""

    Me: complex
    Se: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Me", complex(self.Me))
        object.__setattr__(self, "Se", _frozen_vec(self.Se))
        _check_ball(self.Se)

    def to_array(self) -> np.ndarray:
        return np.array([self.Me.real, self.Me.imag, *self.Se])

    @classmethod
    def from_array(cls, y) -> "EnvelopeState":
        return cls(complex(y[0], y[1]), np.asarray(y[2:5], dtype=float))


@dataclass(frozen=True)
class PureState:
    C1: complex
    C2: complex

    def __post_init__(self):
        object.__setattr__(self, "C1", complex(self.C1))
        object.__setattr__(self, "C2", complex(self.C2))
        norm = abs(self.C1) ** 2 + abs(self.C2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise NormViolation(f"|C1|^2 + |C2|^2 = {norm!r} != 1")

    def density_matrix(self) -> np.ndarray:
        c = np.array([self.C1, self.C2])
        return np.outer(c, c.conj())

    def bloch(self) -> np.ndarray:
        return bloch_from_rho(self.density_matrix())


def _frozen_vec(v) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(3)
    a.setflags(write=False)
    return a


def _check_ball(S, tol: float = TOL_BALL):
    n = float(np.linalg.norm(S))
    if n > 1.0 + tol:
        raise BallViolation(f"|S| = {n!r} exceeds 1 + {tol}")


def rho_from_bloch(S, tol_ball: float = TOL_BALL) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    _check_ball(S, tol_ball)
    s1, s2, s3 = S
    return 0.5 * np.array([[1 + s3, s1 - 1j * s2], [s1 + 1j * s2, 1 - s3]])


def bloch_from_rho(rho, tol_trace: float = TOL_TRACE) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise NotDensityMatrix(f"expected a 2x2 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol_trace:
        raise NotDensityMatrix("matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol_trace:
        raise NotDensityMatrix(f"trace {np.trace(rho)!r} != 1")
    r21 = rho[1, 0]
    return np.array([2 * r21.real, 2 * r21.imag, (rho[0, 0] - rho[1, 1]).real])


def pumping_eval(P: Pumping, Omega: float, t):
    """Pump signal ``A^e(t)``; vectorised over ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.real(P.Ae * np.exp(-1j * Omega * t))
    for a, w in P.modes:
        out = out + np.real(a * np.exp(-1j * w * t))
    return out


def resonant_amplitude_numeric(P: Pumping, Omega: float, T: float, T_min: float | None = None) -> complex:
    """Composite-trapezoid estimate of ``2 <A^e(t) exp(i Omega t)>`` over ``[0, T]``."""
    if T_min is None:
        T_min = 1e3 * 2 * np.pi / Omega
    if T < T_min:
        raise HorizonTooShort(f"T = {T} < T_min = {T_min}")
    h_max = 2 * np.pi / P.max_frequency(Omega) / QUAD_POINTS_PER_PERIOD
    n = int(np.ceil(T / h_max))
    t = np.linspace(0.0, T, n + 1)
    vals = pumping_eval(P, Omega, t) * np.exp(1j * Omega * t)
    return complex(2.0 * np.trapezoid(vals, t) / T)


def hamiltonian(params: ModelParams, P: Pumping, A: float, t: float) -> np.ndarray:
    a = params.kappa / params.c * (A + float(pumping_eval(P, params.Omega, t)))
    hb = params.hbar
    return np.array([[hb * params.omega1, 1j * a], [-1j * a, hb * params.omega2]])


def rotation_so3(omega: float, t):
    """``exp(V_omega t)``: rotation about e3; stacks along leading axes if ``t`` is an array."""
    t = np.asarray(t, dtype=float)
    c, s = np.cos(omega * t), np.sin(omega * t)
    R = np.zeros(t.shape + (3, 3))
    R[..., 0, 0] = c
    R[..., 0, 1] = s
    R[..., 1, 0] = -s
    R[..., 1, 1] = c
    R[..., 2, 2] = 1.0
    return R


def to_lab_frame(env: EnvelopeState, params: ModelParams, t: float) -> FullState:
    M = np.exp(-1j * params.Omega * t) * env.Me
    S = rotation_so3(params.omega, t) @ env.Se
    return FullState(M, S)


def to_rotating_frame(full: FullState, params: ModelParams, t: float) -> EnvelopeState:
    Me = np.exp(1j * params.Omega * t) * full.M
    Se = rotation_so3(params.omega, -t) @ full.S
    return EnvelopeState(Me, Se)


def lab_to_rotating_arrays(times, states, params: ModelParams) -> np.ndarray:
    """Vectorised :func:`to_rotating_frame` over a ``(n, 5)`` state array."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    M = (states[:, 0] + 1j * states[:, 1]) * np.exp(1j * params.Omega * times)
    c, s = np.cos(params.omega * times), np.sin(params.omega * times)
    S1, S2 = states[:, 2], states[:, 3]
    # exp(-V t) = rotation by +omega t in the (S1, S2) plane
    return np.column_stack([M.real, M.imag, c * S1 - s * S2, s * S1 + c * S2, states[:, 4]])


def rotating_to_lab_arrays(times, states, params: ModelParams) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    M = (states[:, 0] + 1j * states[:, 1]) * np.exp(-1j * params.Omega * times)
    c, s = np.cos(params.omega * times), np.sin(params.omega * times)
    S1, S2 = states[:, 2], states[:, 3]
    return np.column_stack([M.real, M.imag, c * S1 + s * S2, -s * S1 + c * S2, states[:, 4]])


def pure_to_bloch_state(A: float, B: float, C: PureState, Omega: float) -> np.ndarray:
    """Map pure-state data ``(A, B, C)`` to the 5-vector ``(Re M, Im M, S)``."""
    return np.array([A, B / Omega, *C.bloch()])


def pack_params(params: ModelParams) -> np.ndarray:
    return np.array(
        [params.Omega, params.omega1, params.omega2, params.p, params.gamma, params.c, params.hbar]
    )


def pack_pumping(P: Pumping, Omega: float):
    """Pump as parallel arrays ``(amps, freqs)``; index 0 is the resonant mode."""
    P.check(Omega)
    amps = np.array([P.Ae] + [a for a, _ in P.modes], dtype=complex)
    freqs = np.array([Omega] + [w for _, w in P.modes], dtype=float)
    return amps, freqs


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def params_hash(params: ModelParams, P: Pumping | None = None) -> str:
    payload = {"params": params.to_dict()}
    if P is not None:
        payload["pumping"] = P.to_dict()
    return content_hash(payload)[:16]


def default_params(p: float = 1e-3, r: float = 2.0) -> ModelParams:
    """Desk-scale resonant family: c = hbar = 1, Omega = omega = 1."""
    return ModelParams.from_ratio(p, r, omega1=0.0, omega2=1.0, Omega=1.0)


def bloch_norms(states: Sequence) -> np.ndarray:
    return np.linalg.norm(np.asarray(states)[:, 2:5], axis=1)
