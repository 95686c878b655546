"""Harmonic states of the resonant averaged system and their stability.

Two branches of stationary points exist for ``Omega == omega``:

* ``Z1`` -- field on the circle ``|M + Ae/2| = |Ae|/2`` with planar Bloch
  vector ``S = alpha_r (M1, M2, 0)``, parameterised by the circle angle;
* ``Z2`` -- ``M = -Ae`` with ``S = (-alpha_r Ae1, -alpha_r Ae2, S3)``,
  parameterised by ``S3 in [-beta_r, beta_r]``; nonempty iff ``c r > |Ae|``.

Spectra are reported for ``2J`` where ``J`` is the Jacobian of the averaged
field divided by ``p``; the linearised averaged flow has eigenvalues
``(p/2) * eig(2J)`` and both are carried by :class:`SpectrumReport`.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dynamics import RhsKind, averaged_rhs
from .errors import BallViolation, BranchEmpty, NoConvergence, NotResonant, OutOfRange
from .model import TOL_BALL, EnvelopeState, ModelParams, Pumping

CLUSTER_RTOL = 1e-6
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class HarmonicState:
    branch: str  # "Z1" or "Z2"
    parameter: float
    Me: complex
    Se: np.ndarray
    Ae: complex

    @property
    def envelope(self) -> EnvelopeState:
        return EnvelopeState(self.Me, self.Se)

    def to_array(self) -> np.ndarray:
        return np.array([self.Me.real, self.Me.imag, *self.Se])


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues of ``2J`` (sorted) plus the linearised-flow scaling ``(p/2) lambda``."""

    eigenvalues: np.ndarray
    source: str  # "ClosedForm" or "Numeric"
    stable_nonzero_modes: bool
    degenerate: bool
    linearised: np.ndarray


def _require_resonance(params: ModelParams):
    if not params.is_resonant():
        raise NotResonant(
            f"harmonic branches need Omega == omega (Omega={params.Omega}, omega={params.omega})"
        )


def z1_field(Ae: complex, theta):
    return -Ae / 2 + abs(Ae) / 2 * np.exp(1j * np.asarray(theta))


def harmonic_z1(params: ModelParams, P: Pumping, theta: float) -> HarmonicState:
    _require_resonance(params)
    Ae = P.Ae
    M = complex(z1_field(Ae, theta))
    al = params.alpha_r
    if al * abs(M) > 1 + TOL_BALL:
        raise BallViolation(f"alpha_r |M(theta)| = {al * abs(M)!r} > 1")
    S = np.array([al * M.real, al * M.imag, 0.0])
    return HarmonicState("Z1", float(theta), M, S, Ae)


def z2_exists(params: ModelParams, Ae: complex) -> bool:
    return params.c * params.r > abs(Ae)


def harmonic_z2(params: ModelParams, P: Pumping, s3: float) -> HarmonicState:
    _require_resonance(params)
    Ae = P.Ae
    if not z2_exists(params, Ae):
        raise BranchEmpty(
            f"Z2 empty: requires c*r > |Ae| (c*r = {params.c * params.r!r}, |Ae| = {abs(Ae)!r})"
        )
    beta = params.beta_r(Ae)
    if abs(s3) > beta:
        raise OutOfRange(f"|s3| = {abs(s3)!r} > beta_r = {beta!r}")
    al = params.alpha_r
    return HarmonicState("Z2", float(s3), -Ae, np.array([-al * Ae.real, -al * Ae.imag, float(s3)]), Ae)


def stationarity_residual(state: HarmonicState, params: ModelParams, P: Pumping) -> float:
    return float(np.linalg.norm(averaged_rhs(state.to_array(), params, P, RhsKind.AVERAGED)))


def jacobian(state, params: ModelParams, P: Pumping) -> np.ndarray:
    """Jacobian of the resonant averaged field divided by ``p``, at any state."""
    _require_resonance(params)
    y = state.to_array() if hasattr(state, "to_array") else np.asarray(state, dtype=float)
    g1 = params.gamma / params.p if params.p else params.gamma1
    k1 = params.kappa1
    b = params.b
    B1 = y[0] + P.Ae.real
    B2 = y[1] + P.Ae.imag
    S1, S2, S3 = y[2], y[3], y[4]
    J = np.array(
        [
            [-g1, 0, k1, 0, 0],
            [0, -g1, 0, k1, 0],
            [-b * S3, 0, 0, 0, -b * B1],
            [0, -b * S3, 0, 0, -b * B2],
            [b * S1, b * S2, b * B1, b * B2, 0],
        ],
        dtype=float,
    )
    return 0.5 * J


def sort_eigenvalues(ev, decimals: int = 9) -> np.ndarray:
    """Lexicographic (Re, Im) order, with Re rounded so roundoff does not reorder."""
    ev = np.asarray(ev, dtype=complex)
    key = np.lexsort((ev.imag, np.round(ev.real, decimals)))
    return ev[key]


def _matrix_hash(J) -> str:
    return hashlib.sha256(np.ascontiguousarray(J, dtype=float).tobytes()).hexdigest()[:16]


def numeric_spectrum(J) -> np.ndarray:
    """Eigenvalues of a small dense real matrix, sorted by (Re, Im).

    LAPACK ``geev`` (balancing, Hessenberg reduction, shifted QR) gives the
    raw eigenvalues. Eigenvalues closer than ``CLUSTER_RTOL * ||J||`` are
    replaced by their cluster mean: a defective multiple eigenvalue splits by
    ``O(sqrt(eps))`` under roundoff, while the cluster mean (trace of the
    invariant-subspace block) stays accurate to ``O(eps)``.
    """
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise ValueError("matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(J)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed for matrix {_matrix_hash(J)}") from exc
    ev = np.asarray(ev, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(J, 2)))
    tol = CLUSTER_RTOL * scale
    n = ev.size
    label = list(range(n))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(ev[i] - ev[j]) < tol:
                label[find(i)] = find(j)
    out = ev.copy()
    for root in set(find(i) for i in range(n)):
        idx = [i for i in range(n) if find(i) == root]
        if len(idx) > 1:
            out[idx] = ev[idx].mean()
    return sort_eigenvalues(out)


def spectrum_distance(a, b) -> float:
    """Max distance under the optimal pairing of two eigenvalue multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def _stable_nonzero(ev) -> bool:
    ev = np.asarray(ev, dtype=complex)
    drop = int(np.argmin(np.abs(ev)))
    rest = np.delete(ev, drop)
    return bool(np.all(rest.real < 0))


def _report(ev, source: str, params: ModelParams, degenerate: bool) -> SpectrumReport:
    ev = sort_eigenvalues(ev)
    return SpectrumReport(ev, source, _stable_nonzero(ev), degenerate, 0.5 * params.p * ev)


def _count_near_zero(ev, tol=ZERO_TOL) -> int:
    return int(np.sum(np.abs(np.asarray(ev)) < tol))


def spectrum_z1(params: ModelParams, P: Pumping, theta: float) -> SpectrumReport:
    st = harmonic_z1(params, P, theta)
    g1 = params.gamma / params.p
    B = abs(st.Me + P.Ae)
    w = params.b * B
    ev = np.array([-g1, -g1, 0.0, 1j * w, -1j * w])
    return _report(ev, "ClosedForm", params, degenerate=_count_near_zero(ev) > 1)


def z2_roots(params: ModelParams, s3: float):
    """The two distinct nonzero roots of ``lambda^2 + gamma1 lambda + b kappa1 s3``."""
    g1 = params.gamma / params.p
    disc = complex(g1 * g1 - 4 * params.b * params.kappa1 * s3)
    sq = np.sqrt(disc)
    return (-g1 + sq) / 2, (-g1 - sq) / 2


def spectrum_z2(params: ModelParams, P: Pumping, s3: float) -> SpectrumReport:
    harmonic_z2(params, P, s3)
    l12, l34 = z2_roots(params, s3)
    ev = np.array([l12, l12, l34, l34, 0.0], dtype=complex)
    return _report(ev, "ClosedForm", params, degenerate=_count_near_zero(ev) > 1)


def spectrum_numeric(state: HarmonicState, params: ModelParams, P: Pumping) -> SpectrumReport:
    ev = numeric_spectrum(2 * jacobian(state, params, P))
    return _report(ev, "Numeric", params, degenerate=_count_near_zero(ev) > 1)


def max_nonzero_real_part(ev) -> float:
    ev = np.asarray(ev, dtype=complex)
    rest = np.delete(ev, int(np.argmin(np.abs(ev))))
    return float(rest.real.max())


def locate_stability_flip(params: ModelParams, P: Pumping, width: float = 1e-13, max_iter: int = 200):
    """Bisection on ``s3`` for the sign change of the largest nonzero-mode real part on Z2.

    Uses the numeric spectrum of ``2J``; returns the final bracket ``(lo, hi)``
    with ``lo`` unstable and ``hi`` stable.
    """
    beta = params.beta_r(P.Ae)

    def stable(s3):
        st = harmonic_z2(params, P, s3)
        return max_nonzero_real_part(numeric_spectrum(2 * jacobian(st, params, P))) < 0

    lo, hi = -beta / 2, beta / 2
    if stable(lo) or not stable(hi):
        raise ArithmeticError("no stability flip inside [-beta/2, beta/2]")
    for _ in range(max_iter):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        if stable(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def z1_tangent(params: ModelParams, state: HarmonicState) -> np.ndarray:
    dM = 1j * abs(state.Ae) / 2 * np.exp(1j * state.parameter)
    al = params.alpha_r
    return np.array([dM.real, dM.imag, al * dM.real, al * dM.imag, 0.0])


def tangent(params: ModelParams, state: HarmonicState) -> np.ndarray:
    if state.branch == "Z2":
        return np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    return z1_tangent(params, state)


# --- geometry -------------------------------------------------------------


def _z2_point(params: ModelParams, Ae: complex, s3):
    al = params.alpha_r
    return np.array([-Ae.real, -Ae.imag, -al * Ae.real, -al * Ae.imag, s3])


def _z1_point(params: ModelParams, Ae: complex, theta):
    M = z1_field(Ae, theta)
    al = params.alpha_r
    return np.stack([M.real, M.imag, al * M.real, al * M.imag, np.zeros_like(M.real)], axis=-1)


def distance_to_branch(state, branch: str, params: ModelParams, P: Pumping, s3_range=None):
    """Euclidean distance in R^5 to a branch; returns ``(distance, parameter)``.

    ``s3_range`` restricts Z2 to a sub-segment (e.g. ``(0, beta_r)`` for the
    stable part).
    """
    _require_resonance(params)
    y = state.to_array() if hasattr(state, "to_array") else np.asarray(state, dtype=float)
    Ae = P.Ae
    if branch == "Z2":
        if not z2_exists(params, Ae):
            raise BranchEmpty(f"Z2 empty: requires c*r > |Ae| (c*r = {params.c * params.r!r}, |Ae| = {abs(Ae)!r})")
        beta = params.beta_r(Ae)
        lo, hi = (-beta, beta) if s3_range is None else s3_range
        s3 = float(np.clip(y[4], lo, hi))
        return float(np.linalg.norm(y - _z2_point(params, Ae, s3))), s3
    if branch != "Z1":
        raise ValueError(f"unknown branch {branch!r}")
    return _distance_z1(y, params, Ae)


def _distance_z1(y, params: ModelParams, Ae: complex, cells: int = 128):
    al = params.alpha_r

    def f(th):
        return np.sum((_z1_point(params, Ae, th) - y) ** 2, axis=-1)

    grid = np.linspace(0.0, 2 * np.pi, cells, endpoint=False)
    valid = al * np.abs(z1_field(Ae, grid)) <= 1 + TOL_BALL
    if not valid.any():
        raise BranchEmpty("Z1 has no points inside the Bloch ball")
    vals = np.where(valid, f(grid), np.inf)
    i = int(np.argmin(vals))
    h = 2 * np.pi / cells
    a, b = grid[i] - h, grid[i] + h
    # golden-section on the bracketing cells
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(60):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        if b - a < 1e-9:
            break
    th = 0.5 * (a + b)
    # Newton on f'(theta) with analytic derivatives of the circle
    rho = abs(Ae) / 2
    for _ in range(20):
        e = np.exp(1j * th)
        z = _z1_point(params, Ae, th)
        dz = rho * np.array([-e.imag, e.real, -al * e.imag, al * e.real, 0.0])
        d2z = rho * np.array([-e.real, -e.imag, -al * e.real, -al * e.imag, 0.0])
        r = z - y
        f1 = 2 * r @ dz
        f2 = 2 * (dz @ dz + r @ d2z)
        if f2 <= 0:
            break
        step = f1 / f2
        th_new = th - step
        if not (al * abs(z1_field(Ae, th_new)) <= 1 + TOL_BALL):
            break
        th = th_new
        if abs(step) < 1e-15:
            break
    th = float(np.mod(th, 2 * np.pi))
    return float(np.sqrt(max(f(th), 0.0))), th


def sample_tubular(params: ModelParams, P: Pumping, d: float, s: float, count: int, seed: int):
    """Seeded uniform samples of the tube of radius ``d`` around Z2 restricted to ``S3 in [2s, beta_r - 2s]``.

    The normal offset lives in the first four coordinates.
    """
    _require_resonance(params)
    Ae = P.Ae
    if not z2_exists(params, Ae):
        raise BranchEmpty(f"Z2 empty: requires c*r > |Ae| (c*r = {params.c * params.r!r}, |Ae| = {abs(Ae)!r})")
    beta = params.beta_r(Ae)
    if not 0 < s < beta / 4:
        raise OutOfRange(f"s must lie in (0, beta_r/4) = (0, {beta / 4!r}), got {s!r}")
    if d < 0:
        raise OutOfRange(f"d must be nonnegative, got {d!r}")
    rng = np.random.default_rng(seed)
    s3 = rng.uniform(2 * s, beta - 2 * s, size=count)
    direction = rng.standard_normal((count, 4))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = d * rng.uniform(0.0, 1.0, size=count) ** 0.25
    out = []
    for k in range(count):
        y = _z2_point(params, Ae, s3[k])
        y[:4] += radius[k] * direction[k]
        if np.linalg.norm(y[2:5]) > 1.0:
            raise BallViolation(f"tube sample {k} leaves the Bloch ball; reduce d")
        out.append(EnvelopeState.from_array(y))
    return out


def gauge_transform(state: HarmonicState, phi: float) -> HarmonicState:
    """Image of a harmonic state under ``Ae -> exp(i phi) Ae``."""
    e = np.exp(1j * phi)
    c, s = math.cos(phi), math.sin(phi)
    S = state.Se
    S_new = np.array([c * S[0] - s * S[1], s * S[0] + c * S[1], S[2]])
    param = float(np.mod(state.parameter + phi, 2 * np.pi)) if state.branch == "Z1" else state.parameter
    return HarmonicState(state.branch, param, complex(e * state.Me), S_new, complex(e * state.Ae))


# --- normal coordinates near Z2 ------------------------------------------


def z2_normal_basis(params: ModelParams, P: Pumping, s3: float) -> np.ndarray:
    """Real basis ``v1..v4`` of the stable normal directions of ``J`` at ``Z2(s3)``.

    ``J`` splits into identical blocks on ``(M1, S1)`` and ``(M2, S2)`` with a
    feed into ``S3``. For a complex pair ``a +- i w`` the real and imaginary
    parts of one eigenvector are used, so that in these coordinates the linear
    flow is a rotation-dilation and the coordinate norm decays monotonically.
    Columns are returned as a ``(5, 4)`` array.
    """
    st = harmonic_z2(params, P, s3)
    J = jacobian(st, params, P)
    l12, l34 = z2_roots(params, s3)
    lam_a, lam_b = 0.5 * l12, 0.5 * l34  # eigenvalues of J
    cols = []
    for plane in (0, 1):
        if abs(np.imag(lam_a)) > 1e-14:
            v = _eigvec_plane(J, lam_a, plane)
            cols += [v.real, v.imag]
        else:
            for lam in (lam_a, lam_b):
                cols.append(_eigvec_plane(J, lam, plane).real)
    return np.column_stack(cols)


def _eigvec_plane(J, lam, plane):
    # eigenvector supported on (M_plane, S_plane, S3): from row "M": -g w_M + k w_S = 2 lam w_M
    lam = complex(lam)
    k1 = 2 * J[0, 2]
    g1 = -2 * J[0, 0]
    wM = 1.0 + 0j
    wS = (2 * lam + g1) * wM / k1
    v = np.zeros(5, dtype=complex)
    v[plane] = wM
    v[2 + plane] = wS
    # S3 row: J[4] @ v = lam v5
    v[4] = (J[4, :4] @ v[:4]) / lam
    return v / np.linalg.norm(v)


def normal_coordinates(y, params: ModelParams, P: Pumping, iters: int = 50):
    """Coordinates ``x`` with ``y = Z2(x5) + sum_k x_k v_k(x5)``; fixed-point in ``x5``."""
    y = np.asarray(y, dtype=float)
    x5 = float(y[4])
    beta = params.beta_r(P.Ae)
    for _ in range(iters):
        s = float(np.clip(x5, 1e-12, beta))
        V = np.column_stack([z2_normal_basis(params, P, s), np.eye(5)[:, 4]])
        base = _z2_point(params, P.Ae, 0.0)
        x = np.linalg.solve(V, y - base)
        if abs(x[4] - x5) < 1e-15:
            x5 = x[4]
            break
        x5 = x[4]
    return x


def normal_distance_sq(y, params: ModelParams, P: Pumping) -> float:
    x = normal_coordinates(y, params, P)
    return float(np.sum(x[:4] ** 2))


def stationary_search_nonresonant(
    params: ModelParams, P: Pumping, starts: int = 1000, seed: int = 0, field_box: float = 2.0, iters: int = 50
):
    """Gauss-Newton search for zeros of the non-resonant averaged field.

    Starts are drawn with ``M`` uniform in ``[-field_box, field_box]^2`` and
    ``S`` uniform in the Bloch ball. Returns the converged states as an
    ``(n, 5)`` array; off resonance every one of them has ``M = 0``.
    """
    kind = RhsKind.AVERAGED_NON_RESONANT
    rng = np.random.default_rng(seed)
    M0 = rng.uniform(-field_box, field_box, size=(starts, 2))
    S0 = rng.standard_normal((starts, 3))
    S0 *= (rng.uniform(size=(starts, 1)) ** (1 / 3)) / np.linalg.norm(S0, axis=1, keepdims=True)
    h = 1e-7
    found = []
    for y in np.hstack([M0, S0]):
        for _ in range(iters):
            F = averaged_rhs(y, params, P, kind)
            if np.linalg.norm(F) < 1e-14:
                break
            J = np.column_stack([(averaged_rhs(y + h * e, params, P, kind) - averaged_rhs(y - h * e, params, P, kind)) / (2 * h) for e in np.eye(5)])
            y = y - np.linalg.lstsq(J, F, rcond=None)[0]
        if np.linalg.norm(averaged_rhs(y, params, P, kind)) < 1e-12:
            found.append(y)
    return np.array(found).reshape(-1, 5)
