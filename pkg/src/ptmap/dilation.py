"""Embedding of the non-unitary qubit evolution into a Hermitian qubit-ancilla system.

Ordering convention: every 4x4 operator and 4-vector in this module uses the
ancilla as the *first* tensor factor, so ``total = kron(1, Sigma) +
kron(sigma_y, Upsilon)`` and block ``[0:2, 0:2]`` is the ancilla-|0> sector.

The dilated propagator can be obtained two ways:

* :func:`dilated_propagator` integrates ``i dU/dt = H_total(t) U`` with a
  fixed-step RK4 scheme;
* :func:`closed_form_propagator` writes the same unitary directly as
  ``[[A, -B], [B, A]]`` with ``A = (E + zeta(T) E zeta(0)) N(0)^{-1}`` and
  ``B = zeta(T) E - A zeta(0)``, where ``E = exp(-i H T)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, RealityViolation, SignMismatch, UnitarityDrift
from .ptcore import (
    I2,
    SIGMA_Y,
    BlochState,
    PTHamiltonian,
    _amp,
    check_alpha,
    evolution_matrix,
)

REALITY_TOL = 1e-10


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class DilationState:
    """Snapshot of the metric operator and its square-root companion at time t."""

    n0: float
    n_t: np.ndarray
    zeta_t: np.ndarray
    stage: Literal["one", "two"]
    sign: Literal["plus", "minus"]


@dataclass(frozen=True, eq=False)
class DilatedHamiltonian:
    sigma_t: np.ndarray
    upsilon_t: np.ndarray
    total: np.ndarray


@dataclass(frozen=True)
class DecisivenessReport:
    d_value: float
    stage: Literal["one", "two"]
    params: tuple[float, float]


# --------------------------------------------------------------------------
# minimal N(0)


def n0_min_stage1(sigma: float) -> float:
    """``max(tan(sigma/2), cot(sigma/2))``."""
    if not 0 < sigma < np.pi:
        raise DomainError("sigma must lie in (0, pi)")
    return float(max(np.tan(sigma / 2), 1 / np.tan(sigma / 2)))


def second_stage_init_rhs(alpha: float, omega_tau):
    """Lower bound on N(0) at a given ``omega tau`` during the second stage.

    The sign in front of the square root is ``-`` for ``alpha >= 0`` and ``+``
    otherwise.
    """
    x = np.asarray(omega_tau, dtype=float)
    sg = -1.0 if alpha >= 0 else 1.0
    c2a = np.cos(2 * alpha)
    sa = np.sin(alpha)
    root = np.sqrt(3 + c2a - 2 * sa**2 * np.cos(2 * x))
    den = 2 - np.cos(2 * x) + c2a * np.cos(2 * x) + sg * 2 * sa * np.sin(x) * root
    return (1 + c2a) / den


def n0_min_stage2(alpha: float, omega_tau: float = np.pi / 2) -> float:
    """Supremum of :func:`second_stage_init_rhs` over ``[0, omega_tau]``.

    A dense grid locates the maximum and a bounded scalar search refines it.
    For ``omega_tau = pi/2`` the result is ``(1 + |sin a|) / (1 - |sin a|)``.
    """
    check_alpha(alpha)
    if omega_tau < 0:
        raise DomainError("omega_tau must be non-negative")
    xs = np.linspace(0.0, omega_tau, 10001)
    vals = second_stage_init_rhs(alpha, xs)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda x: -float(second_stage_init_rhs(alpha, x)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-13},
        )
        best = max(best, -float(res.fun))
    return best


def zeta_closed_form(stage: str, sign: str, param: float) -> np.ndarray:
    """Closed-form zeta at ``omega tau = pi/2`` for the minimal N(0).

    ``stage="one"`` takes ``param = sigma``; ``stage="two"`` takes ``param = alpha``.
    """
    if sign not in ("plus", "minus"):
        raise DomainError("sign must be 'plus' or 'minus'")
    plus = np.array([[1, -1j], [1j, 1]])
    minus = plus.conj()
    if stage == "one":
        c = np.cos(param)
        if (sign == "plus") != (c > 0):
            raise SignMismatch(f"branch {sign!r} requires cos(sigma) {'>' if sign == 'plus' else '<'} 0")
        if sign == "plus":
            return 0.5 * np.sqrt(c) / np.sin(param / 2) * plus
        return 0.5 * np.sqrt(-c) / np.cos(param / 2) * minus
    if stage == "two":
        check_alpha(param)
        s = np.sin(param)
        if (sign == "plus" and s < 0) or (sign == "minus" and s > 0):
            raise SignMismatch(f"branch {sign!r} contradicts sign of alpha")
        if sign == "plus":
            return np.sqrt(s) / (1 - s) * plus
        return np.sqrt(-s) / (1 + s) * minus
    raise DomainError("stage must be 'one' or 'two'")


# --------------------------------------------------------------------------
# N(t) and zeta(t)


def _n0_matrix(n0) -> np.ndarray:
    n0 = np.asarray(n0, dtype=complex)
    return n0 * I2 if n0.ndim == 0 else n0


def n_of_t(H: PTHamiltonian, n0, t: float) -> np.ndarray:
    """``N(t) = exp(-i H^dagger t) N(0) exp(i H t)`` (Hermitian)."""
    f = evolution_matrix(H, -t)
    n = f.conj().T @ _n0_matrix(n0) @ f
    return (n + n.conj().T) / 2


def _sqrt_psd(m: np.ndarray, tol: float = REALITY_TOL):
    """Hermitian square root of ``m`` with its eigen-decomposition."""
    w, v = np.linalg.eigh(m)
    if np.min(w) < -tol:
        raise RealityViolation(f"N(t) - 1 has eigenvalue {np.min(w):.3e} < 0")
    z = np.sqrt(np.clip(w, 0.0, None))
    return (v * z) @ v.conj().T, z, v


def zeta_of_t(H: PTHamiltonian, n0, t: float) -> np.ndarray:
    """``zeta(t) = +sqrt(N(t) - 1)``, the positive semidefinite root."""
    return _sqrt_psd(n_of_t(H, n0, t) - I2)[0]


def dilation_state(H: PTHamiltonian, n0: float, t: float, stage: str = "one") -> DilationState:
    n = n_of_t(H, n0, t)
    z = _sqrt_psd(n - I2)[0]
    sign = "plus" if H.alpha >= 0 else "minus"
    return DilationState(float(n0), n, z, stage, sign)


def _sylvester_derivative(z, v, dn):
    """Solve ``zeta X + X zeta = dN`` in the eigenbasis of zeta."""
    dn_e = v.conj().T @ dn @ v
    den = z[:, None] + z[None, :]
    x = np.divide(dn_e, den, out=np.zeros_like(dn_e), where=den > 1e-14)
    return v @ x @ v.conj().T


def dzeta_dt(H: PTHamiltonian, n0, t: float, method: str = "sylvester", h: float | None = None) -> np.ndarray:
    """Time derivative of zeta(t).

    ``method="sylvester"`` is exact: differentiating ``zeta^2 = N - 1`` gives
    ``zeta X + X zeta = dN/dt`` with ``dN/dt = -i H^dagger N + i N H``.
    ``method="central"`` uses a central difference with step ``h`` (default
    ``1e-6`` of the half period).
    """
    if method == "central":
        h = 1e-6 * H.half_period if h is None else h
        return (zeta_of_t(H, n0, t + h) - zeta_of_t(H, n0, t - h)) / (2 * h)
    if method != "sylvester":
        raise DomainError("method must be 'sylvester' or 'central'")
    hq = H.matrix
    n = n_of_t(H, n0, t)
    dn = -1j * hq.conj().T @ n + 1j * n @ hq
    _, z, v = _sqrt_psd(n - I2)
    return _sylvester_derivative(z, v, dn)


# --------------------------------------------------------------------------
# decisiveness


def decisiveness(psi_pt, zeta) -> float:
    """``<psi|psi> / (<psi|psi> + <psi|zeta^2|psi>)`` for an evolved, unnormalized ket."""
    psi = _amp(psi_pt)
    z = np.asarray(zeta, dtype=complex)
    a = np.vdot(psi, psi).real
    b = np.vdot(z @ psi, z @ psi).real
    return float(a / (a + b))


def d1(m: float, sigma: float) -> float:
    """First-stage decisiveness for the probe at angle ``m`` (minimal N(0), critical alpha)."""
    c = np.cos(sigma)
    if abs(c) < 1e-15:
        return 1.0
    base = 0.5 * (1 - np.cos(m) * c)
    if c > 0:
        return float(base / np.cos(sigma / 2) ** 2)
    return float(base / np.sin(sigma / 2) ** 2)


def second_stage_norm(alpha, rho):
    """``3 + 4 sin a sin rho - cos 2a``, evaluated as ``2 ((sin a + sin rho)^2 + cos^2 rho)``.

    The two forms are equal; the second keeps full relative precision where the
    first cancels (``sin a sin rho`` close to -1).
    """
    return 2 * ((np.sin(alpha) + np.sin(rho)) ** 2 + np.cos(rho) ** 2)


def d2_plus(alpha: float, rho: float) -> float:
    """``(3 + 4 sin a sin rho - cos 2a) / (2 (1 + sin a)^2)``, the branch used for ``alpha >= 0``."""
    check_alpha(alpha)
    return float(second_stage_norm(alpha, rho) / (2 * (1 + np.sin(alpha)) ** 2))


def d2_minus(alpha: float, rho: float) -> float:
    """``(3 + 4 sin a sin rho - cos 2a) / (2 (1 - sin a)^2)``, the branch used for ``alpha < 0``."""
    check_alpha(alpha)
    return float(second_stage_norm(alpha, rho) / (2 * (1 - np.sin(alpha)) ** 2))


def d2(alpha: float, rho: float) -> float:
    """Second-stage decisiveness at ``omega tau = pi/2`` with the minimal N(0)."""
    return d2_plus(alpha, rho) if alpha >= 0 else d2_minus(alpha, rho)


def d2_series(alpha: float, rho: float) -> float:
    """Leading terms of :func:`d2` near ``alpha = +-pi/2`` (error of fifth order)."""
    sr = np.sin(rho)
    if alpha >= 0:
        e = np.pi / 2 - alpha
        return float(0.5 * (1 + sr) + e**4 * (1 - sr) / 32)
    e = np.pi / 2 + alpha
    return float(0.5 * (1 - sr) + e**4 * (1 + sr) / 32)


def d2_sweep(alpha, rho):
    """Vectorized :func:`d2` for grids (no guard, caller validates alpha)."""
    alpha = np.asarray(alpha, dtype=float)
    rho = np.asarray(rho, dtype=float)
    s = np.sin(alpha)
    num = second_stage_norm(alpha, rho)
    den = 2 * (1 + np.abs(s)) ** 2
    return num / den


# --------------------------------------------------------------------------
# dilated Hamiltonian and propagators


def _sigma_upsilon(hq, n, zeta, dz):
    ninv = np.linalg.inv(n)
    sig = (hq + 1j * dz @ zeta + zeta @ hq @ zeta) @ ninv
    ups = 1j * (hq @ zeta - zeta @ hq - 1j * dz) @ ninv
    return sig, ups


def dilated_hamiltonian(
    H: PTHamiltonian,
    n0,
    t: float,
    derivative: str = "sylvester",
    ancilla_sign: int = 1,
) -> DilatedHamiltonian:
    """Sigma(t), Upsilon(t) and the Hermitian ``kron(1, Sigma) + kron(sigma_y, Upsilon)``.

    ``ancilla_sign = -1`` uses ``-zeta`` in place of ``zeta``; the result is the
    ``+1`` Hamiltonian conjugated by ``Z`` on the ancilla.
    """
    if ancilla_sign not in (1, -1):
        raise DomainError("ancilla_sign must be +1 or -1")
    hq = H.matrix
    n = n_of_t(H, n0, t)
    zeta = _sqrt_psd(n - I2)[0] * ancilla_sign
    dz = dzeta_dt(H, n0, t, method=derivative) * ancilla_sign
    sig, ups = _sigma_upsilon(hq, n, zeta, dz)
    total = np.kron(I2, sig) + np.kron(SIGMA_Y, ups)
    return DilatedHamiltonian(sig, ups, total)


def _total_batch(H: PTHamiltonian, n0, ts: np.ndarray, ancilla_sign: int) -> np.ndarray:
    """H_total at many times at once, shape ``(len(ts), 4, 4)``."""
    hq = H.matrix
    h0 = hq - H.trace_phase * I2
    wt = H.omega * ts
    # F = exp(+i H t) for every t; the trace phase cancels inside N(t)
    f = np.cos(wt)[:, None, None] * I2 + 1j * (np.sin(wt) / H.omega)[:, None, None] * h0
    fh = f.conj().transpose(0, 2, 1)
    n = fh @ _n0_matrix(n0) @ f
    n = (n + n.conj().transpose(0, 2, 1)) / 2
    dn = -1j * hq.conj().T @ n + 1j * n @ hq
    w, v = np.linalg.eigh(n - I2)
    if np.min(w) < -REALITY_TOL:
        raise RealityViolation(f"N(t) - 1 has eigenvalue {np.min(w):.3e} < 0")
    z = np.sqrt(np.clip(w, 0.0, None))
    vh = v.conj().transpose(0, 2, 1)
    zeta = v @ (z[:, :, None] * vh)
    den = z[:, :, None] + z[:, None, :]
    dn_e = vh @ dn @ v
    x = np.divide(dn_e, den, out=np.zeros_like(dn_e), where=den > 1e-14)
    dz = v @ x @ vh
    zeta = zeta * ancilla_sign
    dz = dz * ancilla_sign
    ninv = np.linalg.inv(n)
    sig = (hq + 1j * dz @ zeta + zeta @ hq @ zeta) @ ninv
    ups = 1j * (hq @ zeta - zeta @ hq - 1j * dz) @ ninv
    tot = np.zeros((len(ts), 4, 4), dtype=complex)
    tot[:, :2, :2] = sig
    tot[:, 2:, 2:] = sig
    tot[:, :2, 2:] = -1j * ups
    tot[:, 2:, :2] = 1j * ups
    return tot


def _rk4(H: PTHamiltonian, n0, T: float, steps: int, ancilla_sign: int) -> np.ndarray:
    ts = np.linspace(0.0, T, 2 * steps + 1)
    gen = -1j * _total_batch(H, n0, ts, ancilla_sign)
    dt = T / steps
    u = np.eye(4, dtype=complex)
    for k in range(steps):
        a0, am, a1 = gen[2 * k], gen[2 * k + 1], gen[2 * k + 2]
        k1 = a0 @ u
        k2 = am @ (u + 0.5 * dt * k1)
        k3 = am @ (u + 0.5 * dt * k2)
        k4 = a1 @ (u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def _unitarity_error(u) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def dilated_propagator(
    H: PTHamiltonian,
    n0,
    T: float | None = None,
    steps: int = 20000,
    ancilla_sign: int = 1,
    tol: float = 1e-8,
) -> np.ndarray:
    """Integrate ``i dU/dt = H_total(t) U`` from 0 to ``T`` with fixed-step RK4.

    ``T`` defaults to the half period ``pi / (2 omega)``. If the unitarity
    defect exceeds ``tol`` the step is halved once before giving up with
    :class:`UnitarityDrift`.
    """
    if ancilla_sign not in (1, -1):
        raise DomainError("ancilla_sign must be +1 or -1")
    T = H.half_period if T is None else float(T)
    if T < 0:
        raise DomainError("T must be non-negative")
    if T == 0:
        return np.eye(4, dtype=complex)
    u = _rk4(H, n0, T, steps, ancilla_sign)
    if _unitarity_error(u) >= tol:
        u = _rk4(H, n0, T, 2 * steps, ancilla_sign)
        err = _unitarity_error(u)
        if err >= tol:
            raise UnitarityDrift(f"||U^dagger U - 1|| = {err:.3e} after step refinement")
    return u


def closed_form_propagator(H: PTHamiltonian, n0, T: float | None = None, ancilla_sign: int = 1) -> np.ndarray:
    """Exact dilated propagator ``[[A, -B], [B, A]]`` (see module docstring)."""
    if ancilla_sign not in (1, -1):
        raise DomainError("ancilla_sign must be +1 or -1")
    T = H.half_period if T is None else float(T)
    n0m = _n0_matrix(n0)
    e = evolution_matrix(H, T)
    z0 = _sqrt_psd(n0m - I2)[0] * ancilla_sign
    zt = _sqrt_psd(n_of_t(H, n0m, T) - I2)[0] * ancilla_sign
    a = (e + zt @ e @ z0) @ np.linalg.inv(n0m)
    b = zt @ e - a @ z0
    return np.block([[a, -b], [b, a]])


def ancilla_init(zeta0, psi0, ancilla_sign: int = 1) -> np.ndarray:
    """Initial composite state ``(|0> psi0 + |1> zeta0 psi0)`` normalized.

    Returned in ancilla-first order: ``[psi0, zeta0 psi0] / norm``.
    """
    psi = _amp(psi0)
    z = np.asarray(zeta0, dtype=complex)
    z = z * I2 if z.ndim == 0 else z
    vec = np.concatenate([psi, ancilla_sign * (z @ psi)])
    return vec / np.linalg.norm(vec)


def ancilla_prep_gate(n0: float, ancilla_sign: int = 1) -> np.ndarray:
    """Real rotation sending |0> to ``(|0> + sign sqrt(n0 - 1)|1>) / sqrt(n0)``."""
    if n0 < 1:
        raise DomainError("N(0) must be at least 1")
    c = 1 / np.sqrt(n0)
    s = ancilla_sign * np.sqrt(n0 - 1) / np.sqrt(n0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def evolved_decisiveness(H: PTHamiltonian, n0: float, T: float, psi0) -> float:
    """Decisiveness after evolving ``psi0`` for time ``T`` with scalar N(0).

    Uses ``<psi(T)|zeta^2|psi(T)> + <psi(T)|psi(T)> = N(0)`` for a normalized
    initial state.
    """
    psi = BlochState(_amp(psi0)).normalized()
    e = evolution_matrix(H, T) @ psi.amplitudes
    return float(np.vdot(e, e).real / n0)
