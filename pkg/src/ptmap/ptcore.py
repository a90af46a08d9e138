"""PT-symmetric qubit Hamiltonians, the C operator and CPT products, and
non-unitary time evolution.

Conventions
-----------
* States are complex 2-vectors ``(a, b)`` in the computational basis.
* The Hamiltonian is ``H = [[r e^{i beta}, s], [s, r e^{-i beta}]]`` with
  ``sin(alpha) = (r/s) sin(beta)`` and ``omega = sqrt(s^2 - r^2 sin^2 beta)``.
  The working family used throughout the package is ``r = s`` and
  ``beta = alpha``, for which ``omega = s cos(alpha)``; see
  :func:`hamiltonian_for_alpha`.
* Time enters the closed forms only through ``omega * t``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BrokenSymmetry, DomainError, ExceptionalPoint, NoSolution

EPS_EP = 1e-9
"""Default exceptional-point guard: reject ``|sin(alpha)| >= 1 - EPS_EP``."""

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PARITY = SIGMA_X


def check_alpha(alpha: float, eps: float = EPS_EP) -> None:
    """Raise :class:`ExceptionalPoint` unless ``|sin(alpha)| < 1 - eps``."""
    if not np.isfinite(alpha) or abs(np.sin(alpha)) >= 1.0 - eps or abs(alpha) >= np.pi / 2:
        raise ExceptionalPoint(f"alpha={alpha!r} is at or beyond the exceptional point")


def allclose(a, b, eps: float = 1e-10) -> bool:
    """Tolerance-based matrix/vector equality used across the package."""
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0) <= eps)


def is_unitary(u, eps: float = 1e-10) -> bool:
    u = np.asarray(u, dtype=complex)
    return allclose(u.conj().T @ u, np.eye(u.shape[0]), eps)


def wrap_angle(x: float) -> float:
    """Map an angle to the half-open interval [-pi, pi)."""
    return float((x + np.pi) % (2 * np.pi) - np.pi)


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class BlochState:
    """A qubit ket stored by its (possibly unnormalized) amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(2)
        if not np.all(np.isfinite(amp)):
            raise DomainError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "BlochState":
        """Build ``(cos(theta/2), e^{i phi} sin(theta/2))``."""
        return cls(np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "BlochState":
        n = self.norm
        if n == 0:
            raise DomainError("cannot normalize the zero vector")
        return BlochState(self.amplitudes / n)

    @property
    def theta(self) -> float:
        """Meridian angle in [0, pi] of the normalized state."""
        a = np.abs(self.normalized().amplitudes)
        return float(2 * np.arctan2(a[1], a[0]))

    @property
    def phi(self) -> float:
        """Relative phase of the second amplitude, wrapped to [-pi, pi)."""
        a = self.amplitudes
        if abs(a[1]) < 1e-15 or abs(a[0]) < 1e-15:
            return 0.0
        return wrap_angle(np.angle(a[1]) - np.angle(a[0]))


def probe_state(m: float) -> BlochState:
    """The probe ``(cos((pi+2m)/4), -i sin((pi+2m)/4))`` on the phi = -pi/2 meridian."""
    x = (np.pi + 2 * m) / 4
    return BlochState(np.array([np.cos(x), -1j * np.sin(x)]))


def reference_pair(sigma: float) -> tuple[BlochState, BlochState]:
    """Reference pair ``psi_1 = probe(-sigma)``, ``psi_2 = probe(+sigma)``.

    The pair overlaps with ``|<psi_1|psi_2>| = |cos(sigma)|``.
    """
    return probe_state(-sigma), probe_state(sigma)


def hermitian_cos2(a, b) -> float:
    """Squared Hermitian fidelity between two (unnormalized) kets."""
    a = _amp(a)
    b = _amp(b)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def _amp(x) -> np.ndarray:
    return x.amplitudes if isinstance(x, BlochState) else np.asarray(x, dtype=complex)


# --------------------------------------------------------------------------
# Hamiltonian


@dataclass(frozen=True)
class PTHamiltonian:
    """PT-symmetric 2x2 Hamiltonian in the unbroken phase."""

    r: float
    s: float
    beta: float
    alpha: float = field(init=False)
    omega: float = field(init=False)

    def __post_init__(self):
        sin_a = self.r / self.s * np.sin(self.beta)
        object.__setattr__(self, "alpha", float(np.arcsin(sin_a)))
        object.__setattr__(self, "omega", float(np.sqrt(self.s**2 - (self.r * np.sin(self.beta)) ** 2)))

    @property
    def matrix(self) -> np.ndarray:
        r, s, b = self.r, self.s, self.beta
        return np.array([[r * np.exp(1j * b), s], [s, r * np.exp(-1j * b)]])

    @property
    def trace_phase(self) -> float:
        """Half the trace, ``r cos(beta)``."""
        return float(self.r * np.cos(self.beta))

    @property
    def half_period(self) -> float:
        """The time ``pi / (2 omega)``."""
        return float(np.pi / (2 * self.omega))


def make_pt_hamiltonian(r: float, s: float, beta: float, eps_ep: float = EPS_EP) -> PTHamiltonian:
    """Build ``[[r e^{i beta}, s], [s, r e^{-i beta}]]`` in the unbroken phase."""
    if not s > 0:
        raise DomainError("s must be positive")
    if abs(r / s * np.sin(beta)) >= 1.0 - eps_ep:
        raise BrokenSymmetry(f"|(r/s) sin(beta)| = {abs(r / s * np.sin(beta)):.3g} is not below 1")
    return PTHamiltonian(float(r), float(s), float(beta))


def hamiltonian_for_alpha(alpha: float, s: float = 1.0, eps_ep: float = EPS_EP) -> PTHamiltonian:
    """The working Hamiltonian ``[[s e^{i alpha}, s], [s, s e^{-i alpha}]]``.

    It has ``omega = s cos(alpha)`` and reproduces the tabulated propagators
    without any extra phase alignment.
    """
    check_alpha(alpha, eps_ep)
    return make_pt_hamiltonian(s, s, alpha, eps_ep)


def c_operator(alpha: float, eps_ep: float = EPS_EP) -> np.ndarray:
    """The C operator ``(1/cos a) [[i sin a, 1], [1, -i sin a]]``; squares to 1."""
    check_alpha(alpha, eps_ep)
    sa, ca = np.sin(alpha), np.cos(alpha)
    return np.array([[1j * sa, 1], [1, -1j * sa]]) / ca


def cpt_inner(alpha: float, bra_source, ket, eps_ep: float = EPS_EP) -> complex:
    """CPT scalar product ``(C P T |mu>)^T |nu>`` with T acting as conjugation."""
    c = c_operator(alpha, eps_ep)
    mu = _amp(bra_source)
    nu = _amp(ket)
    return complex((c @ PARITY @ mu.conj()) @ nu)


def cpt_cos2(alpha: float, mu, nu, eps_ep: float = EPS_EP) -> float:
    """Squared CPT fidelity ``|(mu,nu)|^2 / ((mu,mu)(nu,nu))``."""
    num = abs(cpt_inner(alpha, mu, nu, eps_ep)) ** 2
    den = cpt_inner(alpha, mu, mu, eps_ep).real * cpt_inner(alpha, nu, nu, eps_ep).real
    return float(num / den)


# --------------------------------------------------------------------------
# evolution


def evolution_matrix(H: PTHamiltonian, t: float) -> np.ndarray:
    """``exp(-i H t)`` in closed form.

    The traceless part ``H0 = H - r cos(beta)`` satisfies ``H0^2 = omega^2``,
    so its spectral decomposition collapses to
    ``cos(omega t) - i sin(omega t) H0 / omega``.
    """
    h0 = H.matrix - H.trace_phase * I2
    wt = H.omega * t
    e = np.cos(wt) * I2 - 1j * np.sin(wt) / H.omega * h0
    return np.exp(-1j * H.trace_phase * t) * e


def pt_evolve(H: PTHamiltonian, t: float, psi) -> BlochState:
    """Apply ``exp(-i H t)`` to ``psi``; the result is generally not normalized."""
    if t < 0:
        raise DomainError("t must be non-negative")
    return BlochState(evolution_matrix(H, t) @ _amp(psi))


def effective_metric(alpha: float, omega: float, t: float) -> np.ndarray:
    """``cos^2(alpha) exp(+i H^dagger t) exp(-i H t)`` for the working Hamiltonian.

    Only ``omega t`` matters. At ``omega t = pi/2`` the result is
    ``[[1 + sin^2 a, -2i sin a], [2i sin a, 1 + sin^2 a]]``.
    """
    check_alpha(alpha)
    H = hamiltonian_for_alpha(alpha, s=omega / np.cos(alpha))
    e = evolution_matrix(H, t)
    m = np.cos(alpha) ** 2 * (e.conj().T @ e)
    return (m + m.conj().T) / 2


def tau_perp_rhs(alpha: float, sigma: float) -> float:
    """Right-hand side of the orthogonality timing condition for ``sin^2(omega tau)``."""
    sa = np.sin(alpha)
    return float(np.cos(alpha) ** 2 * np.cos(sigma) / (2 * sa * (1 - sa * np.cos(sigma))))


def omega_tau_perp(alpha: float, sigma: float, snap: float = 1e-12) -> float:
    """Smallest positive ``omega tau`` making the evolved reference pair orthogonal.

    When the right-hand side is within ``snap`` of 1 the value is set to
    exactly ``pi/2``, because ``arcsin(sqrt(x))`` amplifies rounding near 1.
    """
    check_alpha(alpha)
    if np.sin(alpha) == 0:
        raise NoSolution("sin(alpha) = 0: the pair is never made orthogonal")
    x = tau_perp_rhs(alpha, sigma)
    if abs(x - 1) < snap:
        return float(np.pi / 2)
    if not 0 <= x <= 1:
        raise NoSolution(f"sin^2(omega tau) = {x:.6g} is outside [0, 1]")
    return float(np.arcsin(np.sqrt(x)))


def tau_perp(alpha: float, sigma: float, omega: float) -> float:
    """Time ``tau_perp`` after which the reference pair is Hermitian-orthogonal."""
    return omega_tau_perp(alpha, sigma) / omega


def alpha_critical(sigma: float) -> float:
    """Smallest alpha making the pair orthogonal: ``sin a = (1 - sin s) sec s``.

    ``sigma = pi/2`` returns 0, the common value of both one-sided limits.
    """
    if not 0 < sigma < np.pi:
        raise DomainError("sigma must lie in (0, pi)")
    c = np.cos(sigma)
    if abs(c) < 1e-12:
        return 0.0
    # cos s / (1 + sin s) equals (1 - sin s) / cos s without the cancellation near pi/2
    x = c / (1 + np.sin(sigma))
    if abs(x) > 1:
        raise DomainError(f"|(1 - sin sigma) sec sigma| = {abs(x):.6g} exceeds 1")
    return float(np.arcsin(x))


# --------------------------------------------------------------------------
# JSON matrix format


def matrix_to_json(m) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise DomainError("expected rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def dumps_matrix(m) -> str:
    return json.dumps(matrix_to_json(m))


def loads_matrix(text: str) -> np.ndarray:
    return matrix_from_json(json.loads(text))
