"""Mapping of three qubit states: initial adjustment, first-stage
orthogonalization, the Step-2 unitary, and closed forms for the final
relative angles, state-set transformation and quantum Fisher information.

The second-stage formulas take states in the standard form
``chi_1 = (1, i)/sqrt2``, ``chi_2 = (1, -i)/sqrt2`` and
``chi_3 = (cos(rho/2), i sin(rho/2))`` with ``rho`` in ``[-pi/2, pi/2]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dilation import d1, evolved_decisiveness, n0_min_stage1, second_stage_norm
from .errors import DegenerateInput, DomainError
from .ptcore import (
    SIGMA_X,
    BlochState,
    _amp,
    alpha_critical,
    check_alpha,
    evolution_matrix,
    hamiltonian_for_alpha,
    hermitian_cos2,
    omega_tau_perp,
    probe_state,
    reference_pair,
    wrap_angle,
)

S_GATE = np.diag([1, 1j])
_W_OUTER = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)


def chi_states(rho: float) -> tuple[BlochState, BlochState, BlochState]:
    """The standard triple ``chi_1, chi_2, chi_3(rho)`` entering the second stage."""
    s2 = 1 / np.sqrt(2)
    return (
        BlochState(np.array([s2, 1j * s2])),
        BlochState(np.array([s2, -1j * s2])),
        BlochState(np.array([np.cos(rho / 2), 1j * np.sin(rho / 2)])),
    )


def x_rotation(angle: float) -> np.ndarray:
    """``[[cos x, -i sin x], [-i sin x, cos x]]``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -1j * s], [-1j * s, c]])


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class ThreeStateConfig:
    sigma: float
    mu: float
    nu: float

    def states(self) -> tuple[BlochState, BlochState, BlochState]:
        p1, p2 = reference_pair(self.sigma)
        return p1, p2, BlochState.from_angles(self.mu, self.nu)


@dataclass(frozen=True, eq=False)
class AdjustmentResult:
    rotation: np.ndarray
    config: ThreeStateConfig
    lambda_phase: float
    amp_beta: complex
    amp_gamma: complex


@dataclass(frozen=True, eq=False)
class Stage1Result:
    delta: float
    evolved_states: tuple[BlochState, BlochState, BlochState]
    tau: float
    alpha: float
    sigma: float
    omega_tau: float


@dataclass(frozen=True, eq=False)
class Step2Result:
    gate_w: np.ndarray
    chi: float
    xi: float
    rho: float
    amp_kappa: complex
    amp_zeta: complex
    phase_branch: bool = False


@dataclass(frozen=True)
class AngleReport:
    cos2_k12: float
    cos2_k13: float
    cos2_k23: float


# --------------------------------------------------------------------------
# initial adjustment


def adjust_initial(s1, s2, s3) -> AdjustmentResult:
    """Unitary R placing ``s1, s2`` on the phi = -pi/2 meridian symmetric about theta = pi/2.

    ``R = X((pi - 2 sigma)/4) . diag(1, d) . U1`` where ``U1`` sends ``s1`` to
    |0> and the phase ``d = -i e^{-i lambda - i phi_2}`` aligns ``s2``.
    """
    a = BlochState(_amp(s1)).normalized().amplitudes
    b = BlochState(_amp(s2)).normalized().amplitudes
    c = BlochState(_amp(s3)).normalized().amplitudes
    ov = abs(np.vdot(a, b))
    if ov > 1 - 1e-9:
        raise DegenerateInput("the first two states coincide up to phase")
    if abs(np.vdot(a, c)) > 1 - 1e-9 or abs(np.vdot(b, c)) > 1 - 1e-9:
        raise DegenerateInput("the third state coincides with a reference state")
    sigma = float(np.arccos(min(ov, 1.0)))
    u1 = np.array([[a[0].conjugate(), a[1].conjugate()], [-a[1], a[0]]])
    p, q = u1 @ b
    arg_p = np.angle(p) if abs(p) > 1e-14 else 0.0
    d = np.exp(1j * (arg_p - np.angle(q) - np.pi / 2))
    rot = x_rotation((np.pi - 2 * sigma) / 4) @ np.diag([1, d]) @ u1
    phi2 = BlochState(b).phi
    lam = wrap_angle(-np.angle(d / -1j) - phi2)
    beta, gamma = rot @ c
    mu = float(2 * np.arccos(min(abs(beta), 1.0)))
    nu = wrap_angle(np.angle(gamma) - np.angle(beta)) if abs(beta) > 1e-14 and abs(gamma) > 1e-14 else 0.0
    return AdjustmentResult(rot, ThreeStateConfig(sigma, mu, nu), lam, complex(beta), complex(gamma))


def lambda_closed_form(theta1: float, phi1: float, theta2: float, phi2: float) -> float:
    """Alignment phase of the adjustment as a difference of two arctangents.

    Each arctangent is evaluated with ``arctan2``; the value agrees with
    :func:`adjust_initial` modulo ``2 pi`` up to the branch of each term.
    """
    c1, s1 = np.cos(theta1 / 2), np.sin(theta1 / 2)
    c2, s2 = np.cos(theta2 / 2), np.sin(theta2 / 2)
    dp = phi2 - phi1
    t1 = np.arctan2(s1 * c2 * np.sin(dp), c1 * s2 - s1 * c2 * np.cos(dp))
    t2 = np.arctan2(s1 * s2 * np.sin(dp), c1 * c2 + s1 * s2 * np.cos(dp))
    return float(t1 - t2)


def beta_gamma_closed_form(theta1, phi1, phi2, theta3, phi3, sigma, lam) -> tuple[complex, complex]:
    """Amplitudes of the adjusted third state written out term by term."""
    c1, s1 = np.cos(theta1 / 2), np.sin(theta1 / 2)
    c3, s3 = np.cos(theta3 / 2), np.sin(theta3 / 2)
    x = (np.pi - 2 * sigma) / 4
    ph = np.exp(1j * (phi1 - phi2 - lam))
    e31 = np.exp(1j * (phi3 - phi1))
    beta = c1 * c3 * np.cos(x) + s1 * c3 * np.sin(x) * ph + s1 * s3 * np.cos(x) * e31 - c1 * s3 * np.sin(x) * e31 * ph
    gamma = (
        1j * s1 * c3 * np.cos(x) * ph
        - 1j * c1 * c3 * np.sin(x)
        - 1j * s1 * s3 * np.sin(x) * e31
        - 1j * c1 * s3 * np.cos(x) * e31 * ph
    )
    return complex(beta), complex(gamma)


# --------------------------------------------------------------------------
# first stage


def cos_half_delta_closed(alpha: float, sigma: float, omega_tau: float) -> float:
    """``cos(delta/2)`` of the evolved first reference state, written in closed form."""
    x = (np.pi - 2 * sigma) / 4
    sa, ca = np.sin(alpha), np.cos(alpha)
    v = (
        1
        - np.cos(2 * omega_tau) * sa**2
        + 2 * np.sin(omega_tau) * sa * (np.cos(omega_tau) * ca * np.sin(sigma) - np.sin(omega_tau) * np.cos(sigma))
    )
    num = np.cos(omega_tau - alpha) * np.cos(x) - np.sin(omega_tau) * np.sin(x)
    return float(num / np.sqrt(v))


def stage1_map(sigma: float, alpha: float, probe) -> Stage1Result:
    """Evolve the reference pair and a probe until the pair is orthogonal."""
    H = hamiltonian_for_alpha(alpha)
    wt = omega_tau_perp(alpha, sigma)
    tau = wt / H.omega
    e = evolution_matrix(H, tau)
    p1, p2 = reference_pair(sigma)
    evolved = tuple(BlochState(e @ _amp(s)) for s in (p1, p2, probe))
    v = evolved[0].normalized().amplitudes
    # strip the global phase so the first amplitude is real and non-negative
    ph = np.exp(-1j * np.angle(v[0])) if abs(v[0]) > 1e-14 else np.exp(-1j * (np.angle(v[1]) + np.pi / 2))
    v = v * ph
    delta = float(2 * np.arctan2((1j * v[1]).real, v[0].real))
    return Stage1Result(delta, evolved, float(tau), float(alpha), float(sigma), float(wt))


def cos2_probe(m: float, sigma: float) -> float:
    """Postselected overlap of the probe with the first reference state at the
    critical alpha and minimal N(0): ``(1 - cos(m - sigma)) / (2 (1 - cos m cos sigma))``."""
    den = 2 * (1 - np.cos(m) * np.cos(sigma))
    if den < 1e-15:
        raise DegenerateInput("probe coincides with a reference state at cos(sigma) = +-1")
    return float((1 - np.cos(m - sigma)) / den)


def stage1_theory(sigma: float, alpha: float, n0: float, m: float) -> tuple[float, float]:
    """``(cos^2, D)`` for the probe at angle ``m`` after the first stage.

    The postselected overlap is taken against the evolved first reference
    state (the quantity reported by the stage-one readout). The closed forms
    apply only at the critical alpha with the minimal N(0); every other
    setting goes through explicit evolution.
    """
    if abs(alpha - alpha_critical(sigma)) < 1e-12 and abs(n0 - n0_min_stage1(sigma)) < 1e-12:
        return cos2_probe(m, sigma), d1(m, sigma)
    res = stage1_map(sigma, alpha, probe_state(m))
    H = hamiltonian_for_alpha(alpha)
    return (
        hermitian_cos2(res.evolved_states[0], res.evolved_states[2]),
        evolved_decisiveness(H, n0, res.tau, probe_state(m)),
    )


# --------------------------------------------------------------------------
# step 2


def delta_rotation(delta: float) -> np.ndarray:
    c, s = np.cos(delta / 2), np.sin(delta / 2)
    return np.array([[c, 1j * s], [1j * s, c]])


def step2_matrix(delta: float, chi: float) -> np.ndarray:
    """``W = (1/sqrt2)[[1, i], [i, 1]] . diag(1, i e^{-i chi}) . [[c, i s], [i s, c]]``."""
    return _W_OUTER @ np.diag([1, 1j * np.exp(-1j * chi)]) @ delta_rotation(delta)


def kappa_zeta_closed(mu: float, nu: float, delta: float, alpha: float, omega_tau: float) -> tuple[complex, complex]:
    """Amplitudes of the third state after the first stage and the delta rotation.

    They equal ``cos(alpha)`` times the numerical amplitudes (trace phase removed).
    """
    cm, sm = np.cos(mu / 2), np.sin(mu / 2)
    cd, sd = np.cos(delta / 2), np.sin(delta / 2)
    w = omega_tau
    en = np.exp(1j * nu)
    kappa = cm * (np.cos(w - alpha) * cd + np.sin(w) * sd) + 1j * en * sm * (np.cos(w + alpha) * sd - np.sin(w) * cd)
    zeta = 1j * cm * (np.cos(w - alpha) * sd - np.sin(w) * cd) + en * sm * (np.cos(w + alpha) * cd + np.sin(w) * sd)
    return complex(kappa), complex(zeta)


def step2_gate(stage1: Stage1Result, third=None) -> Step2Result:
    """Unitary W sending the evolved pair to ``chi_1, chi_2`` and the third state to ``chi_3(rho)``.

    ``third`` is the evolved third state (defaults to the probe evolved by
    ``stage1``). The branch of ``chi`` is chosen so that ``rho`` lies in
    ``[-pi/2, pi/2]``, the domain of the second-stage formulas.
    """
    third = stage1.evolved_states[2] if third is None else BlochState(_amp(third))
    v = delta_rotation(stage1.delta) @ third.normalized().amplitudes
    kappa, zeta = complex(v[0]), complex(v[1])
    flagged = abs(kappa.real) < 1e-12 or abs(zeta.real) < 1e-12
    if abs(kappa) < 1e-14 or abs(zeta) < 1e-14:
        chi = 0.0
    else:
        chi = wrap_angle(np.arctan2(zeta.imag, zeta.real) - np.arctan2(kappa.imag, kappa.real) + np.pi)
    xi = float(-2 * np.arctan2(abs(zeta), abs(kappa)))
    rho = xi + np.pi / 2
    if abs(kappa) < 1e-14:
        # third state already sits on chi_2's antipode line; choose rho = -pi/2
        rho, xi = -np.pi / 2, -np.pi
    return Step2Result(step2_matrix(stage1.delta, chi), float(chi), xi, float(rho), kappa, zeta, flagged)


# --------------------------------------------------------------------------
# second-stage angles


def cos2_pt_general(alpha: float, rho: float, omega_tau: float) -> AngleReport:
    """Postselected squared cosines after a second-stage evolution of duration ``omega_tau``."""
    check_alpha(alpha)
    sa, ta = np.sin(alpha), np.tan(alpha)
    w = omega_tau
    c12 = 2 * ta**2 * np.sin(2 * w) ** 2 / (1 + 1 / np.cos(alpha) ** 2 - ta**2 * np.cos(4 * w))
    vals = []
    for pm in (1, -1):
        num = (
            np.sqrt(2) * np.sin((np.pi + pm * 2 * rho) / 4) * ((1 + pm * 2 * sa) * np.sin(w) ** 2 + np.cos(w + alpha) ** 2)
            + np.sin(2 * alpha) * np.cos(rho / 2) * np.sin(2 * w)
        ) ** 2
        den = (
            2
            * ((1 + pm * sa) ** 2 * np.sin(w) ** 2 + np.cos(alpha) ** 2 * np.cos(w) ** 2)
            * (
                np.sin(w) ** 2 * (1 + 2 * sa * np.sin(rho))
                - np.sin(2 * alpha) * np.sin(rho / 2) ** 2 * np.sin(2 * w)
                + np.cos(w - alpha) ** 2
            )
        )
        vals.append(num / den)
    return AngleReport(float(c12), float(vals[0]), float(vals[1]))


def cos2_pt_numeric(alpha: float, rho: float, omega_tau: float) -> AngleReport:
    """Brute-force counterpart of :func:`cos2_pt_general` via explicit evolution."""
    H = hamiltonian_for_alpha(alpha)
    e = evolution_matrix(H, omega_tau / H.omega)
    x1, x2, x3 = (e @ s.amplitudes for s in chi_states(rho))
    return AngleReport(hermitian_cos2(x1, x2), hermitian_cos2(x1, x3), hermitian_cos2(x2, x3))


def cos2_pt_at_half_period(alpha: float, rho: float) -> AngleReport:
    """Closed form at ``omega tau = pi/2``: ``(1 +- sin a)^2 (1 +- sin rho) / (3 + 4 sin a sin rho - cos 2a)``."""
    check_alpha(alpha)
    sa, sr = np.sin(alpha), np.sin(rho)
    den = second_stage_norm(alpha, rho)
    return AngleReport(0.0, float((1 + sa) ** 2 * (1 + sr) / den), float((1 - sa) ** 2 * (1 - sr) / den))


def cos2_cpt(alpha: float, rho: float) -> AngleReport:
    """Squared cosines under the CPT product: ``(1 +- sin a)(1 +- sin rho) / (2 (1 + sin a sin rho))``."""
    check_alpha(alpha)
    sa, sr = np.sin(alpha), np.sin(rho)
    den = 2 * (1 + sa * sr)
    return AngleReport(0.0, float((1 + sa) * (1 + sr) / den), float((1 - sa) * (1 - sr) / den))


def cos2_pt_series(alpha: float, rho: float) -> AngleReport:
    """Quartic expansion of :func:`cos2_pt_at_half_period` about ``alpha = +-pi/2``."""
    sr = np.sin(rho)
    if alpha >= 0:
        small = (np.pi / 2 - alpha) ** 4 * (1 - sr) / (16 * (1 + sr))
        return AngleReport(0.0, float(1 - small), float(small))
    small = (np.pi / 2 + alpha) ** 4 * (1 + sr) / (16 * (1 - sr))
    return AngleReport(0.0, float(small), float(1 - small))


def cos2_cpt_series(alpha: float, rho: float) -> AngleReport:
    """Quadratic expansion of :func:`cos2_cpt` about ``alpha = +-pi/2``."""
    sr = np.sin(rho)
    if alpha >= 0:
        small = (np.pi / 2 - alpha) ** 2 * (1 - sr) / (4 * (1 + sr))
        return AngleReport(0.0, float(1 - small), float(small))
    small = (np.pi / 2 + alpha) ** 2 * (1 + sr) / (4 * (1 - sr))
    return AngleReport(0.0, float(small), float(1 - small))


def cpt_projectors(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Projectors ``P_{1,2} = (1/2)[[1, -+i], [+-i, 1]]``; independent of alpha."""
    check_alpha(alpha)
    p1 = 0.5 * np.array([[1, -1j], [1j, 1]])
    return p1, p1.conj()


# --------------------------------------------------------------------------
# transformations


def transformer_alpha(rho: float, rho_prime: float, mode: Literal["hermitian", "cpt"] = "hermitian") -> float:
    """Alpha mapping a set characterized by ``rho`` onto one characterized by ``rho_prime``.

    In Hermitian mode both closed-form candidates are considered; among the
    feasible ones (``|sin a| < 1``) the one of smaller magnitude is returned.
    """
    for r in (rho, rho_prime):
        if not -np.pi / 2 < r < np.pi / 2:
            raise DomainError("rho and rho_prime must lie in (-pi/2, pi/2)")
    if mode == "cpt":
        sr, sp = np.sin(rho), np.sin(rho_prime)
        x = (sp - sr) / (1 - sp * sr)
        if abs(x) >= 1:
            raise DomainError("no feasible alpha")
        return float(np.arcsin(x))
    if mode != "hermitian":
        raise DomainError("mode must be 'hermitian' or 'cpt'")
    a = np.cos((rho + rho_prime) / 2)
    b = np.sin((rho_prime - rho) / 2)
    cands = []
    if abs(b) > 1e-15:
        cands.append(a / b)
    if abs(a) > 1e-15:
        cands.append(b / a)
    feasible = [x for x in cands if abs(x) < 1 - 1e-12]
    if not feasible:
        raise DomainError("both branches exceed 1 in magnitude")
    return float(np.arcsin(min(feasible, key=abs)))


def mirror_alpha(rho: float) -> float:
    """Alpha making the postselected set mirror-symmetric: ``sin a = -tan(rho/2)``."""
    if not -np.pi / 2 < rho < np.pi / 2:
        raise DomainError("rho must lie in (-pi/2, pi/2)")
    return float(np.arcsin(-np.tan(rho / 2)))


def stabilizer_map(alpha: float, rho: float) -> tuple[BlochState, BlochState, BlochState]:
    """Evolve ``chi_1, chi_2, chi_3(rho)`` for a half period and apply ``S = diag(1, i)``.

    A half-period evolution acts as ``-i X`` at ``alpha = 0``; the bit flip is
    undone before the phase gate so the Hermitian limit is the identity frame.
    With ``alpha = mirror_alpha(rho)`` the outputs are ``|->, |+>, |0>`` up to
    phase, i.e. the set ``{|+>, |->, |0>}``.
    """
    H = hamiltonian_for_alpha(alpha)
    e = S_GATE @ SIGMA_X @ evolution_matrix(H, H.half_period)
    return tuple(BlochState(e @ s.amplitudes).normalized() for s in chi_states(rho))


# --------------------------------------------------------------------------
# quantum Fisher information


def qfi_pt(alpha: float, rho: float) -> float:
    """``4 cos^4 a / (3 + 4 sin a sin rho - cos 2a)^2``."""
    check_alpha(alpha)
    den = second_stage_norm(alpha, rho)
    return float(4 * np.cos(alpha) ** 4 / den**2)


def stage2_density(alpha: float, rho: float) -> np.ndarray:
    """Trace-normalized density matrix of ``chi_3(rho)`` after a half-period evolution."""
    H = hamiltonian_for_alpha(alpha)
    v = evolution_matrix(H, H.half_period) @ chi_states(rho)[2].amplitudes
    m = np.outer(v, v.conj())
    return m / np.trace(m).real


def qfi_numeric(alpha: float, rho: float, h: float = 1e-5) -> float:
    """``2 Tr[(d rho_state / d rho)^2]`` with a central difference of step ``h``."""
    d = (stage2_density(alpha, rho + h) - stage2_density(alpha, rho - h)) / (2 * h)
    return float(2 * np.trace(d @ d).real)
