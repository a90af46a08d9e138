"""Oracle-call optimization for Grover search and the PT boost of the
two-dimensional Grover subspace and of a phase-estimation qubit.

``k`` (oracle calls) is treated as continuous, which matches the
large-database analysis; :func:`minimize_t` also reports the nearest integer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .dilation import d2, d2_plus, second_stage_norm
from .errors import DomainError, NoSolution
from .ptcore import BlochState, check_alpha
from .threestate import cos2_pt_at_half_period


@dataclass(frozen=True)
class GroverParams:
    db_size: int
    k: float
    solutions: int = 1

    def __post_init__(self):
        if self.db_size < 4 or self.db_size & (self.db_size - 1):
            raise DomainError("db_size must be a power of two >= 4")
        if self.solutions != 1:
            raise DomainError("only a single marked item is modeled")


@dataclass(frozen=True)
class Optimum:
    k: float
    k_over_sqrt_m: float
    k_int: int
    value: float


@dataclass(frozen=True)
class BoostResult:
    k_eff: float
    d: float
    p_init: float
    p_eff: float
    rho: float


def _angle(k: float, M: int) -> float:
    return 2 * k / np.sqrt(M)


def grover_state(k: float, M: int) -> BlochState:
    """``(cos(2k/sqrtM), sin(2k/sqrtM))`` in the ``{|s'>, |w>}`` basis."""
    x = _angle(k, M)
    return BlochState(np.array([np.cos(x), np.sin(x)], dtype=complex))


def success_probability(k: float, M: int) -> float:
    return float(np.sin(_angle(k, M)) ** 2)


def t_of_k(k: float, M: int) -> float:
    """Expected oracle calls with restarts, ``k csc^2(2k/sqrtM)``."""
    return float(k / np.sin(_angle(k, M)) ** 2)


def r_of_k(k_eff: float, M: int) -> float:
    """Success probability per call, ``sin^2(2k/sqrtM) / k``."""
    return float(np.sin(_angle(k_eff, M)) ** 2 / k_eff)


def _golden(f, M: int) -> float:
    """Golden-section search in ``u = k / sqrtM`` over ``(0, pi/4)``."""
    res = minimize_scalar(f, bracket=(0.05, 0.5, np.pi / 4), method="golden", options={"xtol": 1e-12})
    return float(res.x)


def minimize_t(M: int) -> Optimum:
    GroverParams(M, 1.0)
    sm = np.sqrt(M)
    u = _golden(lambda u: t_of_k(u * sm, M) / sm, M)
    return Optimum(u * sm, u, int(round(u * sm)), t_of_k(u * sm, M))


def maximize_r(M: int) -> Optimum:
    GroverParams(M, 1.0)
    sm = np.sqrt(M)
    u = _golden(lambda u: -r_of_k(u * sm, M) * sm, M)
    return Optimum(u * sm, u, int(round(u * sm)), r_of_k(u * sm, M))


def q_frame_probability(k: float, M: int) -> float:
    """Success probability in the frame after the rotation Q: ``sin^2(2k/sqrtM - pi/4)``."""
    return float(np.sin(_angle(k, M) - np.pi / 4) ** 2)


def pt_boost(k_init: float, alpha: float, M: int) -> BoostResult:
    """Boost the rotated Grover state through a second-stage evolution.

    The rotated state has success amplitude ``sin(y)`` with
    ``y = 2k/sqrtM - pi/4``. It is placed at the second-stage angle ``rho``
    with ``(1 + sin rho)/2 = sin^2(y)``; the postselected probability and the
    decisiveness then satisfy ``p_eff D = sin^2(y)`` exactly. ``k_eff`` is
    read back on the same side of ``y = 0`` as ``k_init``. For ``alpha < 0``
    the mirror image (``rho -> -rho`` with the ``kappa_23`` projection) is used.
    """
    check_alpha(alpha)
    y = _angle(k_init, M) - np.pi / 4
    if not -np.pi / 2 < y < np.pi / 2:
        raise DomainError("2 k_init / sqrt(M) - pi/4 must lie in (-pi/2, pi/2)")
    p_init = float(np.sin(y) ** 2)
    rho = float(np.arcsin(np.clip(2 * p_init - 1, -1.0, 1.0)))
    if alpha >= 0:
        p_eff = cos2_pt_at_half_period(alpha, rho).cos2_k13
        d = d2(alpha, rho)
    else:
        p_eff = cos2_pt_at_half_period(alpha, -rho).cos2_k23
        d = d2(alpha, -rho)
    y_eff = np.copysign(np.arcsin(np.sqrt(min(p_eff, 1.0))), y if y != 0 else 1.0)
    k_eff = (y_eff + np.pi / 4) * np.sqrt(M) / 2
    if k_eff <= 0:
        raise NoSolution("boosted amplitude corresponds to a non-positive number of calls")
    return BoostResult(float(k_eff), float(d), p_init, float(p_eff), rho)


def boosted_average_calls(k_init: float, alpha: float, M: int) -> float:
    """Average calls per success with the boost: ``k_init / (p_eff D)``."""
    b = pt_boost(k_init, alpha, M)
    return float(k_init / (b.p_eff * b.d))


def phase_boost_state(phi: float) -> BlochState:
    """``(cos(pi Phi), -i sin(pi Phi))`` for ``Phi`` in [0, 1)."""
    if not 0 <= phi < 1:
        raise DomainError("Phi must lie in [0, 1)")
    return BlochState(np.array([np.cos(np.pi * phi), -1j * np.sin(np.pi * phi)]))


def boost_phase(phi: float, alpha: float) -> tuple[float, float]:
    """Postselected ``cos^2`` and decisiveness after boosting the phase state.

    The state enters the second stage at ``rho = pi/2 - 2 pi Phi``, so that
    its Hermitian projection is ``cos^2(pi Phi)``; the product of the two
    returned values equals that projection. Requires ``alpha >= 0``.
    """
    phase_boost_state(phi)
    if alpha < 0:
        raise DomainError("the phase boost uses the alpha >= 0 branch")
    rho = np.pi / 2 - 2 * np.pi * phi
    return cos2_pt_at_half_period(alpha, rho).cos2_k13, d2(alpha, rho)


def cos4_metric_ratio(alpha: float, rho: float) -> float:
    """``cos^4_PT D_+ / cos^4_Herm``, equal to ``cos^2_PT / cos^2_Herm``.

    Evaluated through the simplified form ``2 (1 + sin a)^2 / (3 + 4 sin a sin rho - cos 2a)``,
    which stays finite at ``rho = -pi/2``.
    """
    check_alpha(alpha)
    s = np.sin(alpha)
    return float(2 * (1 + s) ** 2 / second_stage_norm(alpha, rho))


def cos4_metric_ratio_direct(alpha: float, rho: float) -> float:
    """Unsimplified ratio built from the separate closed forms (undefined at rho = -pi/2)."""
    c_pt = cos2_pt_at_half_period(alpha, rho).cos2_k13
    c_h = (1 + np.sin(rho)) / 2
    return float(c_pt**2 * d2_plus(alpha, rho) / c_h**2)
