"""Regression against the shipped golden evolution matrices and their
printed magic-basis decompositions.

Each fixture stores a dilated 4x4 evolution matrix together with the pieces
``U_A, U_B, V_A, V_B, Phi``. Two checks are made per fixture: the RK4
propagator must reproduce the matrix entrywise, and the pieces (projected to
the nearest unitaries, since they were printed with four decimals) must
recompose to it up to a global phase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.linalg import polar

from .circuits import Decomposition, global_phase_between, reconstruct
from .dilation import dilated_propagator
from .ptcore import alpha_critical, hamiltonian_for_alpha, matrix_from_json, omega_tau_perp

GOLDEN_TOL = 5e-4


@dataclass(frozen=True)
class GoldenCase:
    key: str
    label: str
    kind: str
    alpha: float
    sigma: float | None
    n0: float
    time: float
    ancilla_sign: int
    phi_sign: int
    evolution: np.ndarray
    decomposition: Decomposition


@dataclass(frozen=True)
class GoldenResult:
    key: str
    label: str
    ode_error: float
    reconstruct_error: float
    tol: float = GOLDEN_TOL

    @property
    def passed(self) -> bool:
        return self.ode_error <= self.tol and self.reconstruct_error <= self.tol


def _parse_sigma(value) -> float | None:
    if value is None:
        return None
    if value == "2pi/3":
        return 2 * np.pi / 3
    return float(value)


def load_cases() -> list[GoldenCase]:
    raw = json.loads(resources.files("ptmap").joinpath("data/golden.json").read_text())
    cases = []
    for key, e in raw.items():
        sigma = _parse_sigma(e.get("sigma"))
        if e["kind"] == "trine":
            alpha = alpha_critical(sigma)
        else:
            alpha = np.pi / 2 - e["alpha_offset"]
        H = hamiltonian_for_alpha(alpha)
        t = omega_tau_perp(alpha, sigma) / H.omega if e["time"] == "tau_perp" else H.half_period
        unit = lambda name: polar(matrix_from_json(e[name]))[0]  # noqa: E731
        dec = Decomposition(
            unit("u_a"), unit("u_b"), unit("v_a"), unit("v_b"), e["phi_sign"] * np.asarray(e["phi"], dtype=float)
        )
        cases.append(
            GoldenCase(
                key, e["label"], e["kind"], alpha, sigma, float(e["n0"]), float(t),
                int(e["ancilla_sign"]), int(e["phi_sign"]), matrix_from_json(e["evolution"]), dec,
            )
        )
    return cases


def check_case(case: GoldenCase, steps: int = 20000) -> GoldenResult:
    H = hamiltonian_for_alpha(case.alpha)
    u = dilated_propagator(H, case.n0, case.time, steps=steps, ancilla_sign=case.ancilla_sign)
    ode_err = float(np.max(np.abs(u - case.evolution)))
    rec = reconstruct(case.decomposition)
    rec = np.exp(1j * global_phase_between(rec, case.evolution)) * rec
    rec_err = float(np.max(np.abs(rec - case.evolution)))
    return GoldenResult(case.key, case.label, ode_err, rec_err)


def run_all(steps: int = 20000) -> list[GoldenResult]:
    return [check_case(c, steps) for c in load_cases()]
