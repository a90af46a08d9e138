"""Two-qubit statevector execution of dilated circuits, ancilla postselection,
shot sampling, and the end-to-end first/second stage pipelines.

Outcome labels are ``|data, ancilla>``: ``p01`` is data 0 with ancilla 1.
Internally state vectors are ancilla-first, index ``2 * ancilla + data``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import TwoQubitCircuit, magic_decompose, to_circuit
from .dilation import (
    ancilla_prep_gate,
    closed_form_propagator,
    dilated_propagator,
    n0_min_stage1,
    n0_min_stage2,
)
from .errors import DomainError, EmptyPostselection
from .ptcore import _amp, evolution_matrix, hamiltonian_for_alpha, omega_tau_perp, reference_pair
from .threestate import chi_states


@dataclass(frozen=True)
class OutcomeDistribution:
    p00: float
    p01: float
    p10: float
    p11: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.p01, self.p10, self.p11])


@dataclass(frozen=True)
class ShotCounts:
    n00: int
    n01: int
    n10: int
    n11: int

    @property
    def n_shots(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11


def run_exact(circuit: TwoQubitCircuit, data_init) -> OutcomeDistribution:
    """Born probabilities after preparing the ancilla and running the circuit."""
    psi = np.asarray(_amp(data_init), dtype=complex)
    psi = psi / np.linalg.norm(psi)
    anc = circuit.ancilla_prep @ np.array([1, 0], dtype=complex)
    state = circuit.unitary() @ np.kron(anc, psi)
    p = np.abs(state) ** 2
    p = p / p.sum()
    # internal index 2a + d  ->  label (d, a)
    return OutcomeDistribution(float(p[0]), float(p[2]), float(p[1]), float(p[3]))


def point_seed(base_seed: int, index: int) -> int:
    """Per-grid-point seed ``base_seed XOR index``."""
    return int(base_seed) ^ int(index)


def sample_shots(dist: OutcomeDistribution, n: int, seed: int) -> ShotCounts:
    """Multinomial draw of ``n`` shots, deterministic for a given seed."""
    if n < 1:
        raise DomainError("n must be at least 1")
    p = np.clip(dist.as_array(), 0.0, None)
    counts = np.random.default_rng(seed).multinomial(n, p / p.sum())
    return ShotCounts(*(int(c) for c in counts))


def _cells(c):
    if isinstance(c, ShotCounts):
        return float(c.n00), float(c.n01), float(c.n10), float(c.n11)
    return c.p00, c.p01, c.p10, c.p11


def estimate_cos2(c) -> float:
    """``n00 / (n00 + n10)``: data-0 frequency inside the ancilla-0 sector."""
    n00, _, n10, _ = _cells(c)
    if n00 + n10 == 0:
        raise EmptyPostselection("no outcomes with ancilla 0")
    return n00 / (n00 + n10)


def estimate_d(c) -> float:
    """``(n00 + n10) / n_shots``: population of the postselected sector."""
    n00, n01, n10, n11 = _cells(c)
    total = n00 + n01 + n10 + n11
    if n00 + n10 == 0:
        raise EmptyPostselection("no outcomes with ancilla 0")
    return (n00 + n10) / total


# --------------------------------------------------------------------------
# pipelines


def readout_unitary(target) -> np.ndarray:
    """Data-qubit unitary sending the normalized ``target`` to |0>."""
    v = np.asarray(_amp(target), dtype=complex)
    v = v / np.linalg.norm(v)
    w = np.array([-v[1].conjugate(), v[0].conjugate()])
    return np.vstack([v.conj(), w.conj()])


def _propagator(H, n0, T, ancilla_sign, method):
    if method == "closed":
        return closed_form_propagator(H, n0, T, ancilla_sign)
    if method == "rk4":
        return dilated_propagator(H, n0, T, ancilla_sign=ancilla_sign)
    raise DomainError("method must be 'closed' or 'rk4'")


def stage1_circuit(
    sigma: float,
    alpha: float,
    n0: float | None = None,
    ancilla_sign: int = 1,
    method: str = "closed",
) -> TwoQubitCircuit:
    """First-stage circuit; the data readout maps the evolved first reference state to |0>."""
    H = hamiltonian_for_alpha(alpha)
    T = omega_tau_perp(alpha, sigma) / H.omega
    n0 = n0_min_stage1(sigma) if n0 is None else float(n0)
    u = _propagator(H, n0, T, ancilla_sign, method)
    ref = evolution_matrix(H, T) @ reference_pair(sigma)[0].amplitudes
    circ = to_circuit(magic_decompose(u), ancilla_prep_gate(n0, ancilla_sign), readout_unitary(ref))
    circ.metadata.update(stage="one", sigma=sigma, alpha=alpha, n0=n0, T=T)
    return circ


def stage2_circuit(
    alpha: float,
    n0: float | None = None,
    ancilla_sign: int = 1,
    method: str = "closed",
) -> TwoQubitCircuit:
    """Second-stage circuit over a half period; readout maps the evolved ``chi_1`` to |0>."""
    H = hamiltonian_for_alpha(alpha)
    T = H.half_period
    n0 = n0_min_stage2(alpha) if n0 is None else float(n0)
    u = _propagator(H, n0, T, ancilla_sign, method)
    ref = evolution_matrix(H, T) @ chi_states(0.0)[0].amplitudes
    circ = to_circuit(magic_decompose(u), ancilla_prep_gate(n0, ancilla_sign), readout_unitary(ref))
    circ.metadata.update(stage="two", alpha=alpha, n0=n0, T=T)
    return circ
