"""Magic-basis factorization of two-qubit unitaries, a 3-CNOT circuit form,
and OpenQASM 2.0 text export/import.

Tensor order: the ancilla is the first factor (``q[0]`` in QASM) and the data
qubit the second (``q[1]``). Every CNOT uses the ancilla as control.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, NotUnitary
from .ptcore import I2, SIGMA_X, SIGMA_Y, SIGMA_Z, is_unitary

_S2 = 1 / np.sqrt(2)

MAGIC = _S2 * np.array(
    [
        [1, 0, 0, 1j],
        [0, 1j, 1, 0],
        [0, 1j, -1, 0],
        [1, 0, 0, -1j],
    ]
)
"""Magic-basis change of basis; its columns are the basis kets."""

LAMBDA = np.array(
    [
        [1, 1, -1, 1],
        [1, 1, 1, -1],
        [1, -1, -1, -1],
        [1, -1, 1, 1],
    ],
    dtype=float,
)
"""Maps ``theta = (theta_0..theta_3)`` to the magic-basis eigenphases: ``Phi = LAMBDA @ theta``."""

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _S2


def phi_to_theta(phi) -> np.ndarray:
    """``theta = LAMBDA^T Phi / 4`` (``LAMBDA^T LAMBDA = 4``)."""
    return LAMBDA.T @ np.asarray(phi, dtype=float) / 4


def theta_to_phi(theta) -> np.ndarray:
    return LAMBDA @ np.asarray(theta, dtype=float)


def u_diag(phi) -> np.ndarray:
    """``sum_k e^{i Phi_k} |m_k><m_k|`` over the magic-basis kets ``m_k``."""
    return MAGIC @ np.diag(np.exp(1j * np.asarray(phi, dtype=float))) @ MAGIC.conj().T


def u_diag_from_theta(theta) -> np.ndarray:
    """``e^{i theta_0} exp(i sum_k theta_k sigma_k (x) sigma_k)``."""
    t = np.asarray(theta, dtype=float)
    gen = t[1] * np.kron(SIGMA_X, SIGMA_X) + t[2] * np.kron(SIGMA_Y, SIGMA_Y) + t[3] * np.kron(SIGMA_Z, SIGMA_Z)
    return np.exp(1j * t[0]) * expm(1j * gen)


def global_phase_between(a, b) -> float:
    """Angle ``g`` minimizing ``||e^{ig} a - b||``."""
    return float(np.angle(np.vdot(np.asarray(a).ravel(), np.asarray(b).ravel())))


def equal_up_to_phase(a, b, tol: float = 1e-8) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(np.exp(1j * global_phase_between(a, b)) * a - b)) <= tol)


# --------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``u = e^{i g} (U_A (x) U_B) U_D(Phi) (V_A (x) V_B)`` with ``U_A`` on the ancilla."""

    u_a: np.ndarray
    u_b: np.ndarray
    v_a: np.ndarray
    v_b: np.ndarray
    phi: np.ndarray
    global_phase: float = 0.0

    @property
    def theta(self) -> np.ndarray:
        return phi_to_theta(self.phi)


def reconstruct(d: Decomposition) -> np.ndarray:
    left = np.kron(d.u_a, d.u_b)
    right = np.kron(d.v_a, d.v_b)
    return np.exp(1j * d.global_phase) * left @ u_diag(d.phi) @ right


def kron_factor(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 product ``A (x) B`` into unitary factors with ``det A = 1``."""
    t = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(t)
    a = u[:, 0].reshape(2, 2) * np.sqrt(s[0])
    b = vh[0, :].reshape(2, 2) * np.sqrt(s[0])
    scale = np.sqrt(np.linalg.det(a))
    a = a / scale
    b = b * scale
    return a, b


def _real_orthogonal_eigvecs(sym: np.ndarray) -> np.ndarray:
    """Real orthogonal P diagonalizing the complex symmetric unitary ``sym``.

    The real and imaginary parts commute, so a generic real combination of
    them shares their eigenvectors; several fixed weights are tried in turn,
    which also resolves degenerate spectra deterministically.
    """
    re, im = sym.real, sym.imag
    for c in (0.6180339887, 1.7320508076, 0.3090169944, 2.2360679775, 4.1231056256, 0.1414213562):
        _, p = np.linalg.eigh(re + c * im)
        d = p.T @ sym @ p
        if np.max(np.abs(d - np.diag(np.diag(d)))) < 1e-9:
            if np.linalg.det(p) < 0:
                p[:, 0] = -p[:, 0]
            return p
    raise DomainError("simultaneous diagonalization failed")


def magic_decompose(u, canonical_phase: bool = True, tol: float = 1e-8) -> Decomposition:
    """Factor a two-qubit unitary into locals around a magic-basis diagonal core."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4) or not is_unitary(u, tol):
        raise NotUnitary("input must be a 4x4 unitary")
    g = np.linalg.det(u) ** 0.25
    us = u / g
    up = MAGIC.conj().T @ us @ MAGIC
    p = _real_orthogonal_eigvecs(up.T @ up)
    d2 = np.diag(p.T @ up.T @ up @ p)
    phi = np.angle(d2) / 2
    k1 = up @ p @ np.diag(np.exp(-1j * phi))
    if np.linalg.det(k1).real < 0:
        phi[0] += np.pi
        k1[:, 0] = -k1[:, 0]
    k1 = k1.real
    left = MAGIC @ k1 @ MAGIC.conj().T
    right = MAGIC @ p.T @ MAGIC.conj().T
    u_a, u_b = kron_factor(left)
    v_a, v_b = kron_factor(right)
    d = Decomposition(u_a, u_b, v_a, v_b, phi, 0.0)
    d = replace(d, global_phase=global_phase_between(reconstruct(d), u))
    return canonicalize(d) if canonical_phase else d


def canonicalize(d: Decomposition) -> Decomposition:
    """Move phases so the first non-negligible entries of all locals are real positive."""
    gp = d.global_phase
    mats = []
    for m in (d.u_a, d.u_b, d.v_a, d.v_b):
        flat = m.ravel()
        k = int(np.argmax(np.abs(flat) > 1e-12))
        ph = np.angle(flat[k])
        mats.append(m * np.exp(-1j * ph))
        gp += ph
    return Decomposition(*mats, phi=d.phi, global_phase=float(np.angle(np.exp(1j * gp))))


# --------------------------------------------------------------------------
# circuits


@dataclass(frozen=True, eq=False)
class Gate:
    """Single-qubit gate (``kind='u'``) on ``target`` or a CNOT (``kind='cx'``, ancilla control)."""

    kind: str
    target: str = "data"
    matrix: np.ndarray | None = None

    def euler(self) -> tuple[float, float, float, float]:
        return zyz_angles(self.matrix)


@dataclass(eq=False)
class TwoQubitCircuit:
    gates: list[Gate] = field(default_factory=list)
    ancilla_prep: np.ndarray = field(default_factory=lambda: I2.copy())
    global_phase: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def cnot_count(self) -> int:
        return sum(g.kind == "cx" for g in self.gates)

    def unitary(self, include_prep: bool = False) -> np.ndarray:
        """Composed 4x4 matrix (ancilla first), including ``global_phase``."""
        u = np.kron(self.ancilla_prep, I2) if include_prep else np.eye(4, dtype=complex)
        for g in self.gates:
            u = gate_matrix(g) @ u
        return np.exp(1j * self.global_phase) * u


def gate_matrix(g: Gate) -> np.ndarray:
    if g.kind == "cx":
        return CNOT
    if g.target == "ancilla":
        return np.kron(g.matrix, I2)
    return np.kron(I2, g.matrix)


def _rz(t):
    return np.diag([np.exp(1j * t / 2), np.exp(-1j * t / 2)])


def _ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, s], [-s, c]], dtype=complex)


def core_layers(theta) -> list[tuple[np.ndarray, np.ndarray]]:
    """Four (ancilla, data) local layers interleaved with three CNOTs.

    The product ``L4 CX L3 CX L2 CX L1`` equals
    ``exp(i(t1 XX + t2 YY + t3 ZZ))`` up to a global phase. Here
    ``_rz(t) = exp(+i t Z/2)`` and ``_ry(t) = exp(+i t Y/2)``.
    """
    _, a, b, c = np.asarray(theta, dtype=float)
    h = HADAMARD
    l1 = (h @ I2, h @ _rz(np.pi / 2))
    l2 = (_rz(2 * c - np.pi / 2) @ h, _ry(np.pi / 2 - 2 * a) @ h)
    l3 = (h, h @ _ry(2 * b - np.pi / 2))
    l4 = (_rz(-np.pi / 2) @ h, h)
    return [l1, l2, l3, l4]


def to_circuit(d: Decomposition, ancilla_prep=None, readout=None) -> TwoQubitCircuit:
    """Alternating local/CNOT ladder reproducing ``reconstruct(d)``.

    ``readout`` (optional) is a data-qubit unitary applied after the evolution;
    it is merged into the last data-wire gate so the structure is unchanged.
    """
    layers = core_layers(d.theta)
    a1, d1_ = layers[0]
    layers[0] = (a1 @ d.v_a, d1_ @ d.v_b)
    a4, d4 = layers[3]
    post = I2 if readout is None else np.asarray(readout, dtype=complex)
    layers[3] = (d.u_a @ a4, post @ d.u_b @ d4)
    gates: list[Gate] = []
    for k, (ga, gd) in enumerate(layers):
        gates.append(Gate("u", "ancilla", ga))
        gates.append(Gate("u", "data", gd))
        if k < 3:
            gates.append(Gate("cx"))
    prep = I2.copy() if ancilla_prep is None else np.asarray(ancilla_prep, dtype=complex)
    circ = TwoQubitCircuit(gates, prep, 0.0, {"cx_orientation": "control=ancilla"})
    source = np.kron(I2, post) @ reconstruct(d)
    circ.global_phase = global_phase_between(circ.unitary(), source)
    circ.metadata["source_error"] = float(np.max(np.abs(circ.unitary() - source)))
    return circ


# --------------------------------------------------------------------------
# QASM


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]])


def zyz_angles(u, eps: float = 1e-12) -> tuple[float, float, float, float]:
    """Return ``(theta, phi, lam, gamma)`` with ``u = e^{i gamma} u3(theta, phi, lam)``."""
    u = np.asarray(u, dtype=complex)
    theta = float(2 * np.arctan2(abs(u[1, 0]), abs(u[0, 0])))
    if abs(u[1, 0]) <= eps:
        gamma = float(np.angle(u[0, 0]))
        return 0.0, 0.0, float(np.angle(u[1, 1]) - gamma), gamma
    if abs(u[0, 0]) <= eps:
        gamma = float(np.angle(-u[0, 1]))
        return float(np.pi), float(np.angle(u[1, 0]) - gamma), 0.0, gamma
    gamma = float(np.angle(u[0, 0]))
    return theta, float(np.angle(u[1, 0]) - gamma), float(np.angle(-u[0, 1]) - gamma), gamma


_QUBIT = {"ancilla": 0, "data": 1}
_HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\n'


def export_qasm(c: TwoQubitCircuit) -> str:
    """OpenQASM 2.0 text; ``q[0]`` is the ancilla, ``q[1]`` the data qubit.

    The ancilla preparation is emitted first when it is not the identity.
    Gate-level global phases are dropped, as QASM has no global phase.
    """
    lines = [_HEADER.rstrip("\n")]
    if not c.gates and np.allclose(c.ancilla_prep, I2):
        return _HEADER
    lines.append("// q[0]: ancilla, q[1]: data")
    ops = []
    if not np.allclose(c.ancilla_prep, I2):
        ops.append(Gate("u", "ancilla", c.ancilla_prep))
    ops.extend(c.gates)
    for g in ops:
        if g.kind == "cx":
            lines.append("cx q[0],q[1];")
        else:
            th, ph, la, _ = zyz_angles(g.matrix)
            lines.append(f"u3({th:.17g},{ph:.17g},{la:.17g}) q[{_QUBIT[g.target]}];")
    return "\n".join(lines) + "\n"


_U3_RE = re.compile(r"^u3\(([^,]+),([^,]+),([^)]+)\)\s+q\[(\d)\];$")
_CX_RE = re.compile(r"^cx\s+q\[(\d)\],\s*q\[(\d)\];$")


def parse_qasm(text: str) -> np.ndarray:
    """Compose the 4x4 matrix (ancilla first) of a program written by :func:`export_qasm`."""
    u = np.eye(4, dtype=complex)
    for raw in text.splitlines():
        line = raw.split("//")[0].strip()
        if not line or line.startswith(("OPENQASM", "include", "qreg")):
            continue
        m = _U3_RE.match(line)
        if m:
            g = u3(float(m.group(1)), float(m.group(2)), float(m.group(3)))
            q = int(m.group(4))
            u = (np.kron(g, I2) if q == 0 else np.kron(I2, g)) @ u
            continue
        m = _CX_RE.match(line)
        if m:
            ctrl, tgt = int(m.group(1)), int(m.group(2))
            if (ctrl, tgt) == (0, 1):
                u = CNOT @ u
            elif (ctrl, tgt) == (1, 0):
                sw = np.kron(HADAMARD, HADAMARD)
                u = sw @ CNOT @ sw @ u
            else:
                raise DomainError(f"bad cx operands in {line!r}")
            continue
        raise DomainError(f"unsupported QASM statement {line!r}")
    return u
