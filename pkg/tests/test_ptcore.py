import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ptmap.errors import BrokenSymmetry, DomainError, ExceptionalPoint, NoSolution
from ptmap.ptcore import (
    PARITY,
    BlochState,
    alpha_critical,
    c_operator,
    check_alpha,
    cpt_cos2,
    cpt_inner,
    effective_metric,
    evolution_matrix,
    hamiltonian_for_alpha,
    hermitian_cos2,
    loads_matrix,
    dumps_matrix,
    make_pt_hamiltonian,
    omega_tau_perp,
    probe_state,
    pt_evolve,
    reference_pair,
    tau_perp,
    wrap_angle,
)

alphas = st.floats(-1.45, 1.45)
sigmas_pos = st.floats(0.05, np.pi / 2 - 0.05)


def test_hamiltonian_is_pt_symmetric():
    H = make_pt_hamiltonian(0.7, 1.3, 0.4)
    m = H.matrix
    # PT: P m* P = m
    assert np.allclose(PARITY @ m.conj() @ PARITY, m)
    assert np.isclose(np.sin(H.alpha), 0.7 / 1.3 * np.sin(0.4))
    assert np.isclose(H.omega, np.sqrt(1.3**2 - (0.7 * np.sin(0.4)) ** 2))


def test_hamiltonian_spectrum_is_real():
    H = make_pt_hamiltonian(0.9, 1.0, 1.0)
    ev = np.linalg.eigvals(H.matrix)
    assert np.max(np.abs(ev.imag)) < 1e-12
    assert np.allclose(sorted(ev.real), sorted([H.trace_phase - H.omega, H.trace_phase + H.omega]))


def test_broken_phase_rejected():
    with pytest.raises(BrokenSymmetry):
        make_pt_hamiltonian(2.0, 1.0, np.pi / 2)
    with pytest.raises(DomainError):
        make_pt_hamiltonian(1.0, 0.0, 0.1)


def test_exceptional_point_rejected():
    for a in (np.pi / 2, -np.pi / 2, np.nan):
        with pytest.raises(ExceptionalPoint):
            check_alpha(a)
    with pytest.raises(ExceptionalPoint):
        hamiltonian_for_alpha(np.pi / 2 - 1e-6)


@settings(max_examples=60, deadline=None)
@given(alphas, st.floats(0.0, 5.0))
def test_evolution_matches_matrix_exponential(alpha, t):
    H = hamiltonian_for_alpha(alpha)
    assert np.allclose(evolution_matrix(H, t), expm(-1j * H.matrix * t), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(alphas)
def test_c_operator_squares_to_identity_and_commutes_with_h(alpha):
    c = c_operator(alpha)
    h = hamiltonian_for_alpha(alpha).matrix
    assert np.allclose(c @ c, np.eye(2), atol=1e-10)
    assert np.allclose(c @ h, h @ c, atol=1e-10)


def test_c_operator_hermitian_limit():
    assert np.allclose(c_operator(0.0), PARITY)


@settings(max_examples=60, deadline=None)
@given(alphas, st.floats(0.0, 4.0), st.floats(0, np.pi), st.floats(-np.pi, np.pi))
def test_cpt_norm_is_conserved_by_evolution(alpha, t, th, ph):
    H = hamiltonian_for_alpha(alpha)
    psi = BlochState.from_angles(th, ph)
    before = cpt_inner(alpha, psi, psi)
    after = cpt_inner(alpha, pt_evolve(H, t, psi), pt_evolve(H, t, psi))
    assert before.real > 0
    assert abs(after - before) < 1e-9 * max(1.0, abs(before))


def test_cpt_cos2_reduces_to_hermitian_at_alpha_zero():
    a, b = BlochState.from_angles(0.3, 0.2), BlochState.from_angles(2.1, -0.4)
    # at alpha = 0 the CPT product is P T followed by P: plain Hermitian overlap
    assert np.isclose(cpt_cos2(0.0, a, b), hermitian_cos2(a, b))


def test_effective_metric_at_quarter_period():
    a = 0.6
    m = effective_metric(a, 1.0, np.pi / 2)
    sa = np.sin(a)
    assert np.allclose(m, [[1 + sa**2, -2j * sa], [2j * sa, 1 + sa**2]])


def test_effective_metric_depends_only_on_omega_t():
    assert np.allclose(effective_metric(0.4, 2.0, 0.3), effective_metric(0.4, 1.0, 0.6))


def test_reference_pair_overlap():
    for s in (0.3, 0.8, 1.2, 2.5):
        p1, p2 = reference_pair(s)
        assert np.isclose(np.sqrt(hermitian_cos2(p1, p2)), abs(np.cos(s)))


def test_probe_state_is_normalized_and_on_meridian():
    p = probe_state(0.7)
    assert np.isclose(p.norm, 1.0)
    assert np.isclose(p.phi, -np.pi / 2)


def _orthogonality_oracle(alpha, sigma):
    """Smallest t > 0 with the evolved reference pair orthogonal (root finding)."""
    from scipy.optimize import brentq

    H = hamiltonian_for_alpha(alpha)
    p1, p2 = reference_pair(sigma)

    def f(t):
        e = evolution_matrix(H, t)
        return np.vdot(e @ p1.amplitudes, e @ p2.amplitudes).real

    ts = np.linspace(1e-6, H.half_period * 1.0000001, 4001)
    vals = [f(t) for t in ts]
    for i in range(len(ts) - 1):
        if vals[i] == 0:
            return ts[i]
        if vals[i] * vals[i + 1] < 0:
            return brentq(f, ts[i], ts[i + 1], xtol=1e-14)
    return None


@pytest.mark.parametrize("alpha,sigma", [(np.pi / 2 - 1, 0.8), (np.pi / 2 - 1, 1.2), (1.0, 0.5), (1.3, 1.0)])
def test_tau_perp_matches_root_finding(alpha, sigma):
    H = hamiltonian_for_alpha(alpha)
    t = tau_perp(alpha, sigma, H.omega)
    oracle = _orthogonality_oracle(alpha, sigma)
    assert oracle is not None
    assert np.isclose(t, oracle, atol=1e-8)


def test_tau_perp_no_solution():
    with pytest.raises(NoSolution):
        omega_tau_perp(0.0, 0.5)
    with pytest.raises(NoSolution):
        omega_tau_perp(0.05, 0.2)  # right-hand side exceeds 1


@settings(max_examples=80, deadline=None)
@given(st.one_of(st.floats(0.05, np.pi / 2 - 0.05), st.floats(np.pi / 2 + 0.05, np.pi - 0.05)))
def test_critical_alpha_gives_quarter_period(sigma):
    a = alpha_critical(sigma)
    assert np.isclose(np.sin(a), (1 - np.sin(sigma)) / np.cos(sigma))
    assert np.isclose(omega_tau_perp(a, sigma), np.pi / 2, atol=1e-6)


def test_critical_alpha_edges():
    assert alpha_critical(np.pi / 2) == 0.0
    assert np.isclose(alpha_critical(1e-6), np.pi / 2, atol=1e-2)
    with pytest.raises(DomainError):
        alpha_critical(0.0)


@given(st.floats(-50, 50))
def test_wrap_angle_range(x):
    w = wrap_angle(x)
    assert -np.pi <= w < np.pi
    assert np.isclose(np.exp(1j * w), np.exp(1j * x))


def test_matrix_json_roundtrip():
    m = np.array([[1 + 2j, -0.5j], [0.25, 3.0]])
    assert np.array_equal(loads_matrix(dumps_matrix(m)), m)


def test_bloch_state_rejects_non_finite():
    with pytest.raises(DomainError):
        BlochState(np.array([np.nan, 1.0]))
    with pytest.raises(DomainError):
        BlochState(np.zeros(2)).normalized()
