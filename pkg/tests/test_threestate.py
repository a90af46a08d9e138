import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ptmap.dilation import d2, d2_minus, d2_plus
from ptmap.errors import DegenerateInput, DomainError
from ptmap.ptcore import (
    PARITY,
    BlochState,
    alpha_critical,
    c_operator,
    cpt_cos2,
    evolution_matrix,
    hamiltonian_for_alpha,
    hermitian_cos2,
    probe_state,
    reference_pair,
)
from ptmap.threestate import (
    adjust_initial,
    beta_gamma_closed_form,
    chi_states,
    cos2_cpt,
    cos2_probe,
    cos2_pt_at_half_period,
    cos2_pt_general,
    cos2_pt_numeric,
    cos_half_delta_closed,
    cpt_projectors,
    delta_rotation,
    kappa_zeta_closed,
    lambda_closed_form,
    mirror_alpha,
    qfi_numeric,
    qfi_pt,
    stabilizer_map,
    stage1_map,
    stage1_theory,
    step2_gate,
    transformer_alpha,
)

alphas = st.floats(-1.4, 1.4)
rhos = st.floats(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3)
thetas = st.floats(0.05, np.pi - 0.05)
phis = st.floats(-np.pi, np.pi)


# -- initial adjustment ----------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(thetas, phis, thetas, phis, thetas, phis)
def test_adjustment_places_pair_symmetrically(t1, p1, t2, p2, t3, p3):
    s = [BlochState.from_angles(t, p) for t, p in ((t1, p1), (t2, p2), (t3, p3))]
    assume(hermitian_cos2(s[0], s[1]) < 1 - 1e-6)
    assume(hermitian_cos2(s[0], s[2]) < 1 - 1e-6 and hermitian_cos2(s[1], s[2]) < 1 - 1e-6)
    res = adjust_initial(*s)
    r = res.rotation
    assert np.allclose(r.conj().T @ r, np.eye(2), atol=1e-12)
    q1, q2 = reference_pair(res.config.sigma)
    assert np.isclose(hermitian_cos2(r @ s[0].amplitudes, q1), 1.0, atol=1e-10)
    assert np.isclose(hermitian_cos2(r @ s[1].amplitudes, q2), 1.0, atol=1e-10)
    # the unitary preserves all overlaps
    assert np.isclose(hermitian_cos2(r @ s[0].amplitudes, r @ s[2].amplitudes), hermitian_cos2(s[0], s[2]))
    b, g = beta_gamma_closed_form(t1, p1, p2, t3, p3, res.config.sigma, res.lambda_phase)
    assert abs(b - res.amp_beta) < 1e-9 and abs(g - res.amp_gamma) < 1e-9
    lam = lambda_closed_form(t1, p1, t2, p2)
    diff = (lam - res.lambda_phase) % np.pi
    assert min(diff, np.pi - diff) < 1e-8


def test_adjustment_rejects_coincident_states():
    s = BlochState.from_angles(0.4, 0.1)
    with pytest.raises(DegenerateInput):
        adjust_initial(s, s, BlochState.from_angles(1.0, 0.0))
    with pytest.raises(DegenerateInput):
        adjust_initial(s, BlochState.from_angles(2.0, 0.3), s)


# -- first stage -------------------------------------------------------------


@pytest.mark.parametrize(
    "sigma,alpha",
    [(0.8, np.pi / 2 - 1), (1.2, np.pi / 2 - 1), (np.pi / 3, alpha_critical(np.pi / 3)), (2.5, alpha_critical(2.5))],
)
def test_stage1_orthogonalizes_pair(sigma, alpha):
    res = stage1_map(sigma, alpha, probe_state(0.2))
    e1, e2, _ = res.evolved_states
    assert hermitian_cos2(e1, e2) < 1e-20
    assert np.isclose(np.cos(res.delta / 2), cos_half_delta_closed(alpha, sigma, res.omega_tau), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(thetas, phis)
def test_kappa_zeta_closed_form(mu, nu):
    sigma, alpha = 0.8, np.pi / 2 - 1
    p3 = BlochState.from_angles(mu, nu)
    res = stage1_map(sigma, alpha, p3)
    k, z = kappa_zeta_closed(mu, nu, res.delta, alpha, res.omega_tau)
    v = delta_rotation(res.delta) @ evolution_matrix(hamiltonian_for_alpha(alpha), res.tau) @ p3.amplitudes
    v = v * np.cos(alpha)
    # equal up to one common phase (the trace phase of the evolution)
    ph = np.exp(1j * np.angle(np.vdot(v, [k, z])))
    assert np.allclose(ph * v, [k, z], atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.one_of(st.floats(0.1, np.pi / 2 - 0.1), st.floats(np.pi / 2 + 0.1, np.pi - 0.1)), st.floats(-3.0, 3.0))
def test_probe_cos2_closed_form_matches_evolution(sigma, m):
    a = alpha_critical(sigma)
    res = stage1_map(sigma, a, probe_state(m))
    pt = hermitian_cos2(res.evolved_states[0], res.evolved_states[2])
    assert np.isclose(cos2_probe(m, sigma), pt, atol=1e-9)


def test_stage1_theory_general_path():
    sigma, alpha, n0 = 0.8, np.pi / 2 - 1, 3.0
    c, d = stage1_theory(sigma, alpha, n0, 0.3)
    res = stage1_map(sigma, alpha, probe_state(0.3))
    assert np.isclose(c, hermitian_cos2(res.evolved_states[0], res.evolved_states[2]))
    assert 0 < d < 1


# -- step 2 ------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(thetas, phis, st.floats(-np.pi, np.pi))
def test_step2_maps_to_standard_triple(mu, nu, gphase):
    sigma, alpha = 0.8, np.pi / 2 - 1
    res = stage1_map(sigma, alpha, BlochState.from_angles(mu, nu))
    gate = step2_gate(res)
    w = gate.gate_w
    assert np.allclose(w.conj().T @ w, np.eye(2), atol=1e-12)
    c1, c2, c3 = chi_states(gate.rho)
    for e, c in zip(res.evolved_states, (c1, c2, c3)):
        assert np.isclose(hermitian_cos2(w @ e.amplitudes, c), 1.0, atol=1e-9)
    assert -np.pi / 2 - 1e-12 <= gate.rho <= np.pi / 2 + 1e-12
    # rho does not depend on the global phase of the third state
    shifted = step2_gate(res, np.exp(1j * gphase) * res.evolved_states[2].amplitudes)
    assert np.isclose(shifted.rho, gate.rho, atol=1e-10)


# -- second-stage angles -----------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(alphas, rhos, st.floats(0.01, np.pi))
def test_general_cosines_match_explicit_evolution(alpha, rho, wt):
    a = cos2_pt_general(alpha, rho, wt)
    b = cos2_pt_numeric(alpha, rho, wt)
    assert np.allclose([a.cos2_k12, a.cos2_k13, a.cos2_k23], [b.cos2_k12, b.cos2_k13, b.cos2_k23], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(rhos, st.floats(0.01, np.pi))
def test_general_cosines_hermitian_limit(rho, wt):
    a = cos2_pt_general(0.0, rho, wt)
    assert np.isclose(a.cos2_k13, (1 + np.sin(rho)) / 2, atol=1e-10)
    assert np.isclose(a.cos2_k23, (1 - np.sin(rho)) / 2, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(alphas, rhos)
def test_half_period_matches_general(alpha, rho):
    a = cos2_pt_at_half_period(alpha, rho)
    b = cos2_pt_numeric(alpha, rho, np.pi / 2)
    assert a.cos2_k12 == 0.0 and b.cos2_k12 < 1e-20
    assert np.isclose(a.cos2_k13, b.cos2_k13, atol=1e-10)
    assert np.isclose(a.cos2_k23, b.cos2_k23, atol=1e-10)


def test_half_period_special_values():
    assert np.isclose(cos2_pt_at_half_period(0.7, np.pi / 2).cos2_k13, 1.0)
    assert np.isclose(cos2_pt_at_half_period(0.0, 0.4).cos2_k13, (1 + np.sin(0.4)) / 2)


@settings(max_examples=100, deadline=None)
@given(alphas, rhos)
def test_leverage_identities(alpha, rho):
    a = cos2_pt_at_half_period(alpha, rho)
    assert np.isclose(a.cos2_k13 * d2_plus(alpha, rho), (1 + np.sin(rho)) / 2, atol=1e-12)
    assert np.isclose(a.cos2_k23 * d2_minus(alpha, rho), (1 - np.sin(rho)) / 2, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(alphas, rhos)
def test_cpt_cosines_match_cpt_product(alpha, rho):
    c1, c2, c3 = chi_states(rho)
    ref = cos2_cpt(alpha, rho)
    # the chi states live in the frame where the C operator of the half-period
    # evolved problem is built; evolve and measure with the CPT product
    H = hamiltonian_for_alpha(alpha)
    e = evolution_matrix(H, H.half_period)
    x1, x2, x3 = (e @ c.amplitudes for c in (c1, c2, c3))
    assert np.isclose(cpt_cos2(alpha, x1, x3), ref.cos2_k13, atol=1e-9)
    assert np.isclose(cpt_cos2(alpha, x2, x3), ref.cos2_k23, atol=1e-9)
    assert cpt_cos2(alpha, x1, x2) < 1e-12


def test_cpt_mirror_case():
    a = cos2_cpt(-0.4, 0.4)
    assert np.isclose(a.cos2_k13, 0.5) and np.isclose(a.cos2_k23, 0.5)


@given(alphas)
def test_cpt_projectors(alpha):
    p1, p2 = cpt_projectors(alpha)
    assert np.allclose(p1 + p2, np.eye(2))
    assert np.allclose(p1 @ p1, p1) and np.allclose(p2 @ p2, p2)
    # each P_i is self-adjoint in the CPT product <mu|nu> = mu^dagger (C P)^T nu
    metric = (c_operator(alpha) @ PARITY).T
    for p in (p1, p2):
        assert np.allclose(metric @ p, p.conj().T @ metric)


# -- transformations ---------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_transformer_maps_rho_to_rho_prime(rho, rp):
    try:
        a = transformer_alpha(rho, rp)
    except DomainError:
        return
    assume(abs(np.sin(a)) < 1 - 1e-6)
    got = cos2_pt_at_half_period(a, rho)
    assert np.isclose(got.cos2_k13, (1 + np.sin(rp)) / 2, atol=1e-9)
    assert np.isclose(got.cos2_k23, (1 - np.sin(rp)) / 2, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_transformer_cpt_mode(rho, rp):
    try:
        a = transformer_alpha(rho, rp, "cpt")
    except DomainError:
        return
    assume(abs(np.sin(a)) < 1 - 1e-6)
    assert np.isclose(cos2_cpt(a, rho).cos2_k13, (1 + np.sin(rp)) / 2, atol=1e-9)


def test_transformer_special_cases():
    assert transformer_alpha(0.3, 0.3, "cpt") == 0.0
    assert np.isclose(transformer_alpha(0.7, 0.0, "cpt"), -0.7)
    with pytest.raises(DomainError):
        transformer_alpha(np.pi / 2, 0.0)
    with pytest.raises(DomainError):
        transformer_alpha(0.1, 0.2, "other")


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.5, 1.5))
def test_mirror_alpha_gives_equal_cosines(rho):
    a = mirror_alpha(rho)
    got = cos2_pt_at_half_period(a, rho)
    assert np.isclose(got.cos2_k13, got.cos2_k23, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.5, 1.5))
def test_stabilizer_targets(rho):
    outs = stabilizer_map(mirror_alpha(rho), rho)
    targets = [np.array([1, -1]) / np.sqrt(2), np.array([1, 1]) / np.sqrt(2), np.array([1, 0])]
    for o, t in zip(outs, targets):
        assert abs(np.vdot(t, o.amplitudes)) ** 2 > 1 - 1e-10


def test_stabilizer_hermitian_case():
    outs = stabilizer_map(0.0, 0.0)
    got = {tuple(np.round(np.abs(o.amplitudes) * np.sign(np.real(o.amplitudes * np.conj(o.amplitudes[0]))), 6)) for o in outs}
    assert got == {(0.707107, 0.707107), (0.707107, -0.707107), (1.0, 0.0)}


# -- QFI ---------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.4, 1.4), st.floats(-1.4, 1.4))
def test_qfi_closed_form_matches_finite_difference(alpha, rho):
    assert np.isclose(qfi_pt(alpha, rho), qfi_numeric(alpha, rho), atol=1e-6, rtol=1e-6)


def test_qfi_values():
    assert np.isclose(qfi_pt(0.0, 0.3), 1.0)
    for a in np.linspace(0.01, np.pi / 2 - 0.02, 25):
        assert np.isclose(qfi_pt(a, -np.pi / 2) * d2(a, -np.pi / 2), 1.0, atol=1e-9)
    a = np.pi / 2 - 0.1
    assert abs(qfi_pt(a, 0.0) - qfi_numeric(a, 0.0)) < 1e-6
