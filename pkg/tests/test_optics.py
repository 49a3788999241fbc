import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperent import optics
from hyperent.hilbert import StateVector, is_unitary

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def phase_free_equal(a, b, atol=1e-12):
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < atol


def test_circular_convention():
    assert np.allclose(optics.R, np.array([1, -1j]) / np.sqrt(2))
    assert np.allclose(optics.L, np.array([1, 1j]) / np.sqrt(2))
    assert abs(np.vdot(optics.R, optics.L)) < 1e-15


def test_six_labels_form_three_unbiased_bases():
    kets = optics.POLARISATION_KETS
    for a, b in (("H", "V"), ("D", "A"), ("R", "L")):
        assert abs(np.vdot(kets[a], kets[b])) < 1e-15
    for a in "HV":
        for b in "DARL":
            assert abs(np.vdot(kets[a], kets[b])) ** 2 == pytest.approx(0.5)
    for a in "DA":
        for b in "RL":
            assert abs(np.vdot(kets[a], kets[b])) ** 2 == pytest.approx(0.5)


def test_hwp_and_qwp_examples():
    assert phase_free_equal(optics.hwp(np.pi / 4) @ optics.H, optics.V)
    assert abs(np.vdot(optics.R, optics.qwp(np.pi / 4) @ optics.H)) == pytest.approx(1.0, abs=1e-12)


@given(angles)
def test_hwp_is_an_involution_up_to_phase(theta):
    M = optics.hwp(theta) @ optics.hwp(theta)
    assert np.allclose(M, M[0, 0] * np.eye(2), atol=1e-12)
    assert abs(abs(M[0, 0]) - 1) < 1e-12


def test_waveplates_unitary_1000_cases():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        ret, th = rng.uniform(0, 2 * np.pi, 2)
        assert is_unitary(optics.jones_waveplate(ret, th), atol=1e-12)


def test_analyser_angles_realise_labels():
    for label, (q, h) in optics.ANALYSER_ANGLES.items():
        assert phase_free_equal(optics.analyser_ket(q, h), optics.POLARISATION_KETS[label])


@given(st.floats(-np.pi, np.pi))
def test_phase_stage_is_diag_phase(phi):
    M = optics.phase_stage(phi)
    target = optics.phase_matrix(phi)
    g = M[0, 0]
    assert abs(abs(g) - 1) < 1e-12
    assert np.allclose(M / g, target, atol=1e-12)


def test_phase_gate_examples():
    from hyperent.source import POL_LABEL
    psi_p = StateVector(POL_LABEL, np.array([0, 1, 1, 0]) / np.sqrt(2))
    assert np.allclose(optics.phase_gate(psi_p, 0.0, "pol_s").amplitudes, psi_p.amplitudes)
    minus = optics.phase_gate(psi_p, np.pi, "pol_s")
    assert np.allclose(minus.amplitudes, np.array([0, 1, -1, 0]) / np.sqrt(2), atol=1e-15)
    twice = optics.phase_gate(optics.phase_gate(psi_p, np.pi / 2, "pol_s"), np.pi / 2, "pol_s")
    assert np.allclose(twice.amplitudes, minus.amplitudes, atol=1e-15)


def test_qplate_maps_linear_to_vvb():
    H0 = optics.pol_oam_state([(1, "H", 0)])
    V0 = optics.pol_oam_state([(1, "V", 0)])
    r = optics.vvb_basis("r")
    th = optics.vvb_basis("theta")
    assert optics.qplate_apply(H0).overlap(r) == pytest.approx(1.0, abs=1e-12)
    assert optics.qplate_apply(V0).overlap(th) == pytest.approx(1.0, abs=1e-12)
    # H lands on r̂ with no phase; V picks up a relative factor of i
    assert optics.qplate_apply(H0).inner(r) == pytest.approx(1.0, abs=1e-12)
    assert abs(optics.qplate_apply(V0).inner(th)) == pytest.approx(1.0, abs=1e-12)


def test_qplate_partial_isometry_and_inverse():
    qp = optics.QPlate()
    Q = qp.matrix
    P = qp.domain_projector
    assert np.allclose(Q @ Q.conj().T @ Q, Q, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)
    rng = np.random.default_rng(7)
    for _ in range(200):
        terms = [(complex(*rng.standard_normal(2)), p, m) for p in "HV" for m in (-1, 0, 1)]
        s = optics.pol_oam_state(terms).normalize()
        back = optics.qplate_inverse(optics.qplate_apply(s))
        assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)


def test_qplate_domain_error():
    edge = optics.pol_oam_state([(1, "L", 2)])
    with pytest.raises(optics.DomainError):
        optics.qplate_apply(edge)
    with pytest.raises(ValueError):
        optics.QPlate(0.3)


def test_vvb_basis_orthonormal():
    names = ["r", "theta", "pi+", "pi-"]
    B = np.array([optics.vvb_basis(n).amplitudes for n in names])
    assert np.allclose(B.conj() @ B.T, np.eye(4), atol=1e-12)
    expect = optics.pol_oam_state([(1, "L", 1), (1, "R", -1)]).normalize()
    assert optics.vvb_basis("π̂⁺").overlap(expect) == pytest.approx(1.0)
    with pytest.raises(KeyError):
        optics.vvb_basis("x")


def test_project_fundamental_examples():
    r = optics.vvb_basis("r")
    res = optics.project_fundamental(optics.qplate_apply(r))
    assert res.probability == pytest.approx(1.0)
    H0 = optics.pol_oam_state([(1, "H", 0)])
    assert res.state.overlap(H0) == pytest.approx(1.0, abs=1e-12)
    miss = optics.project_fundamental(r)
    assert miss.probability == 0.0 and miss.degenerate
    same = optics.project_fundamental(H0)
    assert same.probability == 1.0 and same.state.overlap(H0) == pytest.approx(1.0)


def test_round_trip_identity_channel_1000_cases():
    # prepare with a q-plate, analyse with q-plate + fundamental projection
    rng = np.random.default_rng(8)
    for _ in range(1000):
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        s = optics.pol_oam_state([(a, "H", 0), (b, "V", 0)]).normalize()
        res = optics.project_fundamental(optics.qplate_apply(optics.qplate_apply(s)))
        assert res.probability == pytest.approx(1.0, abs=1e-12)
        assert res.state.overlap(s) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0, np.pi))
def test_linear_input_law(chi):
    s = optics.pol_oam_state([(np.cos(chi), "H", 0), (np.sin(chi), "V", 0)])
    out = optics.qplate_apply(s)
    cr = out.inner(optics.vvb_basis("r"))
    ct = out.inner(optics.vvb_basis("theta"))
    assert abs(cr) == pytest.approx(abs(np.cos(chi)), abs=1e-12)
    assert abs(ct) == pytest.approx(abs(np.sin(chi)), abs=1e-12)
    assert abs(cr) ** 2 + abs(ct) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_waveplate_apply_on_labelled_factor():
    s = optics.pol_oam_state([(1, "H", 0)])
    out = optics.waveplate_apply(s, optics.WaveplateSetting(optics.PlateKind.HALF, np.pi / 4), "pol")
    assert out.overlap(optics.pol_oam_state([(1, "V", 0)])) == pytest.approx(1.0)
    assert optics.describe(np.eye(2), "I").startswith("I =")


def test_oam_index_bounds():
    with pytest.raises(ValueError):
        optics.oam_index(3)
    assert optics.oam_ket(0)[optics.oam_index(0)] == 1
