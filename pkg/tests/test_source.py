import numpy as np
import pytest

from hyperent import optics
from hyperent import source as src
from hyperent.hilbert import fidelity, purity, read_matrix, reduced_state


def pol_part(bp):
    return reduced_state(bp.state, ["pol_s", "pol_i"])


def test_sagnac_derivation_gives_psi_plus():
    s = src.sagnac_derivation()
    assert np.allclose(s.amplitudes, np.array([0, 1, 1, 0]) / np.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("label", list(src.BellLabel))
def test_bell_preparations(label):
    bp = src.prepare_bell(label)
    assert fidelity(pol_part(bp), src.pol_bell(label)) == pytest.approx(1.0, abs=1e-12)
    # the spectral singlet is untouched
    assert fidelity(reduced_state(bp.state, ["tfm_s", "tfm_i"]), src.tfm_singlet()) == pytest.approx(1.0, abs=1e-12)
    assert src.exchange_expectation(bp.state) == pytest.approx(label.exchange_sign, abs=1e-12)


def test_bell_states_orthonormal():
    B = np.array([src.pol_bell(b).amplitudes for b in src.BellLabel])
    assert np.allclose(B.conj() @ B.T, np.eye(4), atol=1e-15)


def test_bell_label_parse():
    assert src.BellLabel.parse("Ψ⁻") is src.BellLabel.PSI_MINUS
    assert src.BellLabel.parse("phi_plus") is src.BellLabel.PHI_PLUS
    with pytest.raises(ValueError):
        src.BellLabel.parse("chi")


def test_biphoton_is_a_product_of_degrees_of_freedom():
    bp = src.prepare_bell("phi-")
    assert purity(pol_part(bp)) == pytest.approx(1.0, abs=1e-12)
    assert purity(reduced_state(bp.state, ["tfm_s", "tfm_i"])) == pytest.approx(1.0, abs=1e-12)
    assert purity(reduced_state(bp.state, ["oam_s", "oam_i"])) == pytest.approx(1.0, abs=1e-12)
    for one in ("pol_s", "tfm_i"):
        assert np.allclose(reduced_state(bp.state, [one]).matrix, np.eye(2) / 2, atol=1e-12)


@pytest.mark.parametrize("phi", [0.0, np.pi / 3, np.pi, 1.9 * np.pi])
def test_psi_phase(phi):
    bp = src.prepare_psi_phase(phi)
    expect = src.two_qubit([0, 1, np.exp(1j * phi), 0], src.POL_LABEL)
    assert fidelity(pol_part(bp), expect) == pytest.approx(1.0, abs=1e-12)
    # the sidecar round-trips phi exactly
    assert bp.sidecar() == f"preparation=psi-phase,phi={phi!r}"
    assert src.exchange_expectation(bp.state) == pytest.approx(-np.cos(phi), abs=1e-12)


def qplate_pair(bp):
    return reduced_state(bp.state, list(src.VVB_FACTORS))


def test_psi_minus_maps_to_vvb_singlet():
    bp = src.convert_to_vvb(src.prepare_bell("psi-"))
    r, th = optics.vvb_basis("r").amplitudes, optics.vvb_basis("theta").amplitudes
    target = (np.kron(r, th) - np.kron(th, r)) / np.sqrt(2)
    rho = qplate_pair(bp).permute(["pol_s", "oam_s", "pol_i", "oam_i"])
    assert np.vdot(target, rho.matrix @ target).real == pytest.approx(1.0, abs=1e-12)


def test_psi_plus_maps_to_ghz():
    rho = qplate_pair(src.convert_to_vvb(src.prepare_bell("psi+")))
    f, delta = src.ghz_family_fidelity(rho)
    assert f == pytest.approx(1.0, abs=1e-12)
    assert abs(np.exp(1j * delta) - np.exp(1j * np.pi)) < 1e-10
    assert fidelity(rho, src.ghz_state(np.pi)) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(rho, src.ghz_state(0.0)) == pytest.approx(0.0, abs=1e-12)


def test_convert_requires_fundamental_mode():
    bp = src.convert_to_vvb(src.prepare_bell("psi+"))
    with pytest.raises(optics.DomainError):
        src.convert_to_vvb(bp)


def test_biphoton_validation():
    with pytest.raises(ValueError):
        src.BiphotonState(src.pol_bell(src.BellLabel.PSI_PLUS), "x")


def test_ghz_family_fidelity_recovers_phase(rng):
    for delta in rng.uniform(-np.pi, np.pi, 20):
        f, d = src.ghz_family_fidelity(src.ghz_state(delta).density())
        assert f == pytest.approx(1.0, abs=1e-12)
        assert abs(np.exp(1j * d) - np.exp(1j * delta)) < 1e-10


def test_write_state(tmp_path):
    bp = src.prepare_psi_phase(0.25)
    path = tmp_path / "state.txt"
    src.write_state(path, bp, keep=["pol_s", "pol_i"])
    lines = path.read_text().splitlines()
    assert "preparation=psi-phase,phi=0.25" in lines
    assert lines[-1] == "factors=pol_s:2 pol_i:2"
    m = read_matrix(path)
    assert np.allclose(m, pol_part(bp).matrix, atol=1e-15)
