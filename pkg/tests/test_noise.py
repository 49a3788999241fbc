import numpy as np
import pytest

from hyperent import noise
from hyperent.hilbert import DensityMatrix, HilbertLabel, fidelity, random_density, random_state

Q2 = HilbertLabel.of(("a", 2), ("b", 2))


def test_depolarize_law(rng):
    psi = random_state(Q2, rng)
    for p in (0.0, 0.05, 0.3, 1.0):
        out = noise.depolarize(psi.density(), p)
        assert fidelity(out, psi) == pytest.approx((1 - p) + p / 4, abs=1e-12)
    assert np.allclose(noise.depolarize(psi.density(), 1.0).matrix, np.eye(4) / 4)


def test_strength_validated():
    rho = DensityMatrix.maximally_mixed(Q2)
    for bad in (-0.1, 1.2):
        with pytest.raises(ValueError):
            noise.depolarize(rho, bad)
        with pytest.raises(ValueError):
            noise.NoiseModel(depolarizing=bad)


def test_dephase_kills_coherence():
    plus = np.array([1, 1]) / np.sqrt(2)
    rho = DensityMatrix(HilbertLabel.of(("a", 2)), np.outer(plus, plus).astype(complex))
    out = noise.dephase(rho, "a", 1.0)
    assert np.allclose(out.matrix, np.eye(2) / 2)
    half = noise.dephase(rho, "a", 0.5)
    assert half.matrix[0, 1].real == pytest.approx(0.25)
    with pytest.raises(ValueError):
        noise.dephase(DensityMatrix.maximally_mixed(HilbertLabel.of(("a", 3))), "a", 0.1)


def test_subspace_channel_on_psi_family():
    HV, VH = np.eye(4)[1], np.eye(4)[2]
    psi = DensityMatrix(Q2, np.outer(HV + VH, HV + VH).astype(complex) / 2)
    out = noise.depolarize_subspace(psi, [HV, VH], 0.2)
    assert out.matrix[1, 2].real == pytest.approx(0.4)
    assert out.matrix[1, 1].real == pytest.approx(0.5)
    assert out.matrix[0, 0] == 0 and out.matrix[3, 3] == 0


def test_subspace_channel_is_cptp_via_kraus():
    rng = np.random.default_rng(4)
    basis = [np.eye(4)[1], np.eye(4)[2]]
    P = np.diag([0, 1, 1, 0]).astype(complex)
    Qc = np.eye(4) - P
    p = 0.3
    kraus = [np.sqrt(1 - p) * np.eye(4), np.sqrt(p) * Qc]
    kraus += [np.sqrt(p / 2) * np.outer(a, b) for a in basis for b in basis]
    assert np.allclose(sum(K.conj().T @ K for K in kraus), np.eye(4), atol=1e-12)
    rho = random_density(Q2, rng)
    direct = sum(K @ rho.matrix @ K.conj().T for K in kraus)
    assert np.allclose(noise.depolarize_subspace(rho, basis, p).matrix, direct, atol=1e-12)


def test_channels_cptp_1000_cases():
    rng = np.random.default_rng(21)
    basis = [np.eye(4)[1], np.eye(4)[2]]
    worst_tr, worst_eig = 0.0, 0.0
    for _ in range(1000):
        rho = random_density(Q2, rng, rank=int(rng.integers(1, 5)))
        p, q = rng.uniform(0, 1, 2)
        model = noise.NoiseModel(depolarizing=p, dephasing=(("a", q),))
        for out in (noise.depolarize(rho, p), noise.depolarize_subspace(rho, basis, p),
                    noise.dephase(rho, "b", q), model.apply(rho)):
            worst_tr = max(worst_tr, abs(out.trace - 1))
            worst_eig = min(worst_eig, out.min_eigenvalue)
    assert worst_tr < 1e-12
    assert worst_eig >= -1e-12


def test_noise_model_identity_and_support():
    assert noise.NoiseModel().is_identity
    rho = DensityMatrix.maximally_mixed(Q2)
    assert noise.NoiseModel().apply(rho) is rho
    supported = noise.NoiseModel(0.5, support=(np.eye(4)[0],))
    assert np.allclose(supported.apply(rho).matrix, rho.matrix)


def test_depolarizing_for_fidelity_inverse():
    for f in (1.0, 0.95, 0.5):
        p = noise.depolarizing_for_fidelity(f, 16)
        assert (1 - p) + p / 16 == pytest.approx(f)
