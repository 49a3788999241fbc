import warnings

import numpy as np
import pytest

from hyperent import optics
from hyperent.hilbert import DensityMatrix, HilbertLabel, StateVector, fidelity, random_density, trace_distance
from hyperent.noise import NoiseModel
from hyperent.tomography import (AnalysisSetting, CountRecord, NotConvergedWarning, PolOamScheme, QubitScheme,
                                 RankDeficientError, VvbScheme, born_probability, bootstrap_errors,
                                 generate_settings, ghz4_family_fidelity, ghz4_target, log_likelihood,
                                 pauli_bases, read_counts_csv, reconstruct_linear, reconstruct_mle,
                                 run_tomography, simulate_counts, vvb_psi_plus_target, write_counts_csv)
from hyperent.tomography.experiments import settings_for

Q2 = QubitScheme(2)


def bell_plus():
    return StateVector(Q2.label, np.array([0, 1, 1, 0]) / np.sqrt(2))


# -- settings and Born rule ------------------------------------------------------

def test_setting_counts():
    assert len(generate_settings(2)) == 36
    assert len(generate_settings(2, overcomplete=False)) == 16
    assert len(generate_settings(4)) == 1296
    assert len(generate_settings(4, overcomplete=False)) == 256
    bases = pauli_bases(2)
    assert len(bases) == 9 and all(len(v) == 4 for v in bases.values())
    assert sorted(map(str, settings_for(2, "pauli"))) == sorted(map(str, generate_settings(2)))
    with pytest.raises(ValueError):
        generate_settings(3)
    with pytest.raises(ValueError):
        AnalysisSetting(("H", "X"))


@pytest.mark.parametrize("scheme", [QubitScheme(2), VvbScheme()], ids=["qubit", "vvb"])
def test_analyser_basis_complete(scheme):
    for a, b in (("H", "V"), ("D", "A"), ("R", "L")):
        total = sum(scheme.element(AnalysisSetting((x, y))) for x in (a, b) for y in (a, b))
        assert np.allclose(total, np.eye(4), atol=1e-12)


def test_pol_oam_basis_complete():
    scheme = PolOamScheme()
    # the OAM analyser ends on a fixed polariser: half of each photon is lost,
    # uniformly, so every basis configuration still sums to a multiple of I
    for key in ("ZZZZ", "ZXYZ", "YYXX"):
        total = sum(scheme.element(s) for s in pauli_bases(4)[key])
        assert np.allclose(total, np.eye(16) / 4, atol=1e-12)
    everything = sum(scheme.elements(generate_settings(4)))
    assert np.allclose(everything, 20.25 * np.eye(16), atol=1e-10)


def test_born_examples():
    hh = StateVector(Q2.label, np.array([1, 0, 0, 0], complex)).density()
    assert born_probability(hh, AnalysisSetting(("H", "H"))) == 1.0
    assert born_probability(hh, AnalysisSetting(("V", "D"))) == 0.0
    assert born_probability(bell_plus().density(), AnalysisSetting(("D", "D"))) == pytest.approx(0.5)


def test_vvb_scheme_sees_r_theta_as_h_v():
    # after the analysing q-plate r̂ behaves like H
    r = VvbScheme().compress(
        StateVector(HilbertLabel.of(("pol_s", 2), ("oam_s", optics.OAM_DIM), ("pol_i", 2), ("oam_i", optics.OAM_DIM)),
                    np.kron(optics.vvb_basis("r").amplitudes, optics.vvb_basis("theta").amplitudes)))
    rho = r.density()
    assert born_probability(rho, AnalysisSetting(("H", "V")), VvbScheme()) == pytest.approx(1.0, abs=1e-12)


def test_targets():
    assert fidelity(ghz4_target().density(), ghz4_target()) == pytest.approx(1.0)
    assert ghz4_family_fidelity(ghz4_target().density()) == pytest.approx(1.0, abs=1e-12)
    v = vvb_psi_plus_target()
    assert v.label.dim == 4 and v.norm == pytest.approx(1.0)


# -- counts -----------------------------------------------------------------------

def test_counts_deterministic_and_seed_sensitive():
    rho = bell_plus().density()
    s = generate_settings(2)
    a = simulate_counts(rho, s, 1e4, seed=3)
    b = simulate_counts(rho, s, 1e4, seed=3)
    c = simulate_counts(rho, s, 1e4, seed=4)
    assert [r.counts for r in a] == [r.counts for r in b]
    assert [r.counts for r in a] != [r.counts for r in c]


def test_poisson_mean_of_1000_resamples():
    rho = bell_plus().density()
    s = [AnalysisSetting(("D", "D"))]
    draws = [simulate_counts(rho, s, 1e4, seed=k)[0].counts for k in range(1000)]
    mean, lam = np.mean(draws), 5000.0
    assert abs(mean - lam) < 4 * np.sqrt(lam / 1000)


def test_exact_counts_and_validation():
    recs = simulate_counts(bell_plus().density(), [AnalysisSetting(("D", "D"))], 1e4, exact=True)
    assert recs[0].counts == pytest.approx(5000.0) and recs[0].exact
    with pytest.raises(ValueError):
        CountRecord(AnalysisSetting(("H", "H")), 1.5, 10)
    with pytest.raises(ValueError):
        CountRecord(AnalysisSetting(("H", "H")), -1, 10)
    with pytest.raises(ValueError):
        CountRecord(AnalysisSetting(("H", "H")), 1, 0.5)
    with pytest.warns(UserWarning):
        CountRecord(AnalysisSetting(("H", "H")), 500, 100)
    with pytest.raises(ValueError):
        simulate_counts(bell_plus().density(), generate_settings(2), 0.5)


def test_counts_csv_round_trip(tmp_path):
    recs = simulate_counts(bell_plus().density(), generate_settings(2), 1e3, seed=1)
    path = tmp_path / "counts.csv"
    write_counts_csv(path, recs)
    lines = path.read_text().splitlines()
    assert lines[0] == "setting_id,proj_photon1,proj_photon2,exposure,counts"
    assert lines[1].startswith("0,H,H,1000,")
    assert read_counts_csv(path) == recs
    exact = simulate_counts(bell_plus().density(), generate_settings(2), 1e3, exact=True)
    write_counts_csv(path, exact)
    back = read_counts_csv(path)
    assert [r.counts for r in back] == [r.counts for r in exact]
    (tmp_path / "bad.csv").write_text("a,b\n")
    with pytest.raises(ValueError):
        read_counts_csv(tmp_path / "bad.csv")


# -- estimators -------------------------------------------------------------------

def exact_records(rho, scheme=Q2, overcomplete=True):
    return simulate_counts(rho, generate_settings(len(scheme.label.dims), overcomplete), 1e4,
                           scheme=scheme, exact=True)


def test_linear_inversion_exact():
    psi = bell_plus()
    res = reconstruct_linear(exact_records(psi.density()), target=psi)
    assert res.fidelity >= 1 - 1e-8 and res.psd
    mixed = DensityMatrix.maximally_mixed(Q2.label)
    res = reconstruct_linear(exact_records(mixed))
    assert np.allclose(res.rho.matrix, np.eye(4) / 4, atol=1e-8)


def test_linear_rank_deficient():
    recs = simulate_counts(bell_plus().density(), pauli_bases(2)["ZZ"], 1e4, exact=True)
    with pytest.raises(RankDeficientError):
        reconstruct_linear(recs)


def test_linear_flags_unphysical_estimate():
    psi = bell_plus()
    recs = simulate_counts(psi.density(), generate_settings(2), 50, seed=2)
    res = reconstruct_linear(recs, target=psi)
    assert not res.psd
    assert res.rho.trace == pytest.approx(1.0)
    assert reconstruct_mle(recs, target=psi).rho.min_eigenvalue >= -1e-12


def test_mle_exact_pure_vvb():
    target = vvb_psi_plus_target()
    res = reconstruct_mle(exact_records(target.density(), VvbScheme()), VvbScheme(), target)
    assert res.fidelity >= 1 - 1e-6 and res.purity >= 1 - 1e-6
    assert res.converged


@pytest.mark.parametrize("p", [0.0, 0.05, 0.1, 0.2])
def test_mle_tracks_depolarizing(p):
    psi = bell_plus()
    rho = NoiseModel(p).apply(psi.density())
    res = reconstruct_mle(exact_records(rho), target=psi)
    assert res.fidelity == pytest.approx((1 - p) + p / 4, abs=1e-4)


def test_mle_and_linear_agree_inside_the_state_space():
    rng = np.random.default_rng(9)
    rho = random_density(Q2.label, rng, rank=4)
    recs = exact_records(rho)
    a = reconstruct_linear(recs).rho
    b = reconstruct_mle(recs).rho
    assert trace_distance(a, b) < 1e-6


def test_likelihood_ascent_1000_cases():
    rng = np.random.default_rng(41)
    settings = generate_settings(2)
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        for k in range(1000):
            rho = random_density(Q2.label, rng, rank=int(rng.integers(1, 5)))
            recs = simulate_counts(rho, settings, float(rng.choice([50, 500, 5000])), seed=k)
            traj = np.array(reconstruct_mle(recs, max_iter=15).trajectory)
            worst = min(worst, float(np.min(np.diff(traj))) if len(traj) > 1 else 0.0)
    assert worst >= 0.0


def test_log_likelihood_is_saturated_form():
    n = np.array([3.0, 0.0, 7.0])
    N = np.full(3, 10.0)
    assert log_likelihood(n / N, n, N) == pytest.approx(0.0, abs=1e-12)
    assert log_likelihood(np.array([0.0, 0.5, 0.5]), n, N) == -np.inf


def test_mle_iteration_cap_warns():
    psi = bell_plus()
    recs = simulate_counts(psi.density(), generate_settings(2), 1e4, seed=1)
    with pytest.warns(NotConvergedWarning):
        res = reconstruct_mle(recs, target=psi, max_iter=3)
    assert not res.converged and res.iterations == 3


def test_bootstrap_exact_has_no_spread():
    psi = bell_plus()
    recs = exact_records(psi.density())
    fe, pe = bootstrap_errors(recs, lambda r: reconstruct_linear(r, target=psi), reps=10)
    assert fe < 1e-6 and pe < 1e-6
    with pytest.raises(ValueError):
        bootstrap_errors(recs, reconstruct_linear, reps=5)


def test_bootstrap_scales_as_inverse_sqrt_n():
    # mixed state keeps the estimator away from the boundary, where the law holds
    psi = bell_plus()
    rho = NoiseModel(0.2).apply(psi.density())
    errs = []
    for N in (1e3, 1e4, 1e5):
        recs = simulate_counts(rho, generate_settings(2), N, seed=5)
        errs.append(bootstrap_errors(recs, lambda r: reconstruct_linear(r, target=psi), reps=200, seed=5)[0])
    for lo, hi in zip(errs, errs[1:]):
        assert lo / hi == pytest.approx(np.sqrt(10), rel=0.5)
        assert 1 / 1.5 <= (lo / hi) / np.sqrt(10) <= 1.5


def test_bootstrap_deterministic():
    psi = bell_plus()
    recs = simulate_counts(psi.density(), generate_settings(2), 1e3, seed=2)
    est = lambda r: reconstruct_linear(r, target=psi)  # noqa: E731
    assert bootstrap_errors(recs, est, 20, seed=1) == bootstrap_errors(recs, est, 20, seed=1)


def test_metrics_line_layout():
    res = run_tomography(exact=True)
    fields = res.result.metrics_line().split(",")
    assert fields[0] == "fidelity" and fields[3] == "purity" and fields[6:8] == ["method", "mle"]
    assert fields[2] == "nan" and fields[8] == "iters"


# -- frozen regression ------------------------------------------------------------

def test_seed7_regression():
    # frozen from this implementation; counts are exact, estimates are BLAS-order sensitive
    run = run_tomography("vvb-psi-plus", seed=7)
    assert [r.counts for r in run.records[:6]] == [0, 5059, 2467, 2459, 2453, 2502]
    assert run.result.fidelity == pytest.approx(0.9999875968499812, rel=1e-9)
    assert run.result.iterations == 136
    lin = run_tomography("vvb-psi-plus", seed=7, estimator="linear")
    assert lin.result.fidelity == pytest.approx(0.9996832664673655, rel=1e-9)
    assert lin.result.purity == pytest.approx(0.9994742004265765, rel=1e-9)


def test_custom_density_target():
    rho = NoiseModel(0.1).apply(bell_plus().density())
    run = run_tomography(rho, exact=True)
    assert run.result.fidelity == pytest.approx(0.925, abs=1e-6)
    with pytest.raises(ValueError):
        run_tomography(DensityMatrix.maximally_mixed(HilbertLabel.of(("x", 3))))
    with pytest.raises(ValueError):
        run_tomography("nope")
