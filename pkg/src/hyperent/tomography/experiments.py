"""Ready-made tomography runs: the VVB pair and the four-qubit pol⊗OAM state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import source
from ..hilbert import DensityMatrix, StateVector
from ..noise import NoiseModel, depolarizing_for_fidelity
from .counts import CountRecord, simulate_counts
from .estimators import ReconstructionResult, bootstrap_errors, reconstruct_linear, reconstruct_mle
from .measurement import MeasurementScheme, PolOamScheme, QubitScheme, VvbScheme, generate_settings, pauli_bases

TARGETS = ("vvb-psi-plus", "ghz4")


def _vvb_physical() -> StateVector:
    bp = source.convert_to_vvb(source.prepare_bell(source.BellLabel.PSI_PLUS))
    # the TFM singlet factors out; keep the spatial/polarisation part
    rho = bp.reduced(list(source.VVB_FACTORS))
    w, v = np.linalg.eigh(rho.matrix)
    if w[-1] < 1 - 1e-10:
        raise ValueError("VVB preparation is not separable from the TFM degree of freedom")
    return StateVector(rho.label, v[:, -1])


def vvb_psi_plus_target() -> StateVector:
    """ψ⁺ preparation after the q-plates, written in the {r̂, θ̂}⊗{r̂, θ̂} basis."""
    return VvbScheme().compress(_vvb_physical())


def ghz4_target() -> StateVector:
    """The same physical state in the (pol_s, pol_i, oam_s, oam_i) qubit basis."""
    return PolOamScheme().compress(_vvb_physical())


def ghz4_family_fidelity(rho: DensityMatrix) -> float:
    """max over δ of the fidelity with (|RR,00⟩ + e^{iδ}|LL,11⟩)/√2 in the encoded basis."""
    from .. import optics
    zero, one = np.eye(2)
    a = np.kron(np.kron(optics.R, optics.R), np.kron(zero, zero))
    b = np.kron(np.kron(optics.L, optics.L), np.kron(one, one))
    m = rho.matrix
    return float(0.5 * (np.vdot(a, m @ a).real + np.vdot(b, m @ b).real) + abs(np.vdot(a, m @ b)))


@dataclass(frozen=True)
class TomographyRun:
    records: list[CountRecord]
    result: ReconstructionResult
    scheme: MeasurementScheme
    target: StateVector | None
    depolarizing: float


def resolve_target(name: str) -> tuple[StateVector, MeasurementScheme]:
    if name == "vvb-psi-plus":
        return vvb_psi_plus_target(), VvbScheme()
    if name == "ghz4":
        return ghz4_target(), PolOamScheme()
    raise ValueError(f"unknown target {name!r}; use one of {TARGETS} or a matrix file")


def settings_for(n_qubits: int, mode: str = "overcomplete"):
    if mode == "overcomplete":
        return generate_settings(n_qubits, True)
    if mode == "minimal":
        return generate_settings(n_qubits, False)
    if mode == "pauli":
        # 3^n basis configurations, each recording all 2^n outcomes
        return [s for group in pauli_bases(n_qubits).values() for s in group]
    raise ValueError(f"unknown settings mode {mode!r}; use overcomplete, minimal or pauli")


def run_tomography(target: str | DensityMatrix = "vvb-psi-plus", estimator: str = "mle",
                   exposure: float = 10_000, depolarizing: float = 0.0, exact: bool = False,
                   seed: int = 0, settings: str = "overcomplete", bootstrap: int = 0,
                   target_fidelity: float | None = None) -> TomographyRun:
    """Simulate counts for ``target``, reconstruct, optionally attach bootstrap errors.

    ``target_fidelity`` overrides ``depolarizing`` with the strength solving
    (1−p) + p/d = F.
    """
    if isinstance(target, DensityMatrix):
        rho_true, pure = target, None
        scheme: MeasurementScheme = QubitScheme(len(target.label.dims))
        if target.label.dims != (2,) * len(target.label.dims):
            raise ValueError("custom tomography targets must be qubit registers")
        # relabel onto the scheme's factor names
        rho_true = DensityMatrix(scheme.label, target.matrix)
    else:
        pure, scheme = resolve_target(target)
        rho_true = pure.density()
    d = rho_true.dim
    if target_fidelity is not None:
        depolarizing = depolarizing_for_fidelity(target_fidelity, d)
    noise = NoiseModel(depolarizing=depolarizing)
    n_qubits = len(rho_true.label.dims)
    chosen = settings_for(n_qubits, settings)
    records = simulate_counts(rho_true, chosen, exposure, noise, seed=seed, scheme=scheme, exact=exact)

    fid_target = pure
    if isinstance(target, str) and target == "ghz4":
        fid_target = ghz4_family_fidelity
    if fid_target is None:
        fid_target = _principal_target(rho_true)

    def estimate(recs):
        if estimator == "mle":
            return reconstruct_mle(recs, scheme, fid_target)
        if estimator == "linear":
            return reconstruct_linear(recs, scheme, fid_target)
        raise ValueError(f"unknown estimator {estimator!r}; use linear or mle")

    result = estimate(records)
    if bootstrap:
        result = result.with_errors(*bootstrap_errors(records, estimate, bootstrap, seed))
    return TomographyRun(records, result, scheme, pure, depolarizing)


def _principal_target(rho: DensityMatrix) -> StateVector:
    """Dominant eigenvector: the natural pure reference for a supplied mixed state."""
    w, v = np.linalg.eigh(rho.matrix)
    return StateVector(rho.label, v[:, -1])
