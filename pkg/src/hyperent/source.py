"""Hyperentangled biphoton states: Sagnac output, Bell preparations, VVB conversion.

Every biphoton state lives on the six factors

    tfm_s, tfm_i : time-frequency-mode qubits {HG0, HG1}
    pol_s, pol_i : polarisation qubits {H, V}
    oam_s, oam_i : OAM ladder m ∈ {−2..+2}
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import optics
from .hilbert import DensityMatrix, HilbertLabel, StateVector, apply_local, reduced_state, tensor_all, write_matrix

TFM_LABEL = HilbertLabel.of(("tfm_s", 2), ("tfm_i", 2))
POL_LABEL = HilbertLabel.of(("pol_s", 2), ("pol_i", 2))
OAM_LABEL = HilbertLabel.of(("oam_s", optics.OAM_DIM), ("oam_i", optics.OAM_DIM))
BIPHOTON_LABEL = TFM_LABEL + POL_LABEL + OAM_LABEL

SIGNAL_FACTORS = ("tfm_s", "pol_s", "oam_s")
IDLER_FACTORS = ("tfm_i", "pol_i", "oam_i")
VVB_FACTORS = ("pol_s", "pol_i", "oam_s", "oam_i")


class BellLabel(enum.Enum):
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @property
    def exchange_sign(self) -> int:
        """Exchange symmetry of ψ⁻_ω ⊗ (this polarisation Bell state)."""
        return +1 if self is BellLabel.PSI_MINUS else -1

    @classmethod
    def parse(cls, text: str) -> "BellLabel":
        aliases = {"Ψ⁺": "psi+", "Ψ⁻": "psi-", "Φ⁺": "phi+", "Φ⁻": "phi-"}
        key = aliases.get(text, text).lower().replace("plus", "+").replace("minus", "-").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown Bell label {text!r}; use psi+, psi-, phi+ or phi-")


@dataclass(frozen=True)
class BiphotonState:
    state: StateVector
    description: str
    phi: float | None = None

    def __post_init__(self):
        if self.state.label != BIPHOTON_LABEL:
            raise ValueError(f"biphoton state must live on [{BIPHOTON_LABEL}], got [{self.state.label}]")
        if abs(self.state.norm - 1) > 1e-12:
            raise ValueError(f"biphoton state has norm {self.state.norm}")

    def reduced(self, keep) -> DensityMatrix:
        return reduced_state(self.state, keep)

    def sidecar(self) -> str:
        phi = "none" if self.phi is None else repr(float(self.phi))
        return f"preparation={self.description},phi={phi}"


def two_qubit(amplitudes, label: HilbertLabel) -> StateVector:
    return StateVector(label, np.asarray(amplitudes, dtype=complex)).normalize()


def tfm_singlet() -> StateVector:
    """(|HG0,HG1⟩ − |HG1,HG0⟩)/√2."""
    return two_qubit([0, 1, -1, 0], TFM_LABEL)


def pol_bell(label: BellLabel) -> StateVector:
    amps = {
        BellLabel.PSI_PLUS: [0, 1, 1, 0],
        BellLabel.PSI_MINUS: [0, 1, -1, 0],
        BellLabel.PHI_PLUS: [1, 0, 0, 1],
        BellLabel.PHI_MINUS: [1, 0, 0, -1],
    }[label]
    return two_qubit(amps, POL_LABEL)


def _oam_zero() -> StateVector:
    z = optics.oam_ket(0)
    return StateVector(OAM_LABEL, np.kron(z, z))


def sagnac_source() -> BiphotonState:
    """ψ⁻_ω ⊗ ψ⁺_pol with both photons in the fundamental spatial mode."""
    s = tensor_all(tfm_singlet(), pol_bell(BellLabel.PSI_PLUS), _oam_zero())
    return BiphotonState(s, "sagnac")


def sagnac_derivation() -> StateVector:
    """Track the clockwise/anticlockwise creation operators through HWP and PBS.

    Each term is a pair of (path, photon, polarisation) operator labels. The
    returned polarisation state (in signal⊗idler order) is the coherent sum of
    both directions after the PBS.
    """
    clockwise = {(("c", "s", "H"), ("c", "i", "V")): 1.0}
    anticlockwise = {(("d", "s", "H"), ("d", "i", "V")): 1.0}

    def hwp_on_d(op):
        path, photon, pol = op
        if path == "d":
            pol = {"H": "V", "V": "H"}[pol]
        return (path, photon, pol)

    pbs = {("c", "H"): "a", ("c", "V"): "b", ("d", "H"): "b", ("d", "V"): "a"}

    def through(term):
        return tuple((pbs[(path, pol)], photon, pol) for path, photon, pol in map(hwp_on_d, term))

    out: dict[tuple, complex] = {}
    for branch in (clockwise, anticlockwise):
        for term, amp in branch.items():
            key = through(term)
            out[key] = out.get(key, 0) + amp / np.sqrt(2)

    amps = np.zeros(4, dtype=complex)
    index = {"H": 0, "V": 1}
    for term, amp in out.items():
        by_photon = {photon: (port, pol) for port, photon, pol in term}
        # signal leaves port a, idler port b, in both directions
        assert by_photon["s"][0] == "a" and by_photon["i"][0] == "b", term
        amps[2 * index[by_photon["s"][1]] + index[by_photon["i"][1]]] += amp
    return StateVector(POL_LABEL, amps)


def prepare_bell(label: BellLabel | str) -> BiphotonState:
    """ψ⁻_ω ⊗ (polarisation Bell state) via local unitaries on the Sagnac output."""
    label = BellLabel.parse(label) if isinstance(label, str) else label
    s = sagnac_source().state
    if label in (BellLabel.PHI_PLUS, BellLabel.PHI_MINUS):
        s = apply_local(optics.hwp(np.pi / 4), s, ["pol_i"])
    if label in (BellLabel.PSI_MINUS, BellLabel.PHI_MINUS):
        s = optics.phase_gate(s, np.pi, "pol_s")
    return BiphotonState(s, f"bell:{label.value}")


def prepare_psi_phase(phi: float) -> BiphotonState:
    """ψ⁻_ω ⊗ (|HV⟩ + e^{iφ}|VH⟩)/√2."""
    s = optics.phase_gate(sagnac_source().state, phi, "pol_s")
    return BiphotonState(s, "psi-phase", float(phi))


def convert_to_vvb(bp: BiphotonState, qplate: optics.QPlate = optics.QPlate()) -> BiphotonState:
    """Send each photon through a q-plate: H → r̂, V → θ̂ (up to a common phase)."""
    zero = reduced_state(bp.state, ["oam_s", "oam_i"])
    if abs(zero.matrix[_oam00_index(), _oam00_index()] - 1) > 1e-12:
        raise optics.DomainError("convert_to_vvb expects both photons at OAM m = 0")
    s = optics.qplate_apply(bp.state, qplate, "pol_s", "oam_s")
    s = optics.qplate_apply(s, qplate, "pol_i", "oam_i")
    return BiphotonState(s, f"vvb[{bp.description}]", bp.phi)


def _oam00_index() -> int:
    k = optics.oam_index(0)
    return k * optics.OAM_DIM + k


def exchange(state: StateVector) -> StateVector:
    """Swap signal and idler in every degree of freedom."""
    swapped = state.permute([f for pair in zip(IDLER_FACTORS, SIGNAL_FACTORS) for f in pair])
    mapping = {a: b for a, b in zip(SIGNAL_FACTORS + IDLER_FACTORS, IDLER_FACTORS + SIGNAL_FACTORS)}
    return swapped.relabel(mapping)


def exchange_expectation(state: StateVector) -> float:
    """⟨ψ|SWAP|ψ⟩: +1 for exchange-symmetric, −1 for antisymmetric states."""
    return float(state.inner(exchange(state)).real)


# -- GHZ structure -------------------------------------------------------------

GHZ_LABEL = HilbertLabel.of(("pol_s", 2), ("pol_i", 2), ("oam_s", optics.OAM_DIM), ("oam_i", optics.OAM_DIM))


def _ghz_components(q: float) -> tuple[np.ndarray, np.ndarray]:
    s = optics.QPlate(q).shift
    a = np.kron(np.kron(optics.R, optics.R), np.kron(optics.oam_ket(s), optics.oam_ket(s)))
    b = np.kron(np.kron(optics.L, optics.L), np.kron(optics.oam_ket(-s), optics.oam_ket(-s)))
    return a, b


def ghz_state(delta: float = 0.0, q: float = 0.5) -> StateVector:
    """(|R,+2q; R,+2q⟩ + e^{iδ}|L,−2q; L,−2q⟩)/√2 on pol_s, pol_i, oam_s, oam_i."""
    a, b = _ghz_components(q)
    return StateVector(GHZ_LABEL, (a + np.exp(1j * delta) * b) / np.sqrt(2))


def ghz_family_fidelity(rho: DensityMatrix, q: float = 0.5) -> tuple[float, float]:
    """max over δ of F(ρ, GHZ_δ); returns (fidelity, δ*).

    With a = |RR,++⟩, b = |LL,−−⟩: F(δ) = ½(ρ_aa + ρ_bb) + Re(e^{iδ}ρ_ab),
    maximised at δ* = −arg ρ_ab.
    """
    a, b = _ghz_components(q)
    m = rho.matrix
    raa = np.vdot(a, m @ a).real
    rbb = np.vdot(b, m @ b).real
    rab = np.vdot(a, m @ b)
    delta = float(-np.angle(rab)) if abs(rab) > 0 else 0.0
    return float(0.5 * (raa + rbb) + abs(rab)), delta


def write_state(path: str | Path, bp: BiphotonState, keep=None):
    """Density matrix of the (optionally reduced) state plus the preparation sidecar line."""
    keep = list(BIPHOTON_LABEL.names) if keep is None else list(keep)
    rho = reduced_state(bp.state, keep)
    factors = " ".join(f"{n}:{d}" for n, d in rho.label.factors)
    write_matrix(path, rho.matrix, extra=[bp.sidecar(), f"factors={factors}"])
