"""Polarisation and OAM transformations of single photons.

Circular-basis convention (used everywhere in the package)::

    R = (H − iV)/√2,    L = (H + iV)/√2

so that a quarter-wave plate with its fast axis at 45° turns H into R.
The OAM degree of freedom is truncated to the ladder m ∈ {−2, …, +2};
one generation q-plate followed by one measurement q-plate never leaves it
for inputs prepared at m = 0.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertLabel, StateVector, apply_local

OAM_LEVELS = (-2, -1, 0, 1, 2)
OAM_DIM = len(OAM_LEVELS)

H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
D = (H + V) / np.sqrt(2)
A = (H - V) / np.sqrt(2)
R = (H - 1j * V) / np.sqrt(2)
L = (H + 1j * V) / np.sqrt(2)

POLARISATION_KETS = {"H": H, "V": V, "D": D, "A": A, "R": R, "L": L}

# columns are R, L expressed in H/V
CIRCULAR_TO_LINEAR = np.column_stack([R, L])


class DomainError(ValueError):
    """Population would leave the truncated OAM ladder."""


def oam_index(m: int) -> int:
    if m not in OAM_LEVELS:
        raise DomainError(f"OAM level {m} outside the ladder {OAM_LEVELS}")
    return OAM_LEVELS.index(m)


def oam_ket(m: int) -> np.ndarray:
    k = np.zeros(OAM_DIM, dtype=complex)
    k[oam_index(m)] = 1
    return k


def photon_label(pol: str = "pol", oam: str = "oam") -> HilbertLabel:
    return HilbertLabel.of((pol, 2), (oam, OAM_DIM))


def pol_oam_state(terms, pol: str = "pol", oam: str = "oam") -> StateVector:
    """Build Σ c·|p, m⟩ from ``[(c, "R", +1), ...]``; normalised."""
    amps = np.zeros(2 * OAM_DIM, dtype=complex)
    for coeff, p, m in terms:
        amps += coeff * np.kron(POLARISATION_KETS[p], oam_ket(m))
    return StateVector(photon_label(pol, oam), amps).normalize()


# -- waveplates --------------------------------------------------------------

class PlateKind(enum.Enum):
    HALF = np.pi
    QUARTER = np.pi / 2


@dataclass(frozen=True)
class WaveplateSetting:
    kind: PlateKind
    angle: float  # fast axis from horizontal, radians

    @property
    def jones(self) -> np.ndarray:
        return jones_waveplate(self.kind.value, self.angle)


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def jones_waveplate(retardance: float, theta: float) -> np.ndarray:
    """Symmetric-phase Jones matrix of a retarder with fast axis at ``theta``."""
    core = np.diag([np.exp(-0.5j * retardance), np.exp(0.5j * retardance)])
    return _rotation(theta) @ core @ _rotation(-theta)


def hwp(theta: float) -> np.ndarray:
    return jones_waveplate(np.pi, theta)


def qwp(theta: float) -> np.ndarray:
    return jones_waveplate(np.pi / 2, theta)


def waveplate_apply(state: StateVector, setting: WaveplateSetting, factor: str = "pol") -> StateVector:
    return apply_local(setting.jones, state, [factor])


def phase_matrix(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)])


def phase_gate(state: StateVector, phi: float, factor: str = "pol") -> StateVector:
    """Imprint e^{iφ} on the |V⟩ component of one polarisation factor."""
    return apply_local(phase_matrix(phi), state, [factor])


def phase_stage(phi: float) -> np.ndarray:
    """QWP(45°)·HWP(θ)·QWP(45°) with θ = (φ − π)/4.

    Equals diag(1, e^{iφ}) up to a global phase; this is the physical
    plate stack that realises :func:`phase_gate`.
    """
    theta = (phi - np.pi) / 4
    return qwp(np.pi / 4) @ hwp(theta) @ qwp(np.pi / 4)


# measurement stage: QWP(α) → HWP(β) → polariser transmitting H
ANALYSER_ANGLES = {
    "H": (0.0, 0.0),
    "V": (0.0, np.pi / 4),
    "D": (np.pi / 4, np.pi / 8),
    "A": (np.pi / 4, -np.pi / 8),
    "R": (0.0, np.pi / 8),
    "L": (0.0, -np.pi / 8),
}


def analyser_ket(qwp_angle: float, hwp_angle: float) -> np.ndarray:
    """Polarisation state transmitted by QWP(α), HWP(β) and an H polariser."""
    return (hwp(hwp_angle) @ qwp(qwp_angle)).conj().T @ H


# -- q-plates ------------------------------------------------------------------

@dataclass(frozen=True)
class QPlate:
    """Ideal, fully tuned q-plate: |L,m⟩→|R,m+2q⟩, |R,m⟩→|L,m−2q⟩."""

    q: float = 0.5

    def __post_init__(self):
        if self.q == 0 or abs(2 * self.q - round(2 * self.q)) > 1e-12:
            raise ValueError(f"q must be a non-zero half-integer, got {self.q}")

    @property
    def shift(self) -> int:
        return int(round(2 * self.q))

    @property
    def matrix(self) -> np.ndarray:
        """Partial isometry on pol(2)⊗oam(5), written in the H/V ⊗ m basis (read-only)."""
        return _qplate_matrix(self.shift)

    @property
    def domain_projector(self) -> np.ndarray:
        Q = self.matrix
        return Q.conj().T @ Q


@functools.lru_cache(maxsize=None)
def _qplate_matrix(s: int) -> np.ndarray:
    Q = np.zeros((2 * OAM_DIM, 2 * OAM_DIM), dtype=complex)
    for m in OAM_LEVELS:
        if m + s in OAM_LEVELS:
            Q += np.kron(np.outer(R, L.conj()), np.outer(oam_ket(m + s), oam_ket(m)))
        if m - s in OAM_LEVELS:
            Q += np.kron(np.outer(L, R.conj()), np.outer(oam_ket(m - s), oam_ket(m)))
    Q.setflags(write=False)
    return Q


def _checked_local(matrix: np.ndarray, state: StateVector, factors: list[str]) -> StateVector:
    out = apply_local(matrix, state, factors)
    lost = state.norm**2 - out.norm**2
    if lost > 1e-12:
        raise DomainError(f"q-plate would push weight {lost:.3e} outside the OAM ladder {OAM_LEVELS}")
    return out


def qplate_apply(state: StateVector, qplate: QPlate = QPlate(), pol: str = "pol",
                 oam: str = "oam") -> StateVector:
    return _checked_local(qplate.matrix, state, [pol, oam])


def qplate_inverse(state: StateVector, qplate: QPlate = QPlate(), pol: str = "pol",
                   oam: str = "oam") -> StateVector:
    return _checked_local(qplate.matrix.conj().T, state, [pol, oam])


def vvb_basis(name: str, q: float = 0.5, pol: str = "pol", oam: str = "oam") -> StateVector:
    """r̂, θ̂, π̂⁺, π̂⁻ on pol⊗OAM (names ``r``, ``theta``, ``pi+``, ``pi-``)."""
    s = QPlate(q).shift
    table = {
        "r": [(1, "R", s), (1, "L", -s)],
        "theta": [(1, "R", s), (-1, "L", -s)],
        "pi+": [(1, "L", s), (1, "R", -s)],
        "pi-": [(1, "L", s), (-1, "R", -s)],
    }
    aliases = {"r̂": "r", "θ̂": "theta", "π̂⁺": "pi+", "π̂⁻": "pi-", "θ": "theta"}
    key = aliases.get(name, name)
    if key not in table:
        raise KeyError(f"unknown VVB basis state {name!r}; use one of {sorted(table)}")
    return pol_oam_state(table[key], pol, oam)


@dataclass(frozen=True)
class ProjectionResult:
    state: StateVector
    probability: float
    degenerate: bool


def fundamental_projector(oam_factor_dim: int = OAM_DIM) -> np.ndarray:
    P = np.zeros((oam_factor_dim, oam_factor_dim))
    P[oam_index(0), oam_index(0)] = 1
    return P


def project_fundamental(state: StateVector, oam: str = "oam", tol: float = 1e-14) -> ProjectionResult:
    """Single-mode-fibre filter: keep only the m = 0 component."""
    projected = apply_local(fundamental_projector(), state, [oam])
    prob = projected.norm**2 / state.norm**2
    if prob <= tol:
        return ProjectionResult(projected, 0.0, True)
    return ProjectionResult(projected.normalize(), float(prob), False)


def describe(matrix: np.ndarray, name: str) -> str:
    """Annotated matrix printout for documentation."""
    np_str = np.array2string(np.asarray(matrix), precision=4, suppress_small=True)
    return f"{name} =\n{np_str}"
