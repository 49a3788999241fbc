"""Analysis settings and the POVM elements they realise.

A setting assigns one of the six labels H, V, D, A, R, L to every qubit.
Each label is realised by a QWP-HWP-polariser stage; for VVB and OAM
qubits the label names the polarisation analysis performed *after* a
measurement q-plate and single-mode-fibre filter, and the matching POVM
element on the encoded qubit is obtained by pulling that projector back
through the optics.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .. import optics
from ..hilbert import DensityMatrix, HilbertLabel, StateVector

LABELS = ("H", "V", "D", "A", "R", "L")
MINIMAL_LABELS = ("H", "V", "D", "R")
BASES = {"Z": ("H", "V"), "X": ("D", "A"), "Y": ("R", "L")}


@dataclass(frozen=True)
class AnalysisSetting:
    labels: tuple[str, ...]
    angles: tuple[tuple[float, float], ...] | None = None  # (qwp, hwp) per qubit, overrides labels

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        for lab in self.labels:
            if lab not in LABELS:
                raise ValueError(f"unknown projector label {lab!r}; use one of {LABELS}")
        if self.angles is not None and len(self.angles) != len(self.labels):
            raise ValueError("need one (qwp, hwp) pair per qubit")

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def plate_angles(self, k: int) -> tuple[float, float]:
        return self.angles[k] if self.angles is not None else optics.ANALYSER_ANGLES[self.labels[k]]

    def kets(self) -> list[np.ndarray]:
        return [optics.analyser_ket(*self.plate_angles(k)) for k in range(self.n_qubits)]

    def __str__(self):
        return "".join(self.labels)


def generate_settings(n_qubits: int, overcomplete: bool = True) -> list[AnalysisSetting]:
    """6^n overcomplete product settings, or the 4^n set built from H, V, D, R."""
    if n_qubits not in (2, 4):
        raise ValueError(f"tomography supports 2 or 4 qubits, got {n_qubits}")
    alphabet = LABELS if overcomplete else MINIMAL_LABELS
    return [AnalysisSetting(combo) for combo in itertools.product(alphabet, repeat=n_qubits)]


def pauli_bases(n_qubits: int) -> dict[str, list[AnalysisSetting]]:
    """Group the overcomplete set into 3^n Pauli measurement bases of 2^n outcomes each."""
    out = {}
    for bases in itertools.product("ZXY", repeat=n_qubits):
        outcomes = itertools.product(*(BASES[b] for b in bases))
        out["".join(bases)] = [AnalysisSetting(o) for o in outcomes]
    return out


def _proj(ket: np.ndarray) -> np.ndarray:
    return np.outer(ket, ket.conj())


def _kron_all(mats) -> np.ndarray:
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


class MeasurementScheme:
    """Maps settings to POVM elements on the reconstruction space ``label``."""

    name = "abstract"
    label: HilbertLabel

    def element(self, setting: AnalysisSetting) -> np.ndarray:
        raise NotImplementedError

    def elements(self, settings) -> np.ndarray:
        return np.stack([self.element(s) for s in settings])

    def _cached(self, key, build):
        # per-photon elements repeat across settings; frozen dataclasses still carry a __dict__
        cache = self.__dict__.setdefault("_element_cache", {})
        if key not in cache:
            cache[key] = build()
        return cache[key]

    def born_probability(self, rho: DensityMatrix, setting: AnalysisSetting, tol: float = 1e-12) -> float:
        return born_probability(rho, setting, self, tol)


@dataclass(frozen=True)
class QubitScheme(MeasurementScheme):
    """Direct waveplate analysis of n polarisation-like qubits."""

    n_qubits: int = 2
    name = "qubit"

    @property
    def label(self) -> HilbertLabel:
        return HilbertLabel(tuple((f"q{k + 1}", 2) for k in range(self.n_qubits)))

    def element(self, setting: AnalysisSetting) -> np.ndarray:
        _check_n(setting, self.n_qubits)
        return _kron_all(_proj(k) for k in setting.kets())


def _check_n(setting: AnalysisSetting, n: int):
    if setting.n_qubits != n:
        raise ValueError(f"setting {setting} has {setting.n_qubits} labels, scheme expects {n}")


def _oam_after_qplate(ket: np.ndarray, qplate: optics.QPlate) -> np.ndarray:
    """Q†(|ket⟩⟨ket| ⊗ |0⟩⟨0|)Q on pol⊗oam: the analysis pulled back through q-plate + SMF."""
    Q = qplate.matrix
    P = np.kron(_proj(ket), optics.fundamental_projector())
    return Q.conj().T @ P @ Q


@dataclass(frozen=True)
class VvbScheme(MeasurementScheme):
    """Two photons, each analysed by q-plate → fibre → polarisation projector.

    The reconstruction space is the {r̂, θ̂} qubit of each photon.
    """

    qplate: optics.QPlate = optics.QPlate()
    name = "vvb"
    n_qubits = 2

    @property
    def label(self) -> HilbertLabel:
        return HilbertLabel.of(("vvb_s", 2), ("vvb_i", 2))

    @cached_property
    def isometry(self) -> np.ndarray:
        """Columns r̂, θ̂ on pol⊗oam (10 × 2)."""
        q = self.qplate.q
        return np.column_stack([optics.vvb_basis("r", q).amplitudes, optics.vvb_basis("theta", q).amplitudes])

    def photon_element(self, ket: np.ndarray) -> np.ndarray:
        W = self.isometry
        return W.conj().T @ _oam_after_qplate(ket, self.qplate) @ W

    def element(self, setting: AnalysisSetting) -> np.ndarray:
        _check_n(setting, 2)
        k1, k2 = setting.kets()
        e1 = self._cached(setting.plate_angles(0), lambda: self.photon_element(k1))
        e2 = self._cached(setting.plate_angles(1), lambda: self.photon_element(k2))
        return np.kron(e1, e2)

    def compress(self, state: StateVector) -> StateVector:
        """Express a (pol_s, pol_i, oam_s, oam_i) pure state in the VVB qubit basis."""
        return _compress(state, self.isometry, ("pol_s", "oam_s", "pol_i", "oam_i"), self.label)


@dataclass(frozen=True)
class PolOamScheme(MeasurementScheme):
    """Four-qubit analysis: polarisation projector, then q-plate → fibre → polarisation projector.

    Qubit order (pol_s, pol_i, oam_s, oam_i); the OAM qubit is {m=+2q, m=−2q}.
    Setting labels follow the same order: the first two are the projections
    made before each measurement q-plate, the last two the ones after it.
    """

    qplate: optics.QPlate = optics.QPlate()
    name = "pol-oam"
    n_qubits = 4

    @property
    def label(self) -> HilbertLabel:
        return HilbertLabel.of(("pol_s", 2), ("pol_i", 2), ("oam_s", 2), ("oam_i", 2))

    @cached_property
    def isometry(self) -> np.ndarray:
        """pol(2)⊗{+2q, −2q} → pol(2)⊗oam(5)."""
        s = self.qplate.shift
        emb = np.column_stack([optics.oam_ket(s), optics.oam_ket(-s)])
        return np.kron(np.eye(2), emb)

    def photon_element(self, pol_ket: np.ndarray, oam_ket: np.ndarray) -> np.ndarray:
        # the first polariser transmits H whatever was projected
        K = np.kron(np.outer(optics.H, pol_ket.conj()), np.eye(optics.OAM_DIM))
        E = K.conj().T @ _oam_after_qplate(oam_ket, self.qplate) @ K
        W = self.isometry
        return W.conj().T @ E @ W

    def element(self, setting: AnalysisSetting) -> np.ndarray:
        _check_n(setting, 4)
        ps, pi, os_, oi = setting.kets()
        a = setting.plate_angles
        es = self._cached((a(0), a(2)), lambda: self.photon_element(ps, os_))
        ei = self._cached((a(1), a(3)), lambda: self.photon_element(pi, oi))
        E = np.kron(es, ei)
        # (pol_s, oam_s, pol_i, oam_i) → (pol_s, pol_i, oam_s, oam_i)
        t = E.reshape([2] * 8).transpose(0, 2, 1, 3, 4, 6, 5, 7)
        return t.reshape(16, 16)

    def compress(self, state: StateVector) -> StateVector:
        return _compress(state, self.isometry, ("pol_s", "oam_s", "pol_i", "oam_i"), self.label,
                         reorder=(0, 2, 1, 3))


def _compress(state: StateVector, W: np.ndarray, photon_order, label: HilbertLabel,
              reorder=None) -> StateVector:
    s = state.permute(list(photon_order))
    c = np.kron(W, W).conj().T @ s.amplitudes
    kept = np.linalg.norm(c) ** 2
    if abs(kept - 1) > 1e-10:
        raise ValueError(f"state has weight {1 - kept:.3e} outside the encoded qubit subspace")
    if reorder is not None:
        c = c.reshape([2] * len(reorder)).transpose(reorder).ravel()
    return StateVector(label, c)


def scheme_for(n_qubits: int, kind: str = "qubit") -> MeasurementScheme:
    if kind == "qubit":
        return QubitScheme(n_qubits)
    if kind == "vvb" and n_qubits == 2:
        return VvbScheme()
    if kind == "pol-oam" and n_qubits == 4:
        return PolOamScheme()
    raise ValueError(f"no {kind!r} scheme for {n_qubits} qubits")


def born_probability(rho: DensityMatrix, setting: AnalysisSetting, scheme: MeasurementScheme | None = None,
                     tol: float = 1e-12) -> float:
    """Tr(ρ E_setting), clipped to [0, 1] when within ``tol`` of the interval."""
    scheme = QubitScheme(setting.n_qubits) if scheme is None else scheme
    E = scheme.element(setting)
    if E.shape != rho.matrix.shape:
        raise ValueError(f"setting acts on dimension {E.shape[0]}, state has {rho.dim}")
    p = float(np.trace(rho.matrix @ E).real)
    if p < -tol or p > 1 + tol:
        raise ValueError(f"Born probability {p} outside [0, 1]")
    if p < tol:
        return 0.0
    return 1.0 if p > 1 - tol else p
