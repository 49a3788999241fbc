"""CPTP noise channels bridging the ideal states to imperfect experimental ones."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hilbert import DensityMatrix, embed


def depolarize(rho: DensityMatrix, p: float) -> DensityMatrix:
    """(1−p)ρ + p·I/d."""
    _check_strength(p)
    return DensityMatrix(rho.label, (1 - p) * rho.matrix + p * np.eye(rho.dim) / rho.dim)


def depolarize_subspace(rho: DensityMatrix, basis: Sequence[np.ndarray], p: float) -> DensityMatrix:
    """(1−p)ρ + p·(QρQ + Tr(Pρ)·P/k) with P the projector on span(basis), Q = 1 − P.

    Kraus operators √(1−p)·1, √p·Q and √(p/k)·|b_i⟩⟨b_j|; coherences across
    the subspace boundary shrink by (1−p).
    """
    _check_strength(p)
    B = np.column_stack([np.asarray(b, dtype=complex) for b in basis])
    B, _ = np.linalg.qr(B)
    P = B @ B.conj().T
    Q = np.eye(rho.dim) - P
    m = rho.matrix
    inside = np.trace(P @ m).real
    out = (1 - p) * m + p * (Q @ m @ Q + inside * P / B.shape[1])
    return DensityMatrix(rho.label, out)


def dephase(rho: DensityMatrix, factor: str, p: float) -> DensityMatrix:
    """Phase-flip channel on one qubit factor: (1−p/2)ρ + (p/2)ZρZ."""
    _check_strength(p)
    if rho.label.dim_of(factor) != 2:
        raise ValueError(f"dephasing is defined for qubit factors; {factor!r} has dim {rho.label.dim_of(factor)}")
    Z = embed(np.diag([1.0, -1.0]), rho.label, [factor]).matrix
    return DensityMatrix(rho.label, (1 - p / 2) * rho.matrix + (p / 2) * Z @ rho.matrix @ Z)


def _check_strength(p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise strength must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class NoiseModel:
    """Depolarising strength plus optional per-factor dephasing.

    ``support`` restricts the depolarising part to the span of the given
    vectors (e.g. the two terms of a ψ-type state); ``None`` means the whole space.
    """

    depolarizing: float = 0.0
    dephasing: tuple[tuple[str, float], ...] = ()
    support: tuple[np.ndarray, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        _check_strength(self.depolarizing)
        for _, p in self.dephasing:
            _check_strength(p)

    @property
    def is_identity(self) -> bool:
        return self.depolarizing == 0 and all(p == 0 for _, p in self.dephasing)

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        out = rho
        for factor, p in self.dephasing:
            out = dephase(out, factor, p)
        if self.depolarizing:
            if self.support is None:
                out = depolarize(out, self.depolarizing)
            else:
                out = depolarize_subspace(out, self.support, self.depolarizing)
        return out


def depolarizing_for_fidelity(target_fidelity: float, dim: int) -> float:
    """Solve (1−p) + p/d = F for p."""
    return (1 - target_fidelity) / (1 - 1 / dim)
