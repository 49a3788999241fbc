"""Dense quantum linear algebra over labelled tensor factors.

States, operators and density matrices carry a :class:`HilbertLabel` naming
each tensor factor (``tfm_s``, ``pol_i``, ``oam_s``, ...). All values are
immutable; every operation returns a new object.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

UNITARY_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10


class CompositionError(ValueError):
    """Raised when tensor factors cannot be combined or matched."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class HilbertLabel:
    """Ordered tensor decomposition ``((name, dim), ...)``."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(n), int(d)) for n, d in self.factors)
        names = [n for n, _ in factors]
        if len(set(names)) != len(names):
            raise CompositionError(f"duplicate factor names in {names}")
        if any(d < 1 for _, d in factors):
            raise ValueError(f"factor dimensions must be positive: {factors}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, *factors: tuple[str, int]) -> "HilbertLabel":
        return cls(tuple(factors))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise CompositionError(f"unknown factor {name!r}; have {self.names}") from None

    def dim_of(self, name: str) -> int:
        return self.dims[self.index(name)]

    def __add__(self, other: "HilbertLabel") -> "HilbertLabel":
        clash = set(self.names) & set(other.names)
        if clash:
            raise CompositionError(f"factor names {sorted(clash)} appear in both labels")
        return HilbertLabel(self.factors + other.factors)

    def subset(self, names: Iterable[str]) -> "HilbertLabel":
        wanted = set(names)
        for n in wanted:
            self.index(n)
        return HilbertLabel(tuple(f for f in self.factors if f[0] in wanted))

    def permuted(self, order: Sequence[str]) -> "HilbertLabel":
        if sorted(order) != sorted(self.names):
            raise CompositionError(f"order {list(order)} is not a permutation of {self.names}")
        return HilbertLabel(tuple(self.factors[self.index(n)] for n in order))

    def __str__(self):
        return " ⊗ ".join(f"{n}:{d}" for n, d in self.factors)


@dataclass(frozen=True)
class StateVector:
    label: HilbertLabel
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.label.dim,):
            raise CompositionError(
                f"amplitude length {amps.shape[0]} does not match label dimension {self.label.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, label: HilbertLabel, **levels: int) -> "StateVector":
        """Computational basis ket; unspecified factors default to index 0."""
        for name in levels:
            label.index(name)
        idx = tuple(levels.get(n, 0) for n in label.names)
        amps = np.zeros(label.dims, dtype=complex)
        amps[idx] = 1.0
        return cls(label, amps.ravel())

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalise the zero vector")
        return StateVector(self.label, self.amplitudes / n)

    def inner(self, other: "StateVector") -> complex:
        """⟨self|other⟩."""
        _check_same(self.label, other.label)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def overlap(self, other: "StateVector") -> float:
        """Phase-insensitive |⟨self|other⟩|."""
        return abs(self.inner(other))

    def density(self) -> "DensityMatrix":
        s = self.normalize()
        return DensityMatrix(self.label, np.outer(s.amplitudes, s.amplitudes.conj()))

    def tensor_array(self) -> np.ndarray:
        return self.amplitudes.reshape(self.label.dims)

    def permute(self, order: Sequence[str]) -> "StateVector":
        new_label = self.label.permuted(order)
        axes = [self.label.index(n) for n in order]
        return StateVector(new_label, np.transpose(self.tensor_array(), axes).ravel())

    def relabel(self, mapping: dict[str, str]) -> "StateVector":
        label = HilbertLabel(tuple((mapping.get(n, n), d) for n, d in self.label.factors))
        return StateVector(label, self.amplitudes)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same(self.label, other.label)
        return StateVector(self.label, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_same(self.label, other.label)
        return StateVector(self.label, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.label, self.amplitudes * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "StateVector":
        return StateVector(self.label, self.amplitudes / scalar)


@dataclass(frozen=True)
class Operator:
    label: HilbertLabel
    matrix: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.label.dim, self.label.dim):
            raise CompositionError(f"operator shape {m.shape} does not match label dimension {self.label.dim}")
        if self.unitary and not is_unitary(m):
            raise ValueError("operator flagged unitary but U†U deviates from identity")
        object.__setattr__(self, "matrix", m)

    @property
    def dagger(self) -> "Operator":
        return Operator(self.label, self.matrix.conj().T, self.unitary)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same(self.label, other.label)
        return Operator(self.label, self.matrix @ other.matrix, self.unitary and other.unitary)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    The input is symmetrised to (ρ+ρ†)/2 before validation. ``strict=False``
    skips the trace and positivity checks (used for linear-inversion output).
    """

    label: HilbertLabel
    matrix: np.ndarray
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.label.dim, self.label.dim):
            raise CompositionError(f"density shape {m.shape} does not match label dimension {self.label.dim}")
        m = (m + m.conj().T) / 2
        if self.strict:
            tr = np.trace(m).real
            if abs(tr - 1) > TRACE_ATOL:
                raise ValueError(f"density matrix trace {tr!r} differs from 1")
            lo = np.linalg.eigvalsh(m)[0]
            if lo < -PSD_ATOL:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.label.dim

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    @property
    def is_physical(self) -> bool:
        return abs(self.trace - 1) <= TRACE_ATOL and self.min_eigenvalue >= -PSD_ATOL

    @classmethod
    def maximally_mixed(cls, label: HilbertLabel) -> "DensityMatrix":
        return cls(label, np.eye(label.dim) / label.dim)

    def permute(self, order: Sequence[str]) -> "DensityMatrix":
        new_label = self.label.permuted(order)
        n = len(self.label.dims)
        axes = [self.label.index(name) for name in order]
        t = self.matrix.reshape(self.label.dims * 2)
        t = np.transpose(t, axes + [a + n for a in axes])
        return DensityMatrix(new_label, t.reshape(self.dim, self.dim), self.strict)

    def mix(self, other: "DensityMatrix", weight: float) -> "DensityMatrix":
        """(1-weight)·self + weight·other."""
        _check_same(self.label, other.label)
        return DensityMatrix(self.label, (1 - weight) * self.matrix + weight * other.matrix)


def _check_same(a: HilbertLabel, b: HilbertLabel):
    if a != b:
        raise CompositionError(f"label mismatch: [{a}] vs [{b}]")


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(matrix)
    return m.shape[0] == m.shape[1] and np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0, atol=atol)


def tensor(a, b):
    """Kronecker product of two states (or two density matrices)."""
    label = a.label + b.label
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(label, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(label, np.kron(a.matrix, b.matrix), a.strict and b.strict)
    raise TypeError("tensor expects two StateVectors or two DensityMatrices")


def tensor_all(*items):
    out = items[0]
    for item in items[1:]:
        out = tensor(out, item)
    return out


def apply(op: Operator, s: StateVector) -> StateVector:
    _check_same(op.label, s.label)
    return StateVector(s.label, op.matrix @ s.amplitudes)


def tensordot_axes(tensor_: np.ndarray, matrix: np.ndarray, axes: list[int]) -> np.ndarray:
    k = len(axes)
    local_dims = [tensor_.shape[a] for a in axes]
    m = matrix.reshape(local_dims * 2)
    out = np.tensordot(m, tensor_, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the new axes first; move them back in place
    return np.moveaxis(out, list(range(k)), axes)


def apply_local(matrix: np.ndarray, s: StateVector, factors: Sequence[str]) -> StateVector:
    """Apply ``matrix`` to the named factors of ``s`` (identity elsewhere)."""
    axes = [s.label.index(f) for f in factors]
    expect = prod(s.label.dims[a] for a in axes)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (expect, expect):
        raise CompositionError(f"local matrix {matrix.shape} does not fit factors {list(factors)} (dim {expect})")
    out = tensordot_axes(s.tensor_array(), matrix, axes)
    return StateVector(s.label, out.ravel())


def embed(matrix: np.ndarray, label: HilbertLabel, factors: Sequence[str], unitary: bool = False) -> Operator:
    """Lift a local matrix on ``factors`` to a full Operator on ``label``."""
    eye = np.eye(label.dim, dtype=complex).reshape(label.dims + (label.dim,))
    axes = [label.index(f) for f in factors]
    full = tensordot_axes(eye, np.asarray(matrix, dtype=complex), axes)
    return Operator(label, full.reshape(label.dim, label.dim), unitary)


def conjugate_local(matrix: np.ndarray, rho: DensityMatrix, factors: Sequence[str]) -> DensityMatrix:
    """U ρ U† for a local U acting on ``factors``."""
    full = embed(matrix, rho.label, factors).matrix
    return DensityMatrix(rho.label, full @ rho.matrix @ full.conj().T, rho.strict)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    keep = list(keep)
    for name in keep:
        rho.label.index(name)
    kept = [n for n in rho.label.names if n in keep]
    traced = [n for n in rho.label.names if n not in keep]
    perm = rho.permute(kept + traced) if traced else rho.permute(kept)
    dk = prod(rho.label.dim_of(n) for n in kept)
    dt = prod(rho.label.dim_of(n) for n in traced)
    reduced = np.einsum("ajbj->ab", perm.matrix.reshape(dk, dt, dk, dt))
    return DensityMatrix(rho.label.subset(kept).permuted(kept), reduced, rho.strict)


def reduced_state(s: StateVector, keep: Iterable[str]) -> DensityMatrix:
    """Partial trace of |s⟩⟨s| without forming the full projector."""
    keep = list(keep)
    for name in keep:
        s.label.index(name)
    kept = [n for n in s.label.names if n in keep]
    traced = [n for n in s.label.names if n not in keep]
    t = s.permute(kept + traced).normalize().amplitudes
    dk = prod(s.label.dim_of(n) for n in kept)
    t = t.reshape(dk, -1)
    return DensityMatrix(s.label.subset(kept).permuted(kept), t @ t.conj().T)


def fidelity(rho: DensityMatrix, target: StateVector) -> float:
    """Pure-target fidelity ⟨ψ|ρ|ψ⟩."""
    _check_same(rho.label, target.label)
    psi = target.normalize().amplitudes
    value = np.vdot(psi, rho.matrix @ psi)
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise ValueError(f"fidelity has imaginary part {value.imag:.3e}")
    return float(min(max(value.real, 0.0), 1.0))


def purity(rho: DensityMatrix) -> float:
    return float(np.sum(np.abs(rho.matrix) ** 2))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _check_same(a.label, b.label)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix))))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(label: HilbertLabel, rng: np.random.Generator) -> StateVector:
    z = rng.standard_normal(label.dim) + 1j * rng.standard_normal(label.dim)
    return StateVector(label, z).normalize()


def random_density(label: HilbertLabel, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix of the given rank."""
    rank = label.dim if rank is None else rank
    g = rng.standard_normal((label.dim, rank)) + 1j * rng.standard_normal((label.dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(label, m / np.trace(m).real)


# -- plain-text matrix files -------------------------------------------------

def format_complex(z: complex) -> str:
    re, im = float(z.real), float(z.imag)
    sign = "-" if np.signbit(im) else "+"
    return f"{re!r}{sign}{abs(im)!r}j"


def write_matrix(path: str | Path, matrix: np.ndarray, extra: Sequence[str] = ()):
    """Write ``dim=<n>`` followed by n rows of whitespace-separated entries.

    ``extra`` lines (e.g. a metrics or preparation line) are appended after the matrix.
    """
    m = np.asarray(matrix, dtype=complex)
    lines = [f"dim={m.shape[0]}"]
    lines += [" ".join(format_complex(z) for z in row) for row in m]
    lines += list(extra)
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: str | Path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("dim="):
        raise ValueError(f"{path}: missing 'dim=<n>' header")
    n = int(lines[0][4:])
    rows = lines[1:1 + n]
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} matrix rows, found {len(rows)}")
    m = np.array([[complex(tok) for tok in row.split()] for row in rows])
    if m.shape != (n, n):
        raise ValueError(f"{path}: matrix is {m.shape}, header says {n}")
    return m
