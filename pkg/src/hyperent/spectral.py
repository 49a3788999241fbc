"""Joint spectral amplitudes, their Schmidt modes and delayed mode overlaps.

Frequencies are detunings from the degenerate PDC centre frequency and are
measured in the same units as the spectral width ``sigma`` (dimensionless 1
by default).
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .hilbert import format_complex

MIN_POINTS = 16

_DEGENERACY_RTOL = 1e-8


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform symmetric grid on [-W·σ, W·σ] with trapezoidal weights."""

    half_width: float = 5.0
    points: int = 256
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.points < MIN_POINTS:
            raise ValueError(f"grid too coarse: {self.points} points (minimum {MIN_POINTS})")
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.points < 64 or self.half_width < 4:
            warnings.warn(f"grid N={self.points}, W={self.half_width} is below the accuracy "
                          "target (N>=64, W>=4)", stacklevel=3)

    @property
    def omega(self) -> np.ndarray:
        extent = self.half_width * self.sigma
        return np.linspace(-extent, extent, self.points)

    @property
    def step(self) -> float:
        return 2 * self.half_width * self.sigma / (self.points - 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.points, self.step)
        w[0] = w[-1] = self.step / 2
        return w


@dataclass(frozen=True)
class JointSpectralAmplitude:
    grid: FrequencyGrid
    sigma: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        n = self.grid.points
        if v.shape != (n, n):
            raise ValueError(f"JSA values have shape {v.shape}, grid needs {(n, n)}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def norm(self) -> float:
        """Quadrature value of ∬|f|²."""
        w = self.grid.weights
        return float(np.einsum("i,ij,j->", w, np.abs(self.values) ** 2, w))

    def kernel(self) -> np.ndarray:
        """Weight-scaled matrix √w_i f_ij √w_j whose SVD is the Schmidt decomposition."""
        sw = np.sqrt(self.grid.weights)
        return sw[:, None] * self.values * sw[None, :]


def _grid_for(sigma: float, grid: FrequencyGrid | None) -> FrequencyGrid:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if grid is None:
        return FrequencyGrid(sigma=sigma)
    if grid.sigma != sigma:
        return FrequencyGrid(grid.half_width, grid.points, sigma)
    return grid


def build_engineered_jsa(sigma: float = 1.0, grid: FrequencyGrid | None = None) -> JointSpectralAmplitude:
    """Antisymmetric first-order Hermite-Gauss JSA, 2(ω_s−ω_i)/(√π σ²)·exp(−(ω_s²+ω_i²)/σ²)."""
    grid = _grid_for(sigma, grid)
    ws, wi = np.meshgrid(grid.omega, grid.omega, indexing="ij")
    f = 2 * (ws - wi) / (np.sqrt(np.pi) * sigma**2) * np.exp(-(ws**2 + wi**2) / sigma**2)
    return JointSpectralAmplitude(grid, sigma, f)


def build_separable_jsa(sigma: float = 1.0, grid: FrequencyGrid | None = None) -> JointSpectralAmplitude:
    """Product of two Gaussians; the Schmidt-number-one control case."""
    grid = _grid_for(sigma, grid)
    ws, wi = np.meshgrid(grid.omega, grid.omega, indexing="ij")
    f = np.sqrt(2 / (np.pi * sigma**2)) * np.exp(-(ws**2 + wi**2) / sigma**2)
    return JointSpectralAmplitude(grid, sigma, f)


def gaussian_pump(sigma: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Pump envelope α(ω_s+ω_i) for a transform-limited Gaussian pulse."""
    return lambda ws, wi: np.exp(-((ws + wi) ** 2) / (2 * sigma**2))


def hermite_gauss_pmf(sigma: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """First-order Hermite-Gauss phasematching along the ω_s−ω_i direction."""
    return lambda ws, wi: (ws - wi) * np.exp(-((ws - wi) ** 2) / (2 * sigma**2))


def build_jsa_from_factors(pump, phasematching, sigma: float = 1.0,
                           grid: FrequencyGrid | None = None) -> JointSpectralAmplitude:
    """JSA = α·φ evaluated on the grid, normalised numerically to unit ∬|f|²."""
    grid = _grid_for(sigma, grid)
    ws, wi = np.meshgrid(grid.omega, grid.omega, indexing="ij")
    f = np.asarray(pump(ws, wi) * phasematching(ws, wi), dtype=complex)
    jsa = JointSpectralAmplitude(grid, sigma, f)
    n = jsa.norm
    if n <= 0:
        raise ValueError("pump × phasematching vanishes on the grid")
    return JointSpectralAmplitude(grid, sigma, f / np.sqrt(n))


def hermite_gauss_mode(order: int, grid: FrequencyGrid) -> np.ndarray:
    """HG0 ∝ e^{−ω²/σ²} and HG1 ∝ ω e^{−ω²/σ²}, analytically normalised."""
    s, w = grid.sigma, grid.omega
    if order == 0:
        return (2 / (np.pi * s**2)) ** 0.25 * np.exp(-w**2 / s**2) + 0j
    if order == 1:
        return (2**5 / (np.pi * s**6)) ** 0.25 * w * np.exp(-w**2 / s**2) + 0j
    raise ValueError("only HG0 and HG1 are defined")


@dataclass(frozen=True)
class SchmidtDecomposition:
    """f(ω_s, ω_i) = Σ_k d_k u_k(ω_s) v_k(ω_i) on ``grid``."""

    grid: FrequencyGrid
    coefficients: np.ndarray
    signal_modes: np.ndarray  # shape (K, N)
    idler_modes: np.ndarray
    norm: float  # ∬|f|² before normalisation of the coefficients

    @property
    def schmidt_number(self) -> float:
        return float(1 / np.sum(self.coefficients**4))

    def captured_weight(self, n_modes: int) -> float:
        return float(np.sum(self.coefficients[:n_modes] ** 2))

    def reconstruct(self, n_modes: int | None = None) -> np.ndarray:
        k = len(self.coefficients) if n_modes is None else n_modes
        d = self.coefficients[:k] * np.sqrt(self.norm)
        return np.einsum("k,ki,kj->ij", d, self.signal_modes[:k], self.idler_modes[:k])


def inner(a: np.ndarray, b: np.ndarray, grid: FrequencyGrid) -> complex:
    return complex(np.sum(grid.weights * np.conj(a) * b))


def _canonicalise_cluster(u: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    # Degenerate Schmidt coefficients leave the modes defined only up to a
    # unitary mixing; diagonalise ⟨ω²⟩ in the cluster so the modes come out
    # ordered by spectral width (HG0 before HG1 for the engineered JSA).
    w, om = grid.weights, grid.omega
    m = np.einsum("ki,i,li->kl", u.conj(), w * om**2, u)
    _, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return vecs.T @ u


def schmidt_decompose(jsa: JointSpectralAmplitude, max_modes: int | None = None) -> SchmidtDecomposition:
    """SVD of the weight-scaled kernel, returned as quadrature-orthonormal mode functions.

    Each signal mode is phased so that its largest-magnitude sample is real
    positive; the paired idler mode absorbs the conjugate phase.
    """
    grid = jsa.grid
    sw = np.sqrt(grid.weights)
    K = jsa.kernel()
    U, s, Vh = np.linalg.svd(K)
    if not np.all(np.isfinite(s)):
        raise np.linalg.LinAlgError("non-finite singular values in JSA kernel")
    total = float(np.sum(s**2))
    d = s / np.sqrt(total)

    u = (U.T / sw[None, :])  # rows: signal mode samples
    # canonicalise degenerate clusters among the significant modes
    start = 0
    n_sig = int(np.sum(d > 1e-6))
    while start < n_sig:
        stop = start + 1
        while stop < n_sig and abs(d[stop] - d[start]) <= _DEGENERACY_RTOL * d[start]:
            stop += 1
        if stop - start > 1:
            u[start:stop] = _canonicalise_cluster(u[start:stop], grid)
        start = stop

    peak = np.argmax(np.abs(u), axis=1)
    phase = u[np.arange(len(u)), peak]
    u = u * (np.abs(phase) / phase)[:, None]
    # v_k(ω_j) = Σ_i w_i u_k*(ω_i) f(ω_i, ω_j) / d_k, consistent with the fixed u_k
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (u.conj() * grid.weights[None, :]) @ jsa.values / (d[:, None] * np.sqrt(total))
    # below-noise modes: take the raw SVD idler vectors
    tiny = d <= 1e-6
    if np.any(tiny):
        v[tiny] = (Vh[tiny] / sw[None, :]) * (np.abs(phase[tiny]) / phase[tiny]).conj()[:, None]

    keep = len(d) if max_modes is None else max_modes
    return SchmidtDecomposition(grid, d[:keep].copy(), u[:keep].copy(), v[:keep].copy(), total)


def delayed_overlap(mode_a: np.ndarray, mode_b: np.ndarray, tau: float, grid: FrequencyGrid) -> complex:
    """Quadrature value of ∫ a*(ω) b(ω) e^{−iωτ} dω."""
    a, b = np.asarray(mode_a), np.asarray(mode_b)
    if a.shape != (grid.points,) or b.shape != (grid.points,):
        raise ValueError(f"modes of shape {a.shape}, {b.shape} do not live on a {grid.points}-point grid")
    return complex(np.sum(grid.weights * np.conj(a) * b * np.exp(-1j * grid.omega * tau)))


def delayed_overlap_matrix(modes_a: np.ndarray, modes_b: np.ndarray, tau: float,
                           grid: FrequencyGrid) -> np.ndarray:
    """M[k, k'] = ∫ a_k*(ω) b_k'(ω) e^{−iωτ} dω for stacks of modes."""
    phase = grid.weights * np.exp(-1j * grid.omega * tau)
    return np.conj(modes_a) @ (phase[:, None] * np.asarray(modes_b).T)


# -- unit helpers ------------------------------------------------------------

def bandwidth_nm_to_hz(delta_lambda_nm: float, centre_nm: float) -> float:
    """Δν = cΔλ/λ² (FWHM conversion, no factor of 2π)."""
    return SPEED_OF_LIGHT * delta_lambda_nm * 1e-9 / (centre_nm * 1e-9) ** 2


def marginal_fwhm(jsa: JointSpectralAmplitude) -> float:
    """FWHM of the signal marginal intensity ∫|f(ω, ω_i)|² dω_i, by linear interpolation."""
    w = jsa.grid.omega
    marg = (np.abs(jsa.values) ** 2) @ jsa.grid.weights
    half = marg.max() / 2
    above = np.nonzero(marg >= half)[0]
    lo, hi = above[0], above[-1]
    left = np.interp(half, [marg[lo - 1], marg[lo]], [w[lo - 1], w[lo]])
    right = np.interp(half, [marg[hi + 1], marg[hi]], [w[hi + 1], w[hi]])
    return float(right - left)


def sigma_from_bandwidth(delta_lambda_nm: float, centre_nm: float) -> float:
    """Angular-frequency σ (rad/s) whose engineered JSA has the given marginal FWHM in wavelength."""
    ref = build_engineered_jsa(1.0, FrequencyGrid(6.0, 1201))
    fwhm_per_sigma = marginal_fwhm(ref)
    return 2 * np.pi * bandwidth_nm_to_hz(delta_lambda_nm, centre_nm) / fwhm_per_sigma


# -- CSV interchange -----------------------------------------------------------

def write_jsa_csv(path: str | Path, jsa: JointSpectralAmplitude):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", repr(float(jsa.sigma))])
        w.writerow(["N", jsa.grid.points])
        for row in jsa.values:
            w.writerow([format_complex(z) for z in row])


def read_jsa_csv(path: str | Path, half_width: float = 5.0) -> JointSpectralAmplitude:
    """Inverse of :func:`write_jsa_csv`; the file does not carry W, so pass it."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][0] != "sigma" or rows[1][0] != "N":
        raise ValueError(f"{path}: expected 'sigma,<v>' and 'N,<n>' header lines")
    sigma, n = float(rows[0][1]), int(rows[1][1])
    values = np.array([[complex(tok) for tok in r] for r in rows[2:2 + n]])
    return JointSpectralAmplitude(FrequencyGrid(half_width, n, sigma), sigma, values)


def write_schmidt_csv(path: str | Path, schmidt: SchmidtDecomposition, n_modes: int | None = None):
    k = len(schmidt.coefficients) if n_modes is None else n_modes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "d_k"])
        for i, d in enumerate(schmidt.coefficients[:k]):
            w.writerow([i, repr(float(d))])


def write_modes_csv(path: str | Path, schmidt: SchmidtDecomposition, n_modes: int):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["omega"]
        for k in range(n_modes):
            header += [f"u{k}_re", f"u{k}_im", f"v{k}_re", f"v{k}_im"]
        w.writerow(header)
        for j, om in enumerate(schmidt.grid.omega):
            row = [repr(float(om))]
            for k in range(n_modes):
                u, v = schmidt.signal_modes[k, j], schmidt.idler_modes[k, j]
                row += [repr(float(u.real)), repr(float(u.imag)), repr(float(v.real)), repr(float(v.imag))]
            w.writerow(row)
