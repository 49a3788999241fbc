"""Two-photon interference of the hyperentangled state at a balanced beam splitter.

Two independent routes to the cross-port coincidence probability p_cross(τ, φ):

* :func:`hom_analytic`: the closed form for the engineered JSA,
  p_cross = 1/2 − 1/4·exp(−σ²τ²/4)(σ²τ² − 2)cos φ;
* :func:`hom_numeric`: the Schmidt-mode double sum evaluated by quadrature.

The delay τ is applied to the idler photon. A third, discrete route
(:func:`beamsplitter_transform`) propagates labelled two-photon kets through
the beam splitter at zero delay with explicit bosonic symmetrisation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .hilbert import DensityMatrix, HilbertLabel, StateVector, tensordot_axes
from .noise import NoiseModel
from .source import POL_LABEL
from .spectral import SchmidtDecomposition, delayed_overlap_matrix

#: a† → (i a† + b†)/√2, b† → (a† + i b†)/√2; columns are the input ports
BS_MATRIX = np.array([[1j, 1], [1, 1j]]) / np.sqrt(2)
PORTS = ("a", "b")


@dataclass(frozen=True)
class HomPoint:
    tau: float
    phi: float
    p_cross: float
    p_same: float

    def __post_init__(self):
        if not -1e-12 <= self.p_cross <= 1 + 1e-12:
            raise ValueError(f"p_cross={self.p_cross} outside [0, 1]")
        if abs(self.p_cross + self.p_same - 1) > 1e-10:
            raise ValueError("p_cross + p_same must equal 1 in the lossless model")


@dataclass(frozen=True)
class HomScan:
    points: tuple[HomPoint, ...]
    sigma: float
    generator: str
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def taus(self) -> np.ndarray:
        return np.array([p.tau for p in self.points])

    @property
    def phis(self) -> np.ndarray:
        return np.array([p.phi for p in self.points])

    @property
    def p_cross(self) -> np.ndarray:
        return np.array([p.p_cross for p in self.points])


class Truncation(ValueError):
    """The requested Schmidt truncation misses too much of the JSA weight."""


# -- time-frequency exchange factor -----------------------------------------------

def tfm_exchange_analytic(tau, sigma: float = 1.0):
    """⟨SWAP⟩ of the delayed TFM singlet: −exp(−x²/4)(1 − x²/2) with x = στ."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x2 = (sigma * np.asarray(tau, dtype=float)) ** 2
    return -np.exp(-x2 / 4) * (1 - x2 / 2)


def _choose_modes(schmidt: SchmidtDecomposition, n_modes: int | None, min_weight: float) -> int:
    d2 = np.cumsum(schmidt.coefficients**2)
    if n_modes is None:
        n_modes = int(np.searchsorted(d2, min_weight) + 1)
        n_modes = min(n_modes, len(d2))
    captured = float(d2[n_modes - 1])
    if captured < min_weight:
        raise Truncation(f"{n_modes} Schmidt modes capture weight {captured:.8f} < {min_weight}")
    return n_modes


def tfm_exchange_numeric(schmidt: SchmidtDecomposition, tau, n_modes: int | None = None,
                         min_weight: float = 1 - 1e-6):
    """Σ_kk' d_k d_k' ∫u_k* v_k' e^{−iωτ} ∫v_k* u_k' e^{+iωτ}, by quadrature."""
    k = _choose_modes(schmidt, n_modes, min_weight)
    d = schmidt.coefficients[:k]
    u, v, g = schmidt.signal_modes[:k], schmidt.idler_modes[:k], schmidt.grid
    dd = np.outer(d, d)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.empty(taus.shape)
    for i, t in enumerate(taus):
        A = delayed_overlap_matrix(u, v, t, g)
        B = delayed_overlap_matrix(v, u, -t, g)
        s = np.sum(dd * A * B)
        if abs(s.imag) > 1e-10:
            raise ArithmeticError(f"exchange sum has imaginary part {s.imag:.3e} at tau={t}")
        out[i] = s.real
    return out if np.ndim(tau) else float(out[0])


def hom_analytic(tau: float, phi: float, sigma: float = 1.0) -> HomPoint:
    p = 0.5 - 0.25 * np.exp(-(sigma * tau) ** 2 / 4) * ((sigma * tau) ** 2 - 2) * np.cos(phi)
    return HomPoint(float(tau), float(phi), float(p), float(1 - p))


def hom_numeric(schmidt: SchmidtDecomposition, tau: float, phi: float,
                n_modes: int | None = None) -> HomPoint:
    s = tfm_exchange_numeric(schmidt, tau, n_modes)
    p = 0.5 * (1 - np.cos(phi) * s)
    return HomPoint(float(tau), float(phi), float(p), float(1 - p))


def landscape(taus: Sequence[float], phis: Sequence[float], sigma: float = 1.0,
              schmidt: SchmidtDecomposition | None = None) -> HomScan:
    """Full (τ, φ) grid in τ-major order; numeric when ``schmidt`` is given."""
    taus = np.asarray(taus, dtype=float)
    if schmidt is None:
        x = tfm_exchange_analytic(taus, sigma)
        gen = "analytic"
    else:
        x = np.atleast_1d(tfm_exchange_numeric(schmidt, taus))
        sigma = schmidt.grid.sigma
        gen = "numeric"
    pts = []
    for t, xt in zip(taus, x):
        for ph in phis:
            p = 0.5 * (1 - np.cos(ph) * xt)
            pts.append(HomPoint(float(t), float(ph), float(p), float(1 - p)))
    return HomScan(tuple(pts), sigma, gen)


def max_discrepancy(a: HomScan, b: HomScan) -> float:
    return float(np.max(np.abs(a.p_cross - b.p_cross)))


def interior_extremum(phi: float = np.pi, sigma: float = 1.0, bracket=(0.5, 5.0)) -> tuple[float, float]:
    """Locate the positive-delay side lobe of the analytic τ-scan; returns (τ, p_cross)."""
    sign = 1 if np.cos(phi) < 0 else -1
    res = minimize_scalar(lambda t: -sign * hom_analytic(t, phi, sigma).p_cross,
                          bounds=(bracket[0] / sigma, bracket[1] / sigma), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), hom_analytic(res.x, phi, sigma).p_cross


# -- discrete beam-splitter picture --------------------------------------------------

def beamsplitter_transform(state: StateVector, signal: Sequence[str], idler: Sequence[str]) -> StateVector:
    """Propagate a two-photon state (signal in port a, idler in port b) through the BS.

    The result is the bosonically symmetrised first-quantised state on
    ``port_1, <signal factors>_1, port_2, <idler factors>_2``-shaped labels,
    where photon slots 1 and 2 are interchangeable.
    """
    signal, idler = list(signal), list(idler)
    dims_s = [state.label.dim_of(f) for f in signal]
    dims_i = [state.label.dim_of(f) for f in idler]
    if dims_s != dims_i or sorted(signal + idler) != sorted(state.label.names):
        raise ValueError("beam splitter needs one photon per port with matching internal structure "
                         f"(signal {signal}, idler {idler}, state [{state.label}])")
    base = [_strip(f) for f in signal]
    c = state.permute(signal + idler).amplitudes.reshape(int(np.prod(dims_s)), -1)
    d = c.shape[0]
    psi = np.zeros((2, d, 2, d), dtype=complex)
    psi[0, :, 1, :] = c
    psi = (psi + psi.transpose(2, 3, 0, 1)) / np.sqrt(2)
    psi = tensordot_axes(psi, BS_MATRIX, [0])
    psi = tensordot_axes(psi, BS_MATRIX, [2])
    label = HilbertLabel((("port_1", 2),) + tuple((f"{b}_1", n) for b, n in zip(base, dims_s))
                         + (("port_2", 2),) + tuple((f"{b}_2", n) for b, n in zip(base, dims_s)))
    return StateVector(label, psi.ravel())


def _strip(name: str) -> str:
    for suffix in ("_s", "_i"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


def _port_blocks(out: StateVector) -> np.ndarray:
    n = out.label.dim // 4
    d = int(np.sqrt(n))
    return out.amplitudes.reshape(2, d, 2, d)


def coincidence_probabilities(out: StateVector) -> tuple[float, float]:
    """(p_cross, p_same) for a symmetrised post-BS state."""
    t = _port_blocks(out)
    p = np.abs(t) ** 2
    cross = float(p[0, :, 1, :].sum() + p[1, :, 0, :].sum())
    same = float(p[0, :, 0, :].sum() + p[1, :, 1, :].sum())
    return cross, same


def detector_probabilities(out: StateVector, projectors: Sequence[np.ndarray],
                           factors: Sequence[str]) -> dict[tuple[str, str], float]:
    """Pair probabilities for detectors A1, A2 (port a) and B1, B2 (port b).

    ``projectors[j]`` is the analysis projector of detector j+1 acting on
    the named internal ``factors`` (base names, e.g. ``["pol", "oam"]``) of
    each photon. Keys are unordered detector pairs such as ("A1", "B2").
    """
    names = [n for n, _ in out.label.factors]
    inner1 = [n for n in names if n.endswith("_1") and n != "port_1"]
    inner_dims = [out.label.dim_of(n) for n in inner1]
    t = _port_blocks(out).reshape([2] + inner_dims + [2] + inner_dims)
    n_in = len(inner_dims)
    ax1 = [1 + names[1:1 + n_in].index(f"{f}_1") for f in factors]
    ax2 = [2 + n_in + names[2 + n_in:].index(f"{f}_2") for f in factors]
    detectors = [f"{port}{j + 1}" for port in "AB" for j in range(len(projectors))]
    probs: dict[tuple[str, str], float] = {}
    for p1, port1 in enumerate("AB"):
        for p2, port2 in enumerate("AB"):
            for j1, P1 in enumerate(projectors):
                for j2, P2 in enumerate(projectors):
                    full = tensordot_axes(tensordot_axes(t, P1, ax1), P2, ax2)
                    amp = full[(p1,) + (slice(None),) * n_in + (p2,)]
                    key = tuple(sorted((f"{port1}{j1 + 1}", f"{port2}{j2 + 1}"), key=detectors.index))
                    probs[key] = probs.get(key, 0.0) + float(np.sum(np.abs(amp) ** 2))
    return probs


def cross_sum(probs: dict[tuple[str, str], float]) -> float:
    """Σ_ij A_i B_j."""
    return sum(v for (x, y), v in probs.items() if x[0] != y[0])


def same_sum(probs: dict[tuple[str, str], float]) -> float:
    """A1A2 + B1B2 (plus same-detector pairs, which click detectors cannot see)."""
    return sum(v for (x, y), v in probs.items() if x[0] == y[0])


# -- fringes and visibilities -------------------------------------------------------

def pol_family_state(phi: float, family: str = "psi") -> StateVector:
    """ψ^φ = (|HV⟩ + e^{iφ}|VH⟩)/√2 or Φ^φ = (|HH⟩ + e^{iφ}|VV⟩)/√2 on (pol_s, pol_i)."""
    if family == "psi":
        amps = [0, 1, np.exp(1j * phi), 0]
    elif family == "phi":
        amps = [1, 0, 0, np.exp(1j * phi)]
    else:
        raise ValueError(f"unknown state family {family!r}; use 'psi' or 'phi'")
    return StateVector(POL_LABEL, np.asarray(amps, dtype=complex) / np.sqrt(2))


def family_support(family: str) -> tuple[np.ndarray, np.ndarray]:
    """The two product kets spanned by a ψ- or Φ-type family."""
    e = np.eye(4)
    return (e[1], e[2]) if family == "psi" else (e[0], e[3])


_SWAP2 = np.eye(4)[[0, 2, 1, 3]]


def pol_exchange(rho: DensityMatrix) -> float:
    """Tr(ρ·SWAP) for a two-qubit polarisation state."""
    return float(np.trace(rho.matrix @ _SWAP2).real)


@dataclass(frozen=True)
class FringeScan:
    phi: np.ndarray
    cross: np.ndarray
    same: np.ndarray
    tau: float


def fringe_scan(phi_values: Iterable[float], tau: float = 0.0, family: str = "psi",
                noise: NoiseModel | None = None, sigma: float = 1.0,
                schmidt: SchmidtDecomposition | None = None) -> FringeScan:
    """Cross-port and same-port coincidence curves against the preparation phase.

    For a product state ρ_tfm ⊗ ρ_pol the cross-port probability is
    ½(1 − ⟨SWAP⟩_tfm(τ)·⟨SWAP⟩_pol); the TFM factor comes from the closed
    form, or from the Schmidt modes when ``schmidt`` is given.
    """
    phis = np.asarray(list(phi_values), dtype=float)
    x_tfm = tfm_exchange_analytic(tau, sigma) if schmidt is None else tfm_exchange_numeric(schmidt, tau)
    cross = np.empty_like(phis)
    for k, ph in enumerate(phis):
        rho = pol_family_state(ph, family).density()
        if noise is not None:
            rho = noise.apply(rho)
        cross[k] = 0.5 * (1 - x_tfm * pol_exchange(rho))
    cross = np.clip(cross, 0.0, 1.0)
    return FringeScan(phis, cross, 1 - cross, float(tau))


class Visibility(NamedTuple):
    value: float
    degenerate: bool


def fringe_visibility(curve: Sequence[float], flat_tol: float = 1e-12) -> Visibility:
    """(max − min)/(max + min) of a fringe."""
    c = np.asarray(curve, dtype=float)
    hi, lo = c.max(), c.min()
    if hi - lo <= flat_tol or hi + lo == 0:
        return Visibility(0.0, True)
    return Visibility(float((hi - lo) / (hi + lo)), False)


def visibility(taus: Sequence[float], p_cross: Sequence[float], method: str = "baseline",
               baseline: float | None = None, flat_tol: float = 1e-12) -> Visibility:
    """Signed visibility of a τ-scan: positive for antibunching, negative for bunching.

    ``baseline`` (default): V = (p(0) − p(∞))/p(∞), clipped to [−1, 1], with
    p(∞) taken as the mean of the two outermost samples unless given.
    ``extrema``: V = ±(max − min)/(max + min), signed by p(0) − p(∞). The two
    disagree on side-lobed curves.
    """
    t = np.asarray(taus, dtype=float)
    p = np.asarray(p_cross, dtype=float)
    order = np.argsort(t)
    t, p = t[order], p[order]
    p0 = p[np.argmin(np.abs(t))]
    p_inf = 0.5 * (p[0] + p[-1]) if baseline is None else baseline
    if np.ptp(p) <= flat_tol:
        return Visibility(0.0, True)
    if method == "baseline":
        return Visibility(float(np.clip((p0 - p_inf) / p_inf, -1, 1)), False)
    if method == "extrema":
        v = (p.max() - p.min()) / (p.max() + p.min())
        return Visibility(float(np.sign(p0 - p_inf) * v), False)
    raise ValueError(f"unknown visibility method {method!r}")


def visibility_curve(phis: Sequence[float], taus: Sequence[float], sigma: float = 1.0,
                     method: str = "baseline") -> np.ndarray:
    """Visibility per phase; the far-delay level is evaluated well outside the scan."""
    taus = np.asarray(taus, dtype=float)
    far = 1e3 / sigma
    return np.array([visibility(taus, [hom_analytic(t, ph, sigma).p_cross for t in taus], method,
                                baseline=hom_analytic(far, ph, sigma).p_cross).value
                     for ph in phis])


# -- CSV -----------------------------------------------------------------------------

def write_scan_csv(path: str | Path, scan: HomScan):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "phi", "p_cross", "p_same"])
        for p in scan.points:
            w.writerow([repr(p.tau), repr(p.phi), repr(p.p_cross), repr(p.p_same)])


def read_scan_csv(path: str | Path) -> list[HomPoint]:
    with open(path, newline="") as fh:
        return [HomPoint(float(r["tau"]), float(r["phi"]), float(r["p_cross"]), float(r["p_same"]))
                for r in csv.DictReader(fh)]


def write_fringe_csv(path: str | Path, scan: FringeScan):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phi", "cross", "same"])
        for ph, c, s in zip(scan.phi, scan.cross, scan.same):
            w.writerow([repr(float(ph)), repr(float(c)), repr(float(s))])
