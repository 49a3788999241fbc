"""Linear-inversion and maximum-likelihood state reconstruction, bootstrap error bars."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..hilbert import DensityMatrix, HilbertLabel, StateVector, fidelity, purity
from .counts import CountRecord, resample
from .measurement import MeasurementScheme, QubitScheme

MLE_TOL = 1e-10
MLE_MAX_ITER = 10_000
DILUTION = 0.5
MIN_DILUTION = 1e-12  # below this a step cannot improve the likelihood measurably


class Method(enum.Enum):
    LINEAR = "linear"
    MLE = "mle"


class RankDeficientError(ValueError):
    pass


class NotConvergedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityMatrix
    method: Method
    fidelity: float | None = None
    purity: float = 0.0
    fidelity_err: float | None = None
    purity_err: float | None = None
    iterations: int = 0
    log_likelihood: float = float("nan")
    converged: bool = True
    psd: bool = True  # False flags a linear estimate with negative eigenvalues
    trajectory: tuple[float, ...] = field(default=(), repr=False)

    def with_errors(self, fid_err, pur_err) -> "ReconstructionResult":
        return replace(self, fidelity_err=fid_err, purity_err=pur_err)

    def metrics_line(self) -> str:
        def f(x):
            return "nan" if x is None else repr(float(x))
        return (f"fidelity,{f(self.fidelity)},{f(self.fidelity_err)},purity,{f(self.purity)},"
                f"{f(self.purity_err)},method,{self.method.value},iters,{self.iterations}")


def _design(records: list[CountRecord], scheme: MeasurementScheme | None):
    scheme = QubitScheme(records[0].setting.n_qubits) if scheme is None else scheme
    E = scheme.elements([r.setting for r in records])
    n = np.array([r.counts for r in records], dtype=float)
    N = np.array([r.exposure for r in records], dtype=float)
    return scheme.label, E, n, N


def _finish(label: HilbertLabel, m: np.ndarray, target, method, **kw) -> ReconstructionResult:
    rho = DensityMatrix(label, m, strict=method is Method.MLE)
    fid = None if target is None else target_fidelity(rho, target)
    return ReconstructionResult(rho, method, fid, purity(rho), **kw)


def target_fidelity(rho: DensityMatrix, target) -> float:
    """⟨ψ|ρ|ψ⟩ for a pure target, or a callable ρ ↦ fidelity (e.g. a family maximum)."""
    if callable(target):
        return float(target(rho))
    if isinstance(target, StateVector):
        return fidelity(rho, target)
    raise TypeError(f"unsupported target {type(target).__name__}")


def reconstruct_linear(records: list[CountRecord], scheme: MeasurementScheme | None = None,
                       target=None) -> ReconstructionResult:
    """Least-squares solution of Tr(ρ E_j) = n_j / N_j, rescaled to unit trace."""
    label, E, n, N = _design(records, scheme)
    d = label.dim
    # Tr(ρE) = Σ_ab ρ_ab E_ba
    A = E.transpose(0, 2, 1).reshape(len(records), d * d)
    rank = np.linalg.matrix_rank(A, tol=1e-10 * np.abs(A).max())
    if rank < d * d:
        raise RankDeficientError(f"settings are not informationally complete: design rank {rank} < {d * d}")
    x, *_ = np.linalg.lstsq(A, (n / N).astype(complex), rcond=None)
    m = x.reshape(d, d)
    m = (m + m.conj().T) / 2
    tr = np.trace(m).real
    if tr <= 0:
        raise ValueError("linear inversion produced a non-positive trace")
    m = m / tr
    psd = bool(np.linalg.eigvalsh(m).min() >= -1e-10)
    return _finish(label, m, target, Method.LINEAR, psd=psd)


def log_likelihood(p: np.ndarray, n: np.ndarray, N: np.ndarray) -> float:
    """Poisson log-likelihood relative to the saturated model, Σ n log(Np/n) − (Np − n).

    Differs from Σ n log(Np) − Np by a ρ-independent constant; measuring from the
    saturated value keeps small gains resolvable when the total count is large.
    """
    mu = N * p
    pos = n > 0
    if np.any(mu[pos] <= 0):
        return -np.inf
    return float(np.sum(n[pos] * np.log(mu[pos] / n[pos])) - np.sum(mu - n))


def reconstruct_mle(records: list[CountRecord], scheme: MeasurementScheme | None = None, target=None,
                    tol: float = MLE_TOL, max_iter: int = MLE_MAX_ITER,
                    rho0: DensityMatrix | None = None) -> ReconstructionResult:
    """Diluted RρR iteration for the Poisson likelihood.

    Each step is ρ ← (1+εK)ρ(1+εK)/Tr with K = (R − G − λ)/Σn, R = Σ n_j E_j/p_j,
    G = Σ N_j E_j and λ chosen so that Tr(Kρ)=0. ε starts at 0.5 and is halved until
    the step increases the likelihood.
    """
    label, E, n, N = _design(records, scheme)
    d = label.dim
    total = n.sum()
    if total <= 0:
        raise ValueError("no counts recorded")
    flat = E.reshape(len(records), d * d)
    # Tr(ρE) = Σ Re ρ_ab Re E_ab + Im ρ_ab Im E_ab for Hermitian ρ, E
    real_design = np.ascontiguousarray(np.concatenate([flat.real, flat.imag], axis=1))
    G = (N @ flat).reshape(d, d)
    rho = np.eye(d, dtype=complex) / d if rho0 is None else rho0.matrix.astype(complex)

    def probs(m):
        return real_design @ np.concatenate([m.real.ravel(), m.imag.ravel()])

    p = probs(rho)
    L = log_likelihood(p, n, N)
    trajectory = [L]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        safe = np.where(n > 0, n / np.maximum(p, 1e-300), 0.0)
        re_im = safe @ real_design
        R = (re_im[: d * d] + 1j * re_im[d * d:]).reshape(d, d)
        K = R - G
        K = K - np.trace(K @ rho).real * np.eye(d)
        K = (K + K.conj().T) / (2 * total)
        eps = DILUTION
        while True:
            M = np.eye(d) + eps * K
            new = M @ rho @ M.conj().T
            new = new / np.trace(new).real
            new_p = probs(new)
            new_L = log_likelihood(new_p, n, N)
            if new_L >= L or eps < MIN_DILUTION:
                break
            eps /= 2
        if new_L < L:  # no ascent direction left at machine precision
            converged = True
            break
        gain = new_L - L
        rho, p, L = (new + new.conj().T) / 2, new_p, new_L
        assert trajectory[-1] <= L, "log-likelihood decreased"
        trajectory.append(L)
        if gain < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"MLE stopped after {it} iterations without reaching gain < {tol:g}",
                      NotConvergedWarning, stacklevel=2)
    return _finish(label, rho, target, Method.MLE, iterations=it, log_likelihood=L,
                   converged=converged, trajectory=tuple(trajectory))


Estimator = Callable[[list[CountRecord]], ReconstructionResult]


def bootstrap_errors(records: list[CountRecord], estimator: Estimator, reps: int = 100,
                     seed: int = 0) -> tuple[float, float]:
    """Sample standard deviations of fidelity and purity over Poisson(count) resamples.

    Replica r draws from the substream (seed, r). Exact-probability records carry
    no sampling noise and give zero spread.
    """
    if reps < 10:
        raise ValueError(f"bootstrap needs at least 10 replicas, got {reps}")
    fids, purs = [], []
    for r in range(reps):
        res = estimator(resample(records, np.random.default_rng([seed, r])))
        fids.append(np.nan if res.fidelity is None else res.fidelity)
        purs.append(res.purity)
    return float(np.std(fids, ddof=1)), float(np.std(purs, ddof=1))
