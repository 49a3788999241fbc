"""Count records, the Poisson forward model and the counts CSV."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..hilbert import DensityMatrix
from ..noise import NoiseModel
from .measurement import AnalysisSetting, MeasurementScheme, QubitScheme

PLAUSIBILITY_SIGMAS = 10.0


@dataclass(frozen=True)
class CountRecord:
    setting: AnalysisSetting
    counts: float
    exposure: float
    exact: bool = False  # counts is N·p itself, no sampling

    def __post_init__(self):
        if self.exposure < 1:
            raise ValueError(f"exposure must be >= 1 photon per setting, got {self.exposure}")
        if self.counts < 0:
            raise ValueError(f"negative counts for setting {self.setting}")
        if not self.exact and self.counts != int(self.counts):
            raise ValueError(f"sampled counts must be integers, got {self.counts}")
        bound = self.exposure + PLAUSIBILITY_SIGMAS * math.sqrt(self.exposure)
        if self.counts > bound:
            warnings.warn(f"setting {self.setting}: {self.counts} counts exceeds the "
                          f"{PLAUSIBILITY_SIGMAS:g}σ bound for exposure {self.exposure}", stacklevel=2)

    @property
    def frequency(self) -> float:
        return self.counts / self.exposure


def probabilities(rho: DensityMatrix, settings, scheme: MeasurementScheme, tol: float = 1e-12) -> np.ndarray:
    E = scheme.elements(settings)
    if E.shape[1:] != rho.matrix.shape:
        raise ValueError(f"settings act on dimension {E.shape[1]}, state has {rho.dim}")
    p = np.einsum("ij,sji->s", rho.matrix, E).real
    if p.min() < -tol or p.max() > 1 + tol:
        raise ValueError("Born probabilities outside [0, 1]")
    # values within tol of the interval ends are rounding residue
    p = np.where(p < tol, 0.0, p)
    return np.where(p > 1 - tol, 1.0, p)


def simulate_counts(rho: DensityMatrix, settings, exposure: float, noise: NoiseModel | None = None,
                    seed: int = 0, scheme: MeasurementScheme | None = None,
                    exact: bool = False) -> list[CountRecord]:
    """counts_j ~ Poisson(N·Tr(noise(ρ) E_j)); setting j draws from the substream (seed, j)."""
    settings = list(settings)
    scheme = QubitScheme(settings[0].n_qubits) if scheme is None else scheme
    if exposure < 1:
        raise ValueError(f"exposure must be >= 1, got {exposure}")
    if noise is not None and not noise.is_identity:
        rho = noise.apply(rho)
    mean = exposure * probabilities(rho, settings, scheme)
    if exact:
        return [CountRecord(s, float(m), exposure, exact=True) for s, m in zip(settings, mean)]
    out = []
    for j, (s, m) in enumerate(zip(settings, mean)):
        n = np.random.default_rng([seed, j]).poisson(m)
        out.append(CountRecord(s, int(n), exposure))
    return out


def resample(records: list[CountRecord], rng: np.random.Generator) -> list[CountRecord]:
    """Poisson(count) parametric resample; exact records are returned unchanged."""
    if all(r.exact for r in records):
        return list(records)
    lam = np.array([r.counts for r in records], dtype=float)
    draws = rng.poisson(lam)
    return [r if r.exact else CountRecord(r.setting, int(n), r.exposure) for r, n in zip(records, draws)]


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_counts_csv(path: str | Path, records: list[CountRecord]):
    n = records[0].setting.n_qubits
    header = ["setting_id", "proj_photon1", "proj_photon2"] + [f"proj{k + 1}" for k in range(2, n)]
    header += ["exposure", "counts"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for j, r in enumerate(records):
            w.writerow([j, *r.setting.labels, _fmt(r.exposure), _fmt(r.counts)])


def read_counts_csv(path: str | Path) -> list[CountRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[0] != "setting_id" or header[-2:] != ["exposure", "counts"]:
        raise ValueError(f"{path}: not a counts file (header {','.join(header)})")
    out = []
    for row in body:
        labels = tuple(row[1:-2])
        counts = float(row[-1])
        out.append(CountRecord(AnalysisSetting(labels), counts if not counts.is_integer() else int(counts),
                               float(row[-2]), exact=not counts.is_integer()))
    return out
