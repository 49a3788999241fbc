"""Command-line front end.

    hyperent [--seed N] [--out DIR] [--config FILE] [--quiet] <command> [options]

Commands: schmidt, hom, fringes, tomography, prepare. Every numeric option can
also be given in a ``key = value`` config file (``#`` starts a comment); flags
on the command line win over the file, the file wins over built-in defaults.

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import interference, source, spectral
from .hilbert import DensityMatrix, HilbertLabel, read_matrix, write_matrix
from .noise import NoiseModel
from .tomography import estimators, experiments
from .tomography.counts import write_counts_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
U64_MAX = 2**64 - 1


class UsageError(Exception):
    """Invalid parameter; the message already names the offending flag."""


class NumericalFailure(Exception):
    pass


# -- value parsing ---------------------------------------------------------------

_PI = re.compile(r"^([+-]?\d*\.?\d*)\*?pi(?:/(\d+\.?\d*))?$")


def parse_number(text: str) -> float:
    """Float, or a multiple of pi such as ``pi/2``, ``-2*pi``, ``0.5pi``."""
    t = str(text).strip().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    m = _PI.match(t)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    coef = m.group(1)
    c = {"": 1.0, "+": 1.0, "-": -1.0}.get(coef)
    c = float(coef) if c is None else c
    return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)


def parse_values(text: str) -> np.ndarray:
    """``start:stop:count`` (inclusive linspace) or a comma list."""
    t = str(text).strip()
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must look like start:stop:count")
        a, b = parse_number(parts[0]), parse_number(parts[1])
        n = int(parts[2])
        if n < 1:
            raise ValueError(f"range {text!r} needs at least one point")
        if n == 1 and a != b:
            raise ValueError(f"single-point range {text!r} needs start == stop")
        return np.linspace(a, b, n)
    return np.array([parse_number(x) for x in t.split(",") if x.strip()])


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# -- parameter schema ---------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    convert: Callable[[Any], Any]
    default: Any
    help: str
    check: Callable[[Any], bool] | None = None
    requirement: str = ""
    choices: tuple[str, ...] | None = None
    flag: bool = False  # store_true switch

    @property
    def option(self) -> str:
        return "--" + self.name.replace("_", "-")


def _positive(x):
    return x > 0


def _unit(x):
    return 0.0 <= x <= 1.0


GLOBAL = [
    Param("seed", int, 0, "RNG seed (unsigned 64-bit)", lambda s: 0 <= s <= U64_MAX, "an integer in [0, 2^64)"),
    Param("out", str, ".", "output directory"),
    Param("quiet", parse_bool, False, "suppress the report on stdout", flag=True),
]

COMMANDS: dict[str, list[Param]] = {
    "schmidt": [
        Param("sigma", float, 1.0, "pump bandwidth σ (frequency units)", _positive, "> 0"),
        Param("grid_n", int, 256, "quadrature points per axis", lambda n: n >= spectral.MIN_POINTS,
              f">= {spectral.MIN_POINTS}"),
        Param("grid_w", float, 5.0, "grid half-width in units of σ", _positive, "> 0"),
        Param("jsa", str, "engineered", "joint spectrum", choices=("engineered", "separable")),
        Param("modes", int, 4, "number of Schmidt modes written", lambda n: n >= 1, ">= 1"),
    ],
    "hom": [
        Param("sigma", float, 1.0, "pump bandwidth σ", _positive, "> 0"),
        Param("tau", parse_values, "-5:5:41", "delays, start:stop:count or a comma list",
              lambda v: len(v) >= 1, "at least one value"),
        Param("phi", parse_values, "0:pi:5", "preparation phases (pi allowed)", lambda v: len(v) >= 1,
              "at least one value"),
        Param("backend", str, "analytic", "landscape written to hom.csv", choices=("analytic", "numeric")),
        Param("check", parse_bool, False, "cross-validate analytic and numeric landscapes", flag=True),
        Param("tolerance", float, 1e-6, "agreement required by --check", _positive, "> 0"),
        Param("visibility", parse_bool, False, "write the visibility-vs-phase curve", flag=True),
        Param("grid_n", int, 256, "quadrature points for the numeric backend",
              lambda n: n >= spectral.MIN_POINTS, f">= {spectral.MIN_POINTS}"),
        Param("grid_w", float, 5.0, "grid half-width for the numeric backend", _positive, "> 0"),
        Param("counts_per_point", float, None, "also write expected coincidence counts for this many pairs",
              _positive, "> 0"),
        Param("efficiency", float, 1.0, "pair detection efficiency applied to the counts",
              lambda e: 0 < e <= 1, "in (0, 1]"),
    ],
    "fringes": [
        Param("phi_points", int, 37, "phases sampled on [0, phi_max]", lambda n: n >= 2, ">= 2"),
        Param("phi_max", parse_number, "pi", "upper end of the phase scan", _positive, "> 0"),
        Param("tau", parse_number, "0", "delay at which the fringe is taken"),
        Param("sigma", float, 1.0, "pump bandwidth σ", _positive, "> 0"),
        Param("family", str, "psi", "state family scanned", choices=("psi", "phi")),
        Param("depolarize", float, 0.0, "depolarising strength p", _unit, "in [0, 1]"),
        Param("noise_space", str, "support", "where the depolarising channel acts",
              choices=("support", "full")),
    ],
    "tomography": [
        Param("target", str, "vvb-psi-plus", "vvb-psi-plus, ghz4, or a density-matrix file"),
        Param("estimator", str, "mle", "reconstruction method", choices=("mle", "linear")),
        Param("exposure", float, 10_000.0, "photons per setting", lambda n: n >= 1, ">= 1"),
        Param("depolarize", float, 0.0, "depolarising strength p", _unit, "in [0, 1]"),
        Param("calibrate_fidelity", float, None, "choose p so that (1-p)+p/d equals this fidelity",
              lambda f: 0 < f <= 1, "in (0, 1]"),
        Param("exact", parse_bool, False, "use N·p instead of Poisson counts", flag=True),
        Param("settings", str, "overcomplete", "measurement set", choices=("overcomplete", "minimal", "pauli")),
        Param("bootstrap", int, 100, "bootstrap replicas (0 disables)", lambda n: n == 0 or n >= 10,
              "0 or >= 10"),
    ],
    "prepare": [
        Param("preparation", str, "psi+", "state to prepare",
              choices=("sagnac", "psi+", "psi-", "phi+", "phi-", "psi-phase")),
        Param("phi", parse_number, None, "phase for psi-phase"),
        Param("vvb", parse_bool, False, "convert both photons to vector vortex beams", flag=True),
        Param("keep", str, None, "comma-separated factors kept in the dump (default: pol, or pol+oam with --vvb)"),
    ],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one diagnostic line, no usage dump
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperent", description="Hyperentangled photon-pair simulation toolkit.")
    for par in GLOBAL:
        _add(p, par)
    p.add_argument("--config", default=None, help="key = value parameter file")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, params in COMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        for par in params:
            _add(sp, par)
        # global options are accepted after the command too, without clobbering earlier ones
        for par in GLOBAL:
            _add(sp, par, argparse.SUPPRESS)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="key = value parameter file")
    return p


def _add(parser, par: Param, default=None):
    # defaults stay None so config values can fill in what the command line left out
    if par.flag:
        parser.add_argument(par.option, dest=par.name, action="store_true", default=default, help=par.help)
    else:
        parser.add_argument(par.option, dest=par.name, default=default, choices=par.choices, help=par.help)


# -- config resolution ----------------------------------------------------------------

def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    for k, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: {path}:{k}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    params = GLOBAL + COMMANDS[args.command]
    config = read_config(args.config) if args.config else {}
    known = {p.name for p in params}
    for key in config:
        if key not in known:
            raise UsageError(f"--config: unknown key {key!r} for command {args.command}")
    values = {}
    for par in params:
        given = getattr(args, par.name, None)
        raw = given if given is not None else config.get(par.name, par.default)
        values[par.name] = _convert(par, raw)
    return values


def _convert(par: Param, raw):
    if raw is None:
        return None
    try:
        value = par.convert(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{par.option}: {exc}") from None
    if par.choices and value not in par.choices:
        raise UsageError(f"{par.option}: {value!r} is not one of {', '.join(par.choices)}")
    if par.check is not None and not par.check(value):
        raise UsageError(f"{par.option}: {raw!r} must be {par.requirement}")
    return value


# -- reporting ---------------------------------------------------------------------------

class Report:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *parts):
        if not self.quiet:
            print(*parts)


def _outdir(values) -> Path:
    out = Path(values["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"--out: cannot create {out}: {exc.strerror}") from None
    return out


# -- commands ----------------------------------------------------------------------------

def cmd_schmidt(v, report: Report) -> int:
    out = _outdir(v)
    sigma = v["sigma"]

    def decompose(n):
        grid = spectral.FrequencyGrid(v["grid_w"], n, sigma)
        build = spectral.build_engineered_jsa if v["jsa"] == "engineered" else spectral.build_separable_jsa
        jsa = build(sigma, grid)
        return jsa, spectral.schmidt_decompose(jsa)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        jsa, sd = decompose(v["grid_n"])
    for w in caught:
        report(f"warning: {w.message}")
    n_modes = min(v["modes"], len(sd.coefficients))
    spectral.write_jsa_csv(out / "jsa.csv", jsa)
    spectral.write_schmidt_csv(out / "schmidt.csv", sd)
    spectral.write_modes_csv(out / "modes.csv", sd, n_modes)

    d = sd.coefficients
    report(f"d0 = {d[0]:.10f}")
    report(f"d1 = {d[1]:.10f}")
    report(f"tail weight sum_k>=2 d_k^2 = {np.sum(d[2:] ** 2):.3e}")
    report(f"Schmidt number K = {sd.schmidt_number:.8f}")
    for k in range(2):
        hg = spectral.hermite_gauss_mode(k, sd.grid)
        report(f"|<u{k}, HG{k}>| = {abs(spectral.inner(sd.signal_modes[k], hg, sd.grid)):.10f}   "
               f"|<v{k}, HG{1 - k}>| = {abs(spectral.inner(sd.idler_modes[k], spectral.hermite_gauss_mode(1 - k, sd.grid), sd.grid)):.10f}")
    half = v["grid_n"] // 2
    if half >= spectral.MIN_POINTS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, coarse = decompose(half)
        k = min(4, len(d), len(coarse.coefficients))
        report(f"convergence: max |d_k(N={v['grid_n']}) - d_k(N={half})| over k<{k} = "
               f"{np.max(np.abs(d[:k] - coarse.coefficients[:k])):.3e}")
    return EXIT_OK


def _numeric_schmidt(v):
    grid = spectral.FrequencyGrid(v["grid_w"], v["grid_n"], v["sigma"])
    return spectral.schmidt_decompose(spectral.build_engineered_jsa(v["sigma"], grid))


def cmd_hom(v, report: Report) -> int:
    out = _outdir(v)
    sigma, taus, phis = v["sigma"], v["tau"], v["phi"]
    analytic = interference.landscape(taus, phis, sigma)
    interference.write_scan_csv(out / "hom_analytic.csv", analytic)
    main = analytic
    if v["backend"] == "numeric" or v["check"]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sd = _numeric_schmidt(v)
        numeric = interference.landscape(taus, phis, sigma, schmidt=sd)
        interference.write_scan_csv(out / "hom_numeric.csv", numeric)
        if v["backend"] == "numeric":
            main = numeric
        gap = interference.max_discrepancy(analytic, numeric)
        report(f"max |numeric - analytic| = {gap:.3e}")
        if v["check"] and not gap < v["tolerance"]:
            raise NumericalFailure(f"--check: backends differ by {gap:.3e} (tolerance {v['tolerance']:g})")
    interference.write_scan_csv(out / "hom.csv", main)
    if v["counts_per_point"] is not None:
        # efficiency only rescales counts; probabilities stay normalised
        scale = v["counts_per_point"] * v["efficiency"]
        with open(out / "hom_counts.csv", "w") as fh:
            fh.write("tau,phi,counts_cross,counts_same\n")
            for p in main.points:
                fh.write(f"{p.tau!r},{p.phi!r},{scale * p.p_cross!r},{scale * p.p_same!r}\n")
    for p in main.points:
        if p.tau == 0:
            report(f"p_cross(tau=0, phi={p.phi:.6f}) = {p.p_cross:.10f}")
    if v["visibility"]:
        vis = interference.visibility_curve(phis, taus, sigma)
        with open(out / "visibility.csv", "w") as fh:
            fh.write("phi,visibility,cos_phi\n")
            for ph, val in zip(phis, vis):
                fh.write(f"{float(ph)!r},{float(val)!r},{float(np.cos(ph))!r}\n")
        report(f"max |V(phi) - cos(phi)| = {np.max(np.abs(vis - np.cos(phis))):.3e}")
    return EXIT_OK


def cmd_fringes(v, report: Report) -> int:
    out = _outdir(v)
    phis = np.linspace(0.0, v["phi_max"], v["phi_points"])
    noise = None
    if v["depolarize"] > 0:
        support = interference.family_support(v["family"]) if v["noise_space"] == "support" else None
        noise = NoiseModel(v["depolarize"], support=support)
    scan = interference.fringe_scan(phis, v["tau"], v["family"], noise, v["sigma"])
    interference.write_fringe_csv(out / "fringes.csv", scan)
    vc = interference.fringe_visibility(scan.cross)
    vs = interference.fringe_visibility(scan.same)
    report(f"cross visibility = {vc.value:.6f}" + ("  (flat)" if vc.degenerate else ""))
    report(f"same visibility = {vs.value:.6f}" + ("  (flat)" if vs.degenerate else ""))
    report(f"max |cross + same - 1| = {np.max(np.abs(scan.cross + scan.same - 1)):.3e}")
    return EXIT_OK


def _load_target(text: str):
    if text in experiments.TARGETS:
        return text
    path = Path(text)
    if not path.exists():
        raise UsageError(f"--target: {text!r} is neither {' nor '.join(experiments.TARGETS)} nor an existing file")
    try:
        m = read_matrix(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"--target: cannot read {text}: {exc}") from None
    n = int(round(math.log2(m.shape[0]))) if m.shape[0] > 1 else 0
    if n not in (2, 4) or 2**n != m.shape[0]:
        raise UsageError(f"--target: matrix of dimension {m.shape[0]} is not a 2- or 4-qubit state")
    try:
        return DensityMatrix(HilbertLabel(tuple((f"q{k + 1}", 2) for k in range(n))), m)
    except ValueError as exc:
        raise UsageError(f"--target: {exc}") from None


def cmd_tomography(v, report: Report) -> int:
    out = _outdir(v)
    target = _load_target(v["target"])
    if v["calibrate_fidelity"] is not None and v["depolarize"] > 0:
        raise UsageError("--calibrate-fidelity: cannot be combined with --depolarize")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", estimators.NotConvergedWarning)
        run = experiments.run_tomography(target, v["estimator"], v["exposure"], v["depolarize"], v["exact"],
                                         v["seed"], v["settings"], v["bootstrap"], v["calibrate_fidelity"])
    res = run.result
    write_counts_csv(out / "counts.csv", run.records)
    write_matrix(out / "rho.txt", res.rho.matrix)
    line = res.metrics_line()
    (out / "metrics.csv").write_text(line + "\n")
    report(line)
    report(f"depolarizing p = {run.depolarizing!r}; settings = {len(run.records)}")
    if not res.psd:
        report("note: linear estimate is not positive semidefinite "
               f"(min eigenvalue {res.rho.min_eigenvalue:.3e})")
    if not res.converged:
        report(f"warning: MLE stopped after {res.iterations} iterations before reaching the gain tolerance")
    elif any(issubclass(w.category, estimators.NotConvergedWarning) for w in caught):
        report("warning: some bootstrap replicas stopped at the iteration cap")
    return EXIT_OK


def cmd_prepare(v, report: Report) -> int:
    out = _outdir(v)
    prep = v["preparation"]
    if prep == "psi-phase":
        if v["phi"] is None:
            raise UsageError("--phi: required for --preparation psi-phase")
        bp = source.prepare_psi_phase(v["phi"])
    elif v["phi"] is not None:
        raise UsageError(f"--phi: only used with --preparation psi-phase, not {prep}")
    elif prep == "sagnac":
        bp = source.sagnac_source()
    else:
        bp = source.prepare_bell(prep)
    if v["vvb"]:
        bp = source.convert_to_vvb(bp)
    if v["keep"] is None:
        keep = list(source.VVB_FACTORS) if v["vvb"] else ["pol_s", "pol_i"]
    elif v["keep"] == "all":
        keep = list(source.BIPHOTON_LABEL.names)
    else:
        keep = [k.strip() for k in v["keep"].split(",") if k.strip()]
        bad = [k for k in keep if k not in source.BIPHOTON_LABEL.names]
        if bad or len(set(keep)) != len(keep) or not keep:
            raise UsageError(f"--keep: factors must be distinct names from {', '.join(source.BIPHOTON_LABEL.names)}")
    source.write_state(out / "state.txt", bp, keep)
    report(bp.sidecar())
    report(f"exchange expectation = {source.exchange_expectation(bp.state):+.12f}")
    if v["vvb"]:
        rho = bp.reduced(list(source.VVB_FACTORS))
        fid, delta = source.ghz_family_fidelity(rho)
        report(f"GHZ family fidelity = {fid:.12f} at delta = {delta:.6f}")
    return EXIT_OK


HANDLERS = {
    "schmidt": cmd_schmidt,
    "hom": cmd_hom,
    "fringes": cmd_fringes,
    "tomography": cmd_tomography,
    "prepare": cmd_prepare,
}


def _glue_negative_values(argv):
    """``--tau -5:5:41`` → ``--tau=-5:5:41``; argparse would read the range as an option."""
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1] and len(tok) > 1
                and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_negative_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        values = resolve(args)
        return HANDLERS[args.command](values, Report(values["quiet"]))
    except UsageError as exc:
        print(f"hyperent: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, interference.Truncation, estimators.RankDeficientError,
            np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"hyperent: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"hyperent: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
