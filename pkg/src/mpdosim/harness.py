"""Experiment drivers behind the command line.

Every driver returns a plain JSON-ready document. Quantities that change
between identical runs (wall times, timestamps) are kept under the
``"metadata"`` key so the rest of the document is reproducible byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import circuit as cm
from . import exact, mpdo, mps, qec
from .analysis import (
    ProbDist,
    empirical_cdf,
    fidelity,
    ks_distance,
    noisy_depolarizing_cdf,
    porter_thomas_cdf,
    pure_fidelity,
)
from .circuit import Circuit
from .noise import MODELS, NOISELESS, NoiseModel, parse_noise_spec

BACKENDS = ("exact-sv", "exact-dm", "mps", "mpdo")
FORMATS = ("json", "csv")
VERIFY_MAX_QUBITS = 6
VERIFY_TOL = 1e-6

# fidelity with the ideal state -> (MPS bond dim, dephasing, depolarizing, amplitude damping)
CALIBRATED_RATES = {
    0.102: (2, 0.0231, 0.0302, 0.0454),
    0.183: (3, 0.0167, 0.0220, 0.0332),
    0.378: (4, 9.47e-3, 0.0125, 0.0188),
    0.450: (5, 7.75e-3, 0.0102, 0.0155),
    0.559: (6, 5.63e-3, 7.45e-3, 0.0113),
    0.644: (7, 4.25e-3, 5.64e-3, 8.51e-3),
    0.745: (9, 2.84e-3, 3.76e-3, 5.69e-3),
    0.847: (12, 1.59e-3, 2.12e-3, 3.20e-3),
    0.931: (15, 6.88e-4, 9.14e-4, 1.38e-3),
    0.999: (28, 9.94e-6, 1.33e-5, 2.01e-5),
}
CALIBRATED_MODELS = ("dephasing", "depolarizing", "amplitude-damping")

# two-qubit gate error of each neighbouring pair on a 10-qubit hardware chain
HARDWARE_PAIR_RATES = (0.0236, 0.0165, 0.0171, 0.0169, 0.0295, 0.0467, 0.0322, 0.0346, 0.0510)


def calibrated_rate(r: float, model: str) -> float:
    return CALIBRATED_RATES[r][1 + CALIBRATED_MODELS.index(model)]


def hardware_noise() -> NoiseModel:
    return NoiseModel("depolarizing", 0.0, dict(enumerate(HARDWARE_PAIR_RATES)))


class ConfigError(ValueError):
    """Inconsistent or invalid experiment configuration."""


class VerificationError(ArithmeticError):
    """A backend disagreed with its oracle beyond tolerance."""


class CountsFormatError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One backend run.

    The circuit comes from ``circuit_file`` when given, otherwise from the
    random generator with ``n_qubits``, ``depth`` and ``circuit_seed``.
    ``seed`` drives shot sampling.
    """

    backend: str = "mpdo"
    noise: str = "none"
    circuit_file: Optional[str] = None
    n_qubits: int = 6
    depth: int = 8
    circuit_seed: int = 0
    chi_max: Optional[int] = None
    kappa_max: Optional[int] = None
    seed: int = 0
    shots: int = 0
    compare: bool = True
    out: Optional[str] = None
    fmt: str = "json"

    def noise_model(self) -> NoiseModel:
        try:
            return parse_noise_spec(self.noise)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"unknown format {self.fmt!r}; choose from {FORMATS}")
        noise = self.noise_model()
        if self.backend in ("exact-sv", "mps") and not noise.is_noiseless:
            raise ConfigError(f"backend {self.backend} only accepts noise 'none'")
        for name in ("chi_max", "kappa_max"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        if self.circuit_file is None and (self.n_qubits < 1 or self.depth < 0):
            raise ConfigError("generator needs n_qubits >= 1 and depth >= 0")

    def circuit(self) -> Circuit:
        if self.circuit_file is not None:
            try:
                return cm.load(self.circuit_file)
            except OSError as e:
                raise ConfigError(f"cannot read circuit file: {e}") from None
        return cm.random_circuit(self.n_qubits, self.depth, self.circuit_seed)


def metadata_block(start: float) -> Dict:
    return {
        "wall_time_s": time.perf_counter() - start,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _sample_dense(p: np.ndarray, shots: int, seed: int) -> Dict[str, int]:
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.multinomial(shots, p / p.sum())
    n = int(np.log2(len(p)))
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c}


@dataclass
class BackendOutput:
    distribution: Optional[np.ndarray] = None
    counts: Optional[Dict[str, int]] = None
    fidelity: Dict[str, float] = field(default_factory=dict)
    truncation: Dict[str, float] = field(default_factory=dict)


def simulate(
    circ: Circuit,
    backend: str,
    noise: NoiseModel = NOISELESS,
    chi_max: Optional[int] = None,
    kappa_max: Optional[int] = None,
    shots: int = 0,
    seed: int = 0,
    compare: bool = True,
) -> BackendOutput:
    """Run one backend and collect its distribution, samples and oracle fidelities."""
    n = circ.n_qubits
    out = BackendOutput()
    dense_ok = n <= exact.DENSITY_CAP
    if backend == "exact-sv":
        psi = exact.run_pure(circ)
        p = exact.bitstring_distribution(psi)
    elif backend == "exact-dm":
        rho = exact.run_noisy(circ, noise)
        p = exact.bitstring_distribution(rho)
        if compare and n <= exact.PURE_CAP:
            out.fidelity["ideal"] = pure_fidelity(exact.run_pure(circ), rho)
    elif backend == "mps":
        state = mps.mps_run(circ, chi_max)
        psi = mps.to_statevector(state)
        psi = psi / np.linalg.norm(psi)
        p = exact.bitstring_distribution(psi)
        out.truncation = {"discarded_total": float(sum(state.discarded)), "peak_bond": max(state.bond_dims, default=1)}
        if compare:
            out.fidelity["exact"] = mps.mps_fidelity_to(state, exact.run_pure(circ))
    elif backend == "mpdo":
        state = mpdo.mpdo_run(circ, noise, chi_max, kappa_max)
        out.truncation = {
            "discarded_bond": state.discarded_bond,
            "discarded_inner": state.discarded_inner,
            "peak_bond": state.peak_bond,
            "peak_inner": state.peak_inner,
            "max_canonical_residual": max(state.canonical_residuals, default=0.0),
        }
        p = mpdo.full_distribution(state) if n <= mpdo.DISTRIBUTION_CAP else None
        if compare and dense_ok:
            rho_d = mpdo.to_density_matrix(state)
            if noise.is_noiseless:
                out.fidelity["exact"] = pure_fidelity(exact.run_pure(circ), rho_d)
            else:
                out.fidelity["exact"] = fidelity(exact.run_noisy(circ, noise), rho_d)
        if shots:
            out.counts = mpdo.sample(state, shots, seed)
    else:
        raise ConfigError(f"unknown backend {backend!r}")
    out.distribution = p
    if shots and out.counts is None:
        out.counts = _sample_dense(p, shots, seed)
    return out


def verify(circ: Circuit, backend: str, noise: NoiseModel) -> float:
    """Oracle fidelity of ``backend`` at unlimited dimensions on a small circuit."""
    if circ.n_qubits > VERIFY_MAX_QUBITS:
        raise ConfigError(f"--verify needs at most {VERIFY_MAX_QUBITS} qubits")
    if backend in ("exact-sv", "exact-dm"):
        return 1.0
    f = simulate(circ, backend, noise, None, None).fidelity["exact"]
    if f < 1 - VERIFY_TOL:
        raise VerificationError(f"{backend} oracle fidelity {f:.12g} below {1 - VERIFY_TOL}")
    return f


def run(config: ExperimentConfig, check: bool = False) -> Dict:
    """Run the configured backend and return the result document."""
    start = time.perf_counter()
    config.validate()
    circ = config.circuit()
    noise = config.noise_model()
    result = simulate(
        circ, config.backend, noise, config.chi_max, config.kappa_max,
        config.shots, config.seed, config.compare,
    )
    doc = {
        "kind": "run",
        "backend": config.backend,
        "noise": noise.to_dict(),
        "n_qubits": circ.n_qubits,
        "depth": len(circ.layers),
        "chi_max": config.chi_max,
        "kappa_max": config.kappa_max,
        "fidelity": result.fidelity,
        "truncation": result.truncation,
    }
    if result.distribution is not None and circ.n_qubits <= exact.DENSITY_CAP:
        doc["distribution"] = [float(x) for x in result.distribution]
    if result.counts is not None:
        doc["counts"] = {"shots": config.shots, "counts": result.counts}
    if check:
        doc["verify_fidelity"] = verify(circ, config.backend, noise)
    doc["metadata"] = metadata_block(start)
    return doc


# ---- noise calibration ------------------------------------------------------


@dataclass(frozen=True)
class Calibration:
    rate: float
    fidelity: float
    iterations: int


def ideal_fidelity(circ: Circuit, model: str, rate: float, psi: Optional[np.ndarray] = None) -> float:
    psi = exact.run_pure(circ) if psi is None else psi
    return pure_fidelity(psi, exact.run_noisy(circ, NoiseModel(model, rate)))


def calibrate_noise(
    circ: Circuit, model: str, target_r: float, tol: float = 1e-3, max_iter: int = 100
) -> Calibration:
    """Find the gate error rate whose exact output has fidelity ``target_r`` with the ideal state.

    The upper bracket starts at 1e-4 and doubles until the fidelity drops
    below the target; bisection then runs until the fidelity is within
    ``tol``. A fidelity outside the current bracket values aborts with a
    non-monotonicity error.
    """
    if not 0.0 < target_r <= 1.0:
        raise ConfigError("target fidelity must lie in (0, 1]")
    if model not in MODELS or model == "none":
        raise ConfigError(f"cannot calibrate noise model {model!r}")
    if target_r == 1.0:
        return Calibration(0.0, 1.0, 0)
    psi = exact.run_pure(circ)
    f = lambda eps: ideal_fidelity(circ, model, eps, psi)  # noqa: E731
    lo, f_lo = 0.0, 1.0
    hi = 1e-4
    f_hi = f(hi)
    it = 1
    while f_hi > target_r:
        if hi >= 1.0:
            raise ArithmeticError(
                f"target {target_r} unreachable: fidelity spans [{f_hi:.6g}, 1] over rates [0, 1]"
            )
        lo, f_lo = hi, f_hi
        hi = min(1.0, 2 * hi)
        f_hi = f(hi)
        it += 1
    if abs(f_hi - target_r) <= tol:
        return Calibration(hi, f_hi, it)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        it += 1
        if not f_hi - 1e-12 <= f_mid <= f_lo + 1e-12:
            raise ArithmeticError(
                f"fidelity is not monotone in the rate near {mid:.6g} "
                f"({f_lo:.6g} at {lo:.6g}, {f_mid:.6g} at {mid:.6g}, {f_hi:.6g} at {hi:.6g})"
            )
        if abs(f_mid - target_r) <= tol:
            return Calibration(mid, f_mid, it)
        if f_mid > target_r:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise ArithmeticError(f"calibration did not converge in {max_iter} steps")


# ---- truncation sweeps ------------------------------------------------------


def twice(chi: int) -> int:
    return 2 * chi


def _grid_point(args) -> Tuple:
    circ, noise, chi, kappa, rho_e = args
    state = mpdo.mpdo_run(circ, noise, chi, kappa)
    f = fidelity(rho_e, mpdo.to_density_matrix(state))
    return (noise.rate, chi, kappa, f, state.discarded_bond, state.discarded_inner)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fidelity_grid(
    circ: Circuit,
    model: str,
    rates: Sequence[float],
    points: Sequence[Tuple[int, int]],
    workers: int = 1,
) -> List[Dict]:
    """``F(rho_exact, rho_mpdo)`` for every rate and every ``(chi, kappa)`` point."""
    jobs = []
    for eps in rates:
        noise = NoiseModel(model, eps)
        rho_e = exact.run_noisy(circ, noise)
        jobs += [(circ, noise, chi, kappa, rho_e) for chi, kappa in points]
    rows = sorted(_map(_grid_point, jobs, workers))
    keys = ("rate", "chi", "kappa", "fidelity", "discarded_bond", "discarded_inner")
    return [dict(zip(keys, r)) for r in rows]


def truncation_sweep(
    circ: Circuit,
    model: str,
    rates: Sequence[float],
    chi_list: Sequence[int],
    kappa_rule: Union[Callable[[int], int], int] = twice,
    workers: int = 1,
) -> List[Dict]:
    """Bond sweep with ``kappa = kappa_rule(chi)``, or a fixed ``kappa`` when an int is given."""
    rule = (lambda chi: kappa_rule) if isinstance(kappa_rule, int) else kappa_rule
    return fidelity_grid(circ, model, rates, [(c, rule(c)) for c in chi_list], workers)


def inner_sweep(
    circ: Circuit, model: str, rates: Sequence[float], chi: int, kappa_list: Sequence[int], workers: int = 1
) -> List[Dict]:
    return fidelity_grid(circ, model, rates, [(chi, k) for k in kappa_list], workers)


# ---- MPS versus noise -------------------------------------------------------


def mps_noise_comparison(
    circ: Circuit,
    chi_mps: int,
    models: Sequence[str] = CALIBRATED_MODELS,
    chi: int = 32,
    kappa: int = 48,
    tol: float = 1e-3,
) -> List[Dict]:
    """Compare a truncated pure MPS and the MPDO against the exact noisy state.

    The truncated MPS sets ``r = F(ideal, mps)``; each noise model is
    calibrated so the exact noisy state has the same ``r``.
    """
    psi = exact.run_pure(circ)
    st = mps.mps_run(circ, chi_mps)
    phi = mps.to_statevector(st)
    phi = phi / np.linalg.norm(phi)
    r = float(abs(np.vdot(psi, phi)))
    rows = []
    for model in models:
        cal = calibrate_noise(circ, model, r, tol)
        noise = NoiseModel(model, cal.rate)
        rho_e = exact.run_noisy(circ, noise)
        rho_d = mpdo.to_density_matrix(mpdo.mpdo_run(circ, noise, chi, kappa))
        rows.append({
            "model": model,
            "r": r,
            "rate": cal.rate,
            "f_ideal_exact": cal.fidelity,
            "f_exact_mps": pure_fidelity(phi, rho_e),
            "f_exact_mpdo": fidelity(rho_e, rho_d),
        })
    return rows


# ---- Porter-Thomas analysis -------------------------------------------------


def distribution(circ: Circuit, backend: str, noise: NoiseModel, chi=None, kappa=None) -> np.ndarray:
    return simulate(circ, backend, noise, chi, kappa, compare=False).distribution


def pt_analysis(
    circ: Circuit,
    backends: Sequence[str],
    model: str,
    rates: Sequence[float],
    chi_max: Optional[int] = None,
    kappa_max: Optional[int] = None,
    alphas: Sequence[float] = (0.0, 0.25, 0.5, 0.9),
    grid_size: int = 201,
) -> Dict:
    """Sorted output probabilities per backend and rate, with reference curves.

    Noiseless backends (``exact-sv``, ``mps``) are run once, reported at rate 0.
    """
    n = circ.n_qubits
    M = 1 << n
    curves = []
    for backend in backends:
        noisy = backend in ("exact-dm", "mpdo")
        for eps in rates if noisy else [0.0]:
            noise = NoiseModel(model, eps) if noisy else NOISELESS
            p = np.sort(distribution(circ, backend, noise, chi_max, kappa_max))
            ks = ks_distance(empirical_cdf(p), lambda x: porter_thomas_cdf(np.clip(x, 0, 1), M))
            curves.append({
                "backend": backend,
                "rate": float(eps),
                "p_sorted": [float(x) for x in p],
                "ks_porter_thomas": ks,
            })
    curves.sort(key=lambda c: (c["backend"], c["rate"]))
    x = np.linspace(0.0, 10.0 / M, grid_size)
    return {
        "kind": "pt-analysis",
        "n_qubits": n,
        "M": M,
        "model": model,
        "curves": curves,
        "reference": {
            "p": [float(v) for v in x],
            "porter_thomas": [float(v) for v in porter_thomas_cdf(x, M)],
            "depolarizing": {
                f"{a:g}": [float(v) for v in noisy_depolarizing_cdf(x, a, M)] for a in alphas
            },
        },
    }


# ---- measured counts --------------------------------------------------------


@dataclass(frozen=True)
class CountsHistogram:
    counts: Mapping[str, int]

    def __post_init__(self):
        if not self.counts:
            raise CountsFormatError("counts are empty")
        widths = {len(k) for k in self.counts}
        if len(widths) != 1:
            raise CountsFormatError("bitstrings have different lengths")
        for k, v in self.counts.items():
            if set(k) - {"0", "1"}:
                raise CountsFormatError(f"label {k!r} is not a bitstring")
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise CountsFormatError(f"count for {k!r} must be a non-negative integer")

    @property
    def shots(self) -> int:
        return int(sum(self.counts.values()))

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.counts)))

    def to_dict(self) -> Dict:
        return {"shots": self.shots, "counts": dict(sorted(self.counts.items()))}


def parse_counts(doc) -> CountsHistogram:
    """Accept ``{"shots": N, "counts": {...}}`` or a bare bitstring mapping."""
    if not isinstance(doc, dict):
        raise CountsFormatError("counts document must be a JSON object")
    if "counts" in doc:
        counts = doc["counts"]
        if not isinstance(counts, dict):
            raise CountsFormatError("'counts' must be an object")
        hist = CountsHistogram(dict(counts))
        if "shots" in doc and doc["shots"] != hist.shots:
            raise CountsFormatError(f"shots {doc['shots']} differs from the count total {hist.shots}")
        return hist
    return CountsHistogram(dict(doc))


def read_counts(path) -> CountsHistogram:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise CountsFormatError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_counts(doc)


def write_counts(hist: CountsHistogram, path) -> None:
    Path(path).write_text(json.dumps(hist.to_dict(), indent=2) + "\n")


def sample_counts(p: Union[ProbDist, np.ndarray], shots: int, seed: int) -> CountsHistogram:
    probs = p.probs if isinstance(p, ProbDist) else np.asarray(p, dtype=float)
    return CountsHistogram(_sample_dense(probs, shots, seed))


def counts_cross_entropy(
    counts: Union[CountsHistogram, str, Path], simulated: ProbDist, floor: float = 1e-12
) -> float:
    """``-sum_x P(x) ln Ps(x)`` with ``P`` the normalized counts."""
    hist = counts if isinstance(counts, CountsHistogram) else read_counts(counts)
    lookup = simulated.as_dict()
    missing = [k for k in hist.counts if k not in lookup]
    if missing:
        raise CountsFormatError(f"counts contain labels absent from the simulation: {missing[:3]}")
    total = hist.shots
    return float(-sum(c / total * np.log(max(lookup[k], floor)) for k, c in hist.counts.items() if c))


# ---- error-correction experiment -------------------------------------------


QEC_RATES = (0.0, 0.002, 0.004, 0.006, 0.008, 0.01)


def qec_table(
    models: Sequence[str],
    rates: Sequence[float] = QEC_RATES,
    memory_rate: float = 0.05,
    backends: Sequence[str] = ("exact-dm", "mpdo"),
    chi_max: int = 16,
    kappa_max: int = 32,
) -> Dict:
    rows = []
    for model in models:
        for r in qec.qec_experiment(model, rates, memory_rate, backends, chi_max, kappa_max):
            rows.append(asdict(r))
    rows.sort(key=lambda r: (r["model"], r["rate"], r["backend"]))
    return {
        "kind": "qec",
        "memory_rate": memory_rate,
        "chi_max": chi_max,
        "kappa_max": kappa_max,
        "no_code_fidelity": qec.no_code_fidelity(memory_rate),
        "rows": rows,
    }


# ---- output -----------------------------------------------------------------


def to_json(doc: Dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def to_csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)
