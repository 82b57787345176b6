"""Command line entry point: ``mpdosim <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import List, Optional, Sequence

import numpy as np

from . import circuit as cm
from . import harness as hx
from .analysis import ProbDist
from .noise import parse_noise_spec
from .tensor import NonFiniteError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

RUN_COLUMNS = ("bitstring", "probability", "count")
CALIBRATE_COLUMNS = ("model", "target", "rate", "fidelity", "iterations")
SWEEP_COLUMNS = ("rate", "chi", "kappa", "fidelity", "discarded_bond", "discarded_inner")
PT_COLUMNS = ("backend", "rate", "index", "p", "cdf")
XENT_COLUMNS = ("backend", "chi", "kappa", "shots", "cross_entropy")
QEC_COLUMNS = ("model", "rate", "backend", "fidelity")


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x]


def _float_list(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x]


def _add_circuit(p: argparse.ArgumentParser) -> None:
    p.add_argument("--circuit", metavar="FILE", help="circuit JSON; otherwise a random circuit is generated")
    p.add_argument("--n-qubits", type=int, default=6)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--seed", type=int, default=0, help="generator seed, also used for sampling")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="FILE", help="output path (default: stdout)")
    p.add_argument("--format", choices=hx.FORMATS, default="json")


def _add_dims(p: argparse.ArgumentParser, chi=None, kappa=None) -> None:
    p.add_argument("--chi", type=int, default=chi, help="maximum bond dimension")
    p.add_argument("--kappa", type=int, default=kappa, help="maximum inner dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpdosim", description="Noisy 1D circuit simulation with MPDOs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-circuit", help="write a random brickwork circuit")
    p.add_argument("--n-qubits", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("run", help="simulate one circuit on one backend")
    _add_circuit(p)
    p.add_argument("--backend", choices=hx.BACKENDS, default="mpdo")
    p.add_argument("--noise", default="none", metavar="MODEL:RATE")
    _add_dims(p)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--verify", action="store_true", help="check against the oracle at unlimited dimensions")
    _add_output(p)

    p = sub.add_parser("calibrate", help="find the gate error rate giving a target ideal-state fidelity")
    _add_circuit(p)
    p.add_argument("--noise", required=True, metavar="MODEL[:RATE]", help="noise model; any rate is ignored")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    _add_output(p)

    p = sub.add_parser("sweep", help="MPDO fidelity against the exact state over truncation caps")
    _add_circuit(p)
    p.add_argument("--noise", required=True, metavar="MODEL:RATE")
    p.add_argument("--rates", type=_float_list, help="comma-separated rates overriding the one in --noise")
    p.add_argument("--chi-list", type=_int_list, help="bond caps to sweep (kappa fixed by --kappa, else 2*chi)")
    p.add_argument("--kappa-list", type=_int_list, help="inner caps to sweep at fixed --chi")
    _add_dims(p)
    p.add_argument("--workers", type=int, default=1)
    _add_output(p)

    p = sub.add_parser("pt-analysis", help="cumulative output-probability distributions")
    _add_circuit(p)
    p.add_argument("--backends", default="exact-sv,exact-dm")
    p.add_argument("--noise", default="depolarizing:0", metavar="MODEL:RATE")
    p.add_argument("--rates", type=_float_list)
    _add_dims(p)
    _add_output(p)

    p = sub.add_parser("counts-xent", help="cross entropy of measured counts against a simulation")
    _add_circuit(p)
    p.add_argument("--counts", required=True, metavar="FILE")
    p.add_argument("--backend", choices=hx.BACKENDS, default="mpdo")
    p.add_argument("--noise", default="none", metavar="MODEL:RATE")
    p.add_argument("--hardware-noise", action="store_true", help="depolarizing noise at the built-in per-pair rates")
    _add_dims(p)
    _add_output(p)

    p = sub.add_parser("qec", help="five-qubit code memory experiment")
    p.add_argument("--noise", default="depolarizing", metavar="MODEL[,MODEL...]", help="gate noise models")
    p.add_argument("--rates", type=_float_list, default=list(hx.QEC_RATES))
    p.add_argument("--memory-rate", type=float, default=0.05)
    p.add_argument("--backends", default="exact-dm,mpdo")
    _add_dims(p, 16, 32)
    _add_output(p)
    return parser


def _config(args, **extra) -> hx.ExperimentConfig:
    return hx.ExperimentConfig(
        circuit_file=args.circuit,
        n_qubits=args.n_qubits,
        depth=args.depth,
        circuit_seed=args.seed,
        seed=args.seed,
        chi_max=getattr(args, "chi", None),
        kappa_max=getattr(args, "kappa", None),
        out=getattr(args, "out", None),
        fmt=getattr(args, "format", "json"),
        **extra,
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _render(doc, rows, columns, fmt) -> str:
    return hx.to_csv(rows, columns) if fmt == "csv" else hx.to_json(doc)


def _models(text: str) -> List[str]:
    return [m.split(":")[0] for m in text.split(",") if m]


def cmd_generate(args) -> str:
    if args.n_qubits < 1 or args.depth < 0:
        raise hx.ConfigError("need --n-qubits >= 1 and --depth >= 0")
    return cm.serialize(cm.random_circuit(args.n_qubits, args.depth, args.seed)) + "\n"


def cmd_run(args) -> str:
    cfg = _config(args, backend=args.backend, noise=args.noise, shots=args.shots)
    doc = hx.run(cfg, check=args.verify)
    rows = []
    counts = doc.get("counts", {}).get("counts", {})
    if "distribution" in doc:
        n = doc["n_qubits"]
        for i, p in enumerate(doc["distribution"]):
            b = format(i, f"0{n}b")
            rows.append({"bitstring": b, "probability": p, "count": counts.get(b, 0) if counts else None})
    else:
        rows = [{"bitstring": b, "count": c} for b, c in counts.items()]
    return _render(doc, rows, RUN_COLUMNS, args.format)


def cmd_calibrate(args) -> str:
    start = time.perf_counter()
    cfg = _config(args)
    cfg.validate()
    model = args.noise.split(":")[0]
    cal = hx.calibrate_noise(cfg.circuit(), model, args.target, args.tol)
    row = {"model": model, "target": args.target, "rate": cal.rate, "fidelity": cal.fidelity, "iterations": cal.iterations}
    doc = {"kind": "calibrate", **row, "metadata": hx.metadata_block(start)}
    return _render(doc, [row], CALIBRATE_COLUMNS, args.format)


def cmd_sweep(args) -> str:
    start = time.perf_counter()
    cfg = _config(args)
    cfg.validate()
    noise = parse_noise_spec(args.noise)
    if noise.is_noiseless and not args.rates:
        raise hx.ConfigError("sweep needs a noisy model")
    rates = args.rates or [noise.rate]
    circ = cfg.circuit()
    if args.kappa_list:
        if args.chi is None:
            raise hx.ConfigError("--kappa-list needs --chi")
        rows = hx.inner_sweep(circ, noise.model, rates, args.chi, args.kappa_list, args.workers)
    else:
        chis = args.chi_list or [2, 4, 8, 16, 32]
        rule = args.kappa if args.kappa is not None else hx.twice
        rows = hx.truncation_sweep(circ, noise.model, rates, chis, rule, args.workers)
    doc = {"kind": "sweep", "model": noise.model, "n_qubits": circ.n_qubits, "depth": len(circ.layers),
           "rows": rows, "metadata": hx.metadata_block(start)}
    return _render(doc, rows, SWEEP_COLUMNS, args.format)


def cmd_pt(args) -> str:
    start = time.perf_counter()
    cfg = _config(args)
    cfg.validate()
    noise = parse_noise_spec(args.noise)
    rates = args.rates or [noise.rate]
    backends = [b for b in args.backends.split(",") if b]
    for b in backends:
        if b not in hx.BACKENDS:
            raise hx.ConfigError(f"unknown backend {b!r}")
    model = noise.model if noise.model != "none" else "depolarizing"
    doc = hx.pt_analysis(cfg.circuit(), backends, model, rates, args.chi, args.kappa)
    doc["metadata"] = hx.metadata_block(start)
    rows = []
    for c in doc["curves"]:
        m = len(c["p_sorted"])
        rows += [{"backend": c["backend"], "rate": c["rate"], "index": i, "p": p, "cdf": (i + 1) / m}
                 for i, p in enumerate(c["p_sorted"])]
    return _render(doc, rows, PT_COLUMNS, args.format)


def cmd_xent(args) -> str:
    start = time.perf_counter()
    noise_spec = "none" if args.hardware_noise else args.noise
    cfg = _config(args, backend=args.backend, noise=noise_spec, compare=False)
    cfg.validate()
    circ = cfg.circuit()
    noise = hx.hardware_noise() if args.hardware_noise else cfg.noise_model()
    if args.hardware_noise and args.backend in ("exact-sv", "mps"):
        raise hx.ConfigError(f"backend {args.backend} only accepts noise 'none'")
    hist = hx.read_counts(args.counts)
    if hist.n_qubits != circ.n_qubits:
        raise hx.ConfigError(f"counts have {hist.n_qubits} bits, circuit has {circ.n_qubits} qubits")
    p = hx.distribution(circ, args.backend, noise, args.chi, args.kappa)
    h = hx.counts_cross_entropy(hist, ProbDist.from_vector(p))
    row = {"backend": args.backend, "chi": args.chi, "kappa": args.kappa, "shots": hist.shots, "cross_entropy": h}
    doc = {"kind": "counts-xent", **row, "noise": noise.to_dict(), "metadata": hx.metadata_block(start)}
    return _render(doc, [row], XENT_COLUMNS, args.format)


def cmd_qec(args) -> str:
    start = time.perf_counter()
    models = _models(args.noise)
    for m in models:
        parse_noise_spec(f"{m}:0")
    backends = [b for b in args.backends.split(",") if b]
    for b in backends:
        if b not in ("exact-dm", "mpdo"):
            raise hx.ConfigError(f"backend {b!r} not available for the code experiment")
    doc = hx.qec_table(models, args.rates, args.memory_rate, backends, args.chi, args.kappa)
    doc["metadata"] = hx.metadata_block(start)
    return _render(doc, doc["rows"], QEC_COLUMNS, args.format)


COMMANDS = {
    "generate-circuit": cmd_generate,
    "run": cmd_run,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
    "pt-analysis": cmd_pt,
    "counts-xent": cmd_xent,
    "qec": cmd_qec,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
        _emit(text, getattr(args, "out", None))
    except (NonFiniteError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
