"""Fidelity of the truncated MPDO against the exact noisy state over bond and inner dimensions."""

from _common import emit, parser

from mpdosim import circuit as cm
from mpdosim.harness import CALIBRATED_MODELS, inner_sweep, calibrated_rate, truncation_sweep


def main():
    p = parser(__doc__)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--depth", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=float, default=0.559, help="calibration-table row giving the rates")
    p.add_argument("--chi", type=int, nargs="+", default=[2, 4, 8, 16, 32])
    p.add_argument("--kappa", type=int, nargs="+", default=[2, 4, 8, 16, 32])
    p.add_argument("--fixed-chi", type=int, default=32)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    circ = cm.random_circuit(args.n, args.depth, args.seed)
    doc = {"kind": "truncation-sweep", "n_qubits": args.n, "depth": args.depth, "seed": args.seed, "models": {}}
    for model in CALIBRATED_MODELS:
        rate = calibrated_rate(args.r, model)
        doc["models"][model] = {
            "rate": rate,
            "bond": truncation_sweep(circ, model, [rate], args.chi, workers=args.workers),
            "inner": inner_sweep(circ, model, [rate], args.fixed_chi, args.kappa, workers=args.workers),
        }
    emit(doc, args.out)


if __name__ == "__main__":
    main()
