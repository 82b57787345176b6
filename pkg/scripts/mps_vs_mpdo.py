"""Compare a truncated noiseless MPS and the MPDO as approximations of the exact noisy state."""

from _common import emit, parser

from mpdosim import circuit as cm
from mpdosim.harness import mps_noise_comparison


def main():
    p = parser(__doc__)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--depth", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chi-mps", type=int, nargs="+", default=[2, 4, 6, 8, 12])
    p.add_argument("--chi", type=int, default=32)
    p.add_argument("--kappa", type=int, default=48)
    args = p.parse_args()

    circ = cm.random_circuit(args.n, args.depth, args.seed)
    rows = []
    for c in args.chi_mps:
        rows += [dict(r, chi_mps=c) for r in mps_noise_comparison(circ, c, chi=args.chi, kappa=args.kappa)]
    emit({"kind": "mps-vs-mpdo", "n_qubits": args.n, "depth": args.depth, "seed": args.seed, "rows": rows}, args.out)


if __name__ == "__main__":
    main()
